use crate::event::{payload, EventKind};
use crate::gas::GasKind;
use crate::ledger::Amount;
use crate::nodes::StreamMessage;

use super::{pooled_message, Ctx, Inbound, Step};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThresholdConfig {
    pub threshold: Amount,
}

impl ThresholdConfig {
    pub(super) fn check(&self, problems: &mut Vec<String>) {
        if self.threshold.is_zero() {
            problems.push("threshold must be > 0".into());
        }
    }
}

/// Accumulates until the held balance reaches the threshold, then forwards
/// everything it holds.
///
/// The accumulator is the node's own balance, so funds refunded back into
/// the node are swept out with the next batch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Threshold {
    pub config: ThresholdConfig,
    pub inbound: Option<Inbound>,
}

impl Threshold {
    pub fn new(config: ThresholdConfig) -> Self {
        Threshold {
            config,
            inbound: None,
        }
    }

    pub(super) fn receive(&mut self, ctx: &mut Ctx<'_>, msg: &StreamMessage) -> Vec<Step> {
        self.inbound = Some(Inbound::of(msg));
        ctx.charge(GasKind::LedgerRead);
        if ctx.held < self.config.threshold {
            return vec![Step::Emit {
                kind: EventKind::Held,
                payload: payload([
                    ("accumulated", ctx.held.into()),
                    ("amount", msg.amount.into()),
                ]),
            }];
        }
        vec![Step::Forward {
            output: 0,
            msg: pooled_message(ctx, self.inbound.as_ref(), ctx.held),
        }]
    }
}
