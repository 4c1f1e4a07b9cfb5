use std::collections::BTreeMap;

use crate::event::{payload, EventKind, Payload, Scalar};
use crate::gas::GasKind;
use crate::ledger::{Address, Amount};
use crate::nodes::StreamMessage;

use super::{Ctx, Step};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GoalkeeperStrategy {
    RefundToOrigin,
    HoldForAdmin(Address),
    /// Forward along the output with this tag.
    ForwardTo(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoalkeeperConfig {
    pub strategy: GoalkeeperStrategy,
}

impl GoalkeeperConfig {
    pub(super) fn check(&self, output_tags: &[&str], problems: &mut Vec<String>) {
        match &self.strategy {
            GoalkeeperStrategy::ForwardTo(tag) => {
                if !output_tags.contains(&tag.as_str()) {
                    problems.push(format!("goalkeeper sink `{tag}` is not a declared output"));
                }
                if output_tags.len() != 1 {
                    problems.push("forwarding goalkeeper requires exactly 1 output".into());
                }
            }
            _ if !output_tags.is_empty() => {
                problems.push("goalkeeper without a forward sink must have no outputs".into());
            }
            _ => {}
        }
    }
}

/// Terminal error handler. Receives redirected funds along with the error
/// that caused the redirect.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Goalkeeper {
    pub config: GoalkeeperConfig,
    pub claimable: BTreeMap<Address, Amount>,
}

impl Goalkeeper {
    pub fn new(config: GoalkeeperConfig) -> Self {
        Goalkeeper {
            config,
            claimable: BTreeMap::new(),
        }
    }

    pub(super) fn receive(&mut self, ctx: &mut Ctx<'_>, msg: &StreamMessage) -> Vec<Step> {
        let mut report: Payload = payload([
            ("sink", "goalkeeper".into()),
            ("amount", msg.amount.into()),
            ("origin", (&msg.origin).into()),
        ]);
        let reason = match &msg.error {
            Some(e) => {
                report.insert("raised_by".into(), Scalar::from(e.raised_by.as_str()));
                report.insert("severity".into(), Scalar::from(e.severity.as_str()));
                e.reason.clone()
            }
            None => "direct".to_string(),
        };
        report.insert("reason".into(), reason.into());
        let mut steps = vec![Step::Emit {
            kind: EventKind::Report,
            payload: report,
        }];
        match &self.config.strategy {
            GoalkeeperStrategy::RefundToOrigin => steps.push(Step::Pay {
                to: msg.origin.clone(),
                amount: msg.amount,
            }),
            GoalkeeperStrategy::HoldForAdmin(admin) => {
                ctx.charge(GasKind::LedgerWrite);
                let entry = self.claimable.entry(admin.clone()).or_default();
                *entry = *entry + msg.amount;
                steps.push(Step::Emit {
                    kind: EventKind::Held,
                    payload: payload([("amount", msg.amount.into()), ("claimant", admin.into())]),
                });
            }
            GoalkeeperStrategy::ForwardTo(tag) => {
                if let Some(output) = ctx.output(tag) {
                    let mut fwd = msg.clone();
                    fwd.error = None;
                    steps.push(Step::Forward { output, msg: fwd });
                }
            }
        }
        steps
    }
}
