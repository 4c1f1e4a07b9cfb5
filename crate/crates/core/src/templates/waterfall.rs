use std::collections::BTreeSet;

use crate::gas::GasKind;
use crate::ledger::Amount;
use crate::nodes::{ErrorSeverity, StreamError, StreamErrorCode, StreamMessage};

use super::{Ctx, Step};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tier {
    pub tag: String,
    /// Lifetime cap; `None` is unlimited.
    pub cap: Option<Amount>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WaterfallConfig {
    pub tiers: Vec<Tier>,
}

impl WaterfallConfig {
    pub(super) fn check(&self, output_tags: &[&str], problems: &mut Vec<String>) {
        if self.tiers.is_empty() {
            problems.push("waterfall needs at least one tier".into());
        }
        let mut seen = BTreeSet::new();
        for (i, t) in self.tiers.iter().enumerate() {
            if !seen.insert(t.tag.as_str()) {
                problems.push(format!("tier tag `{}` listed twice", t.tag));
            }
            if !output_tags.contains(&t.tag.as_str()) {
                problems.push(format!("tier tag `{}` is not a declared output", t.tag));
            }
            if t.cap.is_none() && i + 1 != self.tiers.len() {
                problems.push(format!("only the last tier may be unlimited (`{}`)", t.tag));
            }
        }
        for tag in output_tags {
            if !seen.contains(tag) {
                problems.push(format!("output `{tag}` is not a tier"));
            }
        }
    }
}

/// Greedy fill: each tier takes up to its remaining lifetime cap, in order.
/// Returns the per-tier allocation and the surplus nobody could absorb.
pub fn fill(tiers: &[Tier], paid: &[Amount], input: Amount) -> (Vec<Amount>, Amount) {
    let mut left = input;
    let alloc = tiers
        .iter()
        .zip(paid)
        .map(|(tier, paid)| {
            let room = match tier.cap {
                Some(cap) => cap.saturating_sub(*paid),
                None => left,
            };
            let take = room.min(left);
            left = left.saturating_sub(take);
            take
        })
        .collect();
    (alloc, left)
}

/// Pays tiers in priority order; higher tiers are filled to their lifetime
/// cap before lower tiers see anything.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Waterfall {
    pub config: WaterfallConfig,
    /// Lifetime amount routed to each tier.
    pub paid: Vec<Amount>,
}

impl Waterfall {
    pub fn new(config: WaterfallConfig) -> Self {
        let paid = vec![Amount::ZERO; config.tiers.len()];
        Waterfall { config, paid }
    }

    pub(super) fn receive(&mut self, ctx: &mut Ctx<'_>, msg: &StreamMessage) -> Vec<Step> {
        ctx.gas
            .charge_n(GasKind::LedgerRead, self.config.tiers.len() as u64);
        let (alloc, surplus) = fill(&self.config.tiers, &self.paid, msg.amount);
        let mut steps = Vec::new();
        for ((tier, paid), take) in self.config.tiers.iter().zip(&mut self.paid).zip(alloc) {
            if take.is_zero() {
                continue;
            }
            *paid = *paid + take;
            ctx.charge(GasKind::LedgerWrite);
            if let Some(output) = ctx.output(&tier.tag) {
                steps.push(Step::Forward {
                    output,
                    msg: msg.with_amount(take),
                });
            }
        }
        if !surplus.is_zero() {
            steps.push(Step::fail(
                StreamError::new(
                    ErrorSeverity::Recoverable,
                    StreamErrorCode::WaterfallSurplus,
                    format!("all tiers are at their caps, {surplus} left over"),
                ),
                msg.with_amount(surplus),
                Vec::new(),
            ));
        }
        steps
    }
}
