use std::collections::BTreeSet;

use crate::ledger::Amount;
use crate::nodes::{ErrorSeverity, StreamError, StreamErrorCode, StreamMessage};

use super::{Ctx, Step};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShareRule {
    Weight(u64),
    Fixed(Amount),
    /// Takes whatever the fixed shares leave over.
    Residual,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Share {
    pub tag: String,
    pub rule: ShareRule,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistributionConfig {
    pub shares: Vec<Share>,
    /// Permits a single output. Only the benchmark fixture sets this.
    pub allow_single: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SplitError {
    InsufficientForFixedShares { required: Amount, available: Amount },
    Overflow,
}

/// Splits `input` across `rules`, returning one amount per rule.
///
/// Fixed shares are paid first in declaration order. The remainder is
/// divided by weight with floor division and the leftover units go one each
/// to the weighted shares in declaration order, skipping shares whose
/// portion divided exactly. A residual share (only
/// meaningful without weights) takes what is left.
pub fn split(rules: &[ShareRule], input: Amount) -> Result<Vec<Amount>, SplitError> {
    let mut out = vec![Amount::ZERO; rules.len()];
    let mut fixed_total = Amount::ZERO;
    for (slot, rule) in out.iter_mut().zip(rules) {
        if let ShareRule::Fixed(a) = rule {
            *slot = *a;
            fixed_total = fixed_total.checked_add(*a).ok_or(SplitError::Overflow)?;
        }
    }
    let Some(remainder) = input.checked_sub(fixed_total) else {
        return Err(SplitError::InsufficientForFixedShares {
            required: fixed_total,
            available: input,
        });
    };

    let total_weight: u128 = rules
        .iter()
        .map(|r| match r {
            ShareRule::Weight(w) => *w as u128,
            _ => 0,
        })
        .sum();
    let mut left = remainder.units();
    if let Some(q) = left.checked_div(total_weight) {
        let r = left % total_weight;
        let mut inexact = vec![false; rules.len()];
        for ((slot, rule), inexact) in out.iter_mut().zip(rules).zip(&mut inexact) {
            if let ShareRule::Weight(w) = rule {
                let w = *w as u128;
                // floor(remainder * w / total) = q*w + floor(r*w / total)
                let (frac_floor, frac_rem) = mul_div_rem(r, w, total_weight);
                let part = q
                    .checked_mul(w)
                    .and_then(|a| a.checked_add(frac_floor))
                    .ok_or(SplitError::Overflow)?;
                *slot = Amount::new(part);
                *inexact = frac_rem != 0;
                left -= part;
            }
        }
        // Only shares that were rounded down take a leftover unit, so no
        // share ends up a full unit away from its exact portion.
        for (slot, inexact) in out.iter_mut().zip(inexact) {
            if left == 0 {
                break;
            }
            if inexact {
                *slot = Amount::new(slot.units() + 1);
                left -= 1;
            }
        }
    }
    if let Some(i) = rules.iter().position(|r| *r == ShareRule::Residual) {
        out[i] = Amount::new(left);
    }
    Ok(out)
}

/// `(floor(a * b / c), a * b mod c)` for `a < c`, exact even when `a * b`
/// exceeds 128 bits.
fn mul_div_rem(a: u128, b: u128, c: u128) -> (u128, u128) {
    if let Some(p) = a.checked_mul(b) {
        return (p / c, p % c);
    }
    // 256-bit product as (hi, lo), then restoring long division by c.
    let (a_hi, a_lo) = (a >> 64, a & u64::MAX as u128);
    let (b_hi, b_lo) = (b >> 64, b & u64::MAX as u128);
    let ll = a_lo * b_lo;
    let lh = a_lo * b_hi;
    let hl = a_hi * b_lo;
    let hh = a_hi * b_hi;
    let (mid, mid_carry) = lh.overflowing_add(hl);
    let (lo, lo_carry) = ll.overflowing_add(mid << 64);
    let hi = hh + (mid >> 64) + ((mid_carry as u128) << 64) + lo_carry as u128;

    let mut rem: u128 = 0;
    let mut quot: u128 = 0;
    for i in (0..256).rev() {
        let bit = if i >= 128 {
            (hi >> (i - 128)) & 1
        } else {
            (lo >> i) & 1
        };
        let carry = rem >> 127;
        rem = (rem << 1) | bit;
        if carry == 1 || rem >= c {
            rem = rem.wrapping_sub(c);
            if i < 128 {
                quot |= 1 << i;
            }
        }
    }
    (quot, rem)
}

impl DistributionConfig {
    pub(super) fn check(&self, output_tags: &[&str], problems: &mut Vec<String>) {
        let min_outputs = if self.allow_single { 1 } else { 2 };
        if output_tags.len() < min_outputs {
            problems.push(format!(
                "distributing router requires >={min_outputs} outputs, found {}",
                output_tags.len()
            ));
        }
        let mut seen = BTreeSet::new();
        for s in &self.shares {
            if !seen.insert(s.tag.as_str()) {
                problems.push(format!("share tag `{}` listed twice", s.tag));
            }
            if !output_tags.contains(&s.tag.as_str()) {
                problems.push(format!("share tag `{}` is not a declared output", s.tag));
            }
        }
        for tag in output_tags {
            if !seen.contains(tag) {
                problems.push(format!("output `{tag}` has no share"));
            }
        }
        let weights = self
            .shares
            .iter()
            .filter(|s| matches!(s.rule, ShareRule::Weight(_)))
            .count();
        let residuals = self
            .shares
            .iter()
            .filter(|s| s.rule == ShareRule::Residual)
            .count();
        if self.shares.iter().any(|s| s.rule == ShareRule::Weight(0)) {
            problems.push("share weights must be positive".into());
        }
        if residuals > 1 {
            problems.push("at most one residual share is allowed".into());
        }
        if residuals > 0 && weights > 0 {
            problems.push("a residual share cannot be combined with weighted shares".into());
        }
        if residuals == 0 && weights == 0 {
            problems.push("distribution needs a weighted or residual share".into());
        }
    }

    pub(super) fn receive(&self, ctx: &mut Ctx<'_>, msg: &StreamMessage) -> Vec<Step> {
        let rules: Vec<ShareRule> = self.shares.iter().map(|s| s.rule).collect();
        let amounts = match split(&rules, msg.amount) {
            Ok(a) => a,
            Err(e) => {
                let (code, detail) = match e {
                    SplitError::InsufficientForFixedShares {
                        required,
                        available,
                    } => (
                        StreamErrorCode::InsufficientForFixedShares,
                        format!("fixed shares need {required}, received {available}"),
                    ),
                    SplitError::Overflow => (
                        StreamErrorCode::Arithmetic,
                        "share arithmetic overflow".into(),
                    ),
                };
                return vec![Step::fail(
                    StreamError::new(ErrorSeverity::Recoverable, code, detail),
                    msg.clone(),
                    Vec::new(),
                )];
            }
        };
        self.shares
            .iter()
            .zip(amounts)
            .filter(|(_, a)| !a.is_zero())
            .filter_map(|(share, amount)| {
                ctx.output(&share.tag).map(|output| Step::Forward {
                    output,
                    msg: msg.with_amount(amount),
                })
            })
            .collect()
    }
}
