use crate::event::{payload, EventKind, Scalar};
use crate::gas::GasKind;
use crate::ledger::Amount;
use crate::nodes::{ErrorSeverity, StreamError, StreamErrorCode, StreamMessage};

use super::{pooled_message, Ctx, Inbound, Step};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReleaseAmount {
    Fixed(Amount),
    /// `num/den` of the balance held at crank time, `0 < num <= den`.
    Fraction {
        num: u64,
        den: u64,
    },
}

/// Release `k` is due at `start + k * period` for `k` in `0..releases`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimeLockConfig {
    pub start: u64,
    pub period: u64,
    pub releases: u32,
    pub per_release: ReleaseAmount,
}

impl TimeLockConfig {
    pub fn due_time(&self, k: u32) -> Option<u64> {
        self.period
            .checked_mul(k as u64)
            .and_then(|d| self.start.checked_add(d))
    }

    pub(super) fn check(&self, problems: &mut Vec<String>) {
        if self.period == 0 {
            problems.push("timelock period must be > 0".into());
        }
        if self.releases == 0 {
            problems.push("timelock releases must be >= 1".into());
        }
        if self.releases > 0 && self.due_time(self.releases - 1).is_none() {
            problems.push("timelock schedule overflows the clock".into());
        }
        match self.per_release {
            ReleaseAmount::Fraction { num, den } if num == 0 || num > den => {
                problems.push(format!(
                    "timelock fraction {num}/{den} must satisfy 0 < num <= den"
                ));
            }
            _ => {}
        }
    }
}

/// Holds incoming funds and releases them on a fixed schedule. The last
/// release flushes whatever is still held.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimeLock {
    pub config: TimeLockConfig,
    /// Index of the next release not yet executed.
    pub next_release: u32,
    pub inbound: Option<Inbound>,
}

impl TimeLock {
    pub fn new(config: TimeLockConfig) -> Self {
        TimeLock {
            config,
            next_release: 0,
            inbound: None,
        }
    }

    pub fn is_exhausted(&self) -> bool {
        self.next_release >= self.config.releases
    }

    /// Due time of the next pending release.
    pub fn next_due(&self) -> Option<u64> {
        if self.is_exhausted() {
            None
        } else {
            self.config.due_time(self.next_release)
        }
    }

    /// Funds arriving after the final release have nowhere to go.
    pub(super) fn admit(&self, _msg: &StreamMessage) -> Result<(), StreamError> {
        if self.is_exhausted() {
            return Err(StreamError::new(
                ErrorSeverity::Recoverable,
                StreamErrorCode::ScheduleExhausted,
                "all scheduled releases have already run",
            ));
        }
        Ok(())
    }

    pub(super) fn receive(&mut self, ctx: &mut Ctx<'_>, msg: &StreamMessage) -> Vec<Step> {
        self.inbound = Some(Inbound::of(msg));
        ctx.charge(GasKind::LedgerWrite);
        vec![Step::Emit {
            kind: EventKind::Held,
            payload: payload([("amount", msg.amount.into())]),
        }]
    }

    /// Release amount for the pending index given the current balance.
    pub fn release_amount(&self, held: Amount) -> Amount {
        if self.next_release + 1 >= self.config.releases {
            return held;
        }
        match self.config.per_release {
            ReleaseAmount::Fixed(a) => a.min(held),
            ReleaseAmount::Fraction { num, den } => {
                let held = held.units();
                // floor(held * num / den) without overflowing u128
                let (q, r) = (held / den as u128, held % den as u128);
                Amount::new(q * num as u128 + r * num as u128 / den as u128)
            }
        }
    }

    /// Executes the pending release. The caller guarantees it is due.
    pub fn crank(&mut self, ctx: &mut Ctx<'_>) -> Vec<Step> {
        ctx.charge(GasKind::ConfigRead);
        ctx.charge(GasKind::LedgerRead);
        let k = self.next_release;
        let due = self.config.due_time(k).unwrap_or(u64::MAX);
        let amount = self.release_amount(ctx.held);
        self.next_release += 1;
        ctx.charge(GasKind::LedgerWrite);
        let mut steps = vec![Step::Emit {
            kind: EventKind::Released,
            payload: payload([
                ("amount", amount.into()),
                ("due", Scalar::from(due)),
                ("release", Scalar::from(k as u64)),
            ]),
        }];
        if !amount.is_zero() {
            steps.push(Step::Forward {
                output: 0,
                msg: pooled_message(ctx, self.inbound.as_ref(), amount),
            });
        }
        steps
    }
}
