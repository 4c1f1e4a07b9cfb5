use std::collections::BTreeSet;

use thiserror::Error;

use crate::event::{payload, EventKind};
use crate::gas::GasKind;
use crate::ledger::{Address, Amount};
use crate::nodes::StreamMessage;

use super::{pooled_message, Ctx, Inbound, Step};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleConfig {
    pub trusted: BTreeSet<Address>,
}

impl OracleConfig {
    pub(super) fn check(&self, output_tags: &[&str], problems: &mut Vec<String>) {
        if self.trusted.is_empty() {
            problems.push("oracle router needs at least one trusted oracle".into());
        }
        if output_tags.is_empty() {
            problems.push("oracle router requires >=1 output".into());
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InstructError {
    #[error("{0} is not a trusted oracle")]
    UntrustedOracle(Address),
    #[error("no output tagged `{0}`")]
    UnknownEdge(String),
    #[error("instructed {requested} but only {held} is held")]
    InsufficientHeld { requested: Amount, held: Amount },
    #[error("instructed amount must be > 0")]
    ZeroAmount,
}

/// Holds everything it receives until a trusted oracle names a destination
/// and an amount.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleRouter {
    pub config: OracleConfig,
    pub inbound: Option<Inbound>,
}

impl OracleRouter {
    pub fn new(config: OracleConfig) -> Self {
        OracleRouter {
            config,
            inbound: None,
        }
    }

    pub(super) fn receive(&mut self, ctx: &mut Ctx<'_>, msg: &StreamMessage) -> Vec<Step> {
        self.inbound = Some(Inbound::of(msg));
        ctx.charge(GasKind::LedgerWrite);
        vec![Step::Emit {
            kind: EventKind::Held,
            payload: payload([("amount", msg.amount.into()), ("held", ctx.held.into())]),
        }]
    }

    pub fn instruct(
        &self,
        ctx: &mut Ctx<'_>,
        oracle: &Address,
        tag: &str,
        amount: Amount,
    ) -> Result<Vec<Step>, InstructError> {
        ctx.charge(GasKind::ConfigRead);
        if !self.config.trusted.contains(oracle) {
            return Err(InstructError::UntrustedOracle(oracle.clone()));
        }
        let output = ctx
            .output(tag)
            .ok_or_else(|| InstructError::UnknownEdge(tag.to_string()))?;
        if amount.is_zero() {
            return Err(InstructError::ZeroAmount);
        }
        ctx.charge(GasKind::LedgerRead);
        if amount > ctx.held {
            return Err(InstructError::InsufficientHeld {
                requested: amount,
                held: ctx.held,
            });
        }
        Ok(vec![Step::Forward {
            output,
            msg: pooled_message(ctx, self.inbound.as_ref(), amount),
        }])
    }
}
