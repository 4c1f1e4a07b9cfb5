//! Router template library.
//!
//! Every router is one of eight configurable templates. A template never
//! touches the ledger itself: on receipt it inspects the message and its own
//! state and answers with a plan of [`Step`]s that the engine executes in
//! order. A step forwards along an output, emits an event, pays an account
//! or raises a stream error for part of the funds.

mod conditional;
mod distributing;
mod goalkeeper;
mod oracle;
mod reporting;
mod threshold;
mod timelock;
mod waterfall;

pub use conditional::{CmpOp, ConditionConfig, EvalError, Operand, Predicate, PredicateParseError};
pub use distributing::{split, DistributionConfig, Share, ShareRule, SplitError};
pub use goalkeeper::{Goalkeeper, GoalkeeperConfig, GoalkeeperStrategy};
pub use oracle::{InstructError, OracleConfig, OracleRouter};
pub use reporting::ReportingConfig;
pub use threshold::{Threshold, ThresholdConfig};
pub use timelock::{ReleaseAmount, TimeLock, TimeLockConfig};
pub use waterfall::{fill, Tier, Waterfall, WaterfallConfig};

use std::fmt;

use crate::event::{EventKind, Payload};
use crate::gas::{GasKind, GasMeter};
use crate::ledger::{Address, Amount};
use crate::nodes::{Output, StreamError, StreamMessage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TemplateName {
    Reporting,
    TimeLock,
    Threshold,
    Distributing,
    Conditional,
    Oracle,
    Waterfall,
    Goalkeeper,
}

impl TemplateName {
    pub const ALL: [TemplateName; 8] = [
        TemplateName::Reporting,
        TemplateName::TimeLock,
        TemplateName::Threshold,
        TemplateName::Distributing,
        TemplateName::Conditional,
        TemplateName::Oracle,
        TemplateName::Waterfall,
        TemplateName::Goalkeeper,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TemplateName::Reporting => "reporting",
            TemplateName::TimeLock => "timelock",
            TemplateName::Threshold => "threshold",
            TemplateName::Distributing => "distributing",
            TemplateName::Conditional => "conditional",
            TemplateName::Oracle => "oracle",
            TemplateName::Waterfall => "waterfall",
            TemplateName::Goalkeeper => "goalkeeper",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        TemplateName::ALL.into_iter().find(|t| t.as_str() == s)
    }
}

impl fmt::Display for TemplateName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Declarative template configuration, as written in a pipeline spec.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TemplateConfig {
    Reporting(ReportingConfig),
    TimeLock(TimeLockConfig),
    Threshold(ThresholdConfig),
    Distributing(DistributionConfig),
    Conditional(ConditionConfig),
    Oracle(OracleConfig),
    Waterfall(WaterfallConfig),
    Goalkeeper(GoalkeeperConfig),
}

impl TemplateConfig {
    pub fn name(&self) -> TemplateName {
        match self {
            TemplateConfig::Reporting(_) => TemplateName::Reporting,
            TemplateConfig::TimeLock(_) => TemplateName::TimeLock,
            TemplateConfig::Threshold(_) => TemplateName::Threshold,
            TemplateConfig::Distributing(_) => TemplateName::Distributing,
            TemplateConfig::Conditional(_) => TemplateName::Conditional,
            TemplateConfig::Oracle(_) => TemplateName::Oracle,
            TemplateConfig::Waterfall(_) => TemplateName::Waterfall,
            TemplateConfig::Goalkeeper(_) => TemplateName::Goalkeeper,
        }
    }

    /// Problems with this config given the node's output tags. Empty means
    /// well-formed.
    pub fn check(&self, output_tags: &[&str]) -> Vec<String> {
        let mut problems = Vec::new();
        let single = |problems: &mut Vec<String>| {
            if output_tags.len() != 1 {
                problems.push(format!(
                    "{} router requires exactly 1 output, found {}",
                    self.name(),
                    output_tags.len()
                ));
            }
        };
        match self {
            TemplateConfig::Reporting(c) => {
                single(&mut problems);
                c.check(&mut problems);
            }
            TemplateConfig::TimeLock(c) => {
                single(&mut problems);
                c.check(&mut problems);
            }
            TemplateConfig::Threshold(c) => {
                single(&mut problems);
                c.check(&mut problems);
            }
            TemplateConfig::Conditional(_) => single(&mut problems),
            TemplateConfig::Distributing(c) => c.check(output_tags, &mut problems),
            TemplateConfig::Oracle(c) => c.check(output_tags, &mut problems),
            TemplateConfig::Waterfall(c) => c.check(output_tags, &mut problems),
            TemplateConfig::Goalkeeper(c) => c.check(output_tags, &mut problems),
        }
        problems
    }

    /// Goalkeepers are terminal handlers and may have no outputs.
    pub fn allows_no_outputs(&self) -> bool {
        matches!(
            self,
            TemplateConfig::Goalkeeper(GoalkeeperConfig {
                strategy: GoalkeeperStrategy::RefundToOrigin | GoalkeeperStrategy::HoldForAdmin(_)
            })
        )
    }
}

/// Where a pooled router's stream came from most recently. Used to stamp
/// messages that a router emits on its own schedule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Inbound {
    pub originator: String,
    pub path: Vec<String>,
}

impl Inbound {
    pub fn of(msg: &StreamMessage) -> Self {
        Inbound {
            originator: msg.originator.clone(),
            path: msg.path.clone(),
        }
    }
}

/// Message for funds released from a pool. The pool itself is the origin,
/// so refunds further down return to it.
pub(crate) fn pooled_message(
    ctx: &Ctx<'_>,
    inbound: Option<&Inbound>,
    amount: Amount,
) -> StreamMessage {
    let (originator, path) = match inbound {
        Some(i) => (i.originator.clone(), i.path.clone()),
        None => (ctx.node_id.to_string(), vec![ctx.node_id.to_string()]),
    };
    StreamMessage {
        amount,
        origin: ctx.address.clone(),
        originator,
        path,
        metadata: Default::default(),
        error: None,
    }
}

/// Execution context handed to a template.
pub struct Ctx<'a> {
    pub node_id: &'a str,
    pub address: &'a Address,
    pub now: u64,
    /// Node balance after the incoming funds were pulled.
    pub held: Amount,
    pub outputs: &'a [Output],
    pub(crate) gas: &'a mut GasMeter,
}

impl<'a> Ctx<'a> {
    pub fn charge(&mut self, kind: GasKind) {
        self.gas.charge(kind);
    }

    pub fn output(&self, tag: &str) -> Option<usize> {
        self.outputs.iter().position(|o| o.tag == tag)
    }
}

/// A funds-affecting error raised after the stream was accepted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    pub error: StreamError,
    /// The affected part of the stream.
    pub msg: StreamMessage,
    /// Steps to run if the node's policy says `proceed`.
    pub on_proceed: Vec<Step>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    Forward { output: usize, msg: StreamMessage },
    Emit { kind: EventKind, payload: Payload },
    Pay { to: Address, amount: Amount },
    Fail(Box<Failure>),
}

impl Step {
    pub fn fail(error: StreamError, msg: StreamMessage, on_proceed: Vec<Step>) -> Step {
        Step::Fail(Box::new(Failure {
            error,
            msg,
            on_proceed,
        }))
    }
}

/// Runtime router: template config plus its mutable state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Router {
    Reporting(ReportingConfig),
    TimeLock(TimeLock),
    Threshold(Threshold),
    Distributing(DistributionConfig),
    Conditional(ConditionConfig),
    Oracle(OracleRouter),
    Waterfall(Waterfall),
    Goalkeeper(Goalkeeper),
}

impl Router {
    pub fn new(config: &TemplateConfig) -> Self {
        match config {
            TemplateConfig::Reporting(c) => Router::Reporting(c.clone()),
            TemplateConfig::TimeLock(c) => Router::TimeLock(TimeLock::new(c.clone())),
            TemplateConfig::Threshold(c) => Router::Threshold(Threshold::new(c.clone())),
            TemplateConfig::Distributing(c) => Router::Distributing(c.clone()),
            TemplateConfig::Conditional(c) => Router::Conditional(c.clone()),
            TemplateConfig::Oracle(c) => Router::Oracle(OracleRouter::new(c.clone())),
            TemplateConfig::Waterfall(c) => Router::Waterfall(Waterfall::new(c.clone())),
            TemplateConfig::Goalkeeper(c) => Router::Goalkeeper(Goalkeeper::new(c.clone())),
        }
    }

    pub fn template(&self) -> TemplateName {
        match self {
            Router::Reporting(_) => TemplateName::Reporting,
            Router::TimeLock(_) => TemplateName::TimeLock,
            Router::Threshold(_) => TemplateName::Threshold,
            Router::Distributing(_) => TemplateName::Distributing,
            Router::Conditional(_) => TemplateName::Conditional,
            Router::Oracle(_) => TemplateName::Oracle,
            Router::Waterfall(_) => TemplateName::Waterfall,
            Router::Goalkeeper(_) => TemplateName::Goalkeeper,
        }
    }

    /// Checked before the pull; a rejection leaves funds with the sender.
    pub fn admit(&self, msg: &StreamMessage) -> Result<(), StreamError> {
        match self {
            Router::TimeLock(t) => t.admit(msg),
            _ => Ok(()),
        }
    }

    pub fn receive(&mut self, ctx: &mut Ctx<'_>, msg: &StreamMessage) -> Vec<Step> {
        ctx.charge(GasKind::ConfigRead);
        match self {
            Router::Reporting(c) => c.receive(msg),
            Router::TimeLock(t) => t.receive(ctx, msg),
            Router::Threshold(t) => t.receive(ctx, msg),
            Router::Distributing(c) => c.receive(ctx, msg),
            Router::Conditional(c) => c.receive(ctx, msg),
            Router::Oracle(o) => o.receive(ctx, msg),
            Router::Waterfall(w) => w.receive(ctx, msg),
            Router::Goalkeeper(g) => g.receive(ctx, msg),
        }
    }
}
