//! Node classes, stream messages and the error-handling protocol.
//!
//! A pipeline has exactly one originator, any number of routers and at
//! least one endpoint. Value moves between nodes with an approve + pull
//! handshake driven by the engine; this module holds the pieces of that
//! protocol that do not depend on a particular router template.

use std::collections::BTreeMap;
use std::fmt;

use crate::event::Scalar;
use crate::ledger::{Address, Amount};
use crate::templates::Router;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Originator,
    Router,
    Endpoint,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Originator => "originator",
            NodeKind::Router => "router",
            NodeKind::Endpoint => "endpoint",
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ErrorSeverity {
    Warning,
    Recoverable,
    Fatal,
}

impl ErrorSeverity {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorSeverity::Warning => "warning",
            ErrorSeverity::Recoverable => "recoverable",
            ErrorSeverity::Fatal => "fatal",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "warning" => Some(ErrorSeverity::Warning),
            "recoverable" => Some(ErrorSeverity::Recoverable),
            "fatal" => Some(ErrorSeverity::Fatal),
            _ => None,
        }
    }
}

impl fmt::Display for ErrorSeverity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// What a node does with funds affected by a stream error.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PolicyAction {
    /// Continue the interrupted forward. Where there is nothing left to
    /// continue, the funds stay with the node.
    Proceed,
    Hold,
    Refund,
    /// Dispatch to a goalkeeper router or endpoint.
    Redirect(String),
    /// Abort the whole transaction.
    Revert,
}

impl PolicyAction {
    pub fn name(&self) -> &'static str {
        match self {
            PolicyAction::Proceed => "proceed",
            PolicyAction::Hold => "hold",
            PolicyAction::Refund => "refund",
            PolicyAction::Redirect(_) => "redirect",
            PolicyAction::Revert => "revert",
        }
    }

    /// Accepts `proceed`, `hold`, `refund`, `revert` and `redirect:<node>`.
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "proceed" => Some(PolicyAction::Proceed),
            "hold" => Some(PolicyAction::Hold),
            "refund" => Some(PolicyAction::Refund),
            "revert" => Some(PolicyAction::Revert),
            _ => s
                .strip_prefix("redirect:")
                .filter(|t| !t.is_empty())
                .map(|t| PolicyAction::Redirect(t.to_string())),
        }
    }
}

impl fmt::Display for PolicyAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicyAction::Redirect(target) => write!(f, "redirect:{target}"),
            other => f.write_str(other.name()),
        }
    }
}

/// Per-node overrides on top of the default policy
/// (warning: proceed, recoverable: refund, fatal: revert).
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct ErrorPolicy {
    pub warning: Option<PolicyAction>,
    pub recoverable: Option<PolicyAction>,
    pub fatal: Option<PolicyAction>,
}

impl ErrorPolicy {
    pub fn action(&self, severity: ErrorSeverity) -> PolicyAction {
        let configured = match severity {
            ErrorSeverity::Warning => &self.warning,
            ErrorSeverity::Recoverable => &self.recoverable,
            ErrorSeverity::Fatal => &self.fatal,
        };
        configured.clone().unwrap_or(match severity {
            ErrorSeverity::Warning => PolicyAction::Proceed,
            ErrorSeverity::Recoverable => PolicyAction::Refund,
            ErrorSeverity::Fatal => PolicyAction::Revert,
        })
    }

    pub fn is_default(&self) -> bool {
        self.warning.is_none() && self.recoverable.is_none() && self.fatal.is_none()
    }

    pub fn overrides(&self) -> impl Iterator<Item = (ErrorSeverity, &PolicyAction)> {
        [
            (ErrorSeverity::Warning, &self.warning),
            (ErrorSeverity::Recoverable, &self.recoverable),
            (ErrorSeverity::Fatal, &self.fatal),
        ]
        .into_iter()
        .filter_map(|(s, a)| a.as_ref().map(|a| (s, a)))
    }

    pub fn redirect_targets(&self) -> impl Iterator<Item = &str> {
        self.overrides().filter_map(|(_, a)| match a {
            PolicyAction::Redirect(t) => Some(t.as_str()),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StreamErrorCode {
    PredicateFalse,
    MissingMetadataKey,
    ScheduleExhausted,
    InsufficientForFixedShares,
    WaterfallSurplus,
    ZeroAmount,
    Arithmetic,
}

impl StreamErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            StreamErrorCode::PredicateFalse => "PredicateFalse",
            StreamErrorCode::MissingMetadataKey => "MissingMetadataKey",
            StreamErrorCode::ScheduleExhausted => "ScheduleExhausted",
            StreamErrorCode::InsufficientForFixedShares => "InsufficientForFixedShares",
            StreamErrorCode::WaterfallSurplus => "WaterfallSurplus",
            StreamErrorCode::ZeroAmount => "ZeroAmount",
            StreamErrorCode::Arithmetic => "Arithmetic",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamError {
    pub severity: ErrorSeverity,
    pub code: StreamErrorCode,
    pub detail: String,
}

impl StreamError {
    pub fn new(severity: ErrorSeverity, code: StreamErrorCode, detail: impl Into<String>) -> Self {
        StreamError {
            severity,
            code,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for StreamError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} ({}): {}",
            self.code.as_str(),
            self.severity,
            self.detail
        )
    }
}

/// Error context attached to a redirected message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ErrorContext {
    pub raised_by: String,
    pub severity: ErrorSeverity,
    pub reason: String,
}

/// The unit of value flowing through a pipeline.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamMessage {
    pub amount: Amount,
    /// Account whose deposit started the stream; refunds go here.
    pub origin: Address,
    pub originator: String,
    /// Node ids traversed so far, starting with the originator.
    pub path: Vec<String>,
    pub metadata: BTreeMap<String, Scalar>,
    pub error: Option<ErrorContext>,
}

impl StreamMessage {
    pub fn new(
        amount: Amount,
        origin: Address,
        originator: &str,
        metadata: BTreeMap<String, Scalar>,
    ) -> Self {
        StreamMessage {
            amount,
            origin,
            originator: originator.to_string(),
            path: vec![originator.to_string()],
            metadata,
            error: None,
        }
    }

    /// Copy of this message carrying a different amount.
    pub fn with_amount(&self, amount: Amount) -> Self {
        StreamMessage {
            amount,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EndpointMode {
    Direct,
    Claimable,
}

impl EndpointMode {
    pub fn as_str(self) -> &'static str {
        match self {
            EndpointMode::Direct => "direct",
            EndpointMode::Claimable => "claimable",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "direct" => Some(EndpointMode::Direct),
            "claimable" => Some(EndpointMode::Claimable),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EndpointConfig {
    pub mode: EndpointMode,
    pub recipient: Address,
}

/// Runtime state of an endpoint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Endpoint {
    pub config: EndpointConfig,
    pub claimable: BTreeMap<Address, Amount>,
}

impl Endpoint {
    pub fn new(config: EndpointConfig) -> Self {
        Endpoint {
            config,
            claimable: BTreeMap::new(),
        }
    }

    pub fn claimable_of(&self, account: &Address) -> Amount {
        self.claimable.get(account).copied().unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Behavior {
    Originator,
    Router(Router),
    Endpoint(Endpoint),
}

/// Outgoing connection, addressed by tag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Output {
    pub tag: String,
    pub to: usize,
}

/// A live node inside an engine.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub id: String,
    pub address: Address,
    pub behavior: Behavior,
    pub outputs: Vec<Output>,
    pub error_policy: ErrorPolicy,
}

impl Node {
    pub fn kind(&self) -> NodeKind {
        match self.behavior {
            Behavior::Originator => NodeKind::Originator,
            Behavior::Router(_) => NodeKind::Router,
            Behavior::Endpoint(_) => NodeKind::Endpoint,
        }
    }

    pub fn output_by_tag(&self, tag: &str) -> Option<usize> {
        self.outputs.iter().position(|o| o.tag == tag)
    }

    pub fn router(&self) -> Option<&Router> {
        match &self.behavior {
            Behavior::Router(r) => Some(r),
            _ => None,
        }
    }
}
