//! Pipeline specifications: the declarative description of nodes, template
//! configs and edges, plus parsing, validation and canonical serialization.

mod parse;
mod serialize;
mod validate;

pub use parse::{parse, ParseError, ParseErrorKind};
pub(crate) use parse::{read_metadata, Fields, Source};
pub use serialize::serialize;
pub use validate::{validate, ValidationCode, ValidationError};

use std::collections::BTreeMap;

use crate::ledger::{Address, Amount};
use crate::nodes::{EndpointConfig, ErrorPolicy, NodeKind};
use crate::templates::TemplateConfig;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PipelineSpec {
    pub name: String,
    pub nodes: Vec<NodeSpec>,
    /// Accounts minted when the pipeline is instantiated.
    pub initial_balances: BTreeMap<Address, Amount>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeRole {
    Originator,
    Router(TemplateConfig),
    Endpoint(EndpointConfig),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputSpec {
    pub tag: String,
    pub to: String,
}

impl OutputSpec {
    pub fn new(tag: impl Into<String>, to: impl Into<String>) -> Self {
        OutputSpec {
            tag: tag.into(),
            to: to.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeSpec {
    pub id: String,
    pub role: NodeRole,
    pub outputs: Vec<OutputSpec>,
    pub error_policy: ErrorPolicy,
}

impl NodeSpec {
    pub fn new(id: impl Into<String>, role: NodeRole) -> Self {
        NodeSpec {
            id: id.into(),
            role,
            outputs: Vec::new(),
            error_policy: ErrorPolicy::default(),
        }
    }

    pub fn output(mut self, tag: impl Into<String>, to: impl Into<String>) -> Self {
        self.outputs.push(OutputSpec::new(tag, to));
        self
    }

    pub fn policy(mut self, policy: ErrorPolicy) -> Self {
        self.error_policy = policy;
        self
    }

    pub fn kind(&self) -> NodeKind {
        match self.role {
            NodeRole::Originator => NodeKind::Originator,
            NodeRole::Router(_) => NodeKind::Router,
            NodeRole::Endpoint(_) => NodeKind::Endpoint,
        }
    }

    pub fn template(&self) -> Option<&TemplateConfig> {
        match &self.role {
            NodeRole::Router(t) => Some(t),
            _ => None,
        }
    }
}

impl PipelineSpec {
    pub fn new(name: impl Into<String>) -> Self {
        PipelineSpec {
            name: name.into(),
            nodes: Vec::new(),
            initial_balances: BTreeMap::new(),
        }
    }

    pub fn node(mut self, node: NodeSpec) -> Self {
        self.nodes.push(node);
        self
    }

    pub fn balance(mut self, account: &str, amount: u128) -> Self {
        self.initial_balances
            .insert(Address::new(account), Amount::new(amount));
        self
    }

    pub fn find(&self, id: &str) -> Option<&NodeSpec> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn edge_count(&self) -> usize {
        self.nodes.iter().map(|n| n.outputs.len()).sum()
    }
}
