//! Deterministic off-chain executor for token-stream payment pipelines.
//!
//! A pipeline is a DAG of nodes: one originator that takes deposits, routers
//! built from a fixed library of templates, and endpoints that pay out.
//! Funds move between nodes over an ERC-20 style ledger using approve and
//! pull. Every external stimulus is an atomic transaction that is metered
//! for gas and recorded in an event trace.
//!
//! ```
//! use streampay::{Amount, CostTable, Engine, pipeline};
//!
//! let spec = pipeline::parse(r#"
//! [pipeline]
//! name = "hello"
//!
//! [balances]
//! alice = 100
//!
//! [[node]]
//! id = "src"
//! kind = "originator"
//! outputs = [{ tag = "out", to = "bob" }]
//!
//! [[node]]
//! id = "bob"
//! kind = "endpoint"
//! mode = "direct"
//! recipient = "bob"
//! "#).unwrap();
//!
//! let mut engine = Engine::new(&spec, CostTable::default(), 0).unwrap();
//! engine.approve("alice", "node:src", Amount::new(60));
//! assert!(engine.deposit("alice", Amount::new(60)).committed());
//! assert_eq!(engine.balance_of("bob"), Amount::new(60));
//! ```

pub mod bench;
pub mod cli;
pub mod engine;
pub mod event;
pub mod gas;
pub mod ledger;
pub mod nodes;
pub mod pipeline;
pub mod scenario;
pub mod templates;

pub use engine::{Engine, EngineState, Trigger, TriggerKind, TxError, TxResult, TxStatus};
pub use event::{EventKind, EventRecord, Scalar};
pub use gas::{CostTable, Gas, GasKind, GasReport};
pub use ledger::{Address, Amount, LedgerError, TokenLedger};
pub use pipeline::{PipelineSpec, ValidationCode, ValidationError};
