//! Deterministic gas accounting.
//!
//! Gas is a cost metric only: nothing in the engine stops when a transaction
//! gets expensive. Every primitive the engine performs is charged from a
//! [`CostTable`] so two implementations of the same payment logic can be
//! compared under identical prices.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub type Gas = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GasKind {
    TxBase,
    NodeCall,
    LedgerWrite,
    LedgerRead,
    EventEmit,
    ConfigRead,
    PredicateEval,
}

impl GasKind {
    pub const ALL: [GasKind; 7] = [
        GasKind::TxBase,
        GasKind::NodeCall,
        GasKind::LedgerWrite,
        GasKind::LedgerRead,
        GasKind::EventEmit,
        GasKind::ConfigRead,
        GasKind::PredicateEval,
    ];

    fn index(self) -> usize {
        self as usize
    }
}

/// Price of each primitive.
///
/// The defaults are loosely modelled on EVM prices so that cross-contract
/// calls carry a realistic relative penalty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostTable {
    pub tx_base: Gas,
    pub node_call: Gas,
    pub ledger_write: Gas,
    pub ledger_read: Gas,
    pub event_emit: Gas,
    pub config_read: Gas,
    pub predicate_eval: Gas,
}

impl Default for CostTable {
    fn default() -> Self {
        CostTable {
            tx_base: 21_000,
            node_call: 2_600,
            ledger_write: 5_000,
            ledger_read: 200,
            event_emit: 1_000,
            config_read: 100,
            predicate_eval: 50,
        }
    }
}

impl CostTable {
    pub fn cost(&self, kind: GasKind) -> Gas {
        match kind {
            GasKind::TxBase => self.tx_base,
            GasKind::NodeCall => self.node_call,
            GasKind::LedgerWrite => self.ledger_write,
            GasKind::LedgerRead => self.ledger_read,
            GasKind::EventEmit => self.event_emit,
            GasKind::ConfigRead => self.config_read,
            GasKind::PredicateEval => self.predicate_eval,
        }
    }

    /// Reads a cost table from TOML; missing keys keep their defaults.
    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }
}

/// Gas charged within one transaction, split by primitive.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GasUsage {
    counts: [u64; 7],
    total: Gas,
}

impl GasUsage {
    pub fn total(&self) -> Gas {
        self.total
    }

    /// Number of times `kind` was charged.
    pub fn count(&self, kind: GasKind) -> u64 {
        self.counts[kind.index()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GasEntry {
    pub tx_id: u64,
    pub gas: Gas,
}

#[derive(Debug, Clone)]
pub struct GasMeter {
    table: CostTable,
    current: GasUsage,
    log: Vec<GasEntry>,
}

impl GasMeter {
    pub fn new(table: CostTable) -> Self {
        GasMeter {
            table,
            current: GasUsage::default(),
            log: Vec::new(),
        }
    }

    pub fn table(&self) -> &CostTable {
        &self.table
    }

    pub fn begin(&mut self) {
        self.current = GasUsage::default();
    }

    pub fn charge(&mut self, kind: GasKind) {
        self.charge_n(kind, 1);
    }

    pub fn charge_n(&mut self, kind: GasKind, times: u64) {
        self.current.counts[kind.index()] += times;
        self.current.total += self.table.cost(kind) * times;
    }

    pub fn consumed(&self) -> Gas {
        self.current.total
    }

    /// Closes the running transaction and appends it to the log.
    pub fn finish(&mut self, tx_id: u64) -> GasUsage {
        let usage = std::mem::take(&mut self.current);
        self.log.push(GasEntry {
            tx_id,
            gas: usage.total,
        });
        usage
    }

    pub fn log(&self) -> &[GasEntry] {
        &self.log
    }

    pub fn total(&self) -> Gas {
        self.log.iter().map(|e| e.gas).sum()
    }
}

/// Per-transaction gas lines plus a totals line.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct GasReport {
    pub entries: Vec<GasReportLine>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GasReportLine {
    pub tx_id: u64,
    pub trigger: String,
    pub status: String,
    pub gas: Gas,
}

impl GasReport {
    pub fn total(&self) -> Gas {
        self.entries.iter().map(|e| e.gas).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Export format: one `tx_id=.. trigger=.. status=.. gas=..` line per
    /// transaction, then `total txs=.. gas=..`.
    pub fn export(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            writeln!(
                out,
                "tx_id={} trigger={} status={} gas={}",
                e.tx_id, e.trigger, e.status, e.gas
            )
            .unwrap();
        }
        writeln!(out, "total txs={} gas={}", self.entries.len(), self.total()).unwrap();
        out
    }
}
