//! Payroll benchmark: a pipeline built from templates against a single
//! contract doing the same job, measured under one cost table.
//!
//! The pipeline is `originator -> timelock -> distributing -> N x reporting
//! -> N x direct endpoint`. The employer deposits once; each of the K
//! periods releases `deposit / K` (the last release flushes), splits it by
//! weight, reports every payout to a tax sink and pays the employees.

mod monolithic;

pub use monolithic::{MonolithicPayroll, MonolithicTx};

use std::fmt::{self, Write};

use serde::Serialize;
use thiserror::Error;

use crate::engine::{Engine, InstantiateError, TxResult};
use crate::event::{EventKind, EventRecord};
use crate::gas::{CostTable, Gas, GasReport};
use crate::ledger::{Address, Amount};
use crate::nodes::{EndpointConfig, EndpointMode};
use crate::pipeline::{NodeRole, NodeSpec, PipelineSpec};
use crate::templates::{
    DistributionConfig, ReleaseAmount, ReportingConfig, Share, ShareRule, TemplateConfig,
    TimeLockConfig,
};

pub const EMPLOYER: &str = "employer";
pub const TAX_SINK: &str = "tax-authority";
pub const ORIGINATOR_ID: &str = "payroll";

/// Published EVM measurement of the same comparison. Printed next to the
/// simulated ratio for orientation only; the cost models differ.
pub const REFERENCE_MONOLITHIC_GAS: Gas = 257_874;
pub const REFERENCE_PIPELINE_GAS: Gas = 549_995;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PayrollConfig {
    pub recipients: usize,
    pub periods: u32,
    pub weights: Vec<u64>,
    pub deposit: Amount,
    pub start: u64,
    pub period: u64,
}

impl PayrollConfig {
    /// Equal weights and a deposit that pays each employee 100 per period.
    pub fn new(recipients: usize, periods: u32) -> Self {
        PayrollConfig {
            recipients,
            periods,
            weights: vec![1; recipients],
            deposit: Amount::new(100 * recipients as u128 * periods as u128),
            start: 30,
            period: 30,
        }
    }

    pub fn with_deposit(mut self, deposit: Amount) -> Self {
        self.deposit = deposit;
        self
    }

    pub fn with_weights(mut self, weights: Vec<u64>) -> Self {
        self.weights = weights;
        self
    }

    pub fn per_period(&self) -> Amount {
        Amount::new(self.deposit.units() / self.periods.max(1) as u128)
    }

    pub fn employee(i: usize) -> Address {
        Address::new(format!("emp{}", i + 1))
    }

    pub fn employees(&self) -> Vec<Address> {
        (0..self.recipients).map(Self::employee).collect()
    }

    pub fn due_times(&self) -> Vec<u64> {
        (0..self.periods as u64)
            .map(|k| self.start + k * self.period)
            .collect()
    }

    /// Time the clock must advance by to run every release from t = 0.
    pub fn horizon(&self) -> u64 {
        self.due_times().last().copied().unwrap_or(0)
    }

    fn schedule(&self) -> TimeLockConfig {
        TimeLockConfig {
            start: self.start,
            period: self.period,
            releases: self.periods,
            per_release: ReleaseAmount::Fixed(self.per_period()),
        }
    }

    fn check(&self) -> Result<(), BenchError> {
        if self.recipients == 0 || self.periods == 0 {
            return Err(BenchError::Config(
                "need at least 1 recipient and 1 period".into(),
            ));
        }
        if self.weights.len() != self.recipients {
            return Err(BenchError::Config(format!(
                "{} weights for {} recipients",
                self.weights.len(),
                self.recipients
            )));
        }
        Ok(())
    }
}

/// Pipeline spec for the payroll: `2N + 3` nodes and `2N + 2` edges.
/// With a single recipient the distributor keeps its one weighted share.
pub fn build_pipeline_fixture(cfg: &PayrollConfig) -> PipelineSpec {
    let n = cfg.recipients;
    let mut split = NodeSpec::new(
        "split",
        NodeRole::Router(TemplateConfig::Distributing(DistributionConfig {
            shares: (0..n)
                .map(|i| Share {
                    tag: format!("emp{}", i + 1),
                    rule: ShareRule::Weight(cfg.weights.get(i).copied().unwrap_or(1)),
                })
                .collect(),
            allow_single: n == 1,
        })),
    );
    for i in 1..=n {
        split = split.output(format!("emp{i}"), format!("report{i}"));
    }
    let mut spec = PipelineSpec::new(format!("payroll-{n}x{}", cfg.periods))
        .balance(EMPLOYER, cfg.deposit.units())
        .node(NodeSpec::new(ORIGINATOR_ID, NodeRole::Originator).output("out", "lock"))
        .node(
            NodeSpec::new(
                "lock",
                NodeRole::Router(TemplateConfig::TimeLock(cfg.schedule())),
            )
            .output("out", "split"),
        )
        .node(split);
    for i in 1..=n {
        spec = spec.node(
            NodeSpec::new(
                format!("report{i}"),
                NodeRole::Router(TemplateConfig::Reporting(ReportingConfig {
                    sink: TAX_SINK.into(),
                    keys: Vec::new(),
                })),
            )
            .output("out", format!("pay{i}")),
        );
    }
    for i in 0..n {
        spec = spec.node(NodeSpec::new(
            format!("pay{}", i + 1),
            NodeRole::Endpoint(EndpointConfig {
                mode: EndpointMode::Direct,
                recipient: PayrollConfig::employee(i),
            }),
        ));
    }
    spec
}

/// What both implementations must agree on. Entries are sorted.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Observables {
    /// `(recipient, amount, time)` for every payout to an employee.
    pub payouts: Vec<(String, u128, u64)>,
    /// `(amount, time)` for every report.
    pub reports: Vec<(u128, u64)>,
}

impl Observables {
    fn collect<'a>(
        employees: &[Address],
        txs: impl IntoIterator<Item = (u64, &'a [EventRecord])>,
    ) -> Self {
        let mut obs = Observables::default();
        for (at, events) in txs {
            for e in events {
                match e.kind {
                    EventKind::Transfer => {
                        let to = e.str_field("to").unwrap_or_default();
                        if employees.iter().any(|a| a.as_str() == to) {
                            let amount = e.amount().unwrap_or_default().units();
                            obs.payouts.push((to.to_string(), amount, at));
                        }
                    }
                    EventKind::Report => {
                        obs.reports
                            .push((e.amount().unwrap_or_default().units(), at));
                    }
                    _ => {}
                }
            }
        }
        obs.payouts.sort();
        obs.reports.sort();
        obs
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BenchError {
    #[error("bad benchmark config: {0}")]
    Config(String),
    #[error("pipeline fixture rejected: {0}")]
    Instantiate(#[from] InstantiateError),
    #[error("{0} transaction reverted: {1}")]
    Reverted(&'static str, String),
    #[error("pipeline and monolithic observables differ")]
    ObservableMismatch {
        pipeline: Box<Observables>,
        monolithic: Box<Observables>,
    },
}

/// Full run of one side of the comparison.
#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub engine: Engine,
    pub txs: Vec<TxResult>,
}

/// Approve, deposit, then advance through every release.
pub fn run_pipeline(cfg: &PayrollConfig, costs: CostTable) -> Result<PipelineRun, BenchError> {
    cfg.check()?;
    let spec = build_pipeline_fixture(cfg);
    let mut engine = Engine::new(&spec, costs, 0)?;
    let originator = Address::for_node(ORIGINATOR_ID);
    let mut txs = vec![
        engine.approve(EMPLOYER, originator.as_str(), cfg.deposit),
        engine.deposit(EMPLOYER, cfg.deposit),
    ];
    txs.extend(engine.advance_time(cfg.horizon()));
    if let Some(bad) = txs.iter().find(|t| !t.committed()) {
        let why = bad
            .error
            .as_ref()
            .map(|e| e.to_string())
            .unwrap_or_default();
        return Err(BenchError::Reverted("pipeline", why));
    }
    Ok(PipelineRun { engine, txs })
}

pub fn run_monolithic(
    cfg: &PayrollConfig,
    costs: CostTable,
) -> Result<MonolithicPayroll, BenchError> {
    cfg.check()?;
    let mut m = MonolithicPayroll::new(cfg, costs);
    m.approve(EMPLOYER, cfg.deposit);
    m.deposit(EMPLOYER, cfg.deposit)
        .map_err(|e| BenchError::Reverted("monolithic", e.to_string()))?;
    m.advance_time(cfg.horizon())
        .map_err(|e| BenchError::Reverted("monolithic", e.to_string()))?;
    Ok(m)
}

/// Gas ratio kept as an exact fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Ratio {
    pub num: Gas,
    pub den: Gas,
}

impl Ratio {
    pub fn new(num: Gas, den: Gas) -> Self {
        fn gcd(a: Gas, b: Gas) -> Gas {
            if b == 0 {
                a
            } else {
                gcd(b, a % b)
            }
        }
        let g = gcd(num, den).max(1);
        Ratio {
            num: num / g,
            den: den / g,
        }
    }

    pub fn as_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn exceeds_one(self) -> bool {
        self.num > self.den
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3}", self.as_f64())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BenchReport {
    pub recipients: usize,
    pub periods: u32,
    pub deposit: u128,
    pub gas_pipeline: Gas,
    pub gas_monolithic: Gas,
    /// `gas_pipeline / gas_monolithic`.
    pub ratio: Ratio,
    pub per_tx_pipeline: GasReport,
    pub per_tx_monolithic: GasReport,
    pub observables: Observables,
}

impl BenchReport {
    /// Fixed-width table plus the reference line.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "payroll: {} recipients, {} periods, deposit {}",
            self.recipients, self.periods, self.deposit
        );
        let _ = writeln!(out, "{:<12} {:>6} {:>12}", "variant", "txs", "gas");
        let _ = writeln!(
            out,
            "{:<12} {:>6} {:>12}",
            "pipeline",
            self.per_tx_pipeline.entries.len(),
            self.gas_pipeline
        );
        let _ = writeln!(
            out,
            "{:<12} {:>6} {:>12}",
            "monolithic",
            self.per_tx_monolithic.entries.len(),
            self.gas_monolithic
        );
        let _ = writeln!(
            out,
            "ratio pipeline/monolithic = {}/{} = {}",
            self.ratio.num, self.ratio.den, self.ratio
        );
        let reference = Ratio::new(REFERENCE_PIPELINE_GAS, REFERENCE_MONOLITHIC_GAS);
        let _ = writeln!(
            out,
            "reference EVM measurement: {} vs {} gas (monolithic vs pipeline), ratio {:.2}x, \"{:.1}% more gas\"",
            group(REFERENCE_MONOLITHIC_GAS),
            group(REFERENCE_PIPELINE_GAS),
            reference.as_f64(),
            (reference.as_f64() - 1.0) * 100.0
        );
        let _ = writeln!(
            out,
            "note: absolute gas here comes from the simulator cost table and is not comparable with EVM figures"
        );
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is plain data")
    }
}

/// `549995` -> `549,995`.
fn group(v: Gas) -> String {
    let digits = v.to_string();
    let mut out = String::new();
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(c);
    }
    out
}

/// Runs both variants and compares them. Observables are checked first;
/// a mismatch means one of the two implementations is wrong.
pub fn run_comparison(cfg: &PayrollConfig, costs: CostTable) -> Result<BenchReport, BenchError> {
    let pipeline = run_pipeline(cfg, costs)?;
    let mono = run_monolithic(cfg, costs)?;
    let employees = cfg.employees();
    let p_obs = Observables::collect(
        &employees,
        pipeline.txs.iter().map(|t| (t.at, t.events.as_slice())),
    );
    let m_obs = Observables::collect(
        &employees,
        mono.txs().iter().map(|t| (t.at, t.events.as_slice())),
    );
    if p_obs != m_obs {
        return Err(BenchError::ObservableMismatch {
            pipeline: Box::new(p_obs),
            monolithic: Box::new(m_obs),
        });
    }
    let gas_pipeline = pipeline.engine.total_gas();
    let gas_monolithic = mono.total_gas();
    Ok(BenchReport {
        recipients: cfg.recipients,
        periods: cfg.periods,
        deposit: cfg.deposit.units(),
        gas_pipeline,
        gas_monolithic,
        ratio: Ratio::new(gas_pipeline, gas_monolithic),
        per_tx_pipeline: pipeline.engine.gas_report(),
        per_tx_monolithic: mono.gas_report(),
        observables: p_obs,
    })
}
