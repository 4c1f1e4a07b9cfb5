//! Command implementations behind the `streampay` binary. Each returns the
//! process exit code and writes human output to the given sinks.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use crate::bench::{run_comparison, PayrollConfig};
use crate::engine::Engine;
use crate::gas::CostTable;
use crate::ledger::Amount;
use crate::pipeline::{parse, validate, PipelineSpec};
use crate::scenario::{parse_scenario, run_scenario};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_REVERTED: i32 = 3;

fn read(path: &Path, err: &mut dyn Write) -> Option<String> {
    match fs::read_to_string(path) {
        Ok(text) => Some(text),
        Err(e) => {
            let _ = writeln!(err, "error: cannot read {}: {e}", path.display());
            None
        }
    }
}

fn write_file(path: &Path, contents: &str, err: &mut dyn Write) -> bool {
    match fs::write(path, contents) {
        Ok(()) => true,
        Err(e) => {
            let _ = writeln!(err, "error: cannot write {}: {e}", path.display());
            false
        }
    }
}

/// Exit 0 when valid, 1 with one `CODE location: message` line per problem
/// (parse errors included), 2 when the file cannot be read.
pub fn cmd_validate(spec_path: &Path, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let Some(text) = read(spec_path, err) else {
        return EXIT_INPUT;
    };
    let spec = match parse(&text) {
        Ok(spec) => spec,
        Err(e) => {
            let _ = writeln!(out, "{e}");
            return EXIT_FAILED;
        }
    };
    let errors = validate(&spec);
    for e in &errors {
        let _ = writeln!(out, "{e}");
    }
    if errors.is_empty() {
        EXIT_OK
    } else {
        EXIT_FAILED
    }
}

fn load_spec(path: &Path, err: &mut dyn Write) -> Option<PipelineSpec> {
    let text = read(path, err)?;
    match parse(&text) {
        Ok(spec) => Some(spec),
        Err(e) => {
            let _ = writeln!(err, "{}: {e}", path.display());
            None
        }
    }
}

fn load_costs(path: Option<&Path>, err: &mut dyn Write) -> Option<CostTable> {
    let Some(path) = path else {
        return Some(CostTable::default());
    };
    let text = read(path, err)?;
    match CostTable::from_toml(&text) {
        Ok(t) => Some(t),
        Err(e) => {
            let _ = writeln!(err, "{}: {e}", path.display());
            None
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions<'a> {
    pub trace: Option<&'a Path>,
    pub gas_report: Option<&'a Path>,
    pub cost_table: Option<&'a Path>,
}

/// Exit 0 when everything committed as expected, 1 when a check failed,
/// 3 when a transaction reverted unexpectedly, 2 for unusable input.
pub fn cmd_run(
    spec_path: &Path,
    scenario_path: &Path,
    opts: RunOptions<'_>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let Some(spec) = load_spec(spec_path, err) else {
        return EXIT_INPUT;
    };
    let Some(costs) = load_costs(opts.cost_table, err) else {
        return EXIT_INPUT;
    };
    let Some(text) = read(scenario_path, err) else {
        return EXIT_INPUT;
    };
    let script = match parse_scenario(&text) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "{}: {e}", scenario_path.display());
            return EXIT_INPUT;
        }
    };
    let mut engine = match Engine::new(&spec, costs, 0) {
        Ok(e) => e,
        Err(e) => {
            let _ = writeln!(err, "{e}");
            if let crate::engine::InstantiateError::Invalid(errors) = &e {
                for v in errors {
                    let _ = writeln!(err, "{v}");
                }
            }
            return EXIT_INPUT;
        }
    };
    let outcome = run_scenario(&mut engine, &script);
    if let Some(path) = opts.trace {
        if !write_file(path, &engine.export_trace(), err) {
            return EXIT_INPUT;
        }
    }
    if let Some(path) = opts.gas_report {
        if !write_file(path, &engine.export_gas(), err) {
            return EXIT_INPUT;
        }
    }
    let committed = outcome.txs.iter().filter(|t| t.committed()).count();
    let _ = writeln!(
        out,
        "{}: {} txs ({} committed, {} reverted), gas {}",
        engine.name(),
        outcome.txs.len(),
        committed,
        outcome.txs.len() - committed,
        engine.total_gas()
    );
    for line in outcome
        .failed_checks
        .iter()
        .chain(&outcome.unexpected_reverts)
    {
        let _ = writeln!(err, "{line}");
    }
    outcome.exit_code()
}

#[derive(Debug, Clone, Default)]
pub struct BenchOptions<'a> {
    pub recipients: usize,
    pub periods: u32,
    pub deposit: Option<u128>,
    pub cost_table: Option<&'a Path>,
    pub json: Option<&'a Path>,
}

pub fn cmd_bench(opts: BenchOptions<'_>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let Some(costs) = load_costs(opts.cost_table, err) else {
        return EXIT_INPUT;
    };
    let mut cfg = PayrollConfig::new(opts.recipients, opts.periods);
    if let Some(d) = opts.deposit {
        cfg = cfg.with_deposit(Amount::new(d));
    }
    let report = match run_comparison(&cfg, costs) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "bench failed: {e}");
            return EXIT_FAILED;
        }
    };
    let _ = write!(out, "{}", report.render());
    if let Some(path) = opts.json {
        if !write_file(path, &(report.to_json() + "\n"), err) {
            return EXIT_INPUT;
        }
    }
    EXIT_OK
}

/// Stdout and stderr for the real binary.
pub fn stdio() -> (io::Stdout, io::Stderr) {
    (io::stdout(), io::stderr())
}
