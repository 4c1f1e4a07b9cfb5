//! Drive a pipeline from a scenario script, as `streampay run` does.

use streampay::pipeline::parse;
use streampay::scenario::{parse_scenario, run_scenario};
use streampay::{CostTable, Engine};

fn main() {
    let spec = parse(include_str!("../fixtures/payroll.toml")).unwrap();
    let script = parse_scenario(include_str!("../fixtures/payroll.scenario.toml")).unwrap();
    let mut engine = Engine::new(&spec, CostTable::default(), 0).unwrap();
    let outcome = run_scenario(&mut engine, &script);

    for tx in &outcome.txs {
        println!(
            "tx {:>2} t={:>3} {:<14} {:?} gas {}",
            tx.id,
            tx.at,
            tx.trigger.to_string(),
            tx.status,
            tx.gas
        );
    }
    println!("failed checks: {:?}", outcome.failed_checks);
    println!("exit code {}", outcome.exit_code());
}
