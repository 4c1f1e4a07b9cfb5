//! Gas is accounting only. A custom cost table changes the totals, never
//! the behaviour.

use streampay::bench::{run_pipeline, PayrollConfig};
use streampay::CostTable;

fn main() {
    let cfg = PayrollConfig::new(2, 2);
    let cheap_calls = CostTable::from_toml("node_call = 0\nevent_emit = 100\n").unwrap();
    for (label, costs) in [
        ("default", CostTable::default()),
        ("cheap calls", cheap_calls),
    ] {
        let run = run_pipeline(&cfg, costs).unwrap();
        println!("{label}:");
        for line in run.engine.gas_report().entries {
            println!("  tx {} {:<12} {}", line.tx_id, line.trigger, line.gas);
        }
        println!("  total {}", run.engine.total_gas());
    }
}
