//! A threshold router accumulates small deposits and forwards the whole
//! balance once it reaches the threshold.

use streampay::pipeline::parse;
use streampay::{Amount, CostTable, Engine};

fn main() {
    let spec = parse(include_str!("../fixtures/threshold.toml")).unwrap();
    let mut engine = Engine::new(&spec, CostTable::default(), 0).unwrap();
    engine.approve("alice", "node:src", Amount::new(1_000));

    for amount in [100, 100, 100, 40, 300] {
        engine.deposit("alice", Amount::new(amount));
        println!(
            "deposit {amount:>3}: batch holds {:>3}, vendor has {:>3}",
            engine.held("batch").unwrap(),
            engine.balance_of("vendor")
        );
    }
}
