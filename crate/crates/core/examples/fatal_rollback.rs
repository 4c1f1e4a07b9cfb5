//! A fatal error deep inside a release reverts the whole transaction. The
//! gas is still charged and the partial events are kept apart.

use streampay::pipeline::parse;
use streampay::{Amount, CostTable, Engine};

fn main() {
    let spec = parse(include_str!("../fixtures/fatal_rollback.toml")).unwrap();
    let mut engine = Engine::new(&spec, CostTable::default(), 0).unwrap();
    engine.approve("alice", "node:src", Amount::new(600));
    engine.deposit("alice", Amount::new(600));
    let before = engine.state();

    for tx in engine.advance_time(10) {
        println!(
            "tx {} at t={}: {:?}, gas {}",
            tx.id, tx.at, tx.status, tx.gas
        );
        if let Some(e) = tx.error {
            println!("  {e}");
        }
    }
    println!("state unchanged: {}", engine.state() == before);
    println!("events discarded by the revert:");
    for e in engine.reverted_events() {
        println!("  {e}");
    }
}
