//! Vesting: a time lock releases a quarter of what it holds every 90 time
//! units into a claimable endpoint.

use streampay::pipeline::parse;
use streampay::{Amount, CostTable, Engine};

fn main() {
    let spec = parse(include_str!("../fixtures/vesting.toml")).unwrap();
    let mut engine = Engine::new(&spec, CostTable::default(), 0).unwrap();
    engine.approve("company", "node:src", Amount::new(1_000));
    engine.deposit("company", Amount::new(1_000));

    while let Some((due, node)) = engine.next_release() {
        let node = node.to_string();
        let txs = engine.advance_time(due - engine.now());
        println!(
            "t={due:>3} {node}: {} tx, vested for dana {}, still locked {}",
            txs.len(),
            engine.claimable("holder", "dana"),
            engine.held("vest").unwrap()
        );
    }

    let tx = engine.claim("holder", "dana");
    println!(
        "claim: {:?}, dana holds {}",
        tx.status,
        engine.balance_of("dana")
    );
}
