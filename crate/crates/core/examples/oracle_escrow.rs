//! Escrow released by a trusted oracle. Instructions from anyone else, or
//! for more than is held, revert.

use streampay::pipeline::parse;
use streampay::{Amount, CostTable, Engine};

fn main() {
    let spec = parse(include_str!("../fixtures/oracle.toml")).unwrap();
    let mut engine = Engine::new(&spec, CostTable::default(), 0).unwrap();
    engine.approve("buyer", "node:src", Amount::new(500));
    engine.deposit("buyer", Amount::new(500));

    let attempts = [
        ("mallory", "seller", 500),
        ("arbiter", "seller", 900),
        ("arbiter", "seller", 350),
        ("arbiter", "buyer", 150),
    ];
    for (who, tag, amount) in attempts {
        let tx = engine.oracle_instruct("escrow", who, tag, Amount::new(amount));
        match &tx.error {
            None => println!("{who} sends {amount} to {tag}: ok"),
            Some(e) => println!("{who} sends {amount} to {tag}: reverted ({e})"),
        }
    }
    println!(
        "seller {}, buyer {}, escrow {}",
        engine.balance_of("seller"),
        engine.balance_of("buyer"),
        engine.held("escrow").unwrap()
    );
}
