//! Marketplace fees: a fixed platform fee, the rest to the merchant, and a
//! report that copies the order id from the deposit metadata.

use std::collections::BTreeMap;

use streampay::pipeline::parse;
use streampay::{Amount, CostTable, Engine, EventKind, Scalar};

fn main() {
    let spec = parse(include_str!("../fixtures/fees.toml")).unwrap();
    let mut engine = Engine::new(&spec, CostTable::default(), 0).unwrap();
    engine.approve("customer", "node:src", Amount::new(10_000));

    let meta = BTreeMap::from([("order".to_string(), Scalar::from(42u64))]);
    engine.deposit_with("customer", Amount::new(1_000), meta);
    println!(
        "platform {}, merchant {}",
        engine.balance_of("platform"),
        engine.balance_of("merchant")
    );
    for e in engine
        .events()
        .iter()
        .filter(|e| e.kind == EventKind::Report)
    {
        println!("report: {e}");
    }

    // below the fixed fee: the splitter fails and the keeper refunds
    engine.deposit("customer", Amount::new(10));
    println!(
        "customer after a 10 deposit: {}",
        engine.balance_of("customer")
    );
}
