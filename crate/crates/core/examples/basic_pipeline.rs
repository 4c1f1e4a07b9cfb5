//! Smallest useful pipeline: an originator feeding one endpoint. Prints the
//! event trace and the gas report.

use streampay::pipeline::parse;
use streampay::{Amount, CostTable, Engine};

const SPEC: &str = r#"
[pipeline]
name = "hello"

[balances]
alice = 100

[[node]]
id = "src"
kind = "originator"
outputs = [{ tag = "out", to = "bob" }]

[[node]]
id = "bob"
kind = "endpoint"
mode = "direct"
recipient = "bob"
"#;

fn main() {
    let spec = parse(SPEC).expect("spec parses");
    let mut engine = Engine::new(&spec, CostTable::default(), 0).expect("spec is valid");

    engine.approve("alice", "node:src", Amount::new(60));
    let tx = engine.deposit("alice", Amount::new(60));
    println!("deposit: {:?}, gas {}", tx.status, tx.gas);
    println!("bob holds {}", engine.balance_of("bob"));

    print!("{}", engine.export_trace());
    print!("{}", engine.export_gas());
}
