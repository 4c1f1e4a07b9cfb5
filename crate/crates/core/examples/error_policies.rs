//! The same failing condition handled four ways: proceed, hold, refund and
//! redirect to a goalkeeper. Each case emits exactly one StreamError.

use streampay::pipeline::parse;
use streampay::{Amount, CostTable, Engine, EventKind};

fn main() {
    let fixtures = [
        ("proceed", include_str!("../fixtures/policy_proceed.toml")),
        ("hold", include_str!("../fixtures/policy_hold.toml")),
        ("refund", include_str!("../fixtures/policy_refund.toml")),
        ("redirect", include_str!("../fixtures/policy_redirect.toml")),
    ];
    for (name, text) in fixtures {
        let mut engine = Engine::new(&parse(text).unwrap(), CostTable::default(), 0).unwrap();
        engine.approve("alice", "node:src", Amount::new(40));
        // 40 is below the gate's minimum of 100
        let tx = engine.deposit("alice", Amount::new(40));
        let error = tx
            .events
            .iter()
            .find(|e| e.kind == EventKind::StreamError)
            .unwrap();
        println!(
            "{name:<9} alice {:>3}  shop {:>2}  gate {:>2}  keeper {:>2}  [{} {}]",
            engine.balance_of("alice"),
            engine.balance_of("shop"),
            engine.held("gate").unwrap(),
            engine.held("keeper").unwrap_or_default(),
            error.str_field("reason").unwrap(),
            error.str_field("action").unwrap()
        );
    }
}
