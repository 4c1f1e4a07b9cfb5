//! Waterfall: the senior tier is filled to its lifetime cap before the next
//! one sees anything. The last tier here is a claimable fund.

use streampay::pipeline::parse;
use streampay::{Amount, CostTable, Engine};

fn main() {
    let spec = parse(include_str!("../fixtures/waterfall.toml")).unwrap();
    let mut engine = Engine::new(&spec, CostTable::default(), 0).unwrap();
    engine.approve("debtor", "node:src", Amount::new(1_000));

    for amount in [60, 120, 200] {
        engine.deposit("debtor", Amount::new(amount));
        println!(
            "paid {amount:>3}: bank {:>3}  fund (claimable) {:>3}  owner {:>3}",
            engine.balance_of("bank"),
            engine.claimable("fund", "fund"),
            engine.balance_of("owner")
        );
    }
    engine.claim("fund", "fund");
    println!(
        "after claim the fund account holds {}",
        engine.balance_of("fund")
    );
}
