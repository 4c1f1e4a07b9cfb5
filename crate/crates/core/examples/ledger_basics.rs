//! The token ledger on its own: mint, approve, pull with `transfer_from`.

use streampay::{Address, Amount, TokenLedger};

fn main() {
    let mut ledger = TokenLedger::new();
    let (alice, bob, shop) = (
        Address::new("alice"),
        Address::new("bob"),
        Address::new("shop"),
    );

    ledger.mint(&alice, Amount::new(1_000)).unwrap();
    ledger.transfer(&alice, &bob, Amount::new(250)).unwrap();

    // approve overwrites; it does not add
    ledger.approve(&bob, &shop, Amount::new(100));
    ledger.approve(&bob, &shop, Amount::new(80));
    println!("allowance bob->shop: {}", ledger.allowance(&bob, &shop));

    match ledger.transfer_from(&shop, &bob, &shop, Amount::new(90)) {
        Ok(_) => unreachable!(),
        Err(e) => println!("pulling 90: {e}"),
    }
    ledger
        .transfer_from(&shop, &bob, &shop, Amount::new(80))
        .unwrap();

    for (account, balance) in ledger.balances() {
        println!("{account:>6} {balance}");
    }
    println!(
        "supply {} conserved={}",
        ledger.total_supply(),
        ledger.is_conserved()
    );
}
