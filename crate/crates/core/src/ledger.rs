//! Fungible-token ledger with ERC-20 style balances, allowances and
//! `transfer_from`.
//!
//! The ledger is a plain value: every mutating call either succeeds and
//! returns the [`LedgerEvent`] it produced, or fails and leaves the ledger
//! untouched. Callers (the engine) decide where events are recorded.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Add;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Source address recorded on mint events.
pub const NULL_ADDRESS: &str = "0x0";

/// Opaque account or node identity.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Address(String);

impl Address {
    /// Panics on an empty identifier; use [`Address::parse`] for untrusted input.
    pub fn new(id: impl Into<String>) -> Self {
        let id = id.into();
        assert!(!id.is_empty(), "address must be non-empty");
        Address(id)
    }

    pub fn parse(id: &str) -> Option<Self> {
        (!id.is_empty()).then(|| Address(id.to_string()))
    }

    /// Deterministic address of a pipeline node.
    pub fn for_node(node_id: &str) -> Self {
        Address(format!("node:{node_id}"))
    }

    pub fn null() -> Self {
        Address(NULL_ADDRESS.to_string())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(&self.0)
    }
}

impl From<&str> for Address {
    fn from(s: &str) -> Self {
        Address::new(s)
    }
}

/// Token quantity in the smallest denomination.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Amount(u128);

impl Amount {
    pub const ZERO: Amount = Amount(0);
    pub const MAX: Amount = Amount(u128::MAX);

    pub const fn new(units: u128) -> Self {
        Amount(units)
    }

    pub const fn units(self) -> u128 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn checked_add(self, rhs: Amount) -> Option<Amount> {
        self.0.checked_add(rhs.0).map(Amount)
    }

    pub fn checked_sub(self, rhs: Amount) -> Option<Amount> {
        self.0.checked_sub(rhs.0).map(Amount)
    }

    pub fn saturating_sub(self, rhs: Amount) -> Amount {
        Amount(self.0.saturating_sub(rhs.0))
    }
}

impl From<u128> for Amount {
    fn from(v: u128) -> Self {
        Amount(v)
    }
}

impl fmt::Display for Amount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

/// Panicking addition for call sites whose operands are bounded by the
/// total supply.
impl Add for Amount {
    type Output = Amount;

    fn add(self, rhs: Amount) -> Amount {
        self.checked_add(rhs).expect("amount overflow")
    }
}

impl std::iter::Sum for Amount {
    fn sum<I: Iterator<Item = Amount>>(iter: I) -> Amount {
        iter.fold(Amount::ZERO, |a, b| a + b)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LedgerError {
    #[error("insufficient balance: {account} holds {available}, needs {required}")]
    InsufficientBalance {
        account: Address,
        available: Amount,
        required: Amount,
    },
    #[error(
        "insufficient allowance: {spender} may spend {available} of {owner}, needs {required}"
    )]
    InsufficientAllowance {
        owner: Address,
        spender: Address,
        available: Amount,
        required: Amount,
    },
    #[error("amount overflow")]
    Overflow,
}

/// Record of a successful ledger mutation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LedgerEvent {
    Transfer {
        from: Address,
        to: Address,
        amount: Amount,
    },
    Approval {
        owner: Address,
        spender: Address,
        amount: Amount,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenLedger {
    balances: BTreeMap<Address, Amount>,
    allowances: BTreeMap<(Address, Address), Amount>,
    total_supply: Amount,
}

impl TokenLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn mint(&mut self, to: &Address, amount: Amount) -> Result<LedgerEvent, LedgerError> {
        let supply = self
            .total_supply
            .checked_add(amount)
            .ok_or(LedgerError::Overflow)?;
        // balance <= supply, so this cannot overflow once the supply check passed
        let balance = self.balance_of(to) + amount;
        self.total_supply = supply;
        self.balances.insert(to.clone(), balance);
        Ok(LedgerEvent::Transfer {
            from: Address::null(),
            to: to.clone(),
            amount,
        })
    }

    pub fn transfer(
        &mut self,
        from: &Address,
        to: &Address,
        amount: Amount,
    ) -> Result<LedgerEvent, LedgerError> {
        self.check_balance(from, amount)?;
        self.move_balance(from, to, amount);
        Ok(LedgerEvent::Transfer {
            from: from.clone(),
            to: to.clone(),
            amount,
        })
    }

    /// Sets the allowance, overwriting any previous value.
    pub fn approve(&mut self, owner: &Address, spender: &Address, amount: Amount) -> LedgerEvent {
        self.allowances
            .insert((owner.clone(), spender.clone()), amount);
        LedgerEvent::Approval {
            owner: owner.clone(),
            spender: spender.clone(),
            amount,
        }
    }

    /// Allowance is checked before balance.
    pub fn transfer_from(
        &mut self,
        spender: &Address,
        owner: &Address,
        to: &Address,
        amount: Amount,
    ) -> Result<LedgerEvent, LedgerError> {
        let allowed = self.allowance(owner, spender);
        if allowed < amount {
            return Err(LedgerError::InsufficientAllowance {
                owner: owner.clone(),
                spender: spender.clone(),
                available: allowed,
                required: amount,
            });
        }
        self.check_balance(owner, amount)?;
        self.allowances.insert(
            (owner.clone(), spender.clone()),
            Amount(allowed.0 - amount.0),
        );
        self.move_balance(owner, to, amount);
        Ok(LedgerEvent::Transfer {
            from: owner.clone(),
            to: to.clone(),
            amount,
        })
    }

    pub fn balance_of(&self, account: &Address) -> Amount {
        self.balances.get(account).copied().unwrap_or_default()
    }

    pub fn allowance(&self, owner: &Address, spender: &Address) -> Amount {
        self.allowances
            .get(&(owner.clone(), spender.clone()))
            .copied()
            .unwrap_or_default()
    }

    /// True once the account has been credited at least once.
    pub fn has_account(&self, account: &Address) -> bool {
        self.balances.contains_key(account)
    }

    pub fn total_supply(&self) -> Amount {
        self.total_supply
    }

    pub fn balances(&self) -> impl Iterator<Item = (&Address, Amount)> {
        self.balances.iter().map(|(a, v)| (a, *v))
    }

    /// Sum of all balances, or `None` if it overflows.
    pub fn sum_of_balances(&self) -> Option<Amount> {
        self.balances
            .values()
            .try_fold(Amount::ZERO, |acc, v| acc.checked_add(*v))
    }

    pub fn is_conserved(&self) -> bool {
        self.sum_of_balances() == Some(self.total_supply)
    }

    fn check_balance(&self, account: &Address, amount: Amount) -> Result<(), LedgerError> {
        let available = self.balance_of(account);
        if available < amount {
            return Err(LedgerError::InsufficientBalance {
                account: account.clone(),
                available,
                required: amount,
            });
        }
        Ok(())
    }

    // caller has checked that `from` covers `amount`
    fn move_balance(&mut self, from: &Address, to: &Address, amount: Amount) {
        let from_balance = self.balance_of(from);
        self.balances
            .insert(from.clone(), Amount(from_balance.0 - amount.0));
        let to_balance = self.balance_of(to);
        self.balances.insert(to.clone(), to_balance + amount);
    }
}
