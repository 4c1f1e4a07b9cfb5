use crate::event::{self, payload, EventKind, EventRecord, Payload, Scalar};
use crate::gas::{CostTable, Gas, GasKind, GasMeter, GasReport, GasReportLine};
use crate::ledger::{Address, Amount, LedgerError, LedgerEvent, TokenLedger};
use crate::templates::{split, ShareRule, TimeLock};

use super::{PayrollConfig, TAX_SINK};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonolithicTx {
    pub id: u64,
    pub trigger: &'static str,
    pub at: u64,
    pub gas: Gas,
    pub events: Vec<EventRecord>,
}

/// The whole payroll in one contract: custody, schedule, weighted split,
/// reporting and payout, all inside a single call frame per trigger.
#[derive(Debug, Clone)]
pub struct MonolithicPayroll {
    address: Address,
    employees: Vec<Address>,
    rules: Vec<ShareRule>,
    schedule: TimeLock,
    ledger: TokenLedger,
    gas: GasMeter,
    now: u64,
    txs: Vec<MonolithicTx>,
    pending: Vec<EventRecord>,
}

impl MonolithicPayroll {
    pub fn new(cfg: &PayrollConfig, costs: CostTable) -> Self {
        let mut ledger = TokenLedger::new();
        ledger
            .mint(&Address::new(super::EMPLOYER), cfg.deposit)
            .expect("single mint cannot overflow");
        MonolithicPayroll {
            address: Address::new("contract:payroll"),
            employees: cfg.employees(),
            rules: cfg.weights.iter().map(|&w| ShareRule::Weight(w)).collect(),
            schedule: TimeLock::new(cfg.schedule()),
            ledger,
            gas: GasMeter::new(costs),
            now: 0,
            txs: Vec::new(),
            pending: Vec::new(),
        }
    }

    pub fn address(&self) -> &Address {
        &self.address
    }

    pub fn ledger(&self) -> &TokenLedger {
        &self.ledger
    }

    pub fn txs(&self) -> &[MonolithicTx] {
        &self.txs
    }

    pub fn total_gas(&self) -> Gas {
        self.gas.total()
    }

    pub fn gas_report(&self) -> GasReport {
        GasReport {
            entries: self
                .txs
                .iter()
                .map(|t| GasReportLine {
                    tx_id: t.id,
                    trigger: t.trigger.to_string(),
                    status: "Committed".to_string(),
                    gas: t.gas,
                })
                .collect(),
        }
    }

    pub fn export_trace(&self) -> String {
        let events: Vec<EventRecord> = self.txs.iter().flat_map(|t| t.events.clone()).collect();
        event::export_trace(&events)
    }

    fn emit(&mut self, emitter: &Address, kind: EventKind, payload: Payload) {
        self.gas.charge(GasKind::EventEmit);
        self.pending.push(EventRecord {
            tx_id: self.txs.len() as u64 + 1,
            seq: self.pending.len() as u32,
            emitter: emitter.clone(),
            kind,
            payload,
        });
    }

    fn emit_ledger(&mut self, ev: LedgerEvent) {
        let (emitter, kind, payload) = event::ledger_event_parts(ev);
        self.emit(&emitter, kind, payload);
    }

    fn begin(&mut self) {
        self.pending.clear();
        self.gas.begin();
        self.gas.charge(GasKind::TxBase);
    }

    fn commit(&mut self, trigger: &'static str) {
        let id = self.txs.len() as u64 + 1;
        let usage = self.gas.finish(id);
        self.txs.push(MonolithicTx {
            id,
            trigger,
            at: self.now,
            gas: usage.total(),
            events: std::mem::take(&mut self.pending),
        });
    }

    pub fn approve(&mut self, owner: &str, amount: Amount) {
        self.begin();
        self.gas.charge(GasKind::LedgerWrite);
        let spender = self.address.clone();
        let ev = self.ledger.approve(&Address::new(owner), &spender, amount);
        self.emit_ledger(ev);
        self.commit("Approve");
    }

    /// Pulls the employer's funds into custody.
    pub fn deposit(&mut self, from: &str, amount: Amount) -> Result<(), LedgerError> {
        self.begin();
        self.gas.charge(GasKind::ConfigRead);
        self.gas.charge_n(GasKind::LedgerRead, 2);
        let me = self.address.clone();
        let ev = self
            .ledger
            .transfer_from(&me, &Address::new(from), &me, amount)?;
        self.gas.charge_n(GasKind::LedgerWrite, 3);
        self.emit_ledger(ev);
        self.emit(&me, EventKind::Held, payload([("amount", amount.into())]));
        self.commit("Deposit");
        Ok(())
    }

    /// Runs every release due up to `now + delta`, one transaction each.
    pub fn advance_time(&mut self, delta: u64) -> Result<(), LedgerError> {
        let target = self.now.saturating_add(delta);
        while let Some(due) = self.schedule.next_due().filter(|&d| d <= target) {
            self.now = self.now.max(due);
            self.release()?;
        }
        self.now = target;
        Ok(())
    }

    fn release(&mut self) -> Result<(), LedgerError> {
        self.begin();
        let me = self.address.clone();
        self.gas.charge(GasKind::ConfigRead);
        self.gas.charge(GasKind::LedgerRead);
        let k = self.schedule.next_release;
        let due = self.schedule.next_due().unwrap_or(u64::MAX);
        let amount = self.schedule.release_amount(self.ledger.balance_of(&me));
        self.schedule.next_release += 1;
        self.gas.charge(GasKind::LedgerWrite);
        self.emit(
            &me,
            EventKind::Released,
            payload([
                ("amount", amount.into()),
                ("due", Scalar::from(due)),
                ("release", Scalar::from(k as u64)),
            ]),
        );
        let parts = split(&self.rules, amount).expect("weighted split cannot fail");
        for (employee, part) in self.employees.clone().iter().zip(parts) {
            if part.is_zero() {
                continue;
            }
            self.emit(
                &me,
                EventKind::Report,
                payload([
                    ("amount", part.into()),
                    ("origin", (&me).into()),
                    ("sink", TAX_SINK.into()),
                ]),
            );
            self.gas.charge(GasKind::LedgerRead);
            let ev = self.ledger.transfer(&me, employee, part)?;
            self.gas.charge_n(GasKind::LedgerWrite, 2);
            self.emit_ledger(ev);
        }
        self.commit("AdvanceTime");
        Ok(())
    }
}
