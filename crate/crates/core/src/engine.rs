//! Deterministic transaction executor.
//!
//! An [`Engine`] owns the ledger, the live nodes, the simulated clock, the
//! gas meter and the event log. Every external stimulus is one transaction:
//! the engine snapshots ledger and node state, runs the trigger to
//! completion (propagating the stream synchronously from node to node) and
//! either commits or restores the snapshot. Reverted transactions keep their
//! gas entry; their events go to a separate revert trace.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::event::{self, payload, EventKind, EventRecord, Payload, Scalar};
use crate::gas::{CostTable, Gas, GasKind, GasMeter, GasReport, GasReportLine, GasUsage};
use crate::ledger::{Address, Amount, LedgerError, TokenLedger};
use crate::nodes::{
    Behavior, Endpoint, EndpointMode, ErrorContext, ErrorSeverity, Node, NodeKind, Output,
    PolicyAction, StreamError, StreamErrorCode, StreamMessage,
};
use crate::pipeline::{validate, NodeRole, PipelineSpec, ValidationError};
use crate::templates::{Ctx, InstructError, Router, Step};

/// External stimulus executed as one transaction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Trigger {
    Approve {
        owner: Address,
        spender: Address,
        amount: Amount,
    },
    Deposit {
        from: Address,
        amount: Amount,
        metadata: BTreeMap<String, Scalar>,
    },
    /// Executes the pending release of a time-lock router. Issued by
    /// [`Engine::advance_time`].
    Crank {
        node: String,
    },
    OracleInstruct {
        node: String,
        oracle: Address,
        tag: String,
        amount: Amount,
    },
    Claim {
        node: String,
        account: Address,
    },
}

impl Trigger {
    pub fn kind(&self) -> TriggerKind {
        match self {
            Trigger::Approve { .. } => TriggerKind::Approve,
            Trigger::Deposit { .. } => TriggerKind::Deposit,
            Trigger::Crank { .. } => TriggerKind::AdvanceTime,
            Trigger::OracleInstruct { .. } => TriggerKind::OracleInstruct,
            Trigger::Claim { .. } => TriggerKind::Claim,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TriggerKind {
    Approve,
    Deposit,
    AdvanceTime,
    OracleInstruct,
    Claim,
}

impl fmt::Display for TriggerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            TriggerKind::Approve => "Approve",
            TriggerKind::Deposit => "Deposit",
            TriggerKind::AdvanceTime => "AdvanceTime",
            TriggerKind::OracleInstruct => "OracleInstruct",
            TriggerKind::Claim => "Claim",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TxStatus {
    Committed,
    Reverted,
}

impl fmt::Display for TxStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            TxStatus::Committed => "Committed",
            TxStatus::Reverted => "Reverted",
        })
    }
}

/// Why a transaction reverted.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TxError {
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("unknown account `{0}`")]
    UnknownAccount(Address),
    #[error("amount must be > 0")]
    ZeroAmount,
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error("no edge {from} -> {to}")]
    MissingEdge { from: String, to: String },
    #[error("fatal stream error at `{node}`: {error}")]
    Fatal { node: String, error: StreamError },
    #[error("`{node}` could not redirect to `{target}`: {reason}")]
    RedirectFailed {
        node: String,
        target: String,
        reason: String,
    },
    #[error("goalkeeper `{node}` failed: {reason}")]
    GoalkeeperFailed { node: String, reason: String },
    #[error("`{0}` is not an oracle-directed router")]
    NotAnOracle(String),
    #[error(transparent)]
    Instruct(#[from] InstructError),
    #[error("`{0}` has no pending release that is due")]
    NotDue(String),
    #[error("`{0}` does not hold claimable funds")]
    NotClaimable(String),
    #[error("nothing to claim for {account} at `{node}`")]
    NothingToClaim { node: String, account: Address },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TxResult {
    pub id: u64,
    pub trigger: TriggerKind,
    /// Clock reading while the transaction ran.
    pub at: u64,
    pub status: TxStatus,
    pub gas: Gas,
    pub usage: GasUsage,
    pub error: Option<TxError>,
    /// Events the transaction produced. For reverted transactions these
    /// live only in the revert trace.
    pub events: Vec<EventRecord>,
}

impl TxResult {
    pub fn committed(&self) -> bool {
        self.status == TxStatus::Committed
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InstantiateError {
    #[error("pipeline is invalid ({} problem(s))", .0.len())]
    Invalid(Vec<ValidationError>),
    #[error("minting initial balances failed: {0}")]
    Mint(LedgerError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SetupError {
    #[error("minting is only allowed before the first transaction")]
    MintClosed,
    #[error(transparent)]
    Ledger(#[from] LedgerError),
}

/// Everything a revert must restore.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EngineState {
    pub ledger: TokenLedger,
    pub nodes: Vec<Node>,
}

#[derive(Debug, Clone)]
struct TxSummary {
    id: u64,
    trigger: TriggerKind,
    status: TxStatus,
    gas: Gas,
}

enum Delivery {
    Accepted,
    Rejected(StreamError),
}

#[derive(Debug, Clone)]
pub struct Engine {
    name: String,
    ledger: TokenLedger,
    nodes: Vec<Node>,
    index: BTreeMap<String, usize>,
    originator: usize,
    now: u64,
    gas: GasMeter,
    events: Vec<EventRecord>,
    reverted: Vec<EventRecord>,
    pending: Vec<EventRecord>,
    current_tx: u64,
    tx_log: Vec<TxSummary>,
    next_tx: u64,
}

impl Engine {
    /// Builds an engine from a validated spec. Node addresses are
    /// `node:<id>`; initial balances are minted as setup events under
    /// transaction id 0, which is not metered.
    pub fn new(
        spec: &PipelineSpec,
        costs: CostTable,
        clock_start: u64,
    ) -> Result<Self, InstantiateError> {
        let errors = validate(spec);
        if !errors.is_empty() {
            return Err(InstantiateError::Invalid(errors));
        }
        let index: BTreeMap<String, usize> = spec
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id.clone(), i))
            .collect();
        let nodes = spec
            .nodes
            .iter()
            .map(|n| Node {
                id: n.id.clone(),
                address: Address::for_node(&n.id),
                behavior: match &n.role {
                    NodeRole::Originator => Behavior::Originator,
                    NodeRole::Router(t) => Behavior::Router(Router::new(t)),
                    NodeRole::Endpoint(e) => Behavior::Endpoint(Endpoint::new(e.clone())),
                },
                outputs: n
                    .outputs
                    .iter()
                    .map(|o| Output {
                        tag: o.tag.clone(),
                        to: index[&o.to],
                    })
                    .collect(),
                error_policy: n.error_policy.clone(),
            })
            .collect::<Vec<_>>();
        let originator = nodes
            .iter()
            .position(|n| n.kind() == NodeKind::Originator)
            .expect("validated spec has an originator");
        let mut engine = Engine {
            name: spec.name.clone(),
            ledger: TokenLedger::new(),
            nodes,
            index,
            originator,
            now: clock_start,
            gas: GasMeter::new(costs),
            events: Vec::new(),
            reverted: Vec::new(),
            pending: Vec::new(),
            current_tx: 0,
            tx_log: Vec::new(),
            next_tx: 1,
        };
        for (account, amount) in &spec.initial_balances {
            engine.mint(account, *amount).map_err(|e| match e {
                SetupError::Ledger(l) => InstantiateError::Mint(l),
                SetupError::MintClosed => unreachable!("no transaction has run yet"),
            })?;
        }
        Ok(engine)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Credits `to` during setup, before any transaction has run.
    pub fn mint(&mut self, to: &Address, amount: Amount) -> Result<(), SetupError> {
        if self.next_tx != 1 {
            return Err(SetupError::MintClosed);
        }
        let ev = self.ledger.mint(to, amount)?;
        let (emitter, kind, payload) = event::ledger_event_parts(ev);
        let seq = self.events.len() as u32;
        self.events.push(EventRecord {
            tx_id: 0,
            seq,
            emitter,
            kind,
            payload,
        });
        Ok(())
    }

    // --- reads ---

    pub fn now(&self) -> u64 {
        self.now
    }

    pub fn ledger(&self) -> &TokenLedger {
        &self.ledger
    }

    pub fn balance_of(&self, account: &str) -> Amount {
        self.ledger.balance_of(&Address::new(account))
    }

    pub fn node(&self, id: &str) -> Option<&Node> {
        self.index.get(id).map(|&i| &self.nodes[i])
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn originator(&self) -> &Node {
        &self.nodes[self.originator]
    }

    /// Ledger balance of a node's address.
    pub fn held(&self, id: &str) -> Option<Amount> {
        self.node(id).map(|n| self.ledger.balance_of(&n.address))
    }

    pub fn claimable(&self, node: &str, account: &str) -> Amount {
        let account = Address::new(account);
        match self.node(node).map(|n| &n.behavior) {
            Some(Behavior::Endpoint(e)) => e.claimable_of(&account),
            Some(Behavior::Router(Router::Goalkeeper(g))) => {
                g.claimable.get(&account).copied().unwrap_or_default()
            }
            _ => Amount::ZERO,
        }
    }

    /// Canonical log of committed events, including setup mints.
    pub fn events(&self) -> &[EventRecord] {
        &self.events
    }

    pub fn reverted_events(&self) -> &[EventRecord] {
        &self.reverted
    }

    pub fn costs(&self) -> &CostTable {
        self.gas.table()
    }

    pub fn state(&self) -> EngineState {
        EngineState {
            ledger: self.ledger.clone(),
            nodes: self.nodes.clone(),
        }
    }

    pub fn gas_report(&self) -> GasReport {
        GasReport {
            entries: self
                .tx_log
                .iter()
                .map(|t| GasReportLine {
                    tx_id: t.id,
                    trigger: t.trigger.to_string(),
                    status: t.status.to_string(),
                    gas: t.gas,
                })
                .collect(),
        }
    }

    pub fn total_gas(&self) -> Gas {
        self.gas.total()
    }

    pub fn export_trace(&self) -> String {
        event::export_trace(&self.events)
    }

    pub fn export_gas(&self) -> String {
        self.gas_report().export()
    }

    /// Earliest pending time-lock release as `(due, node id)`.
    pub fn next_release(&self) -> Option<(u64, &str)> {
        self.pending_releases(&BTreeSet::new())
            .map(|(due, i)| (due, self.nodes[i].id.as_str()))
    }

    // --- triggers ---

    pub fn approve(&mut self, owner: &str, spender: &str, amount: Amount) -> TxResult {
        self.submit(Trigger::Approve {
            owner: Address::new(owner),
            spender: Address::new(spender),
            amount,
        })
    }

    pub fn deposit(&mut self, from: &str, amount: Amount) -> TxResult {
        self.deposit_with(from, amount, BTreeMap::new())
    }

    pub fn deposit_with(
        &mut self,
        from: &str,
        amount: Amount,
        metadata: BTreeMap<String, Scalar>,
    ) -> TxResult {
        self.submit(Trigger::Deposit {
            from: Address::new(from),
            amount,
            metadata,
        })
    }

    pub fn oracle_instruct(
        &mut self,
        node: &str,
        oracle: &str,
        tag: &str,
        amount: Amount,
    ) -> TxResult {
        self.submit(Trigger::OracleInstruct {
            node: node.to_string(),
            oracle: Address::new(oracle),
            tag: tag.to_string(),
            amount,
        })
    }

    pub fn claim(&mut self, node: &str, account: &str) -> TxResult {
        self.submit(Trigger::Claim {
            node: node.to_string(),
            account: Address::new(account),
        })
    }

    /// Moves the clock forward by `delta` seconds and cranks every release
    /// that falls due on the way, one transaction each, ordered by due time
    /// and then node id. The clock reads the due time while a release runs.
    /// A release whose transaction reverts stays pending and is retried on
    /// the next call.
    pub fn advance_time(&mut self, delta: u64) -> Vec<TxResult> {
        let target = self.now.saturating_add(delta);
        let mut results = Vec::new();
        let mut blocked = BTreeSet::new();
        while let Some((due, i)) = self.pending_releases(&blocked) {
            if due > target {
                break;
            }
            self.now = self.now.max(due);
            let node = self.nodes[i].id.clone();
            let r = self.submit(Trigger::Crank { node });
            if !r.committed() {
                blocked.insert(i);
            }
            results.push(r);
        }
        self.now = target;
        results
    }

    fn pending_releases(&self, blocked: &BTreeSet<usize>) -> Option<(u64, usize)> {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(i, _)| !blocked.contains(i))
            .filter_map(|(i, n)| match &n.behavior {
                Behavior::Router(Router::TimeLock(t)) => t.next_due().map(|d| (d, i)),
                _ => None,
            })
            .min_by(|a, b| (a.0, &self.nodes[a.1].id).cmp(&(b.0, &self.nodes[b.1].id)))
    }

    /// Runs one trigger as an atomic transaction.
    pub fn submit(&mut self, trigger: Trigger) -> TxResult {
        let id = self.next_tx;
        self.next_tx += 1;
        self.current_tx = id;
        self.pending.clear();
        self.gas.begin();
        self.gas.charge(GasKind::TxBase);
        let snapshot = self.state();

        let outcome = self.execute(&trigger);

        let events = std::mem::take(&mut self.pending);
        let (status, error) = match outcome {
            Ok(()) => {
                self.events.extend(events.iter().cloned());
                (TxStatus::Committed, None)
            }
            Err(e) => {
                self.ledger = snapshot.ledger;
                self.nodes = snapshot.nodes;
                self.reverted.extend(events.iter().cloned());
                (TxStatus::Reverted, Some(e))
            }
        };
        let usage = self.gas.finish(id);
        self.tx_log.push(TxSummary {
            id,
            trigger: trigger.kind(),
            status,
            gas: usage.total(),
        });
        TxResult {
            id,
            trigger: trigger.kind(),
            at: self.now,
            status,
            gas: usage.total(),
            usage,
            error,
            events,
        }
    }

    fn execute(&mut self, trigger: &Trigger) -> Result<(), TxError> {
        match trigger {
            Trigger::Approve {
                owner,
                spender,
                amount,
            } => {
                self.ledger_approve(owner, spender, *amount);
                Ok(())
            }
            Trigger::Deposit {
                from,
                amount,
                metadata,
            } => self.originator_deposit(from, *amount, metadata),
            Trigger::Crank { node } => self.crank(node),
            Trigger::OracleInstruct {
                node,
                oracle,
                tag,
                amount,
            } => self.instruct(node, oracle, tag, *amount),
            Trigger::Claim { node, account } => self.endpoint_claim(node, account),
        }
    }

    fn node_index(&self, id: &str) -> Result<usize, TxError> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| TxError::UnknownNode(id.to_string()))
    }

    // --- metered ledger primitives ---

    fn emit(&mut self, emitter: &Address, kind: EventKind, payload: Payload) {
        self.gas.charge(GasKind::EventEmit);
        let seq = self.pending.len() as u32;
        self.pending.push(EventRecord {
            tx_id: self.current_tx,
            seq,
            emitter: emitter.clone(),
            kind,
            payload,
        });
    }

    fn emit_ledger(&mut self, ev: crate::ledger::LedgerEvent) {
        let (emitter, kind, payload) = event::ledger_event_parts(ev);
        self.emit(&emitter, kind, payload);
    }

    fn ledger_approve(&mut self, owner: &Address, spender: &Address, amount: Amount) {
        self.gas.charge(GasKind::LedgerWrite);
        let ev = self.ledger.approve(owner, spender, amount);
        self.emit_ledger(ev);
    }

    fn ledger_transfer(
        &mut self,
        from: &Address,
        to: &Address,
        amount: Amount,
    ) -> Result<(), TxError> {
        self.gas.charge(GasKind::LedgerRead);
        let ev = self.ledger.transfer(from, to, amount)?;
        self.gas.charge_n(GasKind::LedgerWrite, 2);
        self.emit_ledger(ev);
        Ok(())
    }

    fn ledger_transfer_from(
        &mut self,
        spender: &Address,
        owner: &Address,
        to: &Address,
        amount: Amount,
    ) -> Result<(), TxError> {
        self.gas.charge_n(GasKind::LedgerRead, 2);
        let ev = self.ledger.transfer_from(spender, owner, to, amount)?;
        self.gas.charge_n(GasKind::LedgerWrite, 3);
        self.emit_ledger(ev);
        Ok(())
    }

    // --- protocol ---

    fn originator_deposit(
        &mut self,
        from: &Address,
        amount: Amount,
        metadata: &BTreeMap<String, Scalar>,
    ) -> Result<(), TxError> {
        if amount.is_zero() {
            return Err(TxError::ZeroAmount);
        }
        let o = self.originator;
        let address = self.nodes[o].address.clone();
        self.gas.charge(GasKind::LedgerRead);
        if !self.ledger.has_account(from) {
            return Err(TxError::UnknownAccount(from.clone()));
        }
        self.ledger_transfer_from(&address, from, &address, amount)?;
        let msg = StreamMessage::new(amount, from.clone(), &self.nodes[o].id, metadata.clone());
        self.forward(o, 0, msg)
    }

    /// Sends `msg` along output `output` of `from` and handles a refusal
    /// with the sender's error policy.
    fn forward(&mut self, from: usize, output: usize, msg: StreamMessage) -> Result<(), TxError> {
        let Some(to) = self.nodes[from].outputs.get(output).map(|o| o.to) else {
            return Err(TxError::MissingEdge {
                from: self.nodes[from].id.clone(),
                to: format!("output #{output}"),
            });
        };
        match self.dispatch(from, to, msg.clone())? {
            Delivery::Accepted => Ok(()),
            Delivery::Rejected(error) => {
                if matches!(self.nodes[from].router(), Some(Router::Goalkeeper(_))) {
                    return Err(TxError::GoalkeeperFailed {
                        node: self.nodes[from].id.clone(),
                        reason: error.to_string(),
                    });
                }
                self.handle_error(from, error, msg, Vec::new())
            }
        }
    }

    /// Approve, notify, pull. The recipient runs synchronously; a `Sent`
    /// event is emitted as soon as the pull succeeds.
    fn dispatch(
        &mut self,
        from: usize,
        to: usize,
        mut msg: StreamMessage,
    ) -> Result<Delivery, TxError> {
        let is_edge = self.nodes[from].outputs.iter().any(|o| o.to == to)
            || self.nodes[from]
                .error_policy
                .redirect_targets()
                .any(|t| t == self.nodes[to].id);
        if !is_edge {
            return Err(TxError::MissingEdge {
                from: self.nodes[from].id.clone(),
                to: self.nodes[to].id.clone(),
            });
        }
        self.gas.charge(GasKind::NodeCall);
        let sender = self.nodes[from].address.clone();
        let recipient = self.nodes[to].address.clone();
        self.ledger_approve(&sender, &recipient, msg.amount);

        let admitted = match &self.nodes[to].behavior {
            _ if msg.amount.is_zero() => Err(StreamError::new(
                ErrorSeverity::Recoverable,
                StreamErrorCode::ZeroAmount,
                "empty stream",
            )),
            Behavior::Router(r) => r.admit(&msg),
            Behavior::Endpoint(_) => Ok(()),
            Behavior::Originator => Err(StreamError::new(
                ErrorSeverity::Fatal,
                StreamErrorCode::ZeroAmount,
                "originators do not accept streams",
            )),
        };
        if let Err(e) = admitted {
            self.ledger_approve(&sender, &recipient, Amount::ZERO);
            return Ok(Delivery::Rejected(e));
        }

        self.ledger_transfer_from(&recipient, &sender, &recipient, msg.amount)?;
        self.emit(
            &sender,
            EventKind::Sent,
            payload([("amount", msg.amount.into()), ("to", (&recipient).into())]),
        );
        msg.path.push(self.nodes[to].id.clone());
        self.on_stream_received(to, msg)?;
        Ok(Delivery::Accepted)
    }

    fn on_stream_received(&mut self, idx: usize, msg: StreamMessage) -> Result<(), TxError> {
        let held = self.ledger.balance_of(&self.nodes[idx].address);
        let now = self.now;
        let Engine { nodes, gas, .. } = self;
        let Node {
            id,
            address,
            behavior,
            outputs,
            ..
        } = &mut nodes[idx];
        let steps = match behavior {
            Behavior::Router(router) => {
                let mut ctx = Ctx {
                    node_id: id,
                    address,
                    now,
                    held,
                    outputs,
                    gas,
                };
                router.receive(&mut ctx, &msg)
            }
            Behavior::Endpoint(endpoint) => {
                gas.charge(GasKind::ConfigRead);
                endpoint_receive(endpoint, gas, &msg)
            }
            Behavior::Originator => unreachable!("dispatch refuses originators"),
        };
        self.run_steps(idx, steps)
    }

    fn run_steps(&mut self, idx: usize, steps: Vec<Step>) -> Result<(), TxError> {
        for step in steps {
            match step {
                Step::Forward { output, msg } => self.forward(idx, output, msg)?,
                Step::Emit { kind, payload } => {
                    let address = self.nodes[idx].address.clone();
                    self.emit(&address, kind, payload);
                }
                Step::Pay { to, amount } => {
                    let address = self.nodes[idx].address.clone();
                    self.ledger_transfer(&address, &to, amount)?;
                }
                Step::Fail(f) => {
                    let f = *f;
                    self.handle_error(idx, f.error, f.msg, f.on_proceed)?;
                }
            }
        }
        Ok(())
    }

    /// Emits one `StreamError` and applies the node's policy for the
    /// severity to the funds in `msg`.
    fn handle_error(
        &mut self,
        idx: usize,
        error: StreamError,
        msg: StreamMessage,
        on_proceed: Vec<Step>,
    ) -> Result<(), TxError> {
        let action = match error.severity {
            ErrorSeverity::Fatal => PolicyAction::Revert,
            s => self.nodes[idx].error_policy.action(s),
        };
        let address = self.nodes[idx].address.clone();
        self.emit(
            &address,
            EventKind::StreamError,
            payload([
                ("action", action.to_string().into()),
                ("amount", msg.amount.into()),
                ("detail", error.detail.clone().into()),
                ("origin", (&msg.origin).into()),
                ("reason", error.code.as_str().into()),
                ("severity", error.severity.as_str().into()),
            ]),
        );
        match action {
            PolicyAction::Proceed => self.run_steps(idx, on_proceed),
            PolicyAction::Hold => Ok(()),
            PolicyAction::Refund => self.ledger_transfer(&address, &msg.origin, msg.amount),
            PolicyAction::Revert => Err(TxError::Fatal {
                node: self.nodes[idx].id.clone(),
                error,
            }),
            PolicyAction::Redirect(target) => {
                let node = self.nodes[idx].id.clone();
                let failed = |reason: String| TxError::RedirectFailed {
                    node: node.clone(),
                    target: target.clone(),
                    reason,
                };
                let Some(&to) = self.index.get(&target) else {
                    return Err(failed("no such node".into()));
                };
                let mut redirected = msg;
                redirected.error = Some(ErrorContext {
                    raised_by: self.nodes[idx].id.clone(),
                    severity: error.severity,
                    reason: error.code.as_str().to_string(),
                });
                match self.dispatch(idx, to, redirected)? {
                    Delivery::Accepted => Ok(()),
                    Delivery::Rejected(e) => Err(failed(e.to_string())),
                }
            }
        }
    }

    fn crank(&mut self, node: &str) -> Result<(), TxError> {
        let idx = self.node_index(node)?;
        let held = self.ledger.balance_of(&self.nodes[idx].address);
        let now = self.now;
        let Engine { nodes, gas, .. } = self;
        let Node {
            id,
            address,
            behavior,
            outputs,
            ..
        } = &mut nodes[idx];
        let Behavior::Router(Router::TimeLock(lock)) = behavior else {
            return Err(TxError::NotDue(node.to_string()));
        };
        if !lock.next_due().is_some_and(|due| due <= now) {
            return Err(TxError::NotDue(node.to_string()));
        }
        let mut ctx = Ctx {
            node_id: id,
            address,
            now,
            held,
            outputs,
            gas,
        };
        let steps = lock.crank(&mut ctx);
        self.run_steps(idx, steps)
    }

    fn instruct(
        &mut self,
        node: &str,
        oracle: &Address,
        tag: &str,
        amount: Amount,
    ) -> Result<(), TxError> {
        let idx = self.node_index(node)?;
        let held = self.ledger.balance_of(&self.nodes[idx].address);
        let now = self.now;
        let Engine { nodes, gas, .. } = self;
        let Node {
            id,
            address,
            behavior,
            outputs,
            ..
        } = &mut nodes[idx];
        let Behavior::Router(Router::Oracle(router)) = behavior else {
            return Err(TxError::NotAnOracle(node.to_string()));
        };
        let mut ctx = Ctx {
            node_id: id,
            address,
            now,
            held,
            outputs,
            gas,
        };
        let steps = router.instruct(&mut ctx, oracle, tag, amount)?;
        self.run_steps(idx, steps)
    }

    fn endpoint_claim(&mut self, node: &str, account: &Address) -> Result<(), TxError> {
        let idx = self.node_index(node)?;
        self.gas.charge(GasKind::LedgerRead);
        let claimable = match &mut self.nodes[idx].behavior {
            Behavior::Endpoint(e) if e.config.mode == EndpointMode::Claimable => &mut e.claimable,
            Behavior::Router(Router::Goalkeeper(g)) => &mut g.claimable,
            _ => return Err(TxError::NotClaimable(node.to_string())),
        };
        let amount = claimable.remove(account).unwrap_or_default();
        if amount.is_zero() {
            return Err(TxError::NothingToClaim {
                node: node.to_string(),
                account: account.clone(),
            });
        }
        self.gas.charge(GasKind::LedgerWrite);
        let address = self.nodes[idx].address.clone();
        self.ledger_transfer(&address, account, amount)?;
        self.emit(
            &address,
            EventKind::Claimed,
            payload([("account", account.into()), ("amount", amount.into())]),
        );
        Ok(())
    }
}

/// Direct endpoints pay the recipient at once; claimable ones book the
/// amount for a later claim.
fn endpoint_receive(endpoint: &mut Endpoint, gas: &mut GasMeter, msg: &StreamMessage) -> Vec<Step> {
    let recipient = endpoint.config.recipient.clone();
    match endpoint.config.mode {
        EndpointMode::Direct => vec![Step::Pay {
            to: recipient,
            amount: msg.amount,
        }],
        EndpointMode::Claimable => {
            gas.charge(GasKind::LedgerWrite);
            let entry = endpoint.claimable.entry(recipient.clone()).or_default();
            *entry = *entry + msg.amount;
            vec![Step::Emit {
                kind: EventKind::Held,
                payload: payload([
                    ("amount", msg.amount.into()),
                    ("claimant", (&recipient).into()),
                ]),
            }]
        }
    }
}
