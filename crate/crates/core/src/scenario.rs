//! Scenario scripts: an ordered list of actions driven against an engine.
//!
//! Scenarios use the same TOML reader as pipeline specs:
//!
//! ```toml
//! [[action]]
//! do = "approve"
//! owner = "employer"
//! spender = "node:payroll"
//! amount = 900
//!
//! [[action]]
//! do = "deposit"
//! from = "employer"
//! amount = 900
//!
//! [[action]]
//! do = "advance"
//! by = 90
//!
//! [[action]]
//! do = "assert"
//! check = "balance"
//! account = "emp1"
//! equals = 300
//! ```
//!
//! Any action that runs transactions may carry `expect = "revert"`.

use std::collections::BTreeMap;
use std::fmt;

use crate::engine::{Engine, TxResult};
use crate::event::{EventKind, Scalar};
use crate::ledger::{Address, Amount};
use crate::pipeline::{read_metadata, Fields, ParseError, ParseErrorKind, Source};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action {
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
    AdvanceTime {
        by: u64,
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
    Assert(Check),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Check {
    Balance {
        account: Address,
        equals: Amount,
    },
    /// Committed events of `kind`, optionally only from `emitter`.
    EventCount {
        kind: EventKind,
        emitter: Option<Address>,
        equals: u64,
    },
    Held {
        node: String,
        equals: Amount,
    },
    Claimable {
        node: String,
        account: Address,
        equals: Amount,
    },
    Supply {
        equals: Amount,
    },
    /// Sum of balances equals total supply.
    Conserved,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Expect {
    #[default]
    Commit,
    Revert,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioStep {
    pub action: Action,
    pub expect: Expect,
    /// Source line of the `[[action]]` entry, 0 when built in code.
    pub line: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ScenarioScript {
    pub name: Option<String>,
    pub steps: Vec<ScenarioStep>,
}

impl ScenarioScript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn then(mut self, action: Action) -> Self {
        self.steps.push(ScenarioStep {
            action,
            expect: Expect::Commit,
            line: 0,
        });
        self
    }

    pub fn then_revert(mut self, action: Action) -> Self {
        self.steps.push(ScenarioStep {
            action,
            expect: Expect::Revert,
            line: 0,
        });
        self
    }
}

pub fn parse_scenario(text: &str) -> Result<ScenarioScript, ParseError> {
    let src = Source::new(text);
    let doc = src.document()?;
    let mut root = Fields::new(&src, doc.get_ref(), 0..0, "scenario file");
    let mut script = ScenarioScript::new();
    if let Some(header) = root.get("scenario") {
        let mut h = Fields::of(&src, header, "[scenario]")?;
        script.name = Some(h.required_string("name")?);
        h.finish()?;
    }
    for item in root.array("action")?.unwrap_or_default() {
        let mut f = Fields::of(&src, item, "[[action]]")?;
        let line = src.error(ParseErrorKind::Syntax, item.span(), "").line;
        let verb_value = f.require("do")?;
        let verb = f.as_string("do", verb_value)?;
        let action = match verb.as_str() {
            "approve" => Action::Approve {
                owner: f.address("owner")?,
                spender: f.address("spender")?,
                amount: f.amount("amount")?,
            },
            "deposit" => Action::Deposit {
                from: f.address("from")?,
                amount: f.amount("amount")?,
                metadata: match f.get("metadata") {
                    Some(v) => read_metadata(&f, "metadata", v)?,
                    None => BTreeMap::new(),
                },
            },
            "advance" => Action::AdvanceTime {
                by: f.required_u64("by")?,
            },
            "instruct" => Action::OracleInstruct {
                node: f.required_string("node")?,
                oracle: f.address("oracle")?,
                tag: f.required_string("tag")?,
                amount: f.amount("amount")?,
            },
            "claim" => Action::Claim {
                node: f.required_string("node")?,
                account: f.address("account")?,
            },
            "assert" => Action::Assert(parse_check(&mut f)?),
            other => {
                return Err(f.err(
                    ParseErrorKind::InvalidValue,
                    verb_value.span(),
                    format!("unknown action `{other}`"),
                ))
            }
        };
        let expect = match f.get("expect") {
            None => Expect::Commit,
            Some(v) => match f.as_string("expect", v)?.as_str() {
                "commit" => Expect::Commit,
                "revert" if !matches!(action, Action::Assert(_)) => Expect::Revert,
                other => {
                    return Err(f.err(
                        ParseErrorKind::InvalidValue,
                        v.span(),
                        format!(
                            "`expect` must be commit or revert on a transaction, found `{other}`"
                        ),
                    ))
                }
            },
        };
        f.finish()?;
        script.steps.push(ScenarioStep {
            action,
            expect,
            line,
        });
    }
    root.finish()?;
    Ok(script)
}

fn parse_check(f: &mut Fields<'_, '_>) -> Result<Check, ParseError> {
    let check_value = f.require("check")?;
    let check = f.as_string("check", check_value)?;
    Ok(match check.as_str() {
        "balance" => Check::Balance {
            account: f.address("account")?,
            equals: f.amount("equals")?,
        },
        "event_count" => {
            let kind_value = f.require("kind")?;
            let kind = f.as_string("kind", kind_value)?;
            let kind = EventKind::parse(&kind).ok_or_else(|| {
                f.err(
                    ParseErrorKind::InvalidValue,
                    kind_value.span(),
                    format!("unknown event kind `{kind}`"),
                )
            })?;
            let emitter = match f.get("emitter") {
                Some(v) => Some(f.as_address("emitter", v)?),
                None => None,
            };
            Check::EventCount {
                kind,
                emitter,
                equals: f.required_u64("equals")?,
            }
        }
        "held" => Check::Held {
            node: f.required_string("node")?,
            equals: f.amount("equals")?,
        },
        "claimable" => Check::Claimable {
            node: f.required_string("node")?,
            account: f.address("account")?,
            equals: f.amount("equals")?,
        },
        "supply" => Check::Supply {
            equals: f.amount("equals")?,
        },
        "conserved" => Check::Conserved,
        other => {
            return Err(f.err(
                ParseErrorKind::InvalidValue,
                check_value.span(),
                format!("unknown check `{other}`"),
            ))
        }
    })
}

impl Check {
    /// `None` when the check holds, otherwise what was observed.
    pub fn evaluate(&self, engine: &Engine) -> Option<String> {
        let (want, got) = match self {
            Check::Balance { account, equals } => (
                equals.to_string(),
                engine.ledger().balance_of(account).to_string(),
            ),
            Check::EventCount {
                kind,
                emitter,
                equals,
            } => {
                let n = engine
                    .events()
                    .iter()
                    .filter(|e| e.kind == *kind)
                    .filter(|e| emitter.as_ref().is_none_or(|a| &e.emitter == a))
                    .count();
                (equals.to_string(), n.to_string())
            }
            Check::Held { node, equals } => match engine.held(node) {
                Some(h) => (equals.to_string(), h.to_string()),
                None => return Some(format!("unknown node `{node}`")),
            },
            Check::Claimable {
                node,
                account,
                equals,
            } => (
                equals.to_string(),
                engine.claimable(node, account.as_str()).to_string(),
            ),
            Check::Supply { equals } => (
                equals.to_string(),
                engine.ledger().total_supply().to_string(),
            ),
            Check::Conserved => {
                return (!engine.ledger().is_conserved())
                    .then(|| "sum of balances differs from total supply".to_string())
            }
        };
        (want != got).then(|| format!("{self}: expected {want}, got {got}"))
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Check::Balance { account, .. } => write!(f, "balance of {account}"),
            Check::EventCount { kind, emitter, .. } => match emitter {
                Some(e) => write!(f, "{kind} events from {e}"),
                None => write!(f, "{kind} events"),
            },
            Check::Held { node, .. } => write!(f, "held by `{node}`"),
            Check::Claimable { node, account, .. } => {
                write!(f, "claimable by {account} at `{node}`")
            }
            Check::Supply { .. } => f.write_str("total supply"),
            Check::Conserved => f.write_str("conservation"),
        }
    }
}

/// Result of running a scenario.
#[derive(Debug, Clone, Default)]
pub struct ScenarioOutcome {
    pub txs: Vec<TxResult>,
    /// Failed assertions, and expected reverts that committed instead.
    pub failed_checks: Vec<String>,
    pub unexpected_reverts: Vec<String>,
}

impl ScenarioOutcome {
    /// 0 clean, 1 a check failed, 3 an unexpected revert (takes precedence).
    pub fn exit_code(&self) -> i32 {
        if !self.unexpected_reverts.is_empty() {
            3
        } else if !self.failed_checks.is_empty() {
            1
        } else {
            0
        }
    }
}

fn at(step: &ScenarioStep, i: usize) -> String {
    match step.line {
        0 => format!("action {}", i + 1),
        line => format!("action {} (line {line})", i + 1),
    }
}

pub fn run_scenario(engine: &mut Engine, script: &ScenarioScript) -> ScenarioOutcome {
    let mut outcome = ScenarioOutcome::default();
    for (i, step) in script.steps.iter().enumerate() {
        let txs: Vec<TxResult> = match &step.action {
            Action::Approve {
                owner,
                spender,
                amount,
            } => vec![engine.approve(owner.as_str(), spender.as_str(), *amount)],
            Action::Deposit {
                from,
                amount,
                metadata,
            } => vec![engine.deposit_with(from.as_str(), *amount, metadata.clone())],
            Action::AdvanceTime { by } => engine.advance_time(*by),
            Action::OracleInstruct {
                node,
                oracle,
                tag,
                amount,
            } => vec![engine.oracle_instruct(node, oracle.as_str(), tag, *amount)],
            Action::Claim { node, account } => vec![engine.claim(node, account.as_str())],
            Action::Assert(check) => {
                if let Some(msg) = check.evaluate(engine) {
                    outcome
                        .failed_checks
                        .push(format!("{}: {msg}", at(step, i)));
                }
                continue;
            }
        };
        match step.expect {
            Expect::Commit => {
                for t in txs.iter().filter(|t| !t.committed()) {
                    let why = t.error.as_ref().map(|e| e.to_string()).unwrap_or_default();
                    outcome.unexpected_reverts.push(format!(
                        "{}: tx {} reverted: {why}",
                        at(step, i),
                        t.id
                    ));
                }
            }
            Expect::Revert => {
                if txs.is_empty() || txs.iter().any(|t| t.committed()) {
                    outcome
                        .failed_checks
                        .push(format!("{}: expected a revert", at(step, i)));
                }
            }
        }
        outcome.txs.extend(txs);
    }
    outcome
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_every_action() {
        let text = r#"
[scenario]
name = "all"

[[action]]
do = "approve"
owner = "a"
spender = "node:src"
amount = 5

[[action]]
do = "deposit"
from = "a"
amount = 5
metadata = { kind = "salary", month = 3 }
expect = "revert"

[[action]]
do = "advance"
by = 10

[[action]]
do = "instruct"
node = "o"
oracle = "bot"
tag = "x"
amount = 1

[[action]]
do = "claim"
node = "e"
account = "a"

[[action]]
do = "assert"
check = "event_count"
kind = "Report"
equals = 0
"#;
        let s = parse_scenario(text).unwrap();
        assert_eq!(s.name.as_deref(), Some("all"));
        assert_eq!(s.steps.len(), 6);
        assert_eq!(s.steps[1].expect, Expect::Revert);
        assert_eq!(s.steps[1].line, 11);
        let Action::Deposit { metadata, .. } = &s.steps[1].action else {
            panic!()
        };
        assert_eq!(metadata["month"], Scalar::Int(3));
    }

    #[test]
    fn unknown_action_is_located() {
        let err = parse_scenario("[[action]]\ndo = \"teleport\"\n").unwrap_err();
        assert_eq!(
            (err.kind, err.line, err.column),
            (ParseErrorKind::InvalidValue, 2, 6)
        );
    }

    #[test]
    fn assert_cannot_expect_revert() {
        let err = parse_scenario(
            "[[action]]\ndo = \"assert\"\ncheck = \"conserved\"\nexpect = \"revert\"\n",
        )
        .unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::InvalidValue);
    }
}
