//! Helpers shared by the integration test targets.
#![allow(dead_code)]

pub mod oracle;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use streampay::engine::{Engine, TxResult};
use streampay::nodes::{EndpointConfig, EndpointMode, ErrorPolicy, ErrorSeverity, PolicyAction};
use streampay::pipeline::{parse, NodeRole, NodeSpec, PipelineSpec};
use streampay::scenario::Action;
use streampay::templates::{
    ConditionConfig, DistributionConfig, GoalkeeperConfig, GoalkeeperStrategy, OracleConfig,
    ReleaseAmount, ReportingConfig, Share, ShareRule, TemplateConfig, ThresholdConfig, Tier,
    TimeLockConfig, WaterfallConfig,
};
use streampay::{Address, Amount, Scalar};

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn fixture_path(name: &str) -> PathBuf {
    fixture_dir().join(name)
}

pub fn fixture(name: &str) -> PipelineSpec {
    let text = std::fs::read_to_string(fixture_path(name)).unwrap();
    parse(&text).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Every `*.toml` fixture that is a pipeline spec (scenarios excluded).
pub fn pipeline_fixtures() -> Vec<PathBuf> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(fixture_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| {
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            name.ends_with(".toml") && !name.ends_with(".scenario.toml")
        })
        .collect();
    out.sort();
    out
}

pub const USERS: [&str; 3] = ["alice", "bob", "carol"];
pub const ORACLE: &str = "oracle";
pub const ADMIN: &str = "admin";
pub const KEEPER: &str = "keeper";

/// Random valid pipeline with at most `max_nodes` nodes. The shape is a
/// tree below the originator, plus an optional goalkeeper reached only
/// through redirects.
pub fn random_pipeline(rng: &mut ChaCha8Rng, max_nodes: usize) -> PipelineSpec {
    assert!(max_nodes >= 3);
    let with_keeper = rng.gen_bool(0.5);
    let mut g = Gen {
        rng,
        nodes: Vec::new(),
        with_keeper,
    };
    let budget = max_nodes - 1 - with_keeper as usize;
    g.nodes.push(NodeSpec::new("src", NodeRole::Originator));
    let (first, _) = g.node(true, budget);
    g.nodes[0]
        .outputs
        .push(streampay::pipeline::OutputSpec::new("out", first));
    if with_keeper {
        let strategy = if g.rng.gen_bool(0.5) {
            GoalkeeperStrategy::RefundToOrigin
        } else {
            GoalkeeperStrategy::HoldForAdmin(Address::new(ADMIN))
        };
        g.nodes.push(NodeSpec::new(
            KEEPER,
            NodeRole::Router(TemplateConfig::Goalkeeper(GoalkeeperConfig { strategy })),
        ));
        // make sure something can reach the keeper
        let routers: Vec<usize> = (1..g.nodes.len() - 1)
            .filter(|&i| g.nodes[i].kind() == streampay::nodes::NodeKind::Router)
            .collect();
        let has_redirect = g
            .nodes
            .iter()
            .any(|n| n.error_policy.redirect_targets().any(|t| t == KEEPER));
        if !has_redirect {
            match routers.choose(g.rng) {
                Some(&i) => {
                    g.nodes[i].error_policy.recoverable =
                        Some(PolicyAction::Redirect(KEEPER.into()))
                }
                None => {
                    g.nodes.pop();
                }
            }
        }
    }
    let mut spec = PipelineSpec::new("random");
    spec.nodes = g.nodes;
    for u in USERS {
        spec = spec.balance(u, 1_000);
    }
    spec
}

struct Gen<'a> {
    rng: &'a mut ChaCha8Rng,
    nodes: Vec<NodeSpec>,
    with_keeper: bool,
}

impl Gen<'_> {
    fn id(&self) -> String {
        format!("n{}", self.nodes.len())
    }

    /// Adds a subtree of at most `budget` nodes; returns its root id and
    /// the number of nodes used.
    fn node(&mut self, first: bool, budget: usize) -> (String, usize) {
        let id = self.id();
        let endpoint = budget <= 1 || (!first && self.rng.gen_bool(0.35));
        if endpoint {
            let mode = if self.rng.gen_bool(0.3) {
                EndpointMode::Claimable
            } else {
                EndpointMode::Direct
            };
            let recipient = Address::new(*USERS.choose(self.rng).unwrap());
            self.nodes.push(NodeSpec::new(
                id.clone(),
                NodeRole::Endpoint(EndpointConfig { mode, recipient }),
            ));
            return (id, 1);
        }
        let (template, tags) = self.template((budget - 1).min(3));
        let slot = self.nodes.len();
        let mut node = NodeSpec::new(id.clone(), NodeRole::Router(template));
        node.error_policy = self.policy();
        self.nodes.push(node);
        let mut used = 1;
        let mut spare = budget - 1 - tags.len();
        for tag in tags {
            let extra = self.rng.gen_range(0..=spare);
            let (child, n) = self.node(false, 1 + extra);
            spare -= n - 1;
            used += n;
            self.nodes[slot]
                .outputs
                .push(streampay::pipeline::OutputSpec::new(tag, child));
        }
        (id, used)
    }

    fn policy(&mut self) -> ErrorPolicy {
        let pick = |rng: &mut ChaCha8Rng, keeper: bool| {
            let mut options = vec![
                PolicyAction::Proceed,
                PolicyAction::Hold,
                PolicyAction::Refund,
            ];
            if keeper {
                options.push(PolicyAction::Redirect(KEEPER.into()));
            }
            rng.gen_bool(0.6)
                .then(|| options.choose(rng).unwrap().clone())
        };
        ErrorPolicy {
            warning: pick(self.rng, self.with_keeper),
            recoverable: pick(self.rng, self.with_keeper),
            fatal: None,
        }
    }

    fn template(&mut self, max_outs: usize) -> (TemplateConfig, Vec<String>) {
        let one = vec!["out".to_string()];
        let rng = &mut *self.rng;
        let choice = rng.gen_range(0..7);
        let tags = |n: usize| (0..n).map(|i| format!("t{i}")).collect::<Vec<_>>();
        match choice {
            0 => (
                TemplateConfig::Reporting(ReportingConfig {
                    sink: "tax".into(),
                    keys: vec!["memo".into()],
                }),
                one,
            ),
            1 => {
                let per_release = if rng.gen_bool(0.5) {
                    ReleaseAmount::Fixed(Amount::new(rng.gen_range(0..200)))
                } else {
                    let den = rng.gen_range(1..5);
                    ReleaseAmount::Fraction {
                        num: rng.gen_range(1..=den),
                        den,
                    }
                };
                (
                    TemplateConfig::TimeLock(TimeLockConfig {
                        start: rng.gen_range(0..50),
                        period: rng.gen_range(1..20),
                        releases: rng.gen_range(1..5),
                        per_release,
                    }),
                    one,
                )
            }
            2 => (
                TemplateConfig::Threshold(ThresholdConfig {
                    threshold: Amount::new(rng.gen_range(1..400)),
                }),
                one,
            ),
            3 if max_outs >= 2 => {
                let n = rng.gen_range(2..=max_outs);
                let tags = tags(n);
                let mode = rng.gen_range(0..3);
                let shares = tags
                    .iter()
                    .enumerate()
                    .map(|(i, t)| Share {
                        tag: t.clone(),
                        rule: match mode {
                            0 => ShareRule::Weight(rng.gen_range(1..6)),
                            1 if i == 0 => ShareRule::Fixed(Amount::new(rng.gen_range(0..60))),
                            1 => ShareRule::Weight(rng.gen_range(1..6)),
                            _ if i + 1 == n => ShareRule::Residual,
                            _ => ShareRule::Fixed(Amount::new(rng.gen_range(0..60))),
                        },
                    })
                    .collect();
                (
                    TemplateConfig::Distributing(DistributionConfig {
                        shares,
                        allow_single: false,
                    }),
                    tags,
                )
            }
            4 => {
                let predicate = [
                    "amount >= 50",
                    "amount < 120 or meta.memo == \"rent\"",
                    "not (now > 30)",
                    "meta.memo != \"gift\"",
                ]
                .choose(rng)
                .unwrap()
                .parse()
                .unwrap();
                let on_false = *[
                    ErrorSeverity::Warning,
                    ErrorSeverity::Recoverable,
                    ErrorSeverity::Fatal,
                ]
                .choose(rng)
                .unwrap();
                (
                    TemplateConfig::Conditional(ConditionConfig {
                        predicate,
                        on_false,
                    }),
                    one,
                )
            }
            5 => {
                let n = rng.gen_range(1..=max_outs);
                (
                    TemplateConfig::Oracle(OracleConfig {
                        trusted: [Address::new(ORACLE)].into(),
                    }),
                    tags(n),
                )
            }
            _ => {
                let n = rng.gen_range(1..=max_outs);
                let tags = tags(n);
                let unlimited_last = rng.gen_bool(0.5);
                let tiers = tags
                    .iter()
                    .enumerate()
                    .map(|(i, t)| Tier {
                        tag: t.clone(),
                        cap: (!(unlimited_last && i + 1 == n))
                            .then(|| Amount::new(rng.gen_range(1..150))),
                    })
                    .collect();
                (TemplateConfig::Waterfall(WaterfallConfig { tiers }), tags)
            }
        }
    }
}

/// Random actions against `spec`: deposits (sometimes unapproved or over
/// balance), time steps, oracle instructions and claims.
pub fn random_actions(rng: &mut ChaCha8Rng, spec: &PipelineSpec, len: usize) -> Vec<Action> {
    let oracles: Vec<&NodeSpec> = spec
        .nodes
        .iter()
        .filter(|n| matches!(n.template(), Some(TemplateConfig::Oracle(_))))
        .collect();
    let claimables: Vec<&NodeSpec> = spec
        .nodes
        .iter()
        .filter(|n| {
            matches!(&n.role, NodeRole::Endpoint(e) if e.mode == EndpointMode::Claimable)
                || n.id == KEEPER
        })
        .collect();
    let originator = Address::for_node("src");
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        let user = Address::new(*USERS.choose(rng).unwrap());
        match rng.gen_range(0..10) {
            0..=3 => {
                let amount = Amount::new(rng.gen_range(0..400));
                if rng.gen_bool(0.9) {
                    out.push(Action::Approve {
                        owner: user.clone(),
                        spender: originator.clone(),
                        amount,
                    });
                }
                let mut metadata = BTreeMap::new();
                if rng.gen_bool(0.5) {
                    let memo = *["rent", "gift", "salary"].choose(rng).unwrap();
                    metadata.insert("memo".to_string(), Scalar::from(memo));
                }
                out.push(Action::Deposit {
                    from: user,
                    amount,
                    metadata,
                });
            }
            4..=6 => out.push(Action::AdvanceTime {
                by: rng.gen_range(0..40),
            }),
            7 | 8 if !oracles.is_empty() => {
                let node = oracles.choose(rng).unwrap();
                let tag = node.outputs.choose(rng).unwrap().tag.clone();
                let oracle = if rng.gen_bool(0.9) { ORACLE } else { "mallory" };
                out.push(Action::OracleInstruct {
                    node: node.id.clone(),
                    oracle: Address::new(oracle),
                    tag,
                    amount: Amount::new(rng.gen_range(0..200)),
                });
            }
            _ if !claimables.is_empty() => {
                let node = claimables.choose(rng).unwrap();
                let account = match &node.role {
                    NodeRole::Endpoint(e) => e.recipient.clone(),
                    _ => Address::new(ADMIN),
                };
                out.push(Action::Claim {
                    node: node.id.clone(),
                    account,
                });
            }
            _ => out.push(Action::AdvanceTime { by: 5 }),
        }
    }
    out
}

/// Executes one action; assertions are ignored.
pub fn apply(engine: &mut Engine, action: &Action) -> Vec<TxResult> {
    match action {
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
        Action::Assert(_) => Vec::new(),
    }
}
