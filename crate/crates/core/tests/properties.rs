mod common;

use std::collections::BTreeMap;

use common::oracle::{self, Rule};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use streampay::engine::Engine;
use streampay::gas::CostTable;
use streampay::pipeline::{parse, serialize, validate, NodeRole, NodeSpec, OutputSpec};
use streampay::templates::{
    fill, split, ReportingConfig, ShareRule, SplitError, TemplateConfig, Tier,
};
use streampay::{Address, Amount, LedgerError, PipelineSpec, TokenLedger, ValidationCode};

#[derive(Debug, Clone)]
enum Op {
    Mint(usize, u128),
    Transfer(usize, usize, u128),
    Approve(usize, usize, u128),
    TransferFrom(usize, usize, usize, u128),
}

fn op() -> impl Strategy<Value = Op> {
    let who = 0usize..4;
    let amt = 0u128..300;
    prop_oneof![
        (who.clone(), amt.clone()).prop_map(|(a, v)| Op::Mint(a, v)),
        (who.clone(), who.clone(), amt.clone()).prop_map(|(a, b, v)| Op::Transfer(a, b, v)),
        (who.clone(), who.clone(), amt.clone()).prop_map(|(a, b, v)| Op::Approve(a, b, v)),
        (who.clone(), who.clone(), who, amt).prop_map(|(s, o, t, v)| Op::TransferFrom(s, o, t, v)),
    ]
}

fn addr(i: usize) -> Address {
    Address::new(format!("acct{i}"))
}

proptest! {
    #[test]
    fn ledger_matches_map_model(ops in prop::collection::vec(op(), 1..60)) {
        let mut ledger = TokenLedger::new();
        let mut bal: BTreeMap<usize, u128> = BTreeMap::new();
        let mut allow: BTreeMap<(usize, usize), u128> = BTreeMap::new();
        let mut supply = 0u128;
        for op in ops {
            match op {
                Op::Mint(a, v) => {
                    ledger.mint(&addr(a), Amount::new(v)).unwrap();
                    *bal.entry(a).or_default() += v;
                    supply += v;
                }
                Op::Transfer(a, b, v) => {
                    let have = bal.get(&a).copied().unwrap_or(0);
                    let r = ledger.transfer(&addr(a), &addr(b), Amount::new(v));
                    if have < v {
                        let insufficient = matches!(r, Err(LedgerError::InsufficientBalance { .. }));
                        prop_assert!(insufficient);
                    } else {
                        prop_assert!(r.is_ok());
                        *bal.entry(a).or_default() -= v;
                        *bal.entry(b).or_default() += v;
                    }
                }
                Op::Approve(o, s, v) => {
                    ledger.approve(&addr(o), &addr(s), Amount::new(v));
                    allow.insert((o, s), v);
                }
                Op::TransferFrom(s, o, t, v) => {
                    let allowed = allow.get(&(o, s)).copied().unwrap_or(0);
                    let have = bal.get(&o).copied().unwrap_or(0);
                    let r = ledger.transfer_from(&addr(s), &addr(o), &addr(t), Amount::new(v));
                    if allowed < v {
                        let denied = matches!(r, Err(LedgerError::InsufficientAllowance { .. }));
                        prop_assert!(denied);
                    } else if have < v {
                        let insufficient = matches!(r, Err(LedgerError::InsufficientBalance { .. }));
                        prop_assert!(insufficient);
                    } else {
                        prop_assert!(r.is_ok());
                        allow.insert((o, s), allowed - v);
                        *bal.entry(o).or_default() -= v;
                        *bal.entry(t).or_default() += v;
                    }
                }
            }
            prop_assert!(ledger.is_conserved());
            prop_assert_eq!(ledger.total_supply(), Amount::new(supply));
        }
        for i in 0..4 {
            prop_assert_eq!(ledger.balance_of(&addr(i)).units(), bal.get(&i).copied().unwrap_or(0));
            for j in 0..4 {
                prop_assert_eq!(
                    ledger.allowance(&addr(i), &addr(j)).units(),
                    allow.get(&(i, j)).copied().unwrap_or(0)
                );
            }
        }
    }
}

/// Weights only, fixed plus weights, or fixed plus one residual.
fn rules() -> impl Strategy<Value = Vec<Rule>> {
    let weights = prop::collection::vec(1u64..=u64::MAX, 2..6)
        .prop_map(|ws| ws.into_iter().map(Rule::Weight).collect::<Vec<_>>());
    let small_weights = prop::collection::vec(1u64..10, 2..6)
        .prop_map(|ws| ws.into_iter().map(Rule::Weight).collect::<Vec<_>>());
    let mixed = (
        prop::collection::vec(0u128..1_000, 1..3),
        prop::collection::vec(1u64..10, 1..3),
    )
        .prop_map(|(f, w)| {
            f.into_iter()
                .map(Rule::Fixed)
                .chain(w.into_iter().map(Rule::Weight))
                .collect::<Vec<_>>()
        });
    let residual = prop::collection::vec(0u128..1_000, 1..4).prop_map(|f| {
        let mut r: Vec<Rule> = f.into_iter().map(Rule::Fixed).collect();
        r.push(Rule::Residual);
        r
    });
    prop_oneof![weights, small_weights, mixed, residual]
}

fn to_share(r: &Rule) -> ShareRule {
    match *r {
        Rule::Fixed(a) => ShareRule::Fixed(Amount::new(a)),
        Rule::Weight(w) => ShareRule::Weight(w),
        Rule::Residual => ShareRule::Residual,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2_000))]

    #[test]
    fn split_matches_oracle(
        rules in rules(),
        input in prop_oneof![0u128..5_000, any::<u128>()],
    ) {
        let shares: Vec<ShareRule> = rules.iter().map(to_share).collect();
        let got = split(&shares, Amount::new(input));
        match oracle::split(&rules, input) {
            None => {
                let short = matches!(got, Err(SplitError::InsufficientForFixedShares { .. }));
                prop_assert!(short);
            }
            Some(expected) => {
                let got: Vec<u128> = got.unwrap().into_iter().map(Amount::units).collect();
                prop_assert_eq!(&got, &expected);
                prop_assert_eq!(got.iter().sum::<u128>(), input);
                let fixed: u128 = rules.iter().map(|r| if let Rule::Fixed(a) = r { *a } else { 0 }).sum();
                let rem = num_bigint::BigUint::from(input - fixed);
                let total: u128 = rules.iter().map(|r| if let Rule::Weight(w) = r { *w as u128 } else { 0 }).sum();
                for (r, v) in rules.iter().zip(&got) {
                    if let Rule::Weight(w) = r {
                        // |v - rem*w/total| < 1
                        let scaled = num_bigint::BigUint::from(*v) * total;
                        let exact = &rem * *w;
                        let dev = if scaled > exact { scaled - exact } else { exact - scaled };
                        prop_assert!(dev < num_bigint::BigUint::from(total));
                    }
                }
            }
        }
    }

    #[test]
    fn waterfall_matches_unit_fill(
        tiers in prop::collection::vec((1u128..300, 0u128..300), 1..5),
        unlimited_last in any::<bool>(),
        input in 0u128..1_500,
    ) {
        let n = tiers.len();
        let caps: Vec<Option<u128>> = tiers
            .iter()
            .enumerate()
            .map(|(i, (c, _))| (!(unlimited_last && i + 1 == n)).then_some(*c))
            .collect();
        let paid: Vec<u128> = tiers
            .iter()
            .zip(&caps)
            .map(|((_, p), c)| c.map_or(*p, |c| (*p).min(c)))
            .collect();
        let spec_tiers: Vec<Tier> = caps
            .iter()
            .enumerate()
            .map(|(i, c)| Tier { tag: format!("t{i}"), cap: c.map(Amount::new) })
            .collect();
        let paid_amounts: Vec<Amount> = paid.iter().copied().map(Amount::new).collect();
        let (alloc, surplus) = fill(&spec_tiers, &paid_amounts, Amount::new(input));
        let alloc: Vec<u128> = alloc.into_iter().map(Amount::units).collect();
        let (expected, expected_surplus) = oracle::waterfall(&caps, &paid, input);
        prop_assert_eq!(alloc, expected);
        prop_assert_eq!(surplus.units(), expected_surplus);
    }
}

fn graph() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
    (1usize..=12).prop_flat_map(|n| (Just(n), prop::collection::vec((0..n, 0..n), 0..(2 * n))))
}

fn graph_spec(n: usize, edges: &[(usize, usize)]) -> PipelineSpec {
    let mut spec = PipelineSpec::new("graph");
    for i in 0..n {
        let mut node = NodeSpec::new(
            format!("v{i}"),
            NodeRole::Router(TemplateConfig::Reporting(ReportingConfig {
                sink: "s".into(),
                keys: vec![],
            })),
        );
        for (k, &(_, b)) in edges.iter().filter(|(a, _)| *a == i).enumerate() {
            node.outputs
                .push(OutputSpec::new(format!("e{k}"), format!("v{b}")));
        }
        spec.nodes.push(node);
    }
    spec
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1_000))]

    #[test]
    fn cycle_detection_matches_kahn((n, edges) in graph()) {
        let errors = validate(&graph_spec(n, &edges));
        let reported = errors.iter().any(|e| e.code == ValidationCode::CycleDetected);
        prop_assert_eq!(reported, oracle::has_cycle(n, &edges));
    }
}

fn fixture_texts() -> Vec<String> {
    let mut paths = common::pipeline_fixtures();
    for entry in std::fs::read_dir(common::fixture_dir().join("invalid")).unwrap() {
        paths.push(entry.unwrap().path());
    }
    paths.sort();
    paths
        .iter()
        .map(|p| std::fs::read_to_string(p).unwrap())
        .collect()
}

/// Parse and, when it succeeds, validate and instantiate. None of it may
/// panic whatever the input.
fn exercise(text: &str) {
    if let Ok(spec) = parse(text) {
        let errors = validate(&spec);
        let built = Engine::new(&spec, CostTable::default(), 0);
        assert_eq!(errors.is_empty(), built.is_ok());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1_000))]

    #[test]
    fn arbitrary_text_never_panics(text in "\\PC{0,200}") {
        exercise(&text);
    }

    #[test]
    fn toml_like_text_never_panics(
        text in "(\\[\\[node\\]\\]|\\[pipeline\\]|name = \"x\"|id = \"[a-c]\"|kind = \"(originator|router|endpoint)\"|template = \"[a-z]{0,12}\"|outputs = \\[\\{ tag = \"o\", to = \"[a-c]\" \\}\\]|\n|=|\\{|\\}|\"|-?[0-9]{1,40}){0,40}"
    ) {
        exercise(&text);
    }

    #[test]
    fn mutated_fixtures_never_panic(
        which in 0usize..64,
        edits in prop::collection::vec((any::<prop::sample::Index>(), any::<u8>(), 0u8..3), 1..6),
    ) {
        let texts = fixture_texts();
        let mut bytes = texts[which % texts.len()].clone().into_bytes();
        for (at, byte, how) in edits {
            let i = at.index(bytes.len() + 1);
            match how {
                0 => bytes.insert(i, byte),
                1 if i < bytes.len() => { bytes.remove(i); }
                _ if i < bytes.len() => bytes[i] = byte,
                _ => {}
            }
        }
        exercise(&String::from_utf8_lossy(&bytes));
    }

    #[test]
    fn random_pipelines_round_trip(seed in any::<u64>(), max in 3usize..=10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = common::random_pipeline(&mut rng, max);
        prop_assert!(spec.nodes.len() <= max);
        prop_assert_eq!(validate(&spec), vec![]);
        let text = serialize(&spec);
        prop_assert_eq!(parse(&text).unwrap(), spec);
    }
}

#[test]
fn fixtures_round_trip() {
    for path in common::pipeline_fixtures() {
        let text = std::fs::read_to_string(&path).unwrap();
        let spec = parse(&text).unwrap();
        let again = serialize(&spec);
        assert_eq!(parse(&again).unwrap(), spec, "{}", path.display());
        assert_eq!(serialize(&parse(&again).unwrap()), again);
    }
}

#[test]
fn split_oracle_examples() {
    let w = Rule::Weight(1);
    assert_eq!(oracle::split(&[w, w, w], 100), Some(vec![34, 33, 33]));
    assert_eq!(
        oracle::split(&[Rule::Weight(2), w, w], 2),
        Some(vec![1, 1, 0])
    );
    assert_eq!(
        oracle::split(&[Rule::Fixed(25), Rule::Residual], 100),
        Some(vec![25, 75])
    );
    assert_eq!(oracle::split(&[Rule::Fixed(25), Rule::Residual], 10), None);
}

#[test]
fn waterfall_oracle_examples() {
    assert_eq!(
        oracle::waterfall(&[Some(100), Some(200), None], &[0, 0, 0], 250),
        (vec![100, 150, 0], 0)
    );
    assert_eq!(oracle::waterfall(&[Some(10)], &[4], 9), (vec![6], 3));
}

#[test]
fn cycle_oracle_examples() {
    assert!(oracle::has_cycle(2, &[(0, 1), (1, 0)]));
    assert!(oracle::has_cycle(1, &[(0, 0)]));
    assert!(!oracle::has_cycle(3, &[(0, 1), (0, 2), (1, 2)]));
}
