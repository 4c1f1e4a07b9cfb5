//! Reference computations written independently of the library code.

use std::collections::BTreeMap;

use num_bigint::BigUint;

/// One share of a split: `(fixed, weight, residual)` exactly one of which
/// is meaningful.
#[derive(Debug, Clone, Copy)]
pub enum Rule {
    Fixed(u128),
    Weight(u64),
    Residual,
}

/// Expected per-share amounts, or `None` when the fixed shares do not fit.
pub fn split(rules: &[Rule], input: u128) -> Option<Vec<u128>> {
    let fixed: BigUint = rules
        .iter()
        .map(|r| match r {
            Rule::Fixed(a) => BigUint::from(*a),
            _ => BigUint::from(0u8),
        })
        .sum();
    let input_big = BigUint::from(input);
    if fixed > input_big {
        return None;
    }
    let rem = input_big - fixed;
    let total: BigUint = rules
        .iter()
        .map(|r| match r {
            Rule::Weight(w) => BigUint::from(*w),
            _ => BigUint::from(0u8),
        })
        .sum();
    let mut out: Vec<BigUint> = rules
        .iter()
        .map(|r| match r {
            Rule::Fixed(a) => BigUint::from(*a),
            Rule::Weight(w) if total > BigUint::from(0u8) => &rem * BigUint::from(*w) / &total,
            _ => BigUint::from(0u8),
        })
        .collect();
    let weighted: BigUint = rules
        .iter()
        .zip(&out)
        .filter(|(r, _)| matches!(r, Rule::Weight(_)))
        .map(|(_, v)| v.clone())
        .sum();
    let mut spare = if total > BigUint::from(0u8) {
        &rem - &weighted
    } else {
        BigUint::from(0u8)
    };
    for (r, v) in rules.iter().zip(out.iter_mut()) {
        if spare == BigUint::from(0u8) {
            break;
        }
        // only shares that were rounded down
        if matches!(r, Rule::Weight(w) if (&rem * BigUint::from(*w)) % &total != BigUint::from(0u8))
        {
            *v += 1u8;
            spare -= 1u8;
        }
    }
    let handed_out: BigUint = rules
        .iter()
        .zip(&out)
        .filter(|(r, _)| matches!(r, Rule::Weight(_)))
        .map(|(_, v)| v.clone())
        .sum();
    for (r, v) in rules.iter().zip(out.iter_mut()) {
        if matches!(r, Rule::Residual) {
            *v = &rem - &handed_out;
        }
    }
    Some(
        out.into_iter()
            .map(|v| u128::try_from(v).expect("share fits"))
            .collect(),
    )
}

/// Unit-at-a-time waterfall: every unit goes to the first tier that still
/// has room. Returns per-tier amounts and the surplus.
pub fn waterfall(caps: &[Option<u128>], paid: &[u128], input: u128) -> (Vec<u128>, u128) {
    let mut alloc = vec![0u128; caps.len()];
    let mut surplus = 0;
    'units: for _ in 0..input {
        for (i, cap) in caps.iter().enumerate() {
            if cap.is_none_or(|c| paid[i] + alloc[i] < c) {
                alloc[i] += 1;
                continue 'units;
            }
        }
        surplus += 1;
    }
    (alloc, surplus)
}

/// Time-lock schedule with deposits at given times. Releases due at or
/// before a deposit's time run first. Returns the releases as
/// `(due, amount)` and the total refunded for deposits after the last
/// release.
pub fn timelock(
    start: u64,
    period: u64,
    releases: u32,
    per_release: TimelockAmount,
    deposits: &[(u64, u128)],
    horizon: u64,
) -> (Vec<(u64, u128)>, u128) {
    let dues: Vec<u64> = (0..releases as u64).map(|k| start + k * period).collect();
    let mut held: u128 = 0;
    let mut next = 0usize;
    let mut out = Vec::new();
    let mut refunded = 0;
    let run_until = |t: u64, held: &mut u128, next: &mut usize, out: &mut Vec<(u64, u128)>| {
        while *next < dues.len() && dues[*next] <= t {
            let last = *next + 1 == dues.len();
            let amount = if last {
                *held
            } else {
                match per_release {
                    TimelockAmount::Fixed(a) => a.min(*held),
                    TimelockAmount::Fraction(num, den) => {
                        (BigUint::from(*held) * num / den).try_into().unwrap()
                    }
                }
            };
            *held -= amount;
            out.push((dues[*next], amount));
            *next += 1;
        }
    };
    for &(t, amount) in deposits {
        run_until(t, &mut held, &mut next, &mut out);
        if next == dues.len() {
            refunded += amount;
        } else {
            held += amount;
        }
    }
    run_until(horizon, &mut held, &mut next, &mut out);
    (out, refunded)
}

#[derive(Debug, Clone, Copy)]
pub enum TimelockAmount {
    Fixed(u128),
    Fraction(u64, u64),
}

/// Batches forwarded by a threshold router for a sequence of deposits.
pub fn threshold(threshold: u128, deposits: &[u128]) -> (Vec<u128>, u128) {
    let mut held = 0;
    let mut batches = Vec::new();
    for d in deposits {
        held += d;
        if held >= threshold {
            batches.push(held);
            held = 0;
        }
    }
    (batches, held)
}

/// Kahn's algorithm: true when the directed graph has a cycle.
pub fn has_cycle(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut indeg = vec![0usize; n];
    let mut adj: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &(a, b) in edges {
        indeg[b] += 1;
        adj.entry(a).or_default().push(b);
    }
    let mut ready: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    let mut removed = 0;
    while let Some(u) = ready.pop() {
        removed += 1;
        for &v in adj.get(&u).map(Vec::as_slice).unwrap_or(&[]) {
            indeg[v] -= 1;
            if indeg[v] == 0 {
                ready.push(v);
            }
        }
    }
    removed < n
}
