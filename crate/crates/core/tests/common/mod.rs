//! Brute-force oracles and strategies shared by the integration tests.
#![allow(dead_code)]

use std::ops::RangeInclusive;

use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};
use spbandit::model::{ArmOrder, Instance, PreferenceMatrix};

pub fn config(cases: u32, seed: u64) -> Config {
    Config {
        cases,
        rng_seed: RngSeed::Fixed(seed),
        failure_persistence: None,
        ..Config::default()
    }
}

pub fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, k - 1);
            out.push(q);
        }
    }
    out
}

pub fn contiguous(order: &[usize], set: &[usize]) -> bool {
    let pos: Vec<usize> = order
        .iter()
        .enumerate()
        .filter(|(_, a)| set.contains(a))
        .map(|(i, _)| i)
        .collect();
    pos.is_empty() || pos[pos.len() - 1] - pos[0] + 1 == pos.len()
}

/// All permutations of `0..k` in which every set is contiguous, sorted.
pub fn contiguity_filter(k: usize, sets: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = permutations(k)
        .into_iter()
        .filter(|p| sets.iter().all(|s| contiguous(p, s)))
        .collect();
    out.sort();
    out
}

/// Optimal value by enumerating every assignment of users to arms.
pub fn enumerate_matchings(theta: &PreferenceMatrix, costs: &[u32], budget: u32) -> f64 {
    let (u, k) = (theta.users(), theta.arms());
    let mut best = f64::NEG_INFINITY;
    let mut assign = vec![0usize; u];
    loop {
        let mut used = vec![false; k];
        for &a in &assign {
            used[a] = true;
        }
        let cost: u64 = (0..k)
            .filter(|&a| used[a])
            .map(|a| u64::from(costs[a]))
            .sum();
        if cost <= u64::from(budget) {
            let v: f64 = assign
                .iter()
                .enumerate()
                .map(|(i, &a)| theta.get(i, a))
                .sum();
            best = best.max(v);
        }
        let mut i = 0;
        loop {
            if i == u {
                return best;
            }
            assign[i] += 1;
            if assign[i] < k {
                break;
            }
            assign[i] = 0;
            i += 1;
        }
    }
}

/// Minimal delta by scanning every ordered triple of positions.
pub fn asp_delta_by_triples(theta: &PreferenceMatrix, order: &[usize]) -> f64 {
    let k = order.len();
    let mut delta: f64 = 0.0;
    for row in theta.rows() {
        let r: Vec<f64> = order.iter().map(|&a| row[a]).collect();
        for i in 0..k {
            for j in i + 1..k {
                for l in j + 1..k {
                    delta = delta.max(r[i].min(r[l]) - r[j]);
                }
            }
        }
    }
    delta
}

pub fn coverage(theta: &PreferenceMatrix, set: &[usize]) -> f64 {
    if set.is_empty() {
        return 0.0;
    }
    theta
        .rows()
        .map(|row| {
            set.iter()
                .map(|&k| row[k])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .sum()
}

/// Non-decreasing up to `p`, non-increasing after.
pub fn unimodal_at(row: &[f64], p: usize) -> bool {
    (1..=p).all(|j| row[j - 1] <= row[j]) && (p + 1..row.len()).all(|j| row[j] <= row[j - 1])
}

/// Entries either on a coarse grid (many ties) or continuous.
pub fn entry() -> BoxedStrategy<f64> {
    prop_oneof![(0u32..=10).prop_map(|x| x as f64 / 10.0), 0.0..=1.0f64].boxed()
}

/// Row unimodal under the identity order: ascending values left of the peak
/// position, descending values right of it, the overall maximum on it.
pub fn unimodal_row(arms: usize) -> impl Strategy<Value = (Vec<f64>, usize)> {
    (prop::collection::vec(entry(), arms), 0..arms).prop_map(move |(mut v, p)| {
        let top = v.iter().copied().fold(0.0, f64::max);
        v[..p].sort_by(|a, b| a.total_cmp(b));
        v[p + 1..].sort_by(|a, b| b.total_cmp(a));
        v[p] = top;
        (v, p)
    })
}

/// Matrix single-peaked under the identity order, with one valid peak
/// position per user.
pub fn psp_matrix(
    users: RangeInclusive<usize>,
    arms: RangeInclusive<usize>,
) -> impl Strategy<Value = (PreferenceMatrix, Vec<usize>)> {
    (users, arms).prop_flat_map(|(u, k)| {
        prop::collection::vec(unimodal_row(k), u).prop_map(move |rows| {
            let peaks = rows.iter().map(|r| r.1).collect();
            let values: Vec<Vec<f64>> = rows.into_iter().map(|r| r.0).collect();
            (PreferenceMatrix::from_rows(&values).unwrap(), peaks)
        })
    })
}

/// Any matrix with entries in [0, 1].
pub fn any_matrix(
    users: RangeInclusive<usize>,
    arms: RangeInclusive<usize>,
) -> impl Strategy<Value = PreferenceMatrix> {
    (users, arms).prop_flat_map(|(u, k)| {
        prop::collection::vec(entry(), u * k)
            .prop_map(move |v| PreferenceMatrix::new(u, k, v).unwrap())
    })
}

/// Costs in `1..=budget` for `arms` arms, together with the budget.
pub fn costs_and_budget(arms: usize, max_budget: u32) -> impl Strategy<Value = (Vec<u32>, u32)> {
    (1..=max_budget).prop_flat_map(move |b| {
        prop_oneof![Just(vec![1u32; arms]), prop::collection::vec(1..=b, arms),]
            .prop_map(move |c| (c, b))
    })
}

pub fn instance(theta: PreferenceMatrix, costs: Vec<u32>, budget: u32, horizon: u64) -> Instance {
    Instance::new(theta, costs, budget, horizon).unwrap()
}

pub fn shuffled(order: Vec<usize>) -> impl Strategy<Value = Vec<usize>> {
    Just(order).prop_shuffle()
}

/// A matrix single-peaked under a hidden column order, with that order.
pub fn hidden_sp(
    users: std::ops::RangeInclusive<usize>,
    arms: std::ops::RangeInclusive<usize>,
) -> impl Strategy<Value = (PreferenceMatrix, ArmOrder)> {
    psp_matrix(users, arms).prop_flat_map(|(m, _)| {
        let k = m.arms();
        shuffled((0..k).collect()).prop_map(move |perm| {
            let perm = ArmOrder::new(perm).unwrap();
            (m.reorder_columns(&perm), perm.inverse())
        })
    })
}

pub fn constraint_sets(k: usize, max: usize) -> impl Strategy<Value = Vec<Vec<usize>>> {
    prop::collection::vec(prop::collection::btree_set(0..k, 0..=k), 0..=max)
        .prop_map(|v| v.into_iter().map(|s| s.into_iter().collect()).collect())
}

pub fn universe_and_constraints() -> impl Strategy<Value = (usize, Vec<Vec<usize>>)> {
    (1usize..=7).prop_flat_map(|k| (Just(k), constraint_sets(k, 8)))
}

pub fn perturbed(m: &PreferenceMatrix, noise: &[f64]) -> PreferenceMatrix {
    let v = m
        .as_slice()
        .iter()
        .zip(noise.iter().cycle())
        .map(|(x, e)| (x + e).clamp(0.0, 1.0))
        .collect();
    PreferenceMatrix::new(m.users(), m.arms(), v).unwrap()
}

pub fn noisy_sp(eps: f64) -> impl Strategy<Value = (PreferenceMatrix, PreferenceMatrix, ArmOrder)> {
    hidden_sp(1..=8, 1..=8).prop_flat_map(move |(m, order)| {
        let n = m.users() * m.arms();
        prop::collection::vec(-eps..=eps, n)
            .prop_map(move |noise| (m.clone(), perturbed(&m, &noise), order.clone()))
    })
}

pub fn subset_chain(k: usize) -> impl Strategy<Value = (Vec<usize>, Vec<usize>, Option<usize>)> {
    prop::collection::vec(0u8..3, k).prop_map(|tags| {
        // 0: in both, 1: only in the larger set, 2: outside
        let small = (0..tags.len()).filter(|&a| tags[a] == 0).collect();
        let large = (0..tags.len()).filter(|&a| tags[a] <= 1).collect();
        let outside = (0..tags.len()).find(|&a| tags[a] == 2);
        (small, large, outside)
    })
}

pub fn with_costs(
    m: impl Strategy<Value = PreferenceMatrix>,
    max_budget: u32,
) -> impl Strategy<Value = (PreferenceMatrix, Vec<u32>, u32)> {
    m.prop_flat_map(move |m| {
        let k = m.arms();
        costs_and_budget(k, max_budget).prop_map(move |(c, b)| (m.clone(), c, b))
    })
}

/// An SP matrix with peaks, wrapped in random confidence boxes.
pub fn boxed_sp(
) -> impl Strategy<Value = (PreferenceMatrix, PreferenceMatrix, ArmOrder, Vec<usize>)> {
    psp_matrix(1..=5, 1..=7).prop_flat_map(|(q, peaks)| {
        let (u, k) = (q.users(), q.arms());
        (
            prop::collection::vec(0.0..=0.5f64, u * k),
            shuffled((0..k).collect()),
        )
            .prop_map(move |(slack, perm)| {
                let perm = ArmOrder::new(perm).unwrap();
                let ucb: Vec<f64> = q
                    .as_slice()
                    .iter()
                    .zip(&slack)
                    .map(|(v, s)| (v + s).min(1.0))
                    .collect();
                let ucb = PreferenceMatrix::new(u, k, ucb).unwrap();
                // Hide the identity order behind a column shuffle.
                let back = perm.inverse();
                (
                    q.reorder_columns(&perm),
                    ucb.reorder_columns(&perm),
                    back,
                    peaks.clone(),
                )
            })
    })
}

/// Deterministic stream of values drawn from strategies.
pub struct Draws(proptest::test_runner::TestRunner);

impl Draws {
    pub fn new(seed: u64) -> Self {
        Self(proptest::test_runner::TestRunner::new(config(1, seed)))
    }

    pub fn draw<S: Strategy>(&mut self, strategy: &S) -> S::Value {
        use proptest::strategy::ValueTree;
        strategy.new_tree(&mut self.0).unwrap().current()
    }
}
