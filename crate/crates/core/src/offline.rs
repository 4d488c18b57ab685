//! Offline solvers: best assignment for a fixed arm subset, the
//! single-peaked dynamic program, an exhaustive oracle for arbitrary
//! matrices, and the Greedy+Max approximation for the coverage objective.

use thiserror::Error;

use crate::model::{selected_cost, ArmOrder, Matching, PreferenceMatrix};
use crate::sp::{extract_order, peaks_of, PeakProfile, SpError};

/// Arm count above which [`brute_force_opt`] refuses to enumerate.
pub const DEFAULT_BRUTE_FORCE_CAP: usize = 22;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OfflineError {
    #[error("the selected subset is empty")]
    EmptySubset,
    #[error("{arms} arms exceed the exhaustive-search cap of {cap}")]
    TooManyArms { arms: usize, cap: usize },
    #[error("invalid costs: {0}")]
    InvalidCosts(String),
    #[error("peak profile covers {got} users, matrix has {expected}")]
    PeakCount { expected: usize, got: usize },
    #[error(transparent)]
    NotPsp(#[from] SpError),
}

/// A matching together with its value on the matrix it was optimized for.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub matching: Matching,
    pub value: f64,
}

impl Solution {
    pub fn selected(&self) -> Vec<usize> {
        self.matching.selected()
    }
}

fn check_costs(arms: usize, costs: &[u32], budget: u32) -> Result<(), OfflineError> {
    if costs.len() != arms {
        return Err(OfflineError::InvalidCosts(format!(
            "{} costs for {arms} arms",
            costs.len()
        )));
    }
    if let Some((k, &c)) = costs
        .iter()
        .enumerate()
        .find(|(_, &c)| c == 0 || c > budget)
    {
        return Err(OfflineError::InvalidCosts(format!(
            "arm {k} costs {c}, must lie in 1..={budget}"
        )));
    }
    Ok(())
}

/// Gives every user their favourite arm of `subset` (ties to the smaller
/// arm). The value equals the coverage `f(subset)`.
pub fn assign_to_subset(
    theta: &PreferenceMatrix,
    subset: &[usize],
) -> Result<Solution, OfflineError> {
    let mut arms = subset.to_vec();
    arms.sort_unstable();
    arms.dedup();
    if arms.is_empty() {
        return Err(OfflineError::EmptySubset);
    }
    let mut assignment = Vec::with_capacity(theta.users());
    let mut value = 0.0;
    for row in theta.rows() {
        let mut best = arms[0];
        for &k in &arms[1..] {
            if row[k] > row[best] {
                best = k;
            }
        }
        value += row[best];
        assignment.push(best);
    }
    Ok(Solution {
        matching: Matching::new(assignment).expect("matrices have at least one user"),
        value,
    })
}

/// `f(S) = sum_u max_{k in S} theta[u][k]`, with `f(empty) = 0`.
pub fn coverage_value(theta: &PreferenceMatrix, subset: &[usize]) -> f64 {
    if subset.is_empty() {
        return 0.0;
    }
    theta
        .rows()
        .map(|row| {
            subset
                .iter()
                .map(|&k| row[k])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .sum()
}

/// Dynamic-programming tables of the single-peaked matcher, in 1-based arm
/// numbering with a fictive arm 0 of zero cost and zero reward.
#[derive(Debug, Clone)]
pub struct DpTable {
    /// `best[k][b]`: best reward of users peaking at or before `k` when `k`
    /// is the rightmost selected arm and the budget is `b`.
    pub best: Vec<Vec<f64>>,
    /// `pair[i][k]`: reward of users peaking in `(i, k]` served by `i` or `k`.
    pub pair: Vec<Vec<f64>>,
    /// Predecessor arm realizing `best[k][b]`.
    pub parent: Vec<Vec<usize>>,
}

/// Optimal budget-feasible matching for a matrix that is single-peaked under
/// the identity column order. Peaks are the leftmost row maxima.
pub fn sp_matching(
    theta: &PreferenceMatrix,
    costs: &[u32],
    budget: u32,
) -> Result<Solution, OfflineError> {
    let peaks = peaks_of(theta, &ArmOrder::identity(theta.arms()))?;
    sp_matching_with_peaks(theta, &peaks, costs, budget)
}

/// [`sp_matching`] with caller-supplied peaks. Each peak must be a maximum of
/// its row and the rows must be unimodal around it; this is not rechecked.
pub fn sp_matching_with_peaks(
    theta: &PreferenceMatrix,
    peaks: &PeakProfile,
    costs: &[u32],
    budget: u32,
) -> Result<Solution, OfflineError> {
    if peaks.users() != theta.users() {
        return Err(OfflineError::PeakCount {
            expected: theta.users(),
            got: peaks.users(),
        });
    }
    check_costs(theta.arms(), costs, budget)?;
    let (_, selected) = solve_dp(theta, peaks, costs, budget);
    assign_to_subset(theta, &selected)
}

/// Optimal matching for a matrix that is single-peaked under some unknown
/// order. The identity order is used when it works; otherwise an exact order
/// is extracted first. Returns the solution in the original arm indexing and
/// the order the dynamic program ran under.
pub fn sp_matching_any_order(
    theta: &PreferenceMatrix,
    costs: &[u32],
    budget: u32,
) -> Result<(Solution, ArmOrder), OfflineError> {
    check_costs(theta.arms(), costs, budget)?;
    let identity = ArmOrder::identity(theta.arms());
    let order = if peaks_of(theta, &identity).is_ok() {
        identity
    } else {
        extract_order(theta, 0.0)?
    };
    let arranged = theta.reorder_columns(&order);
    let arranged_costs: Vec<u32> = order.as_slice().iter().map(|&k| costs[k]).collect();
    let sol = sp_matching(&arranged, &arranged_costs, budget)?;
    let matching = sol.matching.map_arms(order.as_slice());
    Ok((
        Solution {
            matching,
            value: sol.value,
        },
        order,
    ))
}

/// Fills the tables and backtracks to the selected arms (0-based).
pub fn solve_dp(
    theta: &PreferenceMatrix,
    peaks: &PeakProfile,
    costs: &[u32],
    budget: u32,
) -> (DpTable, Vec<usize>) {
    let k_max = theta.arms();
    let b_max = budget as usize;
    // Column j >= 1 of the extended matrix is arm j - 1; column 0 is fictive.
    let reward = |u: usize, j: usize| if j == 0 { 0.0 } else { theta.get(u, j - 1) };
    let cost = |j: usize| if j == 0 { 0 } else { costs[j - 1] as usize };
    let peak = |u: usize| peaks.peak(u) + 1;

    let mut pair = vec![vec![0.0; k_max + 1]; k_max + 1];
    for u in 0..theta.users() {
        let p = peak(u);
        for (i, row) in pair.iter_mut().enumerate().take(p) {
            for (k, cell) in row.iter_mut().enumerate().skip(p) {
                *cell += reward(u, i).max(reward(u, k));
            }
        }
    }

    let mut best = vec![vec![f64::NEG_INFINITY; b_max + 1]; k_max + 1];
    let mut parent = vec![vec![0usize; b_max + 1]; k_max + 1];
    best[0].fill(0.0);
    for k in 1..=k_max {
        for b in cost(k)..=b_max {
            let rest = b - cost(k);
            for i in 0..k {
                if cost(i) > rest || best[i][rest] == f64::NEG_INFINITY {
                    continue;
                }
                let candidate = best[i][rest] + pair[i][k];
                if candidate > best[k][b] {
                    best[k][b] = candidate;
                    parent[k][b] = i;
                }
            }
        }
    }

    // Users peaking right of the rightmost selected arm settle on it.
    let mut tail = vec![0.0; k_max + 1];
    for u in 0..theta.users() {
        for (k, t) in tail.iter_mut().enumerate().take(peak(u)).skip(1) {
            *t += reward(u, k);
        }
    }
    let mut last = 1;
    let mut top = f64::NEG_INFINITY;
    for k in 1..=k_max {
        let v = best[k][b_max] + tail[k];
        if v > top {
            top = v;
            last = k;
        }
    }

    let mut selected = Vec::new();
    let (mut k, mut b) = (last, b_max);
    while k > 0 {
        selected.push(k - 1);
        let prev = parent[k][b];
        b -= cost(k);
        k = prev;
    }
    selected.reverse();
    (DpTable { best, pair, parent }, selected)
}

/// Exhaustive search over budget-feasible arm subsets, exact for any matrix.
pub fn brute_force_opt(
    theta: &PreferenceMatrix,
    costs: &[u32],
    budget: u32,
) -> Result<Solution, OfflineError> {
    brute_force_opt_capped(theta, costs, budget, DEFAULT_BRUTE_FORCE_CAP)
}

pub fn brute_force_opt_capped(
    theta: &PreferenceMatrix,
    costs: &[u32],
    budget: u32,
    cap: usize,
) -> Result<Solution, OfflineError> {
    check_costs(theta.arms(), costs, budget)?;
    let best = best_feasible_subset(theta.arms(), costs, budget, cap, |subset| {
        coverage_value(theta, subset)
    })?;
    assign_to_subset(theta, &best)
}

/// Enumerates every nonempty subset within budget and returns the first one
/// (in increasing bitmask order) maximizing `score`.
pub(crate) fn best_feasible_subset<S: PartialOrd>(
    arms: usize,
    costs: &[u32],
    budget: u32,
    cap: usize,
    mut score: impl FnMut(&[usize]) -> S,
) -> Result<Vec<usize>, OfflineError> {
    if arms > cap.min(63) {
        return Err(OfflineError::TooManyArms { arms, cap });
    }
    let mut best: Option<(S, Vec<usize>)> = None;
    let mut subset = Vec::with_capacity(arms);
    for mask in 1u64..(1u64 << arms) {
        subset.clear();
        subset.extend((0..arms).filter(|&k| mask >> k & 1 == 1));
        if selected_cost(&subset, costs) > u64::from(budget) {
            continue;
        }
        let s = score(&subset);
        if best.as_ref().is_none_or(|(b, _)| s > *b) {
            best = Some((s, subset.clone()));
        }
    }
    Ok(best.expect("every single arm fits the budget").1)
}

/// Greedy+Max for the coverage objective under the knapsack budget.
///
/// Greedy adds the affordable arm of largest marginal gain per unit cost
/// until nothing fits. Before each greedy step the current prefix is also
/// augmented with the affordable arm of largest absolute marginal gain, and
/// the best of all these candidate sets is returned. Ties go to the smaller
/// arm index. Guarantees at least half the optimal coverage.
pub fn greedy_max(theta: &PreferenceMatrix, costs: &[u32], budget: u32) -> (Vec<usize>, f64) {
    let k_max = theta.arms();
    let mut current: Vec<f64> = vec![0.0; theta.users()];
    let mut chosen = vec![false; k_max];
    let mut prefix: Vec<usize> = Vec::new();
    let mut spent = 0u64;
    let mut prefix_value = 0.0;
    let mut best: (Vec<usize>, f64) = (Vec::new(), f64::NEG_INFINITY);

    let gain = |k: usize, current: &[f64]| -> f64 {
        theta
            .rows()
            .zip(current)
            .map(|(row, &c)| (row[k] - c).max(0.0))
            .sum()
    };

    loop {
        let room = u64::from(budget) - spent;
        let affordable: Vec<usize> = (0..k_max)
            .filter(|&k| !chosen[k] && u64::from(costs[k]) <= room)
            .collect();
        if affordable.is_empty() {
            break;
        }
        let gains: Vec<f64> = affordable.iter().map(|&k| gain(k, &current)).collect();

        // Max step: prefix plus the single best augmentation.
        let mut top = 0;
        for i in 1..affordable.len() {
            if gains[i] > gains[top] {
                top = i;
            }
        }
        if prefix_value + gains[top] > best.1 {
            let mut set = prefix.clone();
            set.push(affordable[top]);
            set.sort_unstable();
            best = (set, prefix_value + gains[top]);
        }

        // Greedy step by density.
        let mut pick = 0;
        for i in 1..affordable.len() {
            let lhs = gains[i] * f64::from(costs[affordable[pick]]);
            let rhs = gains[pick] * f64::from(costs[affordable[i]]);
            if lhs > rhs {
                pick = i;
            }
        }
        let k = affordable[pick];
        chosen[k] = true;
        spent += u64::from(costs[k]);
        prefix.push(k);
        for (row, c) in theta.rows().zip(current.iter_mut()) {
            *c = c.max(row[k]);
        }
        prefix_value = current.iter().sum();
    }
    if prefix_value > best.1 {
        let mut set = prefix;
        set.sort_unstable();
        best = (set, prefix_value);
    }
    // Report the value recomputed from scratch so it matches coverage_value.
    let value = coverage_value(theta, &best.0);
    (best.0, value)
}
