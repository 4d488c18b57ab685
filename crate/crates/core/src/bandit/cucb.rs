use crate::model::Matching;
use crate::offline::best_feasible_subset;

use super::stats::BanditStats;
use super::{true_value, BanditError, Environment, RegretTrace, SampleGrid, CUCB_MAX_ARMS};

/// Optimistic learner for arbitrary preference matrices: every round plays
/// the exact optimum of the upper-confidence matrix, found by enumerating all
/// budget-feasible arm subsets.
///
/// Unpulled pairs carry an infinite upper bound. A subset is therefore
/// ranked first by how many users it can send to a pair they have never
/// pulled, then by the sum of the (clamped) finite bounds of everyone else.
pub fn run_cucb_bruteforce(
    env: &mut dyn Environment,
    grid: SampleGrid,
) -> Result<RegretTrace, BanditError> {
    let instance = env.instance().clone();
    let (users, arms, horizon) = (instance.users(), instance.arms(), instance.horizon());
    if arms > CUCB_MAX_ARMS {
        return Err(BanditError::TooManyArms {
            arms,
            cap: CUCB_MAX_ARMS,
        });
    }
    let mut stats = BanditStats::new(users, arms, horizon);
    let mut trace = RegretTrace::new(env.optimum(), 1.0, horizon, grid);
    let mut rewards = vec![0.0; users];
    for round in 0..horizon {
        let subset = best_feasible_subset(
            arms,
            instance.costs(),
            instance.budget(),
            CUCB_MAX_ARMS,
            |s| optimistic_score(&stats, s),
        )?;
        let matching = optimistic_assignment(&stats, &subset);
        env.pull(round, &matching, &mut rewards);
        stats.record(&matching, &rewards);
        trace.record_value(true_value(env, &matching));
    }
    Ok(trace)
}

fn optimistic_score(stats: &BanditStats, subset: &[usize]) -> (u64, f64) {
    let mut unexplored = 0;
    let mut finite = 0.0;
    for u in 0..stats.users() {
        if subset.iter().any(|&k| stats.count(u, k) == 0) {
            unexplored += 1;
        } else {
            finite += subset
                .iter()
                .map(|&k| stats.ucb(u, k))
                .fold(f64::NEG_INFINITY, f64::max);
        }
    }
    (unexplored, finite)
}

/// Each user takes an unpulled arm of `subset` if one exists (smallest
/// index), otherwise the arm with the largest upper bound.
fn optimistic_assignment(stats: &BanditStats, subset: &[usize]) -> Matching {
    let assignment = (0..stats.users())
        .map(|u| {
            if let Some(&k) = subset.iter().find(|&&k| stats.count(u, k) == 0) {
                return k;
            }
            let mut best = subset[0];
            for &k in &subset[1..] {
                if stats.ucb(u, k) > stats.ucb(u, best) {
                    best = k;
                }
            }
            best
        })
        .collect();
    Matching::new(assignment).expect("at least one user")
}
