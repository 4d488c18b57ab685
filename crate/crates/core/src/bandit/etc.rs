use serde::{Deserialize, Serialize};

use crate::model::{ArmOrder, Matching, PreferenceMatrix};
use crate::offline::{assign_to_subset, greedy_max, sp_matching};
use crate::sp::{extract_order, project_to_sp};

use super::stats::BanditStats;
use super::{true_value, BanditError, Environment, Flag, RegretTrace, SampleGrid};

/// Exploration length per arm for the explore-then-commit learners.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExploreRounds {
    /// Learner-specific schedule derived from the horizon.
    #[default]
    Auto,
    Fixed(u64),
}

/// Resolves the per-arm exploration length; `auto` is the learner's default
/// schedule. Automatic lengths are capped so that `n * arms <= horizon`.
fn explore_len(
    spec: ExploreRounds,
    auto: u64,
    arms: usize,
    horizon: u64,
    trace: &mut RegretTrace,
) -> Result<u64, BanditError> {
    let arms = arms as u64;
    match spec {
        ExploreRounds::Fixed(n) => {
            if n == 0 || n.saturating_mul(arms) > horizon {
                return Err(BanditError::InvalidParameter(format!(
                    "{n} exploration rounds per arm do not fit {arms} arms in horizon {horizon}"
                )));
            }
            Ok(n)
        }
        ExploreRounds::Auto => {
            let cap = horizon / arms;
            if auto > cap {
                trace.flag(Flag::ExploreCapped);
                Ok(cap.max(1))
            } else {
                Ok(auto.max(1))
            }
        }
    }
}

/// Matches the whole population to each arm in turn, `n` rounds per arm.
fn explore(
    env: &mut dyn Environment,
    stats: &mut BanditStats,
    n: u64,
    trace: &mut RegretTrace,
) -> u64 {
    let users = env.instance().users();
    let mut rewards = vec![0.0; users];
    let mut round = 0;
    for k in 0..env.instance().arms() {
        let matching = Matching::constant(users, k);
        let value = true_value(env, &matching);
        for _ in 0..n {
            env.pull(round, &matching, &mut rewards);
            stats.record(&matching, &rewards);
            trace.record_value(value);
            round += 1;
        }
    }
    round
}

/// Commit decision of the explore-then-match-and-commit learner.
#[derive(Debug, Clone, PartialEq)]
pub struct EmcDecision {
    pub order: ArmOrder,
    /// Single-peaked surrogate of the empirical means, original columns.
    pub surrogate: PreferenceMatrix,
    /// Sup-norm distance between the surrogate and the empirical means.
    pub distance: f64,
    pub matching: Matching,
    pub extract_failed: bool,
}

/// Order extraction at tolerance `eps`, projection onto the extracted order,
/// and the single-peaked matcher on the projection. Falls back to the
/// identity order when extraction fails.
pub fn emc_decide(
    means: &PreferenceMatrix,
    eps: f64,
    costs: &[u32],
    budget: u32,
) -> Result<EmcDecision, BanditError> {
    let (order, extract_failed) = match extract_order(means, eps) {
        Ok(order) => (order, false),
        Err(_) => (ArmOrder::identity(means.arms()), true),
    };
    let (surrogate, distance) = project_to_sp(means, &order)?;
    let arranged = surrogate.reorder_columns(&order);
    let arranged_costs: Vec<u32> = order.as_slice().iter().map(|&k| costs[k]).collect();
    let sol = sp_matching(&arranged, &arranged_costs, budget)?;
    Ok(EmcDecision {
        matching: sol.matching.map_arms(order.as_slice()),
        order,
        surrogate,
        distance,
        extract_failed,
    })
}

/// Explore-then-match-and-commit for an unknown single-peaked order.
///
/// `Auto` explores `ceil(T^(2/3) (ln T)^(1/3))` rounds per arm.
pub fn run_emc(
    env: &mut dyn Environment,
    n_explore: ExploreRounds,
    grid: SampleGrid,
) -> Result<RegretTrace, BanditError> {
    let instance = env.instance().clone();
    let horizon = instance.horizon();
    let mut trace = RegretTrace::new(env.optimum(), 1.0, horizon, grid);
    let t = horizon as f64;
    let auto = (t.powf(2.0 / 3.0) * t.ln().cbrt()).ceil() as u64;
    let n = explore_len(n_explore, auto, instance.arms(), horizon, &mut trace)?;
    let mut stats = BanditStats::new(instance.users(), instance.arms(), horizon);
    let used = explore(env, &mut stats, n, &mut trace);

    let eps = (2.0 * t.ln() / n as f64).sqrt();
    let decision = emc_decide(&stats.means(), eps, instance.costs(), instance.budget())?;
    if decision.extract_failed {
        trace.flag(Flag::ExtractFailed);
    }
    trace.info.explore_rounds_per_arm = Some(n);
    trace.info.extracted_order = Some(decision.order.as_slice().to_vec());
    trace.info.committed_arms = Some(decision.matching.selected());
    // Committed rounds teach the learner nothing, so rewards are not drawn.
    trace.record_repeated(true_value(env, &decision.matching), horizon - used);
    Ok(trace)
}

/// Explore-then-commit around Greedy+Max, measured against half the optimum.
///
/// `Auto` explores `ceil(ceil(T^(2/3)) / K)` rounds per arm. This is a fixed
/// schedule, simpler than the combinatorial ETC framework the half-regret
/// guarantee is usually derived from; traces carry [`Flag::SimplifiedEtc`].
pub fn run_greedy_etc(
    env: &mut dyn Environment,
    n_explore: ExploreRounds,
    grid: SampleGrid,
) -> Result<RegretTrace, BanditError> {
    let instance = env.instance().clone();
    let horizon = instance.horizon();
    let mut trace = RegretTrace::new(env.optimum(), 0.5, horizon, grid);
    trace.flag(Flag::SimplifiedEtc);
    let arms = instance.arms() as u64;
    let auto = ((horizon as f64).powf(2.0 / 3.0).ceil() as u64).div_ceil(arms);
    let n = explore_len(n_explore, auto, instance.arms(), horizon, &mut trace)?;
    let mut stats = BanditStats::new(instance.users(), instance.arms(), horizon);
    let used = explore(env, &mut stats, n, &mut trace);

    let means = stats.means();
    let (subset, _) = greedy_max(&means, instance.costs(), instance.budget());
    let sol = assign_to_subset(&means, &subset)?;
    trace.info.explore_rounds_per_arm = Some(n);
    trace.info.committed_arms = Some(sol.matching.selected());
    trace.record_repeated(true_value(env, &sol.matching), horizon - used);
    Ok(trace)
}
