use crate::model::{ArmOrder, Matching, PreferenceMatrix};
use crate::offline::sp_matching_with_peaks;
use crate::sp::{peaks_of, PeakProfile};

use super::stats::{maximal_matrix, BanditStats};
use super::{true_value, BanditError, Environment, Flag, RegretTrace, SampleGrid};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MvmOptions {
    /// Check `V(pi_t; P_t) >= V*` every round in which the true means lie
    /// inside the confidence boxes, counting violations in the trace.
    pub check_optimism: bool,
    pub grid: SampleGrid,
}

impl Default for MvmOptions {
    fn default() -> Self {
        Self {
            check_optimism: false,
            grid: SampleGrid::STANDARD,
        }
    }
}

/// Match-via-Maximal with a known single-peaked order and known peaks
/// (positions in `order`).
pub fn run_mvm(
    env: &mut dyn Environment,
    order: &ArmOrder,
    peaks: &PeakProfile,
    opts: MvmOptions,
) -> Result<RegretTrace, BanditError> {
    let instance = env.instance();
    check_structure(instance.theta(), order, peaks)?;
    let horizon = instance.horizon();
    let mut stats = BanditStats::new(instance.users(), instance.arms(), horizon);
    let mut trace = RegretTrace::new(env.optimum(), 1.0, horizon, opts.grid);
    if !structure_matches(instance.theta(), order, peaks) {
        trace.flag(Flag::StructureMismatch);
    }
    play_mvm(env, &mut stats, order, peaks, 0, &mut trace, opts)?;
    Ok(trace)
}

/// Two-phase learner for a known order with unknown, strictly separated
/// peaks: whole-population round-robin over the arms until every user has an
/// arm whose lower bound beats all other upper bounds, then MvM with those
/// peaks for the remaining rounds (sharing the collected statistics).
pub fn run_peak_id_mvm(
    env: &mut dyn Environment,
    order: &ArmOrder,
    opts: MvmOptions,
) -> Result<RegretTrace, BanditError> {
    let instance = env.instance();
    let (users, arms, horizon) = (instance.users(), instance.arms(), instance.horizon());
    if order.len() != arms {
        return Err(BanditError::InvalidParameter(format!(
            "order has {} arms, instance has {arms}",
            order.len()
        )));
    }
    let mut stats = BanditStats::new(users, arms, horizon);
    let mut trace = RegretTrace::new(env.optimum(), 1.0, horizon, opts.grid);
    let mut identified: Vec<Option<usize>> = vec![None; users];
    let mut rewards = vec![0.0; users];
    let mut round = 0u64;
    loop {
        identify_peaks(&stats, &mut identified);
        if identified.iter().all(Option::is_some) || round == horizon {
            break;
        }
        let matching = Matching::constant(users, (round % arms as u64) as usize);
        env.pull(round, &matching, &mut rewards);
        stats.record(&matching, &rewards);
        trace.record_value(true_value(env, &matching));
        round += 1;
    }
    if identified.iter().any(Option::is_none) {
        trace.flag(Flag::PhaseOneExhausted);
        return Ok(trace);
    }
    let peak_arms: Vec<usize> = identified.into_iter().map(Option::unwrap).collect();
    let positions = order.positions();
    let peaks = PeakProfile::new(peak_arms.iter().map(|&k| positions[k]).collect());
    trace.info.identified_peaks = Some(peak_arms);
    trace.info.identified_at = Some(round);
    if !structure_matches(env.instance().theta(), order, &peaks) {
        trace.flag(Flag::StructureMismatch);
    }
    play_mvm(env, &mut stats, order, &peaks, round, &mut trace, opts)?;
    Ok(trace)
}

/// Marks user `u` as peaking at `k` once `LCB(u, k) > max_{j != k} UCB(u, j)`.
fn identify_peaks(stats: &BanditStats, identified: &mut [Option<usize>]) {
    let arms = stats.arms();
    for (u, slot) in identified.iter_mut().enumerate() {
        if slot.is_some() {
            continue;
        }
        let mut cand = 0;
        for k in 1..arms {
            if stats.lcb(u, k) > stats.lcb(u, cand) {
                cand = k;
            }
        }
        let rival = (0..arms)
            .filter(|&j| j != cand)
            .map(|j| stats.ucb(u, j))
            .fold(f64::NEG_INFINITY, f64::max);
        if stats.lcb(u, cand) > rival {
            *slot = Some(cand);
        }
    }
}

fn check_structure(
    theta: &PreferenceMatrix,
    order: &ArmOrder,
    peaks: &PeakProfile,
) -> Result<(), BanditError> {
    if order.len() != theta.arms() || peaks.users() != theta.users() {
        return Err(BanditError::InvalidParameter(format!(
            "order/peaks shaped {}x{}, instance is {}x{}",
            peaks.users(),
            order.len(),
            theta.users(),
            theta.arms()
        )));
    }
    if let Some(&p) = peaks.peaks.iter().find(|&&p| p >= theta.arms()) {
        return Err(BanditError::InvalidParameter(format!(
            "peak position {p} out of range"
        )));
    }
    Ok(())
}

/// True matrix is unimodal under `order` and each given peak attains its
/// row maximum.
fn structure_matches(theta: &PreferenceMatrix, order: &ArmOrder, peaks: &PeakProfile) -> bool {
    if peaks_of(theta, order).is_err() {
        return false;
    }
    let arms = order.as_slice();
    theta.rows().zip(&peaks.peaks).all(|(row, &p)| {
        let top = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        row[arms[p]] == top
    })
}

fn play_mvm(
    env: &mut dyn Environment,
    stats: &mut BanditStats,
    order: &ArmOrder,
    peaks: &PeakProfile,
    first_round: u64,
    trace: &mut RegretTrace,
    opts: MvmOptions,
) -> Result<(), BanditError> {
    let instance = env.instance().clone();
    let (users, arms) = (instance.users(), instance.arms());
    let arm_at = order.as_slice();
    let costs: Vec<u32> = arm_at.iter().map(|&k| instance.costs()[k]).collect();
    let identity = ArmOrder::identity(arms);
    let optimum = env.optimum();
    let mut rewards = vec![0.0; users];
    let mut ucb = vec![0.0; users * arms];
    for round in first_round..instance.horizon() {
        // Upper bounds laid out in order positions.
        for u in 0..users {
            for (pos, &k) in arm_at.iter().enumerate() {
                ucb[u * arms + pos] = stats.ucb(u, k);
            }
        }
        let ucb_m = PreferenceMatrix::new(users, arms, ucb.clone()).expect("clamped bounds");
        let optimistic = maximal_matrix(&ucb_m, &identity, peaks);
        let sol = sp_matching_with_peaks(&optimistic, peaks, &costs, instance.budget())?;
        let matching = sol.matching.map_arms(arm_at);

        if opts.check_optimism && stats.bounds().contains(instance.theta()) {
            trace.info.optimism_checks += 1;
            if sol.value < optimum - 1e-9 {
                trace.info.optimism_violations += 1;
                trace.flag(Flag::OptimismViolated);
            }
        }

        env.pull(round, &matching, &mut rewards);
        stats.record(&matching, &rewards);
        trace.record_value(true_value(env, &matching));
    }
    Ok(())
}
