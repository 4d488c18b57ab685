//! Experiment plans, their parallel execution and result files.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bandit::{
    run_cucb_bruteforce, run_emc, run_greedy_etc, run_mvm, run_peak_id_mvm, AlgoConfig,
    Environment, MvmOptions, RegretTrace, SampleGrid,
};
use crate::model::ArmOrder;
use crate::sp::PeakProfile;

use super::env::{optimum_value, BernoulliEnv};
use super::generate::{generate_sp_instance, permute_columns, BudgetMode, CostsMode, GenParams};
use super::rng::derive;
use super::slope::{fit_slope, thin_log_uniform, upper_half, SlopeFit};
use super::SimError;

/// Exact CSV header of result files.
pub const CSV_COLUMNS: [&str; 8] = [
    "algo",
    "instance_id",
    "seed",
    "horizon",
    "t",
    "inst_regret",
    "cum_regret",
    "flags",
];

/// Ratio of the log-uniform thinning applied to trajectories before fitting.
pub const FIT_THINNING: f64 = 1.05;

/// Optional explicit fit window for trajectory slopes; missing ends default
/// to `[sqrt(T), T]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FitRange {
    #[serde(default)]
    pub t_min: Option<f64>,
    #[serde(default)]
    pub t_max: Option<f64>,
}

impl FitRange {
    pub fn resolve(&self, horizon: u64) -> (f64, f64) {
        let (lo, hi) = upper_half(horizon);
        (self.t_min.unwrap_or(lo), self.t_max.unwrap_or(hi))
    }
}

/// A grid of runs: every learner on every (instance, seed, horizon).
///
/// Seeds are derived from `master_seed` with [`derive`]: instance `i` is
/// generated from `[1, i]` and its columns shuffled with `[2, i]`; the reward
/// stream of seed `s` on instance `i` uses `[3, i, s]` for every learner and
/// horizon, so learners are compared on identical rewards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub users: usize,
    pub arms: usize,
    #[serde(default)]
    pub budget: BudgetMode,
    #[serde(default)]
    pub costs: CostsMode,
    #[serde(default)]
    pub peak_gap: Option<f64>,
    pub instances: usize,
    pub seeds: usize,
    pub horizons: Vec<u64>,
    pub algos: Vec<AlgoConfig>,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "standard_grid")]
    pub grid: SampleGrid,
    #[serde(default)]
    pub fit: FitRange,
}

fn standard_grid() -> SampleGrid {
    SampleGrid::STANDARD
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidParameter(m));
        if self.algos.is_empty() {
            return bad("the algorithm list is empty".into());
        }
        if self.users == 0 || self.arms == 0 || self.instances == 0 || self.seeds == 0 {
            return bad("users, arms, instances and seeds must be positive".into());
        }
        if self.horizons.is_empty() {
            return bad("the horizon list is empty".into());
        }
        let floor = self.users.max(self.arms) as u64;
        if let Some(&t) = self.horizons.iter().find(|&&t| t < floor) {
            return bad(format!("horizon {t} is below max(users, arms) = {floor}"));
        }
        let mut sorted = self.horizons.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.horizons.len() {
            return bad("horizons repeat".into());
        }
        Ok(())
    }

    fn gen_params(&self) -> GenParams {
        GenParams {
            costs: self.costs,
            budget: self.budget,
            peak_gap: self.peak_gap,
            ..GenParams::new(
                self.users,
                self.arms,
                *self.horizons.iter().max().unwrap_or(&1),
            )
        }
    }
}

/// Outcome of one (learner, instance, seed, horizon) cell.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub algo: String,
    pub instance_id: usize,
    pub seed: usize,
    pub horizon: u64,
    pub outcome: Result<RegretTrace, String>,
}

struct PreparedInstance {
    plain: crate::model::Instance,
    peaks: PeakProfile,
    shuffled: crate::model::Instance,
    optimum: f64,
}

/// Runs one learner. Learners that know the single-peaked order get the
/// instance in that order together with its true peaks; the others get the
/// column-shuffled instance.
pub fn run_learner(
    config: &AlgoConfig,
    env: &mut dyn Environment,
    order: &ArmOrder,
    peaks: &PeakProfile,
    grid: SampleGrid,
) -> Result<RegretTrace, crate::bandit::BanditError> {
    match *config {
        AlgoConfig::Emc { n_explore } => run_emc(env, n_explore, grid),
        AlgoConfig::GreedyEtc { n_explore } => run_greedy_etc(env, n_explore, grid),
        AlgoConfig::Cucb {} => run_cucb_bruteforce(env, grid),
        AlgoConfig::Mvm { check_optimism } => run_mvm(
            env,
            order,
            peaks,
            MvmOptions {
                check_optimism,
                grid,
            },
        ),
        AlgoConfig::PeakIdMvm {} => run_peak_id_mvm(
            env,
            order,
            MvmOptions {
                check_optimism: false,
                grid,
            },
        ),
    }
}

/// Executes every cell of `plan` on at most `jobs` worker threads (all
/// available cores when `None`). Records come back in plan order: learner,
/// then instance, then seed, then horizon, whatever the thread count.
///
/// A failing run is kept as an error record; only invalid plans fail the
/// whole call.
pub fn simulate(plan: &ExperimentPlan, jobs: Option<usize>) -> Result<Vec<RunRecord>, SimError> {
    plan.validate()?;
    let params = plan.gen_params();
    let prepared: Vec<PreparedInstance> = (0..plan.instances)
        .map(|i| {
            let g = generate_sp_instance(&params, derive(plan.master_seed, &[1, i as u64]))?;
            let (shuffled, _) =
                permute_columns(&g.instance, derive(plan.master_seed, &[2, i as u64]));
            let optimum = optimum_value(&g.instance)?;
            Ok(PreparedInstance {
                plain: g.instance,
                peaks: g.peaks,
                shuffled,
                optimum,
            })
        })
        .collect::<Result<_, SimError>>()?;

    let mut cells = Vec::new();
    for algo in &plan.algos {
        for i in 0..plan.instances {
            for s in 0..plan.seeds {
                for &h in &plan.horizons {
                    cells.push((algo, i, s, h));
                }
            }
        }
    }
    let identity = ArmOrder::identity(plan.arms);
    let run_cell = |&(algo, i, s, h): &(&AlgoConfig, usize, usize, u64)| {
        let p = &prepared[i];
        let base = if algo.knows_order() {
            &p.plain
        } else {
            &p.shuffled
        };
        let outcome = base
            .with_horizon(h)
            .map_err(|e| e.to_string())
            .and_then(|inst| {
                let seed = derive(plan.master_seed, &[3, i as u64, s as u64]);
                let mut env = BernoulliEnv::with_optimum(inst, seed, p.optimum);
                run_learner(algo, &mut env, &identity, &p.peaks, plan.grid)
                    .map_err(|e| e.to_string())
            });
        RunRecord {
            algo: algo.name().to_string(),
            instance_id: i,
            seed: s,
            horizon: h,
            outcome,
        }
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| SimError::InvalidParameter(format!("worker pool: {e}")))?;
    Ok(pool.install(|| cells.par_iter().map(run_cell).collect()))
}

/// Writes records in the result-file schema. Failed runs become a single row
/// with `t = 0`, empty regret fields and an `error=` flag.
pub fn write_csv<W: Write>(records: &[RunRecord], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for rec in records {
        let head = [
            rec.algo.clone(),
            rec.instance_id.to_string(),
            rec.seed.to_string(),
            rec.horizon.to_string(),
        ];
        match &rec.outcome {
            Ok(trace) => {
                let flags = trace.flags_string();
                for p in &trace.points {
                    w.write_record(head.iter().cloned().chain([
                        p.t.to_string(),
                        p.inst_regret.to_string(),
                        p.cum_regret.to_string(),
                        flags.clone(),
                    ]))?;
                }
            }
            Err(msg) => {
                let msg = msg.replace(['\n', '|'], " ");
                w.write_record(head.iter().cloned().chain([
                    "0".to_string(),
                    String::new(),
                    String::new(),
                    format!("error={msg}"),
                ]))?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Cumulative-regret curve of one run, as stored in a result file.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub algo: String,
    pub instance_id: usize,
    pub seed: usize,
    pub horizon: u64,
    pub points: Vec<(u64, f64)>,
}

pub fn curves_of(records: &[RunRecord]) -> Vec<Curve> {
    records
        .iter()
        .filter_map(|rec| {
            let trace = rec.outcome.as_ref().ok()?;
            Some(Curve {
                algo: rec.algo.clone(),
                instance_id: rec.instance_id,
                seed: rec.seed,
                horizon: rec.horizon,
                points: trace.points.iter().map(|p| (p.t, p.cum_regret)).collect(),
            })
        })
        .collect()
}

#[derive(Debug, Deserialize)]
struct CsvRow {
    algo: String,
    instance_id: usize,
    seed: usize,
    horizon: u64,
    t: u64,
    #[allow(dead_code)]
    inst_regret: Option<f64>,
    cum_regret: Option<f64>,
    #[allow(dead_code)]
    flags: String,
}

/// Parses a result file back into per-run curves (failed runs are skipped).
pub fn read_curves<R: Read>(input: R) -> Result<Vec<Curve>, crate::Error> {
    let mut reader = csv::Reader::from_reader(input);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header != CSV_COLUMNS {
        return Err(crate::Error::Config(format!(
            "unexpected result columns {header:?}, want {CSV_COLUMNS:?}"
        )));
    }
    let mut curves: Vec<Curve> = Vec::new();
    for row in reader.deserialize::<CsvRow>() {
        let row = row?;
        let Some(cum) = row.cum_regret else { continue };
        let same = curves.last().is_some_and(|c| {
            c.algo == row.algo
                && c.instance_id == row.instance_id
                && c.seed == row.seed
                && c.horizon == row.horizon
        });
        if !same {
            curves.push(Curve {
                algo: row.algo,
                instance_id: row.instance_id,
                seed: row.seed,
                horizon: row.horizon,
                points: Vec::new(),
            });
        }
        curves
            .last_mut()
            .expect("pushed above")
            .points
            .push((row.t, cum));
    }
    Ok(curves)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlopeKind {
    /// Mean cumulative regret against `t` within one horizon.
    Trajectory,
    /// Mean final regret against the horizon, across horizons.
    Endpoint,
}

/// One line of the slope summary file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeRecord {
    pub algo: String,
    pub kind: SlopeKind,
    /// `None` for endpoint fits.
    pub horizon: Option<u64>,
    pub runs: usize,
    #[serde(flatten)]
    pub fit: SlopeFit,
}

/// Fits every learner's mean trajectory per horizon (thinned log-uniformly,
/// window from `range`) and, with three or more horizons, its mean endpoint
/// regret against the horizon. Groups whose fit has too few positive points
/// are left out.
pub fn summarize(curves: &[Curve], range: FitRange) -> Vec<SlopeRecord> {
    let mut algos: Vec<&str> = Vec::new();
    for c in curves {
        if !algos.contains(&c.algo.as_str()) {
            algos.push(&c.algo);
        }
    }
    let mut out = Vec::new();
    for algo in algos {
        let mut by_horizon: BTreeMap<u64, Vec<&Curve>> = BTreeMap::new();
        for c in curves.iter().filter(|c| c.algo == algo) {
            by_horizon.entry(c.horizon).or_default().push(c);
        }
        let mut endpoints = Vec::new();
        for (&h, group) in &by_horizon {
            let Some(mean) = mean_curve(group) else {
                continue;
            };
            if let Some(&(_, last)) = mean.last() {
                endpoints.push((h as f64, last));
            }
            let (lo, hi) = range.resolve(h);
            if let Ok(fit) = fit_slope(&thin_log_uniform(&mean, FIT_THINNING), lo, hi) {
                out.push(SlopeRecord {
                    algo: algo.to_string(),
                    kind: SlopeKind::Trajectory,
                    horizon: Some(h),
                    runs: group.len(),
                    fit,
                });
            }
        }
        if endpoints.len() >= 3 {
            let lo = endpoints.first().map_or(0.0, |p| p.0);
            let hi = endpoints.last().map_or(0.0, |p| p.0);
            if let Ok(fit) = fit_slope(&endpoints, lo, hi) {
                let runs = by_horizon.values().map(Vec::len).min().unwrap_or(0);
                out.push(SlopeRecord {
                    algo: algo.to_string(),
                    kind: SlopeKind::Endpoint,
                    horizon: None,
                    runs,
                    fit,
                });
            }
        }
    }
    out
}

/// Pointwise mean over curves sampled at identical rounds; `None` when the
/// rounds disagree.
fn mean_curve(group: &[&Curve]) -> Option<Vec<(f64, f64)>> {
    let first = group.first()?;
    if group.iter().any(|c| c.points.len() != first.points.len()) {
        return None;
    }
    let n = group.len() as f64;
    first
        .points
        .iter()
        .enumerate()
        .map(|(j, &(t, _))| {
            let mut sum = 0.0;
            for c in group {
                let (tc, r) = c.points[j];
                if tc != t {
                    return None;
                }
                sum += r;
            }
            Some((t as f64, sum / n))
        })
        .collect()
}

/// Slope records as pretty-printed JSON.
pub fn slopes_json(records: &[SlopeRecord]) -> String {
    serde_json::to_string_pretty(records).expect("slope records always serialize")
}
