//! The `spbandit` command line.
//!
//! ```text
//! spbandit generate --users 20 --arms 8 --count 10 --seed 7 --out instances/
//! spbandit solve instances/instance_000.json --oracle --greedy
//! spbandit run --config plan.json --out results/ --jobs 4
//! spbandit slope --csv results/results.csv --t-min 1000
//! ```
//!
//! Errors print one line `error[<code>]: <message>` on stderr and exit with
//! 2 (configuration), 3 (i/o) or 4 (solver).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::bandit::{AlgoConfig, ExploreRounds, SampleGrid};
use crate::model::{validate_instance, ArmOrder, InstanceFile};
use crate::offline::{brute_force_opt, greedy_max, sp_matching_any_order};
use crate::sim::{
    curves_of, generate_sp_instance, permute_columns, read_curves, rng::derive, simulate,
    slopes_json, summarize, write_csv, BudgetMode, CostsMode, ExperimentPlan, FitRange, GenParams,
};
use crate::Error;

pub const SEED_ENV: &str = "SPBANDIT_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "spbandit",
    version,
    about = "Budgeted matching under single-peaked preferences"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write random single-peaked instance files.
    Generate(GenerateArgs),
    /// Solve an instance file exactly.
    Solve(SolveArgs),
    /// Execute an experiment plan and fit regret slopes.
    Run(RunArgs),
    /// Re-fit slopes from an existing results file.
    Slope(SlopeArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub users: usize,
    #[arg(long)]
    pub arms: usize,
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    /// Master seed; falls back to $SPBANDIT_SEED, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
    /// Defaults to max(1, floor(arms / 2)).
    #[arg(long)]
    pub budget: Option<u32>,
    /// `unit` or `uniform:MAX`.
    #[arg(long, default_value = "unit", value_parser = parse_costs)]
    pub costs: CostsMode,
    #[arg(long, default_value_t = 10_000)]
    pub horizon: u64,
    #[arg(long)]
    pub peak_gap: Option<f64>,
    /// Keep the single-peaked column order instead of shuffling columns.
    #[arg(long)]
    pub no_permute: bool,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub instance: PathBuf,
    /// Cross-check against exhaustive search.
    #[arg(long)]
    pub oracle: bool,
    /// Also report the Greedy+Max value.
    #[arg(long)]
    pub greedy: bool,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// JSON plan; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub users: Option<usize>,
    #[arg(long)]
    pub arms: Option<usize>,
    #[arg(long)]
    pub budget: Option<u32>,
    #[arg(long, value_parser = parse_costs)]
    pub costs: Option<CostsMode>,
    #[arg(long)]
    pub peak_gap: Option<f64>,
    #[arg(long)]
    pub instances: Option<usize>,
    #[arg(long)]
    pub seeds: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub horizons: Option<Vec<u64>>,
    /// Comma-separated learner names with default parameters:
    /// emc, mvm, peak_id_mvm, cucb, greedy_etc.
    #[arg(long)]
    pub algos: Option<String>,
    /// Exploration rounds per arm for emc and greedy_etc.
    #[arg(long)]
    pub n_explore: Option<u64>,
    /// Master seed; falls back to the config file, $SPBANDIT_SEED, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub t_min: Option<f64>,
    #[arg(long)]
    pub t_max: Option<f64>,
    /// Worker threads; defaults to available parallelism.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SlopeArgs {
    #[arg(long)]
    pub csv: PathBuf,
    #[arg(long)]
    pub t_min: Option<f64>,
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_costs(s: &str) -> Result<CostsMode, String> {
    if s == "unit" {
        return Ok(CostsMode::Unit);
    }
    s.strip_prefix("uniform:")
        .and_then(|m| m.parse::<u32>().ok())
        .filter(|&m| m >= 1)
        .map(|max| CostsMode::Uniform { max })
        .ok_or_else(|| format!("`{s}` is neither `unit` nor `uniform:MAX` with MAX >= 1"))
}

fn env_seed() -> Result<Option<u64>, Error> {
    match std::env::var(SEED_ENV) {
        Ok(v) => {
            v.trim().parse().map(Some).map_err(|_| {
                Error::Config(format!("${SEED_ENV} is not an unsigned integer: `{v}`"))
            })
        }
        Err(_) => Ok(None),
    }
}

/// Parses arguments, runs the command and returns the process exit status.
pub fn main() -> i32 {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => 0,
        Err(err) => {
            let text = err.to_string().replace('\n', " ");
            eprintln!("error[{}]: {text}", err.code());
            err.exit_code()
        }
    }
}

pub fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Generate(a) => cmd_generate(&a),
        Command::Solve(a) => {
            let report = cmd_solve(&a)?;
            emit(a.out.as_deref(), &serde_json::to_string_pretty(&report)?)
        }
        Command::Run(a) => cmd_run(&a),
        Command::Slope(a) => cmd_slope(&a),
    }
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), Error> {
    match path {
        Some(p) => fs::write(p, format!("{text}\n"))?,
        None => writeln!(std::io::stdout(), "{text}")?,
    }
    Ok(())
}

/// Ground truth written next to each generated instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Order under which the instance's rows are single-peaked.
    pub sp_order: Vec<usize>,
    /// Peak arm of each user.
    pub peaks: Vec<usize>,
    /// Column shuffle applied to the generated matrix (identity if none).
    pub permutation: Vec<usize>,
}

/// Writes `instance_NNN.json` and `instance_NNN.diag.json` for each instance.
/// Instance `i` uses the same seeds as instance `i` of an experiment plan
/// with the same master seed.
pub fn cmd_generate(a: &GenerateArgs) -> Result<(), Error> {
    let seed = a.seed.or(env_seed()?).unwrap_or(0);
    let params = GenParams {
        costs: a.costs,
        budget: a.budget.map_or(BudgetMode::HalfArms, BudgetMode::Fixed),
        peak_gap: a.peak_gap,
        ..GenParams::new(a.users, a.arms, a.horizon)
    };
    fs::create_dir_all(&a.out)?;
    for i in 0..a.count as u64 {
        let g = generate_sp_instance(&params, derive(seed, &[1, i])).map_err(to_config)?;
        let (instance, perm) = if a.no_permute {
            (g.instance.clone(), ArmOrder::identity(a.arms))
        } else {
            permute_columns(&g.instance, derive(seed, &[2, i]))
        };
        let sp_order = perm.inverse();
        let diag = Diagnostics {
            peaks: g
                .peaks
                .peaks
                .iter()
                .map(|&p| sp_order.as_slice()[p])
                .collect(),
            sp_order: sp_order.into_vec(),
            permutation: perm.into_vec(),
        };
        let stem = a.out.join(format!("instance_{i:03}"));
        fs::write(
            stem.with_extension("json"),
            InstanceFile::from_instance(&instance, None).to_json() + "\n",
        )?;
        fs::write(
            stem.with_extension("diag.json"),
            serde_json::to_string_pretty(&diag)? + "\n",
        )?;
    }
    Ok(())
}

fn to_config(e: crate::sim::SimError) -> Error {
    match e {
        crate::sim::SimError::InvalidParameter(m) => Error::Config(m),
        crate::sim::SimError::Model(m) => Error::Model(m),
        other => Error::Sim(other),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub value: f64,
    pub assignment: Vec<usize>,
    pub selected: Vec<usize>,
    pub cost: u64,
    /// Order the dynamic program ran under.
    pub order: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub greedy_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub greedy_selected: Option<Vec<usize>>,
}

/// Tolerance of the `--oracle` cross-check.
pub const ORACLE_TOLERANCE: f64 = 1e-9;

pub fn cmd_solve(a: &SolveArgs) -> Result<SolveReport, Error> {
    let instance = validate_instance(&InstanceFile::read(&a.instance)?)?;
    let theta = instance.theta();
    let (sol, order) = sp_matching_any_order(theta, instance.costs(), instance.budget())?;
    let mut report = SolveReport {
        value: sol.value,
        assignment: sol.matching.assignment().to_vec(),
        selected: sol.selected(),
        cost: sol.matching.feasibility(&instance)?.cost,
        order: order.into_vec(),
        oracle_value: None,
        greedy_value: None,
        greedy_selected: None,
    };
    if a.oracle {
        let oracle = brute_force_opt(theta, instance.costs(), instance.budget())?;
        if (oracle.value - sol.value).abs() > ORACLE_TOLERANCE {
            return Err(Error::Mismatch(format!(
                "dynamic program found {} but exhaustive search found {}",
                sol.value, oracle.value
            )));
        }
        report.oracle_value = Some(oracle.value);
    }
    if a.greedy {
        let (subset, value) = greedy_max(theta, instance.costs(), instance.budget());
        report.greedy_value = Some(value);
        report.greedy_selected = Some(subset);
    }
    Ok(report)
}

/// Plan fields as they may appear in a config file or on the command line.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PartialPlan {
    users: Option<usize>,
    arms: Option<usize>,
    budget: Option<BudgetMode>,
    costs: Option<CostsMode>,
    peak_gap: Option<f64>,
    instances: Option<usize>,
    seeds: Option<usize>,
    horizons: Option<Vec<u64>>,
    algos: Option<Vec<AlgoConfig>>,
    master_seed: Option<u64>,
    grid: Option<SampleGrid>,
    fit: Option<FitRange>,
}

/// Resolves the plan of a `run` invocation: flags, then the config file,
/// then `$SPBANDIT_SEED` for the seed, then defaults (20 users, 8 arms,
/// budget `floor(K/2)`, unit costs, 5 instances x 5 seeds, horizon 1e5).
pub fn resolve_plan(a: &RunArgs) -> Result<ExperimentPlan, Error> {
    let file: PartialPlan = match &a.config {
        Some(path) => serde_json::from_str(&fs::read_to_string(path)?)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?,
        None => PartialPlan::default(),
    };
    let algos = match &a.algos {
        Some(list) => Some(
            list.split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|name| {
                    AlgoConfig::from_name(name)
                        .ok_or_else(|| Error::Config(format!("unknown learner `{name}`")))
                })
                .collect::<Result<Vec<_>, _>>()?,
        ),
        None => file.algos,
    };
    let mut algos = algos.unwrap_or_default();
    if algos.is_empty() {
        return Err(Error::Config("the algorithm list is empty".into()));
    }
    if let Some(n) = a.n_explore {
        for algo in &mut algos {
            if let AlgoConfig::Emc { n_explore } | AlgoConfig::GreedyEtc { n_explore } = algo {
                *n_explore = ExploreRounds::Fixed(n);
            }
        }
    }
    let mut fit = file.fit.unwrap_or_default();
    fit.t_min = a.t_min.or(fit.t_min);
    fit.t_max = a.t_max.or(fit.t_max);
    let plan = ExperimentPlan {
        users: a.users.or(file.users).unwrap_or(20),
        arms: a.arms.or(file.arms).unwrap_or(8),
        budget: a
            .budget
            .map(BudgetMode::Fixed)
            .or(file.budget)
            .unwrap_or_default(),
        costs: a.costs.or(file.costs).unwrap_or_default(),
        peak_gap: a.peak_gap.or(file.peak_gap),
        instances: a.instances.or(file.instances).unwrap_or(5),
        seeds: a.seeds.or(file.seeds).unwrap_or(5),
        horizons: a
            .horizons
            .clone()
            .or(file.horizons)
            .unwrap_or_else(|| vec![100_000]),
        algos,
        master_seed: match a.seed.or(file.master_seed) {
            Some(s) => s,
            None => env_seed()?.unwrap_or(0),
        },
        grid: file.grid.unwrap_or(SampleGrid::STANDARD),
        fit,
    };
    plan.validate().map_err(to_config)?;
    Ok(plan)
}

/// Writes `config.json` (the resolved plan), `results.csv` and
/// `slopes.json` into the output directory.
pub fn cmd_run(a: &RunArgs) -> Result<(), Error> {
    let plan = resolve_plan(a)?;
    fs::create_dir_all(&a.out)?;
    fs::write(
        a.out.join("config.json"),
        serde_json::to_string_pretty(&plan)? + "\n",
    )?;
    let records = simulate(&plan, a.jobs).map_err(to_config)?;
    let file = fs::File::create(a.out.join("results.csv"))?;
    write_csv(&records, std::io::BufWriter::new(file))?;
    let slopes = summarize(&curves_of(&records), plan.fit);
    fs::write(a.out.join("slopes.json"), slopes_json(&slopes) + "\n")?;
    Ok(())
}

pub fn cmd_slope(a: &SlopeArgs) -> Result<(), Error> {
    let curves = read_curves(fs::File::open(&a.csv)?)?;
    let range = FitRange {
        t_min: a.t_min,
        t_max: a.t_max,
    };
    emit(a.out.as_deref(), &slopes_json(&summarize(&curves, range)))
}
