//! Online learners for budgeted matching with semi-bandit feedback.
//!
//! Every learner plays against an [`Environment`] for the instance horizon
//! and returns a [`RegretTrace`]. Regret is accounted in expectation: the
//! instantaneous regret of round `t` is `alpha * V* - V(pi_t; theta)` using
//! the true means, so traces carry no reward noise.

mod cucb;
mod etc;
mod mvm;
pub mod stats;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Instance, Matching};
use crate::offline::OfflineError;
use crate::sp::SpError;

pub use cucb::run_cucb_bruteforce;
pub use etc::{emc_decide, run_emc, run_greedy_etc, EmcDecision, ExploreRounds};
pub use mvm::{run_mvm, run_peak_id_mvm, MvmOptions};
pub use stats::{maximal_matrix, BanditStats, ConfidenceBounds};

/// Arm cap for the exhaustive per-round optimizer of the CUCB learner.
pub const CUCB_MAX_ARMS: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BanditError {
    #[error(transparent)]
    Offline(#[from] OfflineError),
    #[error(transparent)]
    Structure(#[from] SpError),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("{arms} arms exceed the learner cap of {cap}")]
    TooManyArms { arms: usize, cap: usize },
}

/// Source of stochastic rewards for one run.
pub trait Environment {
    fn instance(&self) -> &Instance;

    /// `max_pi V(pi; theta)` over budget-feasible matchings.
    fn optimum(&self) -> f64;

    /// Draws the reward of every matched pair in round `round` (0-based)
    /// into `rewards`, one entry per user.
    fn pull(&mut self, round: u64, matching: &Matching, rewards: &mut [f64]);
}

/// Which rounds of a run are stored in its trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SampleGrid {
    Every,
    /// Every round up to `dense_until`; afterwards a round `t` is stored when
    /// `t >= next`, then `next = ceil(t * ratio)`. The final round is always
    /// stored.
    Geometric {
        dense_until: u64,
        ratio: f64,
    },
}

impl SampleGrid {
    pub const STANDARD: SampleGrid = SampleGrid::Geometric {
        dense_until: 1000,
        ratio: 1.05,
    };

    /// Rounds (1-based) that would be stored for a horizon.
    pub fn rounds(&self, horizon: u64) -> Vec<u64> {
        let mut sampler = Sampler::new(*self);
        (1..=horizon)
            .filter(|&t| sampler.keep(t, horizon))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Sampler {
    grid: SampleGrid,
    next: u64,
}

impl Sampler {
    fn new(grid: SampleGrid) -> Self {
        Self { grid, next: 0 }
    }

    fn keep(&mut self, t: u64, horizon: u64) -> bool {
        match self.grid {
            SampleGrid::Every => true,
            SampleGrid::Geometric { dense_until, ratio } => {
                if t <= dense_until || t == horizon {
                    return true;
                }
                if t >= self.next {
                    self.next = ((t as f64) * ratio).ceil() as u64;
                    return true;
                }
                false
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    /// 1-based round.
    pub t: u64,
    pub inst_regret: f64,
    pub cum_regret: f64,
}

/// Diagnostic conditions raised during a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flag {
    /// Order extraction failed; the learner committed using the identity order.
    ExtractFailed,
    /// The horizon ended before every peak was identified.
    PhaseOneExhausted,
    /// The supplied order/peaks are not a single-peaked structure of the
    /// true matrix.
    StructureMismatch,
    /// The automatic exploration length was cut to fit the horizon.
    ExploreCapped,
    /// Explore-then-commit wrapper around Greedy+Max with a fixed schedule,
    /// not the full combinatorial ETC framework.
    SimplifiedEtc,
    /// An optimism check failed while the true means were inside the bounds.
    OptimismViolated,
}

impl Flag {
    pub fn as_str(self) -> &'static str {
        match self {
            Flag::ExtractFailed => "extract_failed",
            Flag::PhaseOneExhausted => "phase_one_exhausted",
            Flag::StructureMismatch => "structure_mismatch",
            Flag::ExploreCapped => "explore_capped",
            Flag::SimplifiedEtc => "simplified_etc",
            Flag::OptimismViolated => "optimism_violated",
        }
    }
}

/// Extra facts a learner reports about its run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub explore_rounds_per_arm: Option<u64>,
    pub extracted_order: Option<Vec<usize>>,
    pub committed_arms: Option<Vec<usize>>,
    /// Identified peaks as arm indices, by user.
    pub identified_peaks: Option<Vec<usize>>,
    /// Round (1-based) after which every peak was identified.
    pub identified_at: Option<u64>,
    /// Rounds where the true means were inside the bounds and the optimism
    /// inequality was checked.
    pub optimism_checks: u64,
    pub optimism_violations: u64,
}

/// Expected-regret record of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretTrace {
    pub optimum: f64,
    pub alpha: f64,
    pub horizon: u64,
    pub points: Vec<TracePoint>,
    pub flags: Vec<Flag>,
    pub info: RunInfo,
    rounds: u64,
    cum: f64,
    sampler: Sampler,
}

impl RegretTrace {
    pub fn new(optimum: f64, alpha: f64, horizon: u64, grid: SampleGrid) -> Self {
        Self {
            optimum,
            alpha,
            horizon,
            points: Vec::new(),
            flags: Vec::new(),
            info: RunInfo::default(),
            rounds: 0,
            cum: 0.0,
            sampler: Sampler::new(grid),
        }
    }

    /// Accounts one round in which a matching of expected value `value` was
    /// played.
    pub fn record_value(&mut self, value: f64) {
        let inst = self.alpha * self.optimum - value;
        self.rounds += 1;
        self.cum += inst;
        if self.sampler.keep(self.rounds, self.horizon) {
            self.points.push(TracePoint {
                t: self.rounds,
                inst_regret: inst,
                cum_regret: self.cum,
            });
        }
    }

    /// Accounts `n` identical rounds.
    pub fn record_repeated(&mut self, value: f64, n: u64) {
        for _ in 0..n {
            self.record_value(value);
        }
    }

    pub fn flag(&mut self, flag: Flag) {
        if !self.flags.contains(&flag) {
            self.flags.push(flag);
            self.flags.sort();
        }
    }

    pub fn has_flag(&self, flag: Flag) -> bool {
        self.flags.contains(&flag)
    }

    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    pub fn final_regret(&self) -> f64 {
        self.cum
    }

    pub fn flags_string(&self) -> String {
        self.flags
            .iter()
            .map(|f| f.as_str())
            .collect::<Vec<_>>()
            .join("|")
    }
}

/// Serializable learner selection, `{"algo": .., "params": {..}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algo", content = "params", rename_all = "snake_case")]
pub enum AlgoConfig {
    Emc {
        #[serde(default)]
        n_explore: ExploreRounds,
    },
    Mvm {
        #[serde(default)]
        check_optimism: bool,
    },
    PeakIdMvm {},
    Cucb {},
    GreedyEtc {
        #[serde(default)]
        n_explore: ExploreRounds,
    },
}

impl AlgoConfig {
    pub fn name(&self) -> &'static str {
        match self {
            AlgoConfig::Emc { .. } => "emc",
            AlgoConfig::Mvm { .. } => "mvm",
            AlgoConfig::PeakIdMvm {} => "peak_id_mvm",
            AlgoConfig::Cucb {} => "cucb",
            AlgoConfig::GreedyEtc { .. } => "greedy_etc",
        }
    }

    /// Default configuration for a learner name.
    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "emc" => AlgoConfig::Emc {
                n_explore: ExploreRounds::Auto,
            },
            "mvm" => AlgoConfig::Mvm {
                check_optimism: false,
            },
            "peak_id_mvm" => AlgoConfig::PeakIdMvm {},
            "cucb" => AlgoConfig::Cucb {},
            "greedy_etc" => AlgoConfig::GreedyEtc {
                n_explore: ExploreRounds::Auto,
            },
            _ => return None,
        })
    }

    /// Whether the learner is handed the true single-peaked order (and
    /// peaks) rather than a column-shuffled instance.
    pub fn knows_order(&self) -> bool {
        matches!(self, AlgoConfig::Mvm { .. } | AlgoConfig::PeakIdMvm {})
    }
}

/// Expected value of `matching` under the environment's true means.
pub(crate) fn true_value(env: &dyn Environment, matching: &Matching) -> f64 {
    matching.value_unchecked(env.instance().theta())
}
