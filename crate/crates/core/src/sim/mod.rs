//! Instance generation, reward environments, experiment plans and slope
//! fitting.

mod env;
mod generate;
mod plan;
pub mod rng;
mod slope;

use thiserror::Error;

pub use env::{optimum_value, BernoulliEnv, DeterministicEnv};
pub use generate::{
    generate_sp_instance, permute_columns, BudgetMode, CostsMode, GenParams, Generated,
};
pub use plan::{
    curves_of, read_curves, run_learner, simulate, slopes_json, summarize, write_csv, Curve,
    ExperimentPlan, FitRange, RunRecord, SlopeKind, SlopeRecord, CSV_COLUMNS, FIT_THINNING,
};
pub use slope::{fit_slope, thin_log_uniform, upper_half, SlopeFit};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(
        "only {got} usable points in [{t_min}, {t_max}]; at least 3 with distinct t are needed"
    )]
    InsufficientPoints { got: usize, t_min: f64, t_max: f64 },
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
    #[error(transparent)]
    Offline(#[from] crate::offline::OfflineError),
}
