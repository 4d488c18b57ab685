//! Budgeted matching of users to arms under single-peaked preferences.
//!
//! * [`model`]: preference matrices, instances, matchings and feasibility.
//! * [`pqtree`]: PQ-trees for consecutive-ones constraints over arms.
//! * [`sp`]: single-peakedness checks, order extraction and projection.
//! * [`offline`]: the single-peaked dynamic program, exhaustive search and
//!   Greedy+Max.
//! * [`bandit`]: online learners under semi-bandit feedback.
//! * [`sim`]: instance generation, reward environments, experiment plans and
//!   slope fitting.
//! * [`cli`]: the `spbandit` command line.
//!
//! All user and arm indices are 0-based.

pub mod bandit;
pub mod cli;
pub mod fixtures;
pub mod model;
pub mod offline;
pub mod pqtree;
pub mod sim;
pub mod sp;

use thiserror::Error;

pub use model::{ArmOrder, Instance, InstanceFile, Matching, PreferenceMatrix};

/// Error type of the file-facing and command-line layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration: {0}")]
    Config(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Model(#[from] model::ModelError),
    #[error(transparent)]
    Structure(#[from] sp::SpError),
    #[error(transparent)]
    Offline(#[from] offline::OfflineError),
    #[error(transparent)]
    Bandit(#[from] bandit::BanditError),
    #[error(transparent)]
    Sim(#[from] sim::SimError),
    #[error("cross-check failed: {0}")]
    Mismatch(String),
}

impl Error {
    /// Short machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Config(_) | Error::Json(_) | Error::Model(_) => "config",
            Error::Io(_) | Error::Csv(_) => "io",
            Error::Structure(sp::SpError::ExtractFailed { .. })
            | Error::Offline(offline::OfflineError::NotPsp(sp::SpError::ExtractFailed {
                ..
            })) => "not_sp",
            Error::Mismatch(_) => "oracle_mismatch",
            Error::Structure(_) | Error::Offline(_) | Error::Bandit(_) | Error::Sim(_) => "solver",
        }
    }

    /// Process exit status: 2 configuration, 3 i/o, 4 solver.
    pub fn exit_code(&self) -> i32 {
        match self.code() {
            "config" => 2,
            "io" => 3,
            _ => 4,
        }
    }
}
