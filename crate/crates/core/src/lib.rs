//! Multi-pass streaming local search for submodular maximization under
//! p-matchoid constraints.
//!
//! The monotone driver ([`multipass_run`]) certifies an approximation factor
//! after every pass. The randomized driver ([`multipass_randomized`]) handles
//! non-negative objectives that need not be monotone.

pub mod baselines;
pub mod error;
pub mod experiment;
pub mod generate;
pub mod instance;
pub mod matroid;
pub mod multipass;
pub mod oracle;
pub mod pass;
pub mod randomized;
pub mod state;

pub use baselines::{brute_force_opt, offline_greedy, ExactResult};
pub use error::{Error, Result};
pub use instance::Instance;
pub use matroid::{Matroid, MatroidKind, MatroidSpec, PMatchoid};
pub use multipass::{multipass_run, GuaranteeCertificate, MultipassOptions, MultipassOutcome, Schedule, ScheduleKind};
pub use oracle::{ElementId, Objective, SubmodularOracle};
pub use pass::{streaming_pass, PassOptions, PassParams, PassResult};
pub use randomized::{
    guess_grid, multipass_randomized, offline_solve, randomized_pass, GuessGrid, OfflineMode, RandomizedConfig,
    RandomizedOutcome,
};
pub use state::SolutionState;
