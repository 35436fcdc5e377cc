//! Scenario-based planning model for an agrochemical supply chain with a
//! loss-variance cap, solved directly as an MIQCP or as a sequence of MILPs
//! with perspective cuts.

pub mod audit;
pub mod error;
pub mod formulation;
pub mod instance;
pub mod oracle;
pub mod pipeline;
pub mod risk;
pub mod solver;

pub use error::{Error, Result};
pub use formulation::{build_model, BuildOptions, ModelIR};
pub use instance::{case_study_instance, load_instance, Instance};
pub use pipeline::{run_mode, Mode, ModeRun, RunOptions};
pub use solver::{Solution, SolveStatus, SolverBackend, SolverConfig};
