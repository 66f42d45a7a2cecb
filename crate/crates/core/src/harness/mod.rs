//! Scenario configuration, the task pipeline, inequality verification and
//! report emission.

mod config;
mod pipeline;
mod report;
pub mod verify;

pub use config::{
    BoundsConfig, CheegerConfig, CoareaConfig, FamilyTag, ManifoldSpec, MeasureConfig, MetricSpec, NeckProfile, Period,
    Scenario,
    Task, VerifyConfig, WaveSpec,
};
pub use pipeline::{run_scenario, sweep, GroupSummary, Outcome, Overrides, SweepEntry, SweepSummary};
pub use report::{
    emit, validate_json, write_runtime, BoundReport, CheegerSummary, EigenSummary, Format, IdentitySummary,
    Quantities, Refusal, RicciRange, Runtime, SigmaStats, SolveRecord, Status, SCHEMA_VERSION, TOOL_VERSION,
};
pub use verify::{Hardness, InequalityRecord, Operand, Side};

use thiserror::Error;

use crate::error::FinslerError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;
pub const EXIT_VIOLATION: i32 = 4;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] FinslerError),
    #[error("i/o error: {0}")]
    Io(String),
}

impl HarnessError {
    /// A kernel error caused by bad input, reported as a configuration error.
    pub fn invalid(e: FinslerError) -> Self {
        HarnessError::Config(e.to_string())
    }

    pub fn io(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        HarnessError::Io(format!("{}: {e}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => EXIT_CONFIG,
            _ => EXIT_RUNTIME,
        }
    }
}
