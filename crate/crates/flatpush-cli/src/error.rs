//! Error type carrying the exit-code discipline: 2 for bad input or
//! domain errors, 3 for solver failures and infeasibility, 4 for
//! numeric breakdown.

use std::fmt;

use flatpush::flatness::FlatnessError;
use flatpush::geometry::GeometryError;
use flatpush::model::ModelError;
use flatpush::planner::PlannerError;
use flatpush::splines::SplineError;
use flatpush::timelaw::TimelawError;

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments, unreadable files, or out-of-domain configuration.
    Input(String),
    /// A well-posed problem the solvers could not close.
    Solver(String),
    /// Breakdown inside the numerics.
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) | CliError::Solver(m) | CliError::Numeric(m) => f.write_str(m),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::MomentFit(_) => CliError::Numeric(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<SplineError> for CliError {
    fn from(e: SplineError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<TimelawError> for CliError {
    fn from(e: TimelawError) -> Self {
        match e {
            TimelawError::SingularPath { .. } => CliError::Numeric(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<FlatnessError> for CliError {
    fn from(e: FlatnessError) -> Self {
        CliError::Numeric(e.to_string())
    }
}

impl From<PlannerError> for CliError {
    fn from(e: PlannerError) -> Self {
        match e {
            PlannerError::Options(_) | PlannerError::Setup(_) | PlannerError::Spline(_) => {
                CliError::Input(e.to_string())
            }
            PlannerError::Flatness(_) => CliError::Numeric(e.to_string()),
            PlannerError::Solver(_)
            | PlannerError::Stage { .. }
            | PlannerError::Infeasible(_)
            | PlannerError::Inconsistent { .. } => CliError::Solver(e.to_string()),
        }
    }
}
