use thiserror::Error;

/// Errors produced by the trajectory pipeline, IDM physics, and simulators.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),

    #[error("trajectories have mismatched dt: {0} vs {1}")]
    MismatchedDt(f64, f64),

    #[error("trajectories have mismatched lengths: {0} vs {1}")]
    MismatchedLength(usize, usize),

    #[error("split ratios {0:?} do not sum to 1")]
    InvalidRatios([f64; 3]),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("non-positive gap {gap} at sample {index} (collision state)")]
    CollisionState { index: usize, gap: f64 },

    #[error("closed-loop rollout collapsed at step {step} (gap {gap})")]
    RolloutCollapse { step: usize, gap: f64 },

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("infeasible scenario: {0}")]
    InfeasibleScenario(String),

    #[error("parse error at line {line}: {message}")]
    CsvParse { line: usize, message: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;
