use thiserror::Error;

use crate::netmodel::BusId;

#[derive(Debug, Error)]
pub enum NetError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid network: {0}")]
    Validation(String),
    #[error("unknown bus {0}")]
    UnknownBus(BusId),
    #[error("data file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Error)]
pub enum PfError {
    #[error("power flow did not converge after {iterations} iterations (mismatch {mismatch:.3e} p.u.)")]
    NonConvergence { iterations: usize, mismatch: f64 },
    #[error("singular Jacobian at iteration {0}")]
    SingularJacobian(usize),
    #[error("dimension mismatch: expected {expected} buses, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("generator reactive limits are not supported")]
    QLimitsUnsupported,
}

#[derive(Debug, Error)]
pub enum CpfError {
    #[error("base case is infeasible: {0}")]
    BaseCase(#[source] PfError),
    #[error("continuation step fell below {min_step:e} before leaving the base case")]
    StepUnderflow { min_step: f64 },
    #[error("singular augmented Jacobian while computing the tangent")]
    SingularTangent,
}

#[derive(Debug, Error)]
pub enum MeasureError {
    #[error("unknown bus {0}")]
    UnknownBus(BusId),
    #[error("monitored load bus {0} carries no base load")]
    NoLoad(BusId),
    #[error("noise sigma must be non-negative, got {0}")]
    NegativeSigma(f64),
}

#[derive(Debug, Error)]
pub enum EstimateError {
    #[error("insufficient load change between instants (|dI| = {delta:.3e} p.u.)")]
    InsufficientLoadChange { delta: f64 },
    #[error("stacked system is rank deficient (condition {condition:.3e})")]
    RankDeficient { condition: f64 },
    #[error("need at least 2 snapshots, got {0}")]
    TooFewSnapshots(usize),
    #[error("snapshot has zero load current")]
    ZeroCurrent,
}

#[derive(Debug, Error)]
pub enum StabilityError {
    #[error("load impedance is zero")]
    ZeroLoadImpedance,
    #[error("TDDI undefined: |z_t| = {z_t:e}, |z_d| = {z_d:e}")]
    UndefinedIndex { z_t: f64, z_d: f64 },
    #[error("no stability records to choose from")]
    Empty,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario {scenario}: {source}")]
    Network {
        scenario: String,
        #[source]
        source: NetError,
    },
    #[error("scenario {scenario}: {source}")]
    Cpf {
        scenario: String,
        #[source]
        source: CpfError,
    },
    #[error("scenario {scenario}: {source}")]
    Measure {
        scenario: String,
        #[source]
        source: MeasureError,
    },
    #[error("scenario {scenario}: {source}")]
    Stability {
        scenario: String,
        #[source]
        source: StabilityError,
    },
    #[error("scenario {scenario}: invalid configuration: {message}")]
    Config { scenario: String, message: String },
    #[error("bus {0} is not monitored in this scenario")]
    Unmonitored(String),
}

impl ScenarioError {
    /// True for failures caused by bad input rather than numerics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            ScenarioError::Network { .. }
                | ScenarioError::Measure { .. }
                | ScenarioError::Config { .. }
                | ScenarioError::Unmonitored(_)
        )
    }
}
