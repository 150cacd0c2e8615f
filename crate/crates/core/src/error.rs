use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid fock cutoff {0}: at least 2 levels are required")]
    InvalidCutoff(usize),
    #[error("invalid slot {slot} for a layout with {n_qubits} qubit(s)")]
    InvalidSlot { slot: String, n_qubits: usize },
    #[error("embed: operator is {got}x{got}, slot {slot} expects {expected}x{expected}")]
    EmbedMismatch { slot: String, expected: usize, got: usize },
    #[error("liouvillian build: {0}")]
    Build(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("integration drift {drift:.3e} exceeds tolerance; retry with step <= {suggested_step:.3e}")]
    Accuracy { drift: f64, suggested_step: f64 },
    #[error("steady state is not unique (kernel conditioning {ratio:.3e})")]
    NonUniqueSteadyState { ratio: f64 },
    #[error("steady-state residual {0:.3e} above tolerance")]
    SteadyStateResidual(f64),
    #[error("purcell factor undefined for gamma = 0")]
    UndefinedPurcell,
    #[error("{0} diverges at delta_phi = pi")]
    Divergence(&'static str),
    #[error("correlation tail {tail:.3e} exceeds 1e-8; extend the tau window")]
    Truncation { tail: f64 },
    #[error("fit: {0}")]
    Fit(String),
    #[error("no bound state: 2*sqrt(2)*g = {lhs:.6} < kappa = {kappa:.6}")]
    NoBic { lhs: f64, kappa: f64 },
    #[error("cooperativity undefined for gamma = 0")]
    UndefinedCooperativity,
    #[error("decay rate undefined: nonpositive value {0:.3e} in window")]
    RateUndefined(f64),
    #[error("photon statistics undefined: n = {0:.3e}")]
    StatisticsUndefined(f64),
    #[error("input: {0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, Error>;
