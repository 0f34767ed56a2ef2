use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the support or domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid waveform definition: {0}")]
    InvalidSpec(String),

    /// The autocorrelation decays monotonically, so no mainlobe null exists.
    #[error("autocorrelation has no local minimum for positive delays")]
    NoMainlobeNull,

    /// The EOA quadratic form is not positive definite.
    #[error("degenerate ellipse: beta_rms^2 * tau_rms^2 - rho^2 = {0:e}")]
    DegenerateEllipse(f64),

    #[error("infeasible constraint: {0}")]
    InfeasibleConstraint(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
