use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("fields live on different domains")]
    DomainMismatch,
    #[error("expected {expected} samples, got {got}")]
    Length { expected: usize, got: usize },
    #[error("antiderivative needs a mean-zero field, |mean| = {mean:e}")]
    NonZeroMean { mean: f64 },
    #[error("near-cusp state: min |1 + W_a| = {min:e} at alpha = {at:.6}")]
    Cusp { min: f64, at: f64 },
    #[error("Taylor sign fails: min (g + a) = {min:e}")]
    TaylorSign { min: f64 },
    #[error("holomorphy defect {defect:e} exceeds tolerance {tol:e}")]
    Holomorphy { defect: f64, tol: f64 },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("time step {dt:e} exceeds the CFL bound {limit:e}")]
    Cfl { dt: f64, limit: f64 },
    #[error("degenerate frequency sample ({xi}, {eta})")]
    DegenerateSample { xi: f64, eta: f64 },
    #[error("fit failed: {0}")]
    Fit(String),
    #[error("snapshot: {0}")]
    Snapshot(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
