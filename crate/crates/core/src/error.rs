use thiserror::Error;

/// Errors raised by the numerics.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("operand has nonzero modes above the dealiasing cutoff {cutoff} (max amplitude {amplitude:.3e})")]
    BandwidthExceeded { cutoff: usize, amplitude: f64 },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("rank mismatch: {0}")]
    RankMismatch(String),
    #[error("negative heat time s = {0}")]
    NegativeHeatTime(f64),
    #[error("zero field")]
    ZeroField,
    #[error("finite-difference step {step} too large for s = {s} (need step <= s/10)")]
    StepTooLarge { step: f64, s: f64 },
    #[error("schedule too coarse: {per_decade:.2} points per decade, need at least 8")]
    ScheduleTooCoarse { per_decade: f64 },
    #[error("curve too flat: fit window spans {decades:.2} decades, need at least 1")]
    CurveTooFlat { decades: f64 },
    #[error("operation not supported on the {0} backend")]
    BackendUnsupported(&'static str),
    #[error("empty field set")]
    EmptySet,
    #[error("quadrature diverged: residual {coarse:.3e} -> {fine:.3e} under node doubling")]
    QuadratureDiverged { coarse: f64, fine: f64 },
    #[error("fit range too small: {0}")]
    FitRangeTooSmall(String),
    #[error("CFL violation: max|v| dt N / 2pi = {0:.3}")]
    CflViolation(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("malformed field file: {0}")]
    Format(String),
    #[error("report serialization: {0}")]
    Serialization(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
