use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("inverse transform left an imaginary residue of {residue:e}")]
    NonHermitianInput { residue: f64 },

    #[error("exponent {name} = {value} outside its admissible range {range}")]
    InvalidExponent {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("unsupported exponent p = {0} (only p = 2 and p = 4 are checked)")]
    UnsupportedExponent(f64),

    #[error("mollifier radius {epsilon} is not resolved by grid spacing {spacing} (need epsilon >= 2*spacing)")]
    UnresolvedKernel { epsilon: f64, spacing: f64 },

    #[error("invalid mollifier: {0}")]
    InvalidKernel(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("degenerate denominator {0:e}")]
    DegenerateDenominator(f64),

    #[error("solution blew up at t = {t}: {reason}")]
    BlowUp { t: f64, reason: String },

    #[error("Picard iteration did not converge after {} outer steps (last delta {:e})", .deltas.len(), .deltas.last().copied().unwrap_or(f64::NAN))]
    NoConvergence { deltas: Vec<f64> },

    #[error("invalid generator: {0}")]
    InvalidGenerator(String),

    #[error("config parse error{}: {message}", .line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Parse { line: Option<usize>, message: String },

    #[error("config validation error: {0}")]
    Validation(String),

    #[error("snapshot format error: {0}")]
    Snapshot(String),

    #[error("property suite reported {0} failing checks")]
    PropertyFailure(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit status used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } | Error::Validation(_) => 2,
            Error::NoConvergence { .. } => 3,
            Error::BlowUp { .. } => 4,
            Error::PropertyFailure(_) => 5,
            _ => 1,
        }
    }
}
