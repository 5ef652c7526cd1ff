//! Error types shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CorrError>;

#[derive(Debug, Error)]
pub enum CorrError {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unknown species '{0}'")]
    UnknownSpecies(String),

    #[error("unsupported lattice: {0}")]
    UnsupportedLattice(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("precision budget infeasible: {0}")]
    BudgetInfeasible(String),

    #[error("explicit coefficient mode too large: N = {n} exceeds guard {guard} (use the extrapolation path)")]
    ExplicitModeTooLarge { n: u64, guard: u64 },

    #[error("degenerate fit: {0}")]
    FitDegenerate(String),

    #[error("topology error: {0}")]
    Topology(String),

    #[error("absorbing state: all outgoing rates are zero at site {0}")]
    AbsorbingState(usize),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}
