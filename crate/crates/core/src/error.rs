use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GmeError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("matrix is not Hermitian (defect {defect:.3e})")]
    NotHermitian { defect: f64 },
    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {residual:.3e})")]
    NoConvergence { sweeps: usize, residual: f64 },
    #[error("parameter `{name}` = {value} outside [{min}, {max}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("POVM elements do not sum to identity (defect {defect:.3e})")]
    PovmIncomplete { defect: f64 },
    #[error("singular tomography inversion: {0}")]
    SingularInversion(String),
    #[error("missing correlator record for term {0}")]
    MissingRecord(String),
    #[error("duplicate correlator record for term {0}")]
    DuplicateRecord(String),
    #[error("setting {0} has zero total counts")]
    ZeroCounts(String),
    #[error("no crossing in [0, 1]: {0}")]
    NoCrossing(String),
    #[error("observed value {value} not achievable for the given tilts (range [{min}, {max}])")]
    Infeasible { value: f64, min: f64, max: f64 },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
}

pub type Result<T> = std::result::Result<T, GmeError>;

pub(crate) fn check_range(name: &'static str, value: f64, min: f64, max: f64) -> Result<()> {
    if value.is_finite() && value >= min && value <= max {
        Ok(())
    } else {
        Err(GmeError::OutOfRange {
            name,
            value,
            min,
            max,
        })
    }
}
