//! Numerical tolerances used across the crate.
//!
//! One table, read once. `GME_LAB_TOL_SCALE` multiplies every entry.

use std::sync::OnceLock;

pub const SCALE_ENV: &str = "GME_LAB_TOL_SCALE";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// max |M_ij - conj(M_ji)| for a matrix treated as Hermitian
    pub hermitian: f64,
    /// | <psi|psi> - 1 |
    pub normalization: f64,
    /// | tr(rho) - 1 |
    pub trace: f64,
    /// smallest admissible density-matrix eigenvalue is -psd
    pub psd: f64,
    /// imaginary part of an expectation value that may be discarded
    pub imag_residue: f64,
    /// eigen-residual relative to the Frobenius norm
    pub eig_residual: f64,
    /// || P+ + P- - I ||
    pub povm_completeness: f64,
    /// smallest admissible POVM eigenvalue is -povm_psd
    pub povm_psd: f64,
    /// sum of a conditional distribution
    pub probability: f64,
    /// reconstructed POVM eigenvalue below -tomo_negative is an error, above is clipped
    pub tomo_negative: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermitian: 1e-12,
            normalization: 1e-12,
            trace: 1e-12,
            psd: 1e-10,
            imag_residue: 1e-10,
            eig_residual: 1e-9,
            povm_completeness: 1e-10,
            povm_psd: 1e-12,
            probability: 1e-9,
            tomo_negative: 2e-2,
        }
    }
}

impl Tolerances {
    pub fn scaled(self, k: f64) -> Self {
        Self {
            hermitian: self.hermitian * k,
            normalization: self.normalization * k,
            trace: self.trace * k,
            psd: self.psd * k,
            imag_residue: self.imag_residue * k,
            eig_residual: self.eig_residual * k,
            povm_completeness: self.povm_completeness * k,
            povm_psd: self.povm_psd * k,
            probability: self.probability * k,
            tomo_negative: self.tomo_negative * k,
        }
    }

    /// Defaults scaled by the environment factor, if set and positive.
    pub fn from_env() -> Self {
        Self::default().scaled(env_scale())
    }
}

/// The environment factor, 1 when unset or not a positive number.
pub fn env_scale() -> f64 {
    std::env::var(SCALE_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<f64>().ok())
        .filter(|k| k.is_finite() && *k > 0.0)
        .unwrap_or(1.0)
}

static ACTIVE: OnceLock<Tolerances> = OnceLock::new();

/// The active table. First call freezes it.
pub fn current() -> &'static Tolerances {
    ACTIVE.get_or_init(Tolerances::from_env)
}

/// Replace the table before first use. Returns the rejected table if it was already frozen.
pub fn install(t: Tolerances) -> Result<(), Tolerances> {
    ACTIVE.set(t)
}
