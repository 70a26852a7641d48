//! Noise thresholds: the visibility p below which a witness stops detecting GME.

use std::fmt;
use std::str::FromStr;

use crate::bounds::{mermin_bisep_bound, mermin_di_bound, quantum_bound, stabilizer_bisep_bound_numeric, BoundResult, THETA_GRID};
use crate::error::{GmeError, Result};
use crate::inm::{i_nm_dephased, optimize_settings_dephased, InmSettings, SETTINGS_RESTARTS};
use crate::linalg::expectation;
use crate::measurement::{tilt_coefficients, Axis};
use crate::optimize::bisect;
use crate::states::{apply_noise, ghz_state, NoiseKind, NoiseModel, Sign};
use crate::witness::{LocalObservables, WitnessKind, WitnessSpec};

pub const THRESHOLD_TOL: f64 = 1e-9;
/// Printed worst-case forms and the direct-trace oracle must agree to this.
pub const ORACLE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasurementCase {
    /// Observables exactly ideal; only the bound is corrected.
    BestCase,
    /// Observables tilted as far as the budget allows, in the worst direction.
    WorstCase,
}

impl MeasurementCase {
    pub fn label(self) -> &'static str {
        match self {
            MeasurementCase::BestCase => "best-case",
            MeasurementCase::WorstCase => "worst-case",
        }
    }
}

impl fmt::Display for MeasurementCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for MeasurementCase {
    type Err = GmeError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "best" | "best-case" => Ok(MeasurementCase::BestCase),
            "worst" | "worst-case" => Ok(MeasurementCase::WorstCase),
            other => Err(GmeError::Invalid(format!("unknown measurement case `{other}`"))),
        }
    }
}

/// Corrected biseparable bound used for thresholds.
pub fn corrected_bound(kind: WitnessKind, eps: f64) -> Result<BoundResult> {
    match kind {
        WitnessKind::Mermin(4) => mermin_bisep_bound(4, eps),
        WitnessKind::Stabilizer(4) => stabilizer_bisep_bound_numeric(4, eps, THETA_GRID),
        other => Err(GmeError::Invalid(format!(
            "thresholds are defined for mermin4 and stabilizer4, not {other}"
        ))),
    }
}

#[derive(Debug, Clone)]
pub struct ThresholdQuery {
    pub witness: WitnessKind,
    pub eps: f64,
    pub noise: NoiseKind,
    pub case: MeasurementCase,
    pub bound: BoundResult,
}

impl ThresholdQuery {
    pub fn new(witness: WitnessKind, eps: f64, noise: NoiseKind, case: MeasurementCase) -> Result<Self> {
        let bound = corrected_bound(witness, eps)?;
        Ok(Self {
            witness,
            eps,
            noise,
            case,
            bound,
        })
    }
}

/// Worst admissible observables at imprecision eps, q = 1 - 2 eps, s = sqrt(1 - q^2).
/// Mermin: every party rotates X and Y by the same angle in the XY plane.
/// Stabilizer: X leans to Y, and Z_j leans toward azimuth pi/4 in the XY plane.
pub fn worst_case_observables(kind: WitnessKind, eps: f64) -> Result<LocalObservables> {
    let n = kind.n();
    let (q, s) = tilt_coefficients(eps)?;
    let mut obs = LocalObservables::ideal(n);
    match kind {
        WitnessKind::Mermin(_) => {
            for j in 0..n {
                obs.set(j, Axis::X, [q, s, 0.0]);
                obs.set(j, Axis::Y, [-s, q, 0.0]);
            }
        }
        WitnessKind::Stabilizer(_) => {
            let a = std::f64::consts::PI / n as f64;
            for j in 0..n {
                obs.set(j, Axis::X, [q, s, 0.0]);
                obs.set(j, Axis::Z, [s * a.cos(), s * a.sin(), q]);
            }
        }
        other => {
            return Err(GmeError::Invalid(format!("no worst-case configuration for {other}")));
        }
    }
    Ok(obs)
}

fn case_spec(kind: WitnessKind, eps: f64, case: MeasurementCase) -> Result<WitnessSpec> {
    match case {
        MeasurementCase::BestCase => kind.ideal(),
        MeasurementCase::WorstCase => kind.build(&worst_case_observables(kind, eps)?),
    }
}

/// Witness expectation on the noisy GHZ state, by direct trace.
pub fn noisy_value(spec: &WitnessSpec, noise: NoiseKind, p: f64) -> Result<f64> {
    let rho = apply_noise(&ghz_state(spec.n, Sign::Plus)?, NoiseModel::new(noise, p)?)?;
    expectation(&spec.matrix, &rho)
}

/// Closed-form thresholds as printed, with the dephasing-Mermin best case solved from 16p - 8 = bound.
pub fn printed_threshold(kind: WitnessKind, noise: NoiseKind, case: MeasurementCase, eps: f64, bound: f64) -> Result<f64> {
    let (q, _) = tilt_coefficients(eps)?;
    let (q2, q4) = (q * q, q.powi(4));
    let f = 1.0 - 8.0 * q2 + 8.0 * q4;
    let p = match (kind, noise, case) {
        (WitnessKind::Mermin(4), NoiseKind::Depolarizing, MeasurementCase::BestCase) => bound / 8.0,
        (WitnessKind::Mermin(4), NoiseKind::Dephasing, MeasurementCase::BestCase) => (bound + 8.0) / 16.0,
        (WitnessKind::Stabilizer(4), NoiseKind::Depolarizing, MeasurementCase::BestCase) => bound / 11.0,
        (WitnessKind::Stabilizer(4), NoiseKind::Dephasing, MeasurementCase::BestCase) => (bound - 3.0) / 8.0,
        (WitnessKind::Mermin(4), NoiseKind::Depolarizing, MeasurementCase::WorstCase) => bound / (8.0 * f),
        (WitnessKind::Mermin(4), NoiseKind::Dephasing, MeasurementCase::WorstCase) => bound / (16.0 * f) + 0.5,
        (WitnessKind::Stabilizer(4), NoiseKind::Depolarizing, MeasurementCase::WorstCase) => {
            bound / (3.0 - 24.0 * q2 + 32.0 * q4)
        }
        (WitnessKind::Stabilizer(4), NoiseKind::Dephasing, MeasurementCase::WorstCase) => {
            (bound + 3.0 * (1.0 - 12.0 * q2 + 10.0 * q4)) / (2.0 * (3.0 - 30.0 * q2 + 31.0 * q4))
        }
        (other, _, _) => {
            return Err(GmeError::Invalid(format!("no closed-form threshold for {other}")));
        }
    };
    Ok(p)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Threshold {
    /// Bisection on the direct trace; authoritative.
    pub p: f64,
    pub closed_form: f64,
    pub bound: f64,
    /// |p - closed_form| exceeds ORACLE_TOL.
    pub discrepancy: bool,
}

/// Visibility at which the witness on the noisy state equals the corrected bound.
pub fn threshold_visibility(q: &ThresholdQuery) -> Result<Threshold> {
    let spec = case_spec(q.witness, q.eps, q.case)?;
    let bound = q.bound.value;
    let p = bisect(
        |p| noisy_value(&spec, q.noise, p).map(|v| v - bound).unwrap_or(f64::NAN),
        0.0,
        1.0,
        THRESHOLD_TOL,
    )
    .map_err(|_| {
        let lo = noisy_value(&spec, q.noise, 0.0).unwrap_or(f64::NAN);
        let hi = noisy_value(&spec, q.noise, 1.0).unwrap_or(f64::NAN);
        let what = if lo >= bound { "always violating" } else { "never violating" };
        GmeError::NoCrossing(format!(
            "{} {} {} at eps {}: witness {what} (value {lo:.6} at p=0, {hi:.6} at p=1, bound {bound:.6})",
            q.witness, q.case, q.noise, q.eps
        ))
    })?;
    let closed_form = printed_threshold(q.witness, q.noise, q.case, q.eps, bound)?;
    Ok(Threshold {
        p,
        closed_form,
        bound,
        discrepancy: (p - closed_form).abs() > ORACLE_TOL,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorstCaseThreshold {
    pub printed: f64,
    pub oracle: f64,
    pub agrees: bool,
}

/// Printed worst-case closed form next to the direct-trace oracle at the explicit worst tilts.
pub fn worst_case_thresholds(kind: WitnessKind, eps: f64, noise: NoiseKind) -> Result<WorstCaseThreshold> {
    let t = threshold_visibility(&ThresholdQuery::new(kind, eps, noise, MeasurementCase::WorstCase)?)?;
    Ok(WorstCaseThreshold {
        printed: t.closed_form,
        oracle: t.p,
        agrees: !t.discrepancy,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiThreshold {
    pub m: usize,
    pub p: f64,
    pub bound: f64,
    /// (8 + 2^{5/2})/16 for m = 2.
    pub closed_form: Option<f64>,
    /// Fresh settings optimization at the threshold; must not exceed `bound`.
    pub recheck: f64,
}

/// Dephasing thresholds for the device-independent I_42 and I_43 at n = 4.
/// I_42 uses the Mermin settings and the DI Mermin bound; I_43 needs its bound supplied.
pub fn di_thresholds(m: usize, i43_bound: Option<f64>, seed: u64) -> Result<DiThreshold> {
    let n = 4;
    match m {
        2 => {
            let bound = mermin_di_bound(n)?.value;
            let settings = InmSettings::equatorial(n, 2);
            let p = bisect(|p| i_nm_dephased(p, &settings) - bound, 0.0, 1.0, THRESHOLD_TOL)?;
            Ok(DiThreshold {
                m,
                p,
                bound,
                closed_form: Some((8.0 + 2f64.powf(2.5)) / 16.0),
                recheck: i_nm_dephased(p, &settings),
            })
        }
        3 => {
            let bound = i43_bound
                .ok_or_else(|| GmeError::Invalid("I_43 threshold needs the external biseparable bound".into()))?;
            let pool = optimize_settings_dephased(n, 3, 1.0, SETTINGS_RESTARTS, seed)?;
            let pool: Vec<&InmSettings> = pool.iter().take(5).map(|r| &r.settings).collect();
            let best_at = |p: f64| {
                pool.iter()
                    .map(|s| i_nm_dephased(p, s))
                    .fold(f64::NEG_INFINITY, f64::max)
            };
            let p = bisect(|p| best_at(p) - bound, 0.5, 1.0, THRESHOLD_TOL)?;
            let recheck = optimize_settings_dephased(n, 3, p, SETTINGS_RESTARTS, seed ^ 0x5eed)?[0].value;
            Ok(DiThreshold {
                m,
                p,
                bound,
                closed_form: None,
                recheck,
            })
        }
        other => Err(GmeError::Invalid(format!("I_nm thresholds need m in {{2, 3}}, got {other}"))),
    }
}

/// (value - bisep) / (quantum - bisep): 0 at the biseparable bound, 1 at the quantum bound.
pub fn normalize_witness_value(value: f64, bisep: f64, quantum: f64) -> Result<f64> {
    if quantum <= bisep {
        return Err(GmeError::Invalid(format!(
            "quantum bound {quantum} does not exceed biseparable bound {bisep}"
        )));
    }
    Ok((value - bisep) / (quantum - bisep))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessRow {
    pub p: f64,
    pub witness_value: f64,
    pub normalized_value: f64,
    pub bound: f64,
    pub violation: bool,
}

/// Witness value, normalized value and violation flag along a visibility grid.
pub fn robustness_sweep(q: &ThresholdQuery, p_grid: &[f64]) -> Result<Vec<RobustnessRow>> {
    let spec = case_spec(q.witness, q.eps, q.case)?;
    let bound = q.bound.value;
    let quantum = quantum_bound(q.witness, q.eps)?.value;
    p_grid
        .iter()
        .map(|&p| {
            let v = noisy_value(&spec, q.noise, p)?;
            Ok(RobustnessRow {
                p,
                witness_value: v,
                normalized_value: normalize_witness_value(v, bound, quantum)?,
                bound,
                violation: v > bound,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn white_noise_at_zero_eps() {
        let m = threshold_visibility(
            &ThresholdQuery::new(WitnessKind::Mermin(4), 0.0, NoiseKind::Depolarizing, MeasurementCase::BestCase).unwrap(),
        )
        .unwrap();
        assert!((m.p - 0.5).abs() < 1e-9 && !m.discrepancy);
        let s = threshold_visibility(
            &ThresholdQuery::new(WitnessKind::Stabilizer(4), 0.0, NoiseKind::Depolarizing, MeasurementCase::BestCase)
                .unwrap(),
        )
        .unwrap();
        assert!((s.p - 7.0 / 11.0).abs() < 1e-9 && !s.discrepancy);
    }

    #[test]
    fn dephasing_mermin_at_half_percent() {
        let t = threshold_visibility(
            &ThresholdQuery::new(WitnessKind::Mermin(4), 0.005, NoiseKind::Dephasing, MeasurementCase::BestCase).unwrap(),
        )
        .unwrap();
        assert!((t.p - 0.783).abs() < 0.002, "{}", t.p);
        assert!(!t.discrepancy);
    }

    #[test]
    fn di_m2_both_routes() {
        let t = di_thresholds(2, None, 42).unwrap();
        assert!((t.p - t.closed_form.unwrap()).abs() < 1e-8);
        let limit = mermin_bisep_bound(4, 0.5).unwrap().value;
        assert!((limit - t.bound).abs() < 1e-12);
        assert!(di_thresholds(3, None, 42).is_err());
    }

    #[test]
    fn normalization() {
        assert_eq!(normalize_witness_value(4.38, 4.38, 8.0).unwrap(), 0.0);
        assert_eq!(normalize_witness_value(8.0, 4.38, 8.0).unwrap(), 1.0);
        assert!((normalize_witness_value(7.4665, 4.38, 8.0).unwrap() - 0.8527).abs() < 1e-4);
        assert!(normalize_witness_value(1.0, 8.0, 8.0).is_err());
    }

    #[test]
    fn affine_in_p() {
        for kind in [WitnessKind::Mermin(4), WitnessKind::Stabilizer(4)] {
            let spec = kind.build(&worst_case_observables(kind, 0.02).unwrap()).unwrap();
            let (v0, v1) = (
                noisy_value(&spec, NoiseKind::Dephasing, 0.0).unwrap(),
                noisy_value(&spec, NoiseKind::Dephasing, 1.0).unwrap(),
            );
            let v = noisy_value(&spec, NoiseKind::Dephasing, 0.37).unwrap();
            assert!((v - (0.63 * v0 + 0.37 * v1)).abs() < 1e-12);
        }
    }
}
