//! Waveplate and polarizing-beamsplitter error model for polarization measurements.
//!
//! Jones convention: a plate at angle t with retardance eta is R(t) diag(1, e^{i eta}) R(-t).
//! Light passes the quarter-wave plate (angle alpha) and then the half-wave plate (angle beta);
//! the transmitted port of the beamsplitter projects onto |H> = |0>.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{check_range, Result};
use crate::linalg::{ComplexMatrix, C64, ONE, ZERO};
use crate::measurement::{measurement_fidelity, Axis};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveplateErrorSpec {
    pub d_alpha: f64,
    pub d_beta: f64,
    pub d_eta_q: f64,
    pub d_eta_h: f64,
    /// probability that the beamsplitter routes a photon correctly
    pub gamma: f64,
}

impl WaveplateErrorSpec {
    pub fn new(d_alpha: f64, d_beta: f64, d_eta_q: f64, d_eta_h: f64, gamma: f64) -> Result<Self> {
        for (name, v) in [
            ("d_alpha", d_alpha),
            ("d_beta", d_beta),
            ("d_eta_q", d_eta_q),
            ("d_eta_h", d_eta_h),
        ] {
            check_range(name, v, 0.0, PI)?;
        }
        check_range("gamma", gamma, 0.5, 1.0)?;
        Ok(Self {
            d_alpha,
            d_beta,
            d_eta_q,
            d_eta_h,
            gamma,
        })
    }

    pub fn ideal() -> Self {
        Self {
            d_alpha: 0.0,
            d_beta: 0.0,
            d_eta_q: 0.0,
            d_eta_h: 0.0,
            gamma: 1.0,
        }
    }

    /// 0.4 degree stage misalignment, pi/100 retardance error, 99.9% routing.
    pub fn laboratory() -> Self {
        let d = 0.4f64.to_radians();
        Self {
            d_alpha: d,
            d_beta: d,
            d_eta_q: PI / 100.0,
            d_eta_h: PI / 100.0,
            gamma: 0.999,
        }
    }
}

/// (QWP angle, HWP angle) projecting the transmitted port onto the + eigenstate.
pub fn plate_settings(basis: Axis) -> (f64, f64) {
    match basis {
        Axis::Z => (0.0, 0.0),
        Axis::X => (45f64.to_radians(), 22.5f64.to_radians()),
        Axis::Y => (0.0, 67.5f64.to_radians()),
    }
}

/// + eigenstate of the ideal basis measurement.
pub fn target_state(basis: Axis) -> [C64; 2] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    match basis {
        Axis::Z => [ONE, ZERO],
        Axis::X => [C64::new(h, 0.0), C64::new(h, 0.0)],
        Axis::Y => [C64::new(h, 0.0), C64::new(0.0, h)],
    }
}

fn rotation(t: f64) -> ComplexMatrix {
    let (c, s) = (t.cos(), t.sin());
    ComplexMatrix::from_vec(
        2,
        2,
        vec![C64::new(c, 0.0), C64::new(-s, 0.0), C64::new(s, 0.0), C64::new(c, 0.0)],
    )
    .unwrap()
}

pub fn waveplate(t: f64, eta: f64) -> ComplexMatrix {
    let d = ComplexMatrix::from_vec(2, 2, vec![ONE, ZERO, ZERO, C64::from_polar(1.0, eta)]).unwrap();
    &(&rotation(t) * &d) * &rotation(-t)
}

/// State selected by the transmitted port: U^dagger |H> with U = HWP * QWP.
fn selected_state(alpha: f64, beta: f64, eta_q: f64, eta_h: f64) -> [C64; 2] {
    let u = &waveplate(beta, eta_h) * &waveplate(alpha, eta_q);
    // first column of U^dagger = conjugate of the first row of U
    [u[(0, 0)].conj(), u[(0, 1)].conj()]
}

fn povm_from_state(psi: [C64; 2], gamma: f64) -> (ComplexMatrix, ComplexMatrix) {
    let perp = [-psi[1].conj(), psi[0].conj()];
    let outer = |v: [C64; 2]| ComplexMatrix::from_fn(2, 2, |i, j| v[i] * v[j].conj());
    let mut plus = outer(psi).scale(gamma);
    plus.axpy(1.0 - gamma, &outer(perp));
    let minus = &ComplexMatrix::identity(2) - &plus;
    (plus, minus)
}

fn bloch_of(psi: [C64; 2]) -> [f64; 3] {
    let rho01 = psi[0] * psi[1].conj();
    [
        2.0 * rho01.re,
        -2.0 * rho01.im,
        psi[0].norm_sqr() - psi[1].norm_sqr(),
    ]
}

#[derive(Debug, Clone)]
pub struct WaveplateResult {
    pub basis: Axis,
    /// POVM at the worst sign combination
    pub plus: ComplexMatrix,
    pub minus: ComplexMatrix,
    /// direct worst case over the error signs
    pub fidelity: f64,
    /// linear propagation of the errors through the selected state's angles
    pub propagated_fidelity: f64,
    /// signs of (d_alpha, d_beta, d_eta_q, d_eta_h) at the worst case
    pub worst_signs: [i8; 4],
}

/// Realistic POVM for one basis under the worst-case waveplate and routing errors.
pub fn waveplate_povm(basis: Axis, spec: &WaveplateErrorSpec) -> Result<WaveplateResult> {
    let (a0, b0) = plate_settings(basis);
    let axis = bloch_of(target_state(basis));
    let mut best: Option<(f64, [i8; 4], ComplexMatrix, ComplexMatrix)> = None;
    for mask in 0..16u8 {
        let sg: [i8; 4] = std::array::from_fn(|k| if mask >> k & 1 == 1 { -1 } else { 1 });
        let psi = selected_state(
            a0 + sg[0] as f64 * spec.d_alpha,
            b0 + sg[1] as f64 * spec.d_beta,
            FRAC_PI_2 + sg[2] as f64 * spec.d_eta_q,
            PI + sg[3] as f64 * spec.d_eta_h,
        );
        let (plus, minus) = povm_from_state(psi, spec.gamma);
        let f = measurement_fidelity(&plus, &minus, axis)?;
        if best.as_ref().map_or(true, |b| f < b.0) {
            best = Some((f, sg, plus, minus));
        }
    }
    let (fidelity, worst_signs, plus, minus) = best.unwrap();
    Ok(WaveplateResult {
        basis,
        plus,
        minus,
        fidelity,
        propagated_fidelity: propagated_fidelity(basis, spec),
        worst_signs,
    })
}

/// (theta, phi) of cos(theta)|0> + sin(theta) e^{i phi}|1> after removing the global phase.
fn state_angles(psi: [C64; 2]) -> (f64, f64) {
    let ph = if psi[0].norm() > 1e-12 { psi[0].arg() } else { 0.0 };
    let p1 = psi[1] * C64::from_polar(1.0, -ph);
    (psi[1].norm().atan2(psi[0].norm()), p1.arg())
}

fn wrap(a: f64) -> f64 {
    C64::from_polar(1.0, a).arg()
}

/// Linear error propagation: one-sided finite-difference sensitivities of the selected
/// state's angles, summed in absolute value, then the worst corner of the angle box.
fn propagated_fidelity(basis: Axis, spec: &WaveplateErrorSpec) -> f64 {
    let (a0, b0) = plate_settings(basis);
    let x0 = [a0, b0, FRAC_PI_2, PI];
    let dx = [spec.d_alpha, spec.d_beta, spec.d_eta_q, spec.d_eta_h];
    let f = |x: [f64; 4]| state_angles(selected_state(x[0], x[1], x[2], x[3]));
    let (th0, ph0) = f(x0);
    let polar = th0.sin() < 1e-9;
    let h = 1e-7;
    let (mut dth, mut dph) = (0.0, 0.0);
    for i in 0..4 {
        let mut xp = x0;
        let mut xm = x0;
        xp[i] += h;
        xm[i] -= h;
        let ((tp, pp), (tm, pm)) = (f(xp), f(xm));
        let gt = (tp - th0).abs().max((th0 - tm).abs()) / h;
        let gp = if polar {
            0.0
        } else {
            wrap(pp - ph0).abs().max(wrap(ph0 - pm).abs()) / h
        };
        dth += gt * dx[i];
        dph += gp * dx[i];
    }
    let t = target_state(basis);
    let mut worst: f64 = 1.0;
    for s1 in [-1.0, 1.0] {
        for s2 in [-1.0, 1.0] {
            let th = th0 + s1 * dth;
            let ph = ph0 + s2 * dph;
            let psi = [C64::new(th.cos(), 0.0), C64::from_polar(th.sin(), ph)];
            let o = (t[0].conj() * psi[0] + t[1].conj() * psi[1]).norm_sqr();
            worst = worst.min(spec.gamma * o + (1.0 - spec.gamma) * (1.0 - o));
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::check_povm;

    const BASES: [Axis; 3] = [Axis::Z, Axis::X, Axis::Y];

    #[test]
    fn settings_select_targets() {
        for b in BASES {
            let (a, h) = plate_settings(b);
            let psi = selected_state(a, h, FRAC_PI_2, PI);
            let t = target_state(b);
            let o = (t[0].conj() * psi[0] + t[1].conj() * psi[1]).norm_sqr();
            assert!((o - 1.0).abs() < 1e-12, "{b:?}");
        }
    }

    #[test]
    fn ideal_spec_is_perfect() {
        for b in BASES {
            let r = waveplate_povm(b, &WaveplateErrorSpec::ideal()).unwrap();
            assert!((r.fidelity - 1.0).abs() < 1e-12);
            assert!((r.propagated_fidelity - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn routing_error_only() {
        let spec = WaveplateErrorSpec {
            gamma: 0.999,
            ..WaveplateErrorSpec::ideal()
        };
        for b in BASES {
            let r = waveplate_povm(b, &spec).unwrap();
            assert!((r.fidelity - 0.999).abs() < 1e-12);
        }
    }

    #[test]
    fn povms_are_valid() {
        let spec = WaveplateErrorSpec::laboratory();
        for b in BASES {
            let r = waveplate_povm(b, &spec).unwrap();
            check_povm(&r.plus, &r.minus).unwrap();
            assert!(r.fidelity < 1.0 && r.fidelity > 0.99);
        }
        assert!(WaveplateErrorSpec::new(0.0, 0.0, 0.0, 0.0, 0.4).is_err());
    }
}
