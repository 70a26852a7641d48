//! Imprecise two-outcome qubit measurements.
//!
//! An observable with imprecision eps is modelled by its unit Bloch vector
//! q*n + sqrt(1-q^2)*m with q = 1 - 2 eps and m perpendicular to the intended axis n.

use serde::{Deserialize, Serialize};

use crate::error::{check_range, GmeError, Result};
use crate::linalg::{bloch_operator, herm_eig, ComplexMatrix, EigMode, Pauli};
use crate::tol;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn pauli(self) -> Pauli {
        match self {
            Axis::X => Pauli::X,
            Axis::Y => Pauli::Y,
            Axis::Z => Pauli::Z,
        }
    }

    pub fn unit(self) -> [f64; 3] {
        match self {
            Axis::X => [1.0, 0.0, 0.0],
            Axis::Y => [0.0, 1.0, 0.0],
            Axis::Z => [0.0, 0.0, 1.0],
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Right-handed basis of the plane perpendicular to this axis.
    pub fn perpendicular_pair(self) -> (Axis, Axis) {
        match self {
            Axis::X => (Axis::Y, Axis::Z),
            Axis::Y => (Axis::Z, Axis::X),
            Axis::Z => (Axis::X, Axis::Y),
        }
    }

    pub fn from_pauli(p: Pauli) -> Option<Axis> {
        match p {
            Pauli::X => Some(Axis::X),
            Pauli::Y => Some(Axis::Y),
            Pauli::Z => Some(Axis::Z),
            Pauli::I => None,
        }
    }
}

pub type BlochVector = [f64; 3];

pub fn bloch_norm(v: BlochVector) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Alignment coefficients (q, sqrt(1-q^2)) = (1-2eps, 2 sqrt(eps(1-eps))).
pub fn tilt_coefficients(eps: f64) -> Result<(f64, f64)> {
    check_range("epsilon", eps, 0.0, 0.5)?;
    Ok((1.0 - 2.0 * eps, 2.0 * (eps * (1.0 - eps)).sqrt()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TiltedObservable {
    pub intended: Axis,
    pub partner: Axis,
    pub q: f64,
    pub matrix: ComplexMatrix,
}

impl TiltedObservable {
    pub fn bloch(&self) -> BlochVector {
        let s = (1.0 - self.q * self.q).max(0.0).sqrt();
        let (a, b) = (self.intended.unit(), self.partner.unit());
        [
            self.q * a[0] + s * b[0],
            self.q * a[1] + s * b[1],
            self.q * a[2] + s * b[2],
        ]
    }

    /// (P+, P-) spectral projectors.
    pub fn projectors(&self) -> (ComplexMatrix, ComplexMatrix) {
        projector_pair(self.bloch())
    }
}

/// q*sigma(intended) + sqrt(1-q^2)*sigma(partner), q = 1-2eps.
pub fn tilted_observable(intended: Axis, partner: Axis, eps: f64) -> Result<TiltedObservable> {
    if intended == partner {
        return Err(GmeError::Invalid(
            "tilt partner must differ from the intended axis".into(),
        ));
    }
    let (q, s) = tilt_coefficients(eps)?;
    let matrix = if eps == 0.0 {
        intended.pauli().matrix()
    } else {
        let mut m = intended.pauli().matrix().scale(q);
        m.axpy(s, &partner.pauli().matrix());
        m
    };
    Ok(TiltedObservable {
        intended,
        partner,
        q,
        matrix,
    })
}

/// Observable tilted by eps from `axis` toward cos(phi) e1 + sin(phi) e2 of its perpendicular pair.
pub fn tilted_bloch(axis: Axis, eps: f64, phi: f64) -> Result<BlochVector> {
    let (q, s) = tilt_coefficients(eps)?;
    let (e1, e2) = axis.perpendicular_pair();
    let (n, a, b) = (axis.unit(), e1.unit(), e2.unit());
    let (c, d) = (phi.cos(), phi.sin());
    Ok([
        q * n[0] + s * (c * a[0] + d * b[0]),
        q * n[1] + s * (c * a[1] + d * b[1]),
        q * n[2] + s * (c * a[2] + d * b[2]),
    ])
}

/// Projectors (I +- n.sigma)/2 for a unit vector n.
pub fn projector_pair(n: BlochVector) -> (ComplexMatrix, ComplexMatrix) {
    let id = ComplexMatrix::identity(2);
    let s = bloch_operator(n);
    ((&id + &s).scale(0.5), (&id - &s).scale(0.5))
}

/// Worst-case imprecision per party and basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImprecisionBudget {
    /// (eps_X, eps_Y, eps_Z) for each party
    pub per_party: Vec<[f64; 3]>,
}

impl ImprecisionBudget {
    pub fn new(per_party: Vec<[f64; 3]>) -> Result<Self> {
        for e in per_party.iter().flatten() {
            check_range("epsilon", *e, 0.0, 0.5)?;
        }
        Ok(Self { per_party })
    }

    pub fn ideal(n: usize) -> Self {
        Self {
            per_party: vec![[0.0; 3]; n],
        }
    }

    /// The same (eps_X, eps_Y, eps_Z) on every party.
    pub fn uniform(n: usize, eps: [f64; 3]) -> Result<Self> {
        Self::new(vec![eps; n])
    }

    /// One party imprecise in every basis, the others ideal.
    pub fn single_party(n: usize, party: usize, eps: f64) -> Result<Self> {
        let mut v = vec![[0.0; 3]; n];
        v[party] = [eps; 3];
        Self::new(v)
    }

    pub fn n(&self) -> usize {
        self.per_party.len()
    }

    pub fn eps(&self, party: usize, axis: Axis) -> f64 {
        self.per_party[party][axis.index()]
    }

    pub fn is_ideal(&self) -> bool {
        self.per_party.iter().flatten().all(|e| *e == 0.0)
    }
}

/// Average fidelity 1/2 <n|P+|n> + 1/2 <-n|P-|-n> of a two-outcome POVM with the ideal axis n.
pub fn measurement_fidelity(
    povm_plus: &ComplexMatrix,
    povm_minus: &ComplexMatrix,
    axis: BlochVector,
) -> Result<f64> {
    check_povm(povm_plus, povm_minus)?;
    let norm = bloch_norm(axis);
    if !(norm > 0.0) {
        return Err(GmeError::Invalid("zero measurement axis".into()));
    }
    let n = [axis[0] / norm, axis[1] / norm, axis[2] / norm];
    let (pp, pm) = projector_pair(n);
    // <n|A|n> = tr(A |n><n|)
    let f = 0.5 * trace_product(povm_plus, &pp) + 0.5 * trace_product(povm_minus, &pm);
    Ok(f.clamp(0.0, 1.0))
}

pub(crate) fn trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += (a[(i, j)] * b[(j, i)]).re;
        }
    }
    s
}

/// Completeness and positivity of a two-outcome POVM.
pub fn check_povm(plus: &ComplexMatrix, minus: &ComplexMatrix) -> Result<()> {
    let t = tol::current();
    if plus.rows() != minus.rows() || !plus.is_square() || !minus.is_square() {
        return Err(GmeError::DimensionMismatch {
            expected: plus.rows(),
            actual: minus.rows(),
        });
    }
    let sum = plus + minus;
    let defect = sum.max_abs_diff(&ComplexMatrix::identity(plus.rows()));
    if defect > t.povm_completeness {
        return Err(GmeError::PovmIncomplete { defect });
    }
    for e in [plus, minus] {
        let min = herm_eig(e, EigMode::Full)?.min();
        if min < -t.povm_psd {
            return Err(GmeError::Invalid(format!(
                "POVM element has negative eigenvalue {min:.3e}"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_at_zero() {
        let t = tilted_observable(Axis::X, Axis::Y, 0.0).unwrap();
        assert_eq!(t.matrix, Pauli::X.matrix());
        assert!(tilted_observable(Axis::X, Axis::X, 0.1).is_err());
        assert!(tilted_observable(Axis::X, Axis::Y, 0.6).is_err());
    }

    #[test]
    fn coefficients_at_half_percent() {
        let (q, s) = tilt_coefficients(0.005).unwrap();
        assert!((q - 0.99).abs() < 1e-15);
        // independent route: sqrt(1 - q^2)
        assert!((s - (1.0 - 0.99f64 * 0.99).sqrt()).abs() < 1e-12);
        assert!((s - 0.14107).abs() < 1e-5);
    }

    #[test]
    fn tilted_fidelity_saturates_budget() {
        for k in 0..50 {
            let eps = 0.5 * k as f64 / 49.0;
            for (a, b) in [(Axis::X, Axis::Y), (Axis::Y, Axis::X), (Axis::Z, Axis::X)] {
                let t = tilted_observable(a, b, eps).unwrap();
                let e = herm_eig(&t.matrix, EigMode::Full).unwrap();
                assert!((e.values[0] - 1.0).abs() < 1e-12 && (e.values[1] + 1.0).abs() < 1e-12);
                let bloch = t.bloch();
                let n = a.unit();
                let cosang = bloch[0] * n[0] + bloch[1] * n[1] + bloch[2] * n[2];
                assert!((cosang.acos() - (1.0 - 2.0 * eps).acos()).abs() < 1e-10);
                let (pp, pm) = t.projectors();
                let f = measurement_fidelity(&pp, &pm, n).unwrap();
                assert!((f - (1.0 - eps)).abs() < 1e-12);
                // half-angle overlap
                let half = 0.5 * (1.0 - 2.0 * eps).acos();
                assert!((f - half.cos().powi(2)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn fidelity_edge_cases() {
        let (pp, pm) = projector_pair([0.0, 0.0, 1.0]);
        assert!((measurement_fidelity(&pp, &pm, [0.0, 0.0, 1.0]).unwrap() - 1.0).abs() < 1e-15);
        let half = ComplexMatrix::identity(2).scale(0.5);
        assert!((measurement_fidelity(&half, &half, [1.0, 0.0, 0.0]).unwrap() - 0.5).abs() < 1e-15);
        let bad = ComplexMatrix::identity(2);
        assert!(matches!(
            measurement_fidelity(&bad, &half, [1.0, 0.0, 0.0]),
            Err(GmeError::PovmIncomplete { .. })
        ));
    }

    #[test]
    fn general_tilt_matches_axis_form() {
        let eps = 0.01;
        let a = tilted_bloch(Axis::X, eps, 0.0).unwrap();
        let b = tilted_observable(Axis::X, Axis::Y, eps).unwrap().bloch();
        for k in 0..3 {
            assert!((a[k] - b[k]).abs() < 1e-15);
        }
        let z = tilted_bloch(Axis::Z, eps, 0.0).unwrap();
        let zx = tilted_observable(Axis::Z, Axis::X, eps).unwrap().bloch();
        for k in 0..3 {
            assert!((z[k] - zx[k]).abs() < 1e-15);
        }
    }
}
