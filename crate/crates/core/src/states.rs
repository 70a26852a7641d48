//! Pure states and noise channels.
//!
//! Qubit 1 is the most significant tensor factor.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

use crate::error::{check_range, GmeError, Result};
use crate::linalg::{pauli_string, ComplexMatrix, DensityMatrix, Pauli, StateVector, C64, ONE, ZERO};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

/// (|0..0> +- |1..1>)/sqrt2
pub fn ghz_state(n: usize, sign: Sign) -> Result<StateVector> {
    check_range("n", n as f64, 2.0, 10.0)?;
    let dim = 1usize << n;
    let mut amps = vec![ZERO; dim];
    amps[0] = C64::new(FRAC_1_SQRT_2, 0.0);
    amps[dim - 1] = C64::new(
        match sign {
            Sign::Plus => FRAC_1_SQRT_2,
            Sign::Minus => -FRAC_1_SQRT_2,
        },
        0.0,
    );
    StateVector::new(amps)
}

/// Biseparable state reaching the corrected Mermin bound:
/// (|0> + e^{i pi/4}|1>)/sqrt2 on qubit 1, (|0..0> + e^{-i pi/4}|1..1>)/sqrt2 on the rest.
pub fn spoof_state(n: usize) -> Result<StateVector> {
    check_range("n", n as f64, 3.0, 10.0)?;
    let first = StateVector::new(vec![ONE, C64::from_polar(1.0, FRAC_PI_4)])?;
    let rest_dim = 1usize << (n - 1);
    let mut rest = vec![ZERO; rest_dim];
    rest[0] = ONE;
    rest[rest_dim - 1] = C64::from_polar(1.0, -FRAC_PI_4);
    Ok(first.kron(&StateVector::new(rest)?))
}

/// (|001> + |010> + |100>)/sqrt3
pub fn w_state() -> StateVector {
    let mut amps = vec![ZERO; 8];
    for k in [1, 2, 4] {
        amps[k] = ONE;
    }
    StateVector::new(amps).unwrap()
}

/// Stabilizer generators of the linear four-qubit cluster state.
pub const CLUSTER_GENERATORS: [&str; 4] = ["XZII", "ZXZI", "IZXZ", "IIZX"];

pub fn letters(s: &str) -> Vec<Pauli> {
    s.chars()
        .map(|c| Pauli::from_char(c).expect("Pauli letter"))
        .collect()
}

/// Common +1 eigenstate of the cluster generators, obtained by projecting a basis state.
pub fn cluster_state4() -> StateVector {
    let mut proj = ComplexMatrix::identity(16);
    for g in CLUSTER_GENERATORS {
        let k = pauli_string(&letters(g));
        let half = (&ComplexMatrix::identity(16) + &k).scale(0.5);
        proj = &proj * &half;
    }
    // the stabilizer group contains no Z-only element, so <0000|P|0000> = 1/16
    let col: Vec<C64> = (0..16).map(|i| proj[(i, 0)]).collect();
    let mut amps = col;
    // fix the global phase so the |0000> amplitude is real positive
    let ph = amps[0] / amps[0].norm();
    for a in &mut amps {
        *a /= ph;
    }
    StateVector::new(amps).unwrap()
}

/// cos(theta)|0> + sin(theta)|1>
pub fn chi_state(theta: f64) -> StateVector {
    StateVector::new(vec![C64::new(theta.cos(), 0.0), C64::new(theta.sin(), 0.0)]).unwrap()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    Depolarizing,
    Dephasing,
}

impl NoiseKind {
    pub fn label(self) -> &'static str {
        match self {
            NoiseKind::Depolarizing => "depolarizing",
            NoiseKind::Dephasing => "dephasing",
        }
    }
}

impl std::fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for NoiseKind {
    type Err = GmeError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "depolarizing" | "white" | "iso" => Ok(NoiseKind::Depolarizing),
            "dephasing" | "deph" => Ok(NoiseKind::Dephasing),
            other => Err(GmeError::Invalid(format!("unknown noise kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    /// visibility
    pub p: f64,
}

impl NoiseModel {
    pub fn new(kind: NoiseKind, p: f64) -> Result<Self> {
        check_range("p", p, 0.0, 1.0)?;
        Ok(Self { kind, p })
    }
}

/// `kind:p`, e.g. `dephasing:0.5`.
impl std::str::FromStr for NoiseModel {
    type Err = GmeError;
    fn from_str(s: &str) -> Result<Self> {
        let (kind, p) = s
            .split_once(':')
            .ok_or_else(|| GmeError::Invalid(format!("noise `{s}`: expected kind:p")))?;
        let p: f64 = p
            .trim()
            .parse()
            .map_err(|_| GmeError::Invalid(format!("noise `{s}`: visibility is not a number")))?;
        NoiseModel::new(kind.trim().parse()?, p)
    }
}

/// State by label: `ghz<n>`, `ghz<n>-`, `spoof<n>`, `w3`, `cluster4`, and the biseparable
/// `zero-ghz3` (|0> on qubit 1) and `plus-ghz3` (|+> on qubit 1).
pub fn named_state(label: &str) -> Result<StateVector> {
    let l = label.to_ascii_lowercase();
    let num = |prefix: &str, rest: &str| -> Option<usize> { rest.strip_prefix(prefix)?.parse().ok() };
    if let Some(rest) = l.strip_suffix('-') {
        if let Some(n) = num("ghz", rest) {
            return ghz_state(n, Sign::Minus);
        }
    }
    if let Some(n) = num("ghz", &l) {
        return ghz_state(n, Sign::Plus);
    }
    if let Some(n) = num("spoof", &l) {
        return spoof_state(n);
    }
    match l.as_str() {
        "w3" | "w" => Ok(w_state()),
        "cluster4" | "cluster" => Ok(cluster_state4()),
        "zero-ghz3" => Ok(StateVector::basis(1, 0).kron(&ghz_state(3, Sign::Plus)?)),
        "plus-ghz3" => {
            let plus = StateVector::new(vec![C64::new(FRAC_1_SQRT_2, 0.0); 2])?;
            Ok(plus.kron(&ghz_state(3, Sign::Plus)?))
        }
        _ => Err(GmeError::Invalid(format!("unknown state `{label}`"))),
    }
}

/// Depolarizing: p|psi><psi| + (1-p) I/2^n.
/// Dephasing: p|ghz+><ghz+| + (1-p)|ghz-><ghz-|, defined for GHZ+ input only.
pub fn apply_noise(state: &StateVector, noise: NoiseModel) -> Result<DensityMatrix> {
    check_range("p", noise.p, 0.0, 1.0)?;
    let dim = state.dim();
    let p = noise.p;
    match noise.kind {
        NoiseKind::Depolarizing => {
            let mut m = state.projector().scale(p);
            m.axpy((1.0 - p) / dim as f64, &ComplexMatrix::identity(dim));
            DensityMatrix::new(m)
        }
        NoiseKind::Dephasing => {
            let n = state.n_qubits();
            let plus = ghz_state(n, Sign::Plus)?;
            if (plus.inner(state).norm_sqr() - 1.0).abs() > 1e-10 {
                return Err(GmeError::Invalid(
                    "dephasing noise is defined for the GHZ+ state only".into(),
                ));
            }
            let minus = ghz_state(n, Sign::Minus)?;
            let mut m = plus.projector().scale(p);
            m.axpy(1.0 - p, &minus.projector());
            DensityMatrix::new(m)
        }
    }
}

/// Reduced density matrix of the qubits in `keep` (1-based, ascending), from a pure state.
pub fn partial_trace_pure(state: &StateVector, keep: &[usize]) -> ComplexMatrix {
    let n = state.n_qubits();
    let k = keep.len();
    let rest: Vec<usize> = (1..=n).filter(|q| !keep.contains(q)).collect();
    let compose = |a: usize, b: usize| {
        let mut idx = 0;
        for (t, q) in keep.iter().enumerate() {
            idx |= ((a >> (k - 1 - t)) & 1) << (n - q);
        }
        for (t, q) in rest.iter().enumerate() {
            idx |= ((b >> (rest.len() - 1 - t)) & 1) << (n - q);
        }
        idx
    };
    let amps = state.amplitudes();
    ComplexMatrix::from_fn(1 << k, 1 << k, |i, j| {
        (0..1usize << rest.len())
            .map(|b| amps[compose(i, b)] * amps[compose(j, b)].conj())
            .sum()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::expectation;

    #[test]
    fn ghz_layout() {
        let g = ghz_state(2, Sign::Plus).unwrap();
        let a = g.amplitudes();
        assert!((a[0].re - FRAC_1_SQRT_2).abs() < 1e-15 && (a[3].re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert_eq!(a[1], ZERO);
        assert!(ghz_state(1, Sign::Plus).is_err());
        assert!(ghz_state(11, Sign::Plus).is_err());
        let m = ghz_state(4, Sign::Minus).unwrap();
        assert!(m.inner(&ghz_state(4, Sign::Plus).unwrap()).norm() < 1e-15);
    }

    #[test]
    fn spoof_amplitude_and_purity() {
        let s = spoof_state(4).unwrap();
        assert!((s.amplitudes()[0] - C64::new(0.5, 0.0)).norm() < 1e-15);
        let r1 = partial_trace_pure(&s, &[1]);
        let purity = (&r1 * &r1).trace().re;
        assert!((purity - 1.0).abs() < 1e-12);
        // the remaining block is entangled
        let r2 = partial_trace_pure(&s, &[2]);
        assert!(((&r2 * &r2).trace().re - 0.5).abs() < 1e-12);
    }

    #[test]
    fn cluster_is_stabilized() {
        let c = cluster_state4();
        for g in CLUSTER_GENERATORS {
            let k = pauli_string(&letters(g));
            assert!((expectation(&k, &c).unwrap() - 1.0).abs() < 1e-12);
        }
        let amps = c.amplitudes();
        assert!(amps.iter().all(|a| (a.norm() - 0.25).abs() < 1e-12));
    }

    #[test]
    fn chi_expectations() {
        assert_eq!(chi_state(0.0).amplitudes(), &[ONE, ZERO]);
        let z = expectation(&Pauli::Z.matrix(), &chi_state(std::f64::consts::PI / 8.0)).unwrap();
        assert!((z - FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn noise_outputs_are_valid() {
        let g = ghz_state(4, Sign::Plus).unwrap();
        for i in 0..=100 {
            let p = i as f64 / 100.0;
            for kind in [NoiseKind::Depolarizing, NoiseKind::Dephasing] {
                assert!(apply_noise(&g, NoiseModel::new(kind, p).unwrap()).is_ok());
            }
        }
        let pure = apply_noise(&g, NoiseModel::new(NoiseKind::Depolarizing, 1.0).unwrap()).unwrap();
        assert!(pure.matrix().max_abs_diff(&g.projector()) < 1e-15);
        let w = w_state();
        assert!(apply_noise(&w, NoiseModel { kind: NoiseKind::Dephasing, p: 0.5 }).is_err());
        assert!(NoiseModel::new(NoiseKind::Dephasing, 1.2).is_err());
    }

    #[test]
    fn labels_parse() {
        let m: NoiseModel = "dephasing:0.5".parse().unwrap();
        assert_eq!((m.kind, m.p), (NoiseKind::Dephasing, 0.5));
        assert!("white".parse::<NoiseModel>().is_err());
        assert!("white:1.5".parse::<NoiseModel>().is_err());
        let minus = named_state("GHZ4-").unwrap();
        assert!(minus.inner(&ghz_state(4, Sign::Minus).unwrap()).re > 1.0 - 1e-15);
        assert_eq!(named_state("zero-ghz3").unwrap().dim(), 16);
        assert_eq!(named_state("spoof5").unwrap().n_qubits(), 5);
        assert!(named_state("ghz1").is_err());
        assert!(named_state("bell").is_err());
    }
}
