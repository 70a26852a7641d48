//! Witness operators as coefficient-weighted Pauli-string lists and their assembled matrices.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{GmeError, Result};
use crate::linalg::{bloch_operator, kron_all, ComplexMatrix, Pauli};
use crate::measurement::{tilt_coefficients, Axis, BlochVector, ImprecisionBudget};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WitnessKind {
    Mermin(usize),
    Stabilizer(usize),
    /// three-qubit W-state witness
    W3,
    /// four-qubit linear cluster witness
    Cluster4,
}

impl WitnessKind {
    pub fn n(self) -> usize {
        match self {
            WitnessKind::Mermin(n) | WitnessKind::Stabilizer(n) => n,
            WitnessKind::W3 => 3,
            WitnessKind::Cluster4 => 4,
        }
    }

    /// Plane containing both measured directions of every party.
    pub fn plane(self) -> TiltPlane {
        match self {
            WitnessKind::Mermin(_) | WitnessKind::W3 => TiltPlane::XY,
            WitnessKind::Stabilizer(_) | WitnessKind::Cluster4 => TiltPlane::XZ,
        }
    }

    pub fn label(self) -> String {
        match self {
            WitnessKind::Mermin(n) => format!("mermin{n}"),
            WitnessKind::Stabilizer(n) => format!("stabilizer{n}"),
            WitnessKind::W3 => "w3".into(),
            WitnessKind::Cluster4 => "cluster4".into(),
        }
    }

    /// Ideal witness.
    pub fn ideal(self) -> Result<WitnessSpec> {
        self.build(&LocalObservables::ideal(self.n()))
    }

    /// Witness with mutually tilted observables from a budget.
    pub fn tilted(self, budget: &ImprecisionBudget) -> Result<WitnessSpec> {
        self.build(&LocalObservables::from_budget(budget, self.plane())?)
    }

    pub fn build(self, obs: &LocalObservables) -> Result<WitnessSpec> {
        let (terms, offset) = match self {
            WitnessKind::Mermin(n) => (mermin_terms(n)?, 0.0),
            WitnessKind::Stabilizer(n) => (stabilizer_terms(n)?, -1.0),
            WitnessKind::W3 => (parse_terms(&D3_TERMS), 0.0),
            WitnessKind::Cluster4 => (parse_terms(&C4_TERMS), 0.0),
        };
        WitnessSpec::assemble(self.label(), self.n(), terms, offset, obs)
    }
}

impl fmt::Display for WitnessKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for WitnessKind {
    type Err = GmeError;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.to_ascii_lowercase();
        let num = |prefix: &str| -> Option<usize> {
            s.strip_prefix(prefix).and_then(|r| r.parse().ok())
        };
        if let Some(n) = num("mermin") {
            return Ok(WitnessKind::Mermin(n));
        }
        if let Some(n) = num("stabilizer") {
            return Ok(WitnessKind::Stabilizer(n));
        }
        match s.as_str() {
            "w3" | "d3" | "w" => Ok(WitnessKind::W3),
            "cluster4" | "c4" | "cluster" => Ok(WitnessKind::Cluster4),
            "mermin" => Ok(WitnessKind::Mermin(4)),
            "stabilizer" => Ok(WitnessKind::Stabilizer(4)),
            _ => Err(GmeError::Invalid(format!("unknown witness `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TiltPlane {
    XY,
    XZ,
}

impl TiltPlane {
    pub fn axes(self) -> (Axis, Axis) {
        match self {
            TiltPlane::XY => (Axis::X, Axis::Y),
            TiltPlane::XZ => (Axis::X, Axis::Z),
        }
    }
}

/// The 2x2 matrix each party uses for each Pauli letter.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalObservables {
    /// per party: matrices for I, X, Y, Z
    pub per_party: Vec<[ComplexMatrix; 4]>,
}

impl LocalObservables {
    pub fn ideal(n: usize) -> Self {
        Self {
            per_party: (0..n)
                .map(|_| [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z].map(|p| p.matrix()))
                .collect(),
        }
    }

    /// In-plane tilts: each of the two plane axes leans toward the other by its eps.
    pub fn from_budget(budget: &ImprecisionBudget, plane: TiltPlane) -> Result<Self> {
        let mut obs = Self::ideal(budget.n());
        let (a, b) = plane.axes();
        for j in 0..budget.n() {
            for (axis, partner) in [(a, b), (b, a)] {
                let eps = budget.eps(j, axis);
                if eps > 0.0 {
                    let (q, s) = tilt_coefficients(eps)?;
                    let (u, v) = (axis.unit(), partner.unit());
                    obs.set(j, axis, [q * u[0] + s * v[0], q * u[1] + s * v[1], q * u[2] + s * v[2]]);
                }
            }
        }
        Ok(obs)
    }

    /// Replace the matrix used for `axis` at party `j` by n.sigma.
    pub fn set(&mut self, j: usize, axis: Axis, n: BlochVector) {
        self.per_party[j][axis.pauli() as usize] = bloch_operator(n);
    }

    pub fn set_matrix(&mut self, j: usize, axis: Axis, m: ComplexMatrix) {
        self.per_party[j][axis.pauli() as usize] = m;
    }

    pub fn get(&self, j: usize, p: Pauli) -> &ComplexMatrix {
        &self.per_party[j][p as usize]
    }

    pub fn n(&self) -> usize {
        self.per_party.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coeff: f64,
    pub letters: Vec<Pauli>,
}

impl Term {
    pub fn label(&self) -> String {
        self.letters.iter().map(|p| p.as_char()).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.iter().all(|p| *p == Pauli::I)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WitnessSpec {
    pub name: String,
    pub n: usize,
    pub terms: Vec<Term>,
    pub constant_offset: f64,
    pub matrix: ComplexMatrix,
}

impl WitnessSpec {
    /// sum_t coeff_t (x)_j obs_j(letter) + offset * I
    pub fn assemble(
        name: String,
        n: usize,
        terms: Vec<Term>,
        constant_offset: f64,
        obs: &LocalObservables,
    ) -> Result<Self> {
        if obs.n() != n {
            return Err(GmeError::DimensionMismatch {
                expected: n,
                actual: obs.n(),
            });
        }
        for t in &terms {
            if t.letters.len() != n {
                return Err(GmeError::Invalid(format!(
                    "term {} has {} letters for {} parties",
                    t.label(),
                    t.letters.len(),
                    n
                )));
            }
        }
        let dim = 1usize << n;
        let mut matrix = ComplexMatrix::identity(dim).scale(constant_offset);
        for t in &terms {
            let factors: Vec<&ComplexMatrix> =
                t.letters.iter().enumerate().map(|(j, p)| obs.get(j, *p)).collect();
            matrix.axpy(t.coeff, &kron_all(factors));
        }
        matrix.ensure_hermitian()?;
        Ok(Self {
            name,
            n,
            terms,
            constant_offset,
            matrix,
        })
    }

    /// Same terms with different local observables.
    pub fn rebuild(&self, obs: &LocalObservables) -> Result<Self> {
        Self::assemble(
            self.name.clone(),
            self.n,
            self.terms.clone(),
            self.constant_offset,
            obs,
        )
    }

    /// Term list with identity strings folded into the offset.
    pub fn simplified(&self) -> (Vec<Term>, f64) {
        let mut offset = self.constant_offset;
        let mut out = Vec::new();
        for t in &self.terms {
            if t.is_identity() {
                offset += t.coeff;
            } else {
                out.push(t.clone());
            }
        }
        (out, offset)
    }

    pub fn coefficient_sum(&self) -> f64 {
        self.terms.iter().map(|t| t.coeff).sum::<f64>() + self.constant_offset
    }
}

fn letters(s: &str) -> Vec<Pauli> {
    s.chars().map(|c| Pauli::from_char(c).unwrap()).collect()
}

fn parse_terms(list: &[&str]) -> Vec<Term> {
    list.iter()
        .map(|s| Term {
            coeff: 1.0,
            letters: letters(s),
        })
        .collect()
}

pub const D3_TERMS: [&str; 6] = ["XXI", "XIX", "IXX", "YYI", "YIY", "IYY"];
pub const C4_TERMS: [&str; 6] = ["XZII", "XIXZ", "IZXZ", "ZXZI", "IIZX", "ZXIX"];

/// Real part of (x)(X + iY): strings with an even number k of Y, coefficient (-1)^{k/2},
/// in lexicographic order with X before Y.
pub fn mermin_terms(n: usize) -> Result<Vec<Term>> {
    if !(2..=10).contains(&n) {
        return Err(GmeError::OutOfRange {
            name: "n",
            value: n as f64,
            min: 2.0,
            max: 10.0,
        });
    }
    let mut out = Vec::with_capacity(1 << (n - 1));
    for mask in 0..(1usize << n) {
        let k = mask.count_ones() as usize;
        if k % 2 == 1 {
            continue;
        }
        let letters = (0..n)
            .map(|j| if mask >> (n - 1 - j) & 1 == 1 { Pauli::Y } else { Pauli::X })
            .collect();
        out.push(Term {
            coeff: if (k / 2) % 2 == 0 { 1.0 } else { -1.0 },
            letters,
        });
    }
    Ok(out)
}

/// 2^{n-2} X..X plus the expansion of prod_j (Z_{j-1} Z_j + 1): every even-weight Z string,
/// including the identity, with coefficient 1. The -1 lives in the offset.
pub fn stabilizer_terms(n: usize) -> Result<Vec<Term>> {
    if !(3..=10).contains(&n) {
        return Err(GmeError::OutOfRange {
            name: "n",
            value: n as f64,
            min: 3.0,
            max: 10.0,
        });
    }
    let mut out = vec![Term {
        coeff: (1usize << (n - 2)) as f64,
        letters: vec![Pauli::X; n],
    }];
    // bond subset -> Z on sites touched an odd number of times
    let mut zs: Vec<Vec<Pauli>> = (0..(1usize << (n - 1)))
        .map(|bonds| {
            let mut z = vec![false; n];
            for b in 0..(n - 1) {
                if bonds >> b & 1 == 1 {
                    z[b] ^= true;
                    z[b + 1] ^= true;
                }
            }
            z.into_iter().map(|on| if on { Pauli::Z } else { Pauli::I }).collect()
        })
        .collect();
    zs.sort();
    for letters in zs {
        out.push(Term { coeff: 1.0, letters });
    }
    Ok(out)
}

/// Ideal or tilted Mermin witness.
pub fn mermin_witness(n: usize, tilts: Option<&ImprecisionBudget>) -> Result<WitnessSpec> {
    build(WitnessKind::Mermin(n), tilts)
}

pub fn stabilizer_witness(n: usize, tilts: Option<&ImprecisionBudget>) -> Result<WitnessSpec> {
    build(WitnessKind::Stabilizer(n), tilts)
}

pub fn w_witness_d3(tilts: Option<&ImprecisionBudget>) -> Result<WitnessSpec> {
    build(WitnessKind::W3, tilts)
}

pub fn cluster_witness_c4(tilts: Option<&ImprecisionBudget>) -> Result<WitnessSpec> {
    build(WitnessKind::Cluster4, tilts)
}

fn build(kind: WitnessKind, tilts: Option<&ImprecisionBudget>) -> Result<WitnessSpec> {
    match tilts {
        None => kind.ideal(),
        Some(b) => {
            if b.n() != kind.n() {
                return Err(GmeError::DimensionMismatch {
                    expected: kind.n(),
                    actual: b.n(),
                });
            }
            kind.tilted(b)
        }
    }
}

/// M_k = M_{k-1} A0 - N_{k-1} A1, N_k = M_{k-1} A1 + N_{k-1} A0, with M_1 = A0, N_1 = A1.
pub fn mermin_recursive(observables: &[(ComplexMatrix, ComplexMatrix)]) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let ((a0, a1), rest) = observables
        .split_first()
        .ok_or_else(|| GmeError::Invalid("no parties".into()))?;
    for (x, y) in observables {
        x.ensure_hermitian()?;
        y.ensure_hermitian()?;
    }
    let (mut m, mut nn) = (a0.clone(), a1.clone());
    for (b0, b1) in rest {
        let m2 = &m.kron(b0) - &nn.kron(b1);
        let n2 = &m.kron(b1) + &nn.kron(b0);
        m = m2;
        nn = n2;
    }
    Ok((m, nn))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorRecord {
    pub letters: String,
    pub value: f64,
    pub std: f64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub reconstructed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorFixture {
    pub witness: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<String>,
    pub records: Vec<CorrelatorRecord>,
}

impl CorrelatorFixture {
    pub fn from_json(s: &str) -> Result<Self> {
        let f: CorrelatorFixture = serde_json::from_str(s).map_err(|e| GmeError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        for r in &f.records {
            if r.std < 0.0 || r.value.abs() > 1.0 + 3.0 * r.std {
                return Err(GmeError::Invalid(format!(
                    "record {} has value {} with std {}",
                    r.letters, r.value, r.std
                )));
            }
        }
        Ok(f)
    }

    pub fn kind(&self) -> Result<WitnessKind> {
        self.witness.parse()
    }
}

/// Witness value and Gaussian error from one record per non-identity term.
pub fn eval_from_correlators(spec: &WitnessSpec, records: &[CorrelatorRecord]) -> Result<(f64, f64)> {
    let mut by_label: HashMap<String, &CorrelatorRecord> = HashMap::new();
    for r in records {
        let key: String = r
            .letters
            .chars()
            .map(|c| if c == '1' { 'I' } else { c.to_ascii_uppercase() })
            .collect();
        if by_label.insert(key.clone(), r).is_some() {
            return Err(GmeError::DuplicateRecord(key));
        }
    }
    let mut value = spec.constant_offset;
    let mut var = 0.0;
    for t in &spec.terms {
        if t.is_identity() {
            value += t.coeff;
            continue;
        }
        let r = by_label
            .get(&t.label())
            .ok_or_else(|| GmeError::MissingRecord(t.label()))?;
        value += t.coeff * r.value;
        var += t.coeff * t.coeff * r.std * r.std;
    }
    Ok((value, var.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{expectation, max_eigenvalue, StateVector};
    use crate::states::{cluster_state4, ghz_state, w_state, Sign};

    #[test]
    fn mermin4_term_order_and_signs() {
        let t = mermin_terms(4).unwrap();
        let labels: Vec<String> = t.iter().map(|t| t.label()).collect();
        assert_eq!(labels, ["XXXX", "XXYY", "XYXY", "XYYX", "YXXY", "YXYX", "YYXX", "YYYY"]);
        let signs: Vec<f64> = t.iter().map(|t| t.coeff).collect();
        assert_eq!(signs, [1.0, -1.0, -1.0, -1.0, -1.0, -1.0, -1.0, 1.0]);
    }

    #[test]
    fn stabilizer4_terms() {
        let s = stabilizer_witness(4, None).unwrap();
        assert_eq!(s.terms.len(), 9);
        assert_eq!(s.terms[0].coeff, 4.0);
        let (simple, offset) = s.simplified();
        assert_eq!(offset, 0.0);
        let mut labels: Vec<String> = simple.iter().map(|t| t.label()).collect();
        labels.sort();
        assert_eq!(labels, ["IIZZ", "IZIZ", "IZZI", "XXXX", "ZIIZ", "ZIZI", "ZZII", "ZZZZ"]);
    }

    #[test]
    fn ideal_values() {
        let g4 = ghz_state(4, Sign::Plus).unwrap();
        let m4 = mermin_witness(4, None).unwrap();
        assert!((expectation(&m4.matrix, &g4).unwrap() - 8.0).abs() < 1e-12);
        let gm = ghz_state(4, Sign::Minus).unwrap();
        assert!((expectation(&m4.matrix, &gm).unwrap() + 8.0).abs() < 1e-12);
        let g3 = ghz_state(3, Sign::Plus).unwrap();
        let m3 = mermin_witness(3, None).unwrap();
        assert!((expectation(&m3.matrix, &g3).unwrap() - 4.0).abs() < 1e-12);
        let w4 = stabilizer_witness(4, None).unwrap();
        assert!((expectation(&w4.matrix, &g4).unwrap() - 11.0).abs() < 1e-12);
        assert!((max_eigenvalue(&w4.matrix).unwrap() - 11.0).abs() < 1e-10);
        let w3 = stabilizer_witness(3, None).unwrap();
        assert!((expectation(&w3.matrix, &g3).unwrap() - 5.0).abs() < 1e-12);
        // |+> (x) ghz3 reaches 2^{n-1} - 1; |0> (x) ghz3 only gets the three in-block ZZ pairs
        let plus = StateVector::new(vec![crate::linalg::ONE, crate::linalg::ONE]).unwrap();
        assert!((expectation(&w4.matrix, &plus.kron(&g3)).unwrap() - 7.0).abs() < 1e-12);
        let zero = StateVector::basis(1, 0).kron(&g3);
        assert!((expectation(&w4.matrix, &zero).unwrap() - 3.0).abs() < 1e-12);
        let d3 = w_witness_d3(None).unwrap();
        assert!((expectation(&d3.matrix, &w_state()).unwrap() - 4.0).abs() < 1e-12);
        assert!((max_eigenvalue(&d3.matrix).unwrap() - 4.0).abs() < 1e-10);
        let c4 = cluster_witness_c4(None).unwrap();
        assert!((expectation(&c4.matrix, &cluster_state4()).unwrap() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn recursion_matches_expansion() {
        for n in 2..=6 {
            let obs: Vec<_> = (0..n).map(|_| (Pauli::X.matrix(), Pauli::Y.matrix())).collect();
            let (m, _) = mermin_recursive(&obs).unwrap();
            let direct = mermin_witness(n, None).unwrap();
            assert!(m.max_abs_diff(&direct.matrix) <= 1e-12, "n={n}");
        }
        let obs2: Vec<_> = (0..2).map(|_| (Pauli::X.matrix(), Pauli::Y.matrix())).collect();
        let (m2, n2) = mermin_recursive(&obs2).unwrap();
        let xx = Pauli::X.matrix().kron(&Pauli::X.matrix());
        let yy = Pauli::Y.matrix().kron(&Pauli::Y.matrix());
        assert!(m2.max_abs_diff(&(&xx - &yy)) < 1e-15);
        let obs4: Vec<_> = (0..4).map(|_| (Pauli::X.matrix(), Pauli::Y.matrix())).collect();
        let (m4, _) = mermin_recursive(&obs4).unwrap();
        let split = &m2.kron(&m2) - &n2.kron(&n2);
        assert!(m4.max_abs_diff(&split) < 1e-12);
    }

    #[test]
    fn zero_tilt_is_ideal() {
        for kind in [
            WitnessKind::Mermin(4),
            WitnessKind::Stabilizer(4),
            WitnessKind::Stabilizer(3),
            WitnessKind::W3,
            WitnessKind::Cluster4,
        ] {
            let b = ImprecisionBudget::ideal(kind.n());
            let t = kind.tilted(&b).unwrap();
            assert!(t.matrix.max_abs_diff(&kind.ideal().unwrap().matrix) <= 1e-12);
        }
    }

    #[test]
    fn correlator_matching_errors() {
        let spec = mermin_witness(3, None).unwrap();
        let rec = |l: &str| CorrelatorRecord {
            letters: l.into(),
            value: 1.0,
            std: 0.0,
            reconstructed: false,
        };
        let all: Vec<_> = ["XXX", "XYY", "YXY", "YYX"].iter().map(|l| rec(l)).collect();
        let (v, s) = eval_from_correlators(&spec, &all).unwrap();
        assert_eq!((v, s), (spec.coefficient_sum(), 0.0));
        assert!(matches!(
            eval_from_correlators(&spec, &all[..3]),
            Err(GmeError::MissingRecord(_))
        ));
        let mut dup = all.clone();
        dup.push(rec("XXX"));
        assert!(matches!(
            eval_from_correlators(&spec, &dup),
            Err(GmeError::DuplicateRecord(_))
        ));
    }

    #[test]
    fn labels_parse() {
        assert_eq!("mermin4".parse::<WitnessKind>().unwrap(), WitnessKind::Mermin(4));
        assert_eq!("stabilizer3".parse::<WitnessKind>().unwrap(), WitnessKind::Stabilizer(3));
        assert_eq!("c4".parse::<WitnessKind>().unwrap(), WitnessKind::Cluster4);
        assert!("bogus".parse::<WitnessKind>().is_err());
    }
}
