//! Dense complex linear algebra for operators on at most ten qubits.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::error::{GmeError, Result};
use crate::tol;

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Row-major dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m.data[i * dim + i] = ONE;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(GmeError::DimensionMismatch {
                expected: rows * cols,
                actual: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, v) in values.iter().enumerate() {
            m.data[i * n + i] = C64::new(*v, 0.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn dagger(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, k: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * k).collect(),
        }
    }

    pub fn scale_c(&self, k: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * k).collect(),
        }
    }

    /// self += k * other
    pub fn axpy(&mut self, k: f64, other: &ComplexMatrix) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * k;
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// max_ij |M_ij - conj(M_ji)|; infinite for non-square input.
    pub fn hermiticity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut d: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                d = d.max((self.data[i * n + j] - self.data[j * n + i].conj()).norm());
            }
        }
        d
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_defect() <= tol::current().hermitian
    }

    pub fn ensure_hermitian(&self) -> Result<()> {
        let defect = self.hermiticity_defect();
        if defect <= tol::current().hermitian {
            Ok(())
        } else {
            Err(GmeError::NotHermitian { defect })
        }
    }

    pub fn matmul(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.cols != other.rows {
            return Err(GmeError::DimensionMismatch {
                expected: self.cols,
                actual: other.rows,
            });
        }
        let mut out = ComplexMatrix::zeros(self.rows, other.cols);
        let m = other.cols;
        for i in 0..self.rows {
            let orow = &mut out.data[i * m..(i + 1) * m];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let brow = &other.data[k * m..(k + 1) * m];
                for (o, b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        if self.cols != v.len() {
            return Err(GmeError::DimensionMismatch {
                expected: self.cols,
                actual: v.len(),
            });
        }
        Ok(self
            .data
            .chunks_exact(self.cols)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// <u| M |v>
    pub fn sandwich(&self, u: &[C64], v: &[C64]) -> Result<C64> {
        let mv = self.apply(v)?;
        if u.len() != mv.len() {
            return Err(GmeError::DimensionMismatch {
                expected: mv.len(),
                actual: u.len(),
            });
        }
        Ok(u.iter().zip(&mv).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn kron(&self, other: &ComplexMatrix) -> ComplexMatrix {
        kron(self, other)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs).expect("matrix product dimension mismatch")
    }
}

/// Kronecker product: result[(i*br + k), (j*bc + l)] = a[i,j] * b[k,l].
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (br, bc) = (b.rows, b.cols);
    let cols = a.cols * bc;
    let mut out = ComplexMatrix::zeros(a.rows * br, cols);
    for i in 0..a.rows {
        for j in 0..a.cols {
            let s = a[(i, j)];
            if s == ZERO {
                continue;
            }
            for k in 0..br {
                let row = (i * br + k) * cols + j * bc;
                for l in 0..bc {
                    out.data[row + l] = s * b.data[k * bc + l];
                }
            }
        }
    }
    out
}

pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a ComplexMatrix>) -> ComplexMatrix {
    factors
        .into_iter()
        .fold(ComplexMatrix::identity(1), |acc, f| kron(&acc, f))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_char(c: char) -> Option<Pauli> {
        match c {
            'I' | '1' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn matrix(self) -> ComplexMatrix {
        let d = |v: [C64; 4]| ComplexMatrix::from_vec(2, 2, v.to_vec()).unwrap();
        match self {
            Pauli::I => ComplexMatrix::identity(2),
            Pauli::X => d([ZERO, ONE, ONE, ZERO]),
            Pauli::Y => d([ZERO, -I, I, ZERO]),
            Pauli::Z => d([ONE, ZERO, ZERO, -ONE]),
        }
    }
}

pub fn pauli_string(letters: &[Pauli]) -> ComplexMatrix {
    let mats: Vec<ComplexMatrix> = letters.iter().map(|p| p.matrix()).collect();
    kron_all(&mats)
}

/// The 2x2 observable n.sigma for a real 3-vector.
pub fn bloch_operator(n: [f64; 3]) -> ComplexMatrix {
    ComplexMatrix::from_vec(
        2,
        2,
        vec![
            C64::new(n[2], 0.0),
            C64::new(n[0], -n[1]),
            C64::new(n[0], n[1]),
            C64::new(-n[2], 0.0),
        ],
    )
    .unwrap()
}

/// Normalized pure state on 2^n amplitudes.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amps: Vec<C64>,
}

impl StateVector {
    /// Normalizes the input. Rejects zero vectors and non power-of-two lengths.
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        let dim = amps.len();
        if dim < 2 || !dim.is_power_of_two() {
            return Err(GmeError::Invalid(format!(
                "state dimension {dim} is not a power of two"
            )));
        }
        let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(GmeError::Invalid("zero or non-finite state vector".into()));
        }
        Ok(Self {
            amps: amps.into_iter().map(|z| z / norm).collect(),
        })
    }

    pub fn basis(n_qubits: usize, index: usize) -> Self {
        let mut amps = vec![ZERO; 1 << n_qubits];
        amps[index] = ONE;
        Self { amps }
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn n_qubits(&self) -> usize {
        self.amps.len().trailing_zeros() as usize
    }

    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn kron(&self, other: &StateVector) -> StateVector {
        let mut amps = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        StateVector { amps }
    }

    /// |psi><psi|
    pub fn projector(&self) -> ComplexMatrix {
        let n = self.dim();
        ComplexMatrix::from_fn(n, n, |i, j| self.amps[i] * self.amps[j].conj())
    }
}

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    m: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        let t = tol::current();
        m.ensure_hermitian()?;
        let tr = m.trace();
        if (tr.re - 1.0).abs() > t.trace || tr.im.abs() > t.trace {
            return Err(GmeError::Invalid(format!("density matrix trace {tr}")));
        }
        let min = *herm_eig(&m, EigMode::Full)?.values.last().unwrap();
        if min < -t.psd {
            return Err(GmeError::Invalid(format!(
                "density matrix has negative eigenvalue {min:.3e}"
            )));
        }
        Ok(Self { m })
    }

    pub fn from_pure(psi: &StateVector) -> Self {
        Self { m: psi.projector() }
    }

    /// Mixture sum w_i * rho_i; weights must be a probability vector.
    pub fn mixture(parts: &[(f64, &DensityMatrix)]) -> Result<Self> {
        let dim = parts
            .first()
            .ok_or_else(|| GmeError::Invalid("empty mixture".into()))?
            .1
            .dim();
        let mut m = ComplexMatrix::zeros(dim, dim);
        for (w, rho) in parts {
            if rho.dim() != dim {
                return Err(GmeError::DimensionMismatch {
                    expected: dim,
                    actual: rho.dim(),
                });
            }
            m.axpy(*w, &rho.m);
        }
        Self::new(m)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.m
    }

    pub fn dim(&self) -> usize {
        self.m.rows()
    }
}

/// Anything an observable can be evaluated on.
pub trait QuantumState {
    fn dim(&self) -> usize;
    /// <op> without checks; may carry a small imaginary part.
    fn raw_expectation(&self, op: &ComplexMatrix) -> C64;
}

impl QuantumState for StateVector {
    fn dim(&self) -> usize {
        self.amps.len()
    }
    fn raw_expectation(&self, op: &ComplexMatrix) -> C64 {
        op.sandwich(&self.amps, &self.amps).unwrap()
    }
}

impl QuantumState for DensityMatrix {
    fn dim(&self) -> usize {
        self.m.rows()
    }
    fn raw_expectation(&self, op: &ComplexMatrix) -> C64 {
        // tr(op rho) = sum_ij op_ij rho_ji
        let n = self.m.rows();
        let (a, r) = (op.data(), self.m.data());
        let mut s = ZERO;
        for i in 0..n {
            for j in 0..n {
                s += a[i * n + j] * r[j * n + i];
            }
        }
        s
    }
}

/// <psi|op|psi> or tr(op rho) for Hermitian op.
pub fn expectation<S: QuantumState + ?Sized>(op: &ComplexMatrix, state: &S) -> Result<f64> {
    if !op.is_square() || op.rows() != state.dim() {
        return Err(GmeError::DimensionMismatch {
            expected: state.dim(),
            actual: op.rows(),
        });
    }
    op.ensure_hermitian()?;
    let z = state.raw_expectation(op);
    let scale = 1.0 + op.frobenius_norm();
    if z.im.abs() > tol::current().imag_residue * scale {
        return Err(GmeError::Invalid(format!(
            "expectation has imaginary residue {:.3e}",
            z.im
        )));
    }
    Ok(z.re)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigMode {
    MaxOnly,
    Full,
}

/// Eigenvalues in descending order; eigenvectors (if requested) in matching order.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: Option<Vec<Vec<C64>>>,
}

impl Eigen {
    pub fn max(&self) -> f64 {
        self.values[0]
    }
    pub fn min(&self) -> f64 {
        *self.values.last().unwrap()
    }
}

const MAX_SWEEPS: usize = 60;

/// Hermitian eigendecomposition by cyclic complex Jacobi rotations.
///
/// `MaxOnly` returns the top eigenpair only.
pub fn herm_eig(m: &ComplexMatrix, mode: EigMode) -> Result<Eigen> {
    if !m.is_square() {
        return Err(GmeError::DimensionMismatch {
            expected: m.rows(),
            actual: m.cols(),
        });
    }
    m.ensure_hermitian()?;
    let (vals, vecs) = jacobi(m)?;
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
    let n = m.rows();
    let take = match mode {
        EigMode::Full => n,
        EigMode::MaxOnly => 1,
    };
    let values = order[..take].iter().map(|&k| vals[k]).collect();
    let vectors = order[..take]
        .iter()
        .map(|&k| (0..n).map(|i| vecs[i * n + k]).collect())
        .collect();
    Ok(Eigen {
        values,
        vectors: Some(vectors),
    })
}

pub fn max_eigenvalue(m: &ComplexMatrix) -> Result<f64> {
    Ok(herm_eig(m, EigMode::MaxOnly)?.values[0])
}

/// Smallest eigenvalue with its eigenvector.
pub fn min_eigenpair(m: &ComplexMatrix) -> Result<(f64, Vec<C64>)> {
    let neg = m.scale(-1.0);
    let e = herm_eig(&neg, EigMode::MaxOnly)?;
    Ok((-e.values[0], e.vectors.unwrap().swap_remove(0)))
}

/// Returns (eigenvalues unsorted, eigenvector matrix V row-major with eigenvectors as columns).
fn jacobi(m: &ComplexMatrix) -> Result<(Vec<f64>, Vec<C64>)> {
    let n = m.rows();
    let mut a = m.data().to_vec();
    // symmetrize so rounding noise in the input does not leak into the rotations
    for i in 0..n {
        a[i * n + i] = C64::new(a[i * n + i].re, 0.0);
        for j in (i + 1)..n {
            let h = (a[i * n + j] + a[j * n + i].conj()) * 0.5;
            a[i * n + j] = h;
            a[j * n + i] = h.conj();
        }
    }
    let mut v = vec![ZERO; n * n];
    for i in 0..n {
        v[i * n + i] = ONE;
    }
    let fro = m.frobenius_norm();
    if n == 1 || fro == 0.0 {
        return Ok(((0..n).map(|i| a[i * n + i].re).collect(), v));
    }
    let target = (4.0 * f64::EPSILON * n as f64 * fro).powi(2);
    let mut off = off_diag_sq(&a, n);
    let mut sweeps = 0;
    while off > target {
        if sweeps == MAX_SWEEPS {
            return Err(GmeError::NoConvergence {
                sweeps,
                residual: off.sqrt(),
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                let r = apq.norm();
                if r <= f64::MIN_POSITIVE {
                    continue;
                }
                let app = a[p * n + p].re;
                let aqq = a[q * n + q].re;
                // skip rotations that cannot change the diagonal at working precision
                if sweeps > 3 && r * 1e18 < app.abs().min(aqq.abs()) {
                    a[p * n + q] = ZERO;
                    a[q * n + p] = ZERO;
                    continue;
                }
                let ph = apq / r;
                let tau = (aqq - app) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // U = [[c, s*ph], [-s*conj(ph), c]] on (p, q)
                let sp = ph * s;
                let spc = sp.conj();
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = akp * c - akq * spc;
                    a[k * n + q] = akp * sp + akq * c;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = apk * c - aqk * sp;
                    a[q * n + k] = apk * spc + aqk * c;
                }
                a[p * n + q] = ZERO;
                a[q * n + p] = ZERO;
                a[p * n + p] = C64::new(a[p * n + p].re, 0.0);
                a[q * n + q] = C64::new(a[q * n + q].re, 0.0);
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = vkp * c - vkq * spc;
                    v[k * n + q] = vkp * sp + vkq * c;
                }
            }
        }
        off = off_diag_sq(&a, n);
    }
    Ok(((0..n).map(|i| a[i * n + i].re).collect(), v))
}

fn off_diag_sq(a: &[C64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[i * n + j].norm_sqr();
            }
        }
    }
    s
}

/// ||m v - lambda v||_2
pub fn eigen_residual(m: &ComplexMatrix, lambda: f64, v: &[C64]) -> f64 {
    let mv = m.apply(v).unwrap();
    mv.iter()
        .zip(v)
        .map(|(a, b)| (a - b * lambda).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(n, n, |_, _| {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    }

    fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
        let a = random_matrix(rng, n);
        (&a + &a.dagger()).scale(0.5)
    }

    #[test]
    fn pauli_algebra() {
        let (x, y, z) = (Pauli::X.matrix(), Pauli::Y.matrix(), Pauli::Z.matrix());
        let id = ComplexMatrix::identity(2);
        for p in [&x, &y, &z] {
            assert!((p * p).max_abs_diff(&id) <= 1e-15);
        }
        assert!((&x * &y).max_abs_diff(&z.scale_c(I)) <= 1e-15);
        assert!((&y * &z).max_abs_diff(&x.scale_c(I)) <= 1e-15);
        assert!((&z * &x).max_abs_diff(&y.scale_c(I)) <= 1e-15);
    }

    #[test]
    fn kron_identity_and_flip() {
        let id2 = ComplexMatrix::identity(2);
        assert_eq!(kron(&id2, &id2), ComplexMatrix::identity(4));
        let xx = kron(&Pauli::X.matrix(), &Pauli::X.matrix());
        let out = xx.apply(StateVector::basis(2, 0).amplitudes()).unwrap();
        assert_eq!(out, StateVector::basis(2, 3).amplitudes());
    }

    #[test]
    fn kron_layout() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = ComplexMatrix::from_fn(2, 3, |_, _| C64::new(rng.gen(), rng.gen()));
        let b = ComplexMatrix::from_fn(3, 2, |_, _| C64::new(rng.gen(), rng.gen()));
        let k = kron(&a, &b);
        assert_eq!((k.rows(), k.cols()), (6, 6));
        for i in 0..2 {
            for j in 0..3 {
                for p in 0..3 {
                    for q in 0..2 {
                        assert_eq!(k[(i * 3 + p, j * 2 + q)], a[(i, j)] * b[(p, q)]);
                    }
                }
            }
        }
    }

    #[test]
    fn kron_associative() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let (a, b, c) = (
                random_matrix(&mut rng, 2),
                random_matrix(&mut rng, 2),
                random_matrix(&mut rng, 2),
            );
            let l = kron(&kron(&a, &b), &c);
            let r = kron(&a, &kron(&b, &c));
            assert!(l.max_abs_diff(&r) <= 1e-15);
        }
    }

    #[test]
    fn zz_spectrum() {
        let zz = kron(&Pauli::Z.matrix(), &Pauli::Z.matrix());
        let e = herm_eig(&zz, EigMode::Full).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0, -1.0, -1.0]);
    }

    #[test]
    fn small_spectra() {
        let e = herm_eig(&Pauli::Z.matrix(), EigMode::Full).unwrap();
        assert_eq!(e.values, vec![1.0, -1.0]);
        let m = &kron(&Pauli::X.matrix(), &Pauli::X.matrix())
            + &kron(&Pauli::Z.matrix(), &Pauli::Z.matrix());
        assert!((max_eigenvalue(&m).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn expectation_basics() {
        let z0 = expectation(&Pauli::Z.matrix(), &StateVector::basis(1, 0)).unwrap();
        assert_eq!(z0, 1.0);
        let bad = ComplexMatrix::from_vec(2, 2, vec![ZERO, ONE, ZERO, ZERO]).unwrap();
        assert!(matches!(
            expectation(&bad, &StateVector::basis(1, 0)),
            Err(GmeError::NotHermitian { .. })
        ));
        assert!(matches!(
            expectation(&Pauli::Z.matrix(), &StateVector::basis(2, 0)),
            Err(GmeError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn residuals_trace_and_rayleigh() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..=6 {
            let dim = 1 << n;
            let m = random_hermitian(&mut rng, dim);
            let e = herm_eig(&m, EigMode::Full).unwrap();
            let fro = m.frobenius_norm();
            for (lam, v) in e.values.iter().zip(e.vectors.as_ref().unwrap()) {
                assert!(eigen_residual(&m, *lam, v) <= 1e-9 * fro);
            }
            assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
            let sum: f64 = e.values.iter().sum();
            assert!((sum - m.trace().re).abs() <= 1e-9);
            for _ in 0..10 {
                let u = StateVector::new(
                    (0..dim)
                        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                        .collect(),
                )
                .unwrap();
                assert!(e.max() >= expectation(&m, &u).unwrap() - 1e-12);
            }
        }
    }

    #[test]
    fn degenerate_and_diagonal_inputs() {
        let m = ComplexMatrix::diag(&[3.0, -1.0, 3.0, 0.5]);
        let e = herm_eig(&m, EigMode::Full).unwrap();
        assert_eq!(e.values, vec![3.0, 3.0, 0.5, -1.0]);
        let z = ComplexMatrix::zeros(4, 4);
        assert_eq!(herm_eig(&z, EigMode::MaxOnly).unwrap().max(), 0.0);
    }

    #[test]
    fn density_matrix_validation() {
        let psi = StateVector::new(vec![ONE, ONE]).unwrap();
        assert!(DensityMatrix::new(psi.projector()).is_ok());
        assert!(DensityMatrix::new(ComplexMatrix::identity(2)).is_err());
        assert!(DensityMatrix::new(ComplexMatrix::diag(&[1.5, -0.5])).is_err());
    }
}
