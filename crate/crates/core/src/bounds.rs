//! Separability bounds corrected for imprecise measurements.
//!
//! Closed forms cover the Mermin family (all n), the stabilizer witness for n = 3, 4, the
//! three-qubit W witness and the four-qubit cluster witness. Numeric bounds put party 1 in a
//! real state |chi(theta)> (or a fixed equatorial state for the W witness), contract it out of
//! the tilted witness and take the top eigenvalue of what remains; theta is swept on a grid
//! and refined by golden section. The brute-force oracle is a lower bound only.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, PI, SQRT_2};
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{check_range, GmeError, Result};
use crate::linalg::{expectation, herm_eig, max_eigenvalue, ComplexMatrix, EigMode, StateVector, C64, ZERO};
use crate::measurement::ImprecisionBudget;
use crate::optimize::{derive_seed, golden_max, grid_then_golden};
use crate::states::{chi_state, spoof_state};
use crate::witness::{LocalObservables, TiltPlane, WitnessKind, WitnessSpec};

/// Largest imprecision for which the corrected bounds are informative, (2 - sqrt2)/4.
pub const EPS_MAX: f64 = 0.146_446_609_406_726_24;

/// Default theta grid for the numeric sweeps.
pub const THETA_GRID: usize = 721;
const THETA_TOL: f64 = 1e-8;

pub const SEESAW_RESTARTS: usize = 20;
pub const SEESAW_ALTERNATIONS: usize = 100;
pub const BRUTE_FORCE_SEED: u64 = 42;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    Biseparable,
    FullySeparable,
    SinglePartyImprecise,
    MultiQubitPartition,
    Quantum,
    DeviceIndependent,
}

impl BoundKind {
    pub fn label(self) -> &'static str {
        match self {
            BoundKind::Biseparable => "biseparable",
            BoundKind::FullySeparable => "fully-separable",
            BoundKind::SinglePartyImprecise => "single-party-imprecise",
            BoundKind::MultiQubitPartition => "multi-qubit-partition",
            BoundKind::Quantum => "quantum",
            BoundKind::DeviceIndependent => "device-independent",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    ClosedForm,
    /// the stabilizer-family numeric curve is a conjectured optimum, not a certified one
    NumericThetaSweep,
    BruteForce,
}

impl Regime {
    pub fn label(self) -> &'static str {
        match self {
            Regime::ClosedForm => "closed-form",
            Regime::NumericThetaSweep => "numeric-theta-sweep",
            Regime::BruteForce => "brute-force",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone)]
pub struct BoundResult {
    pub witness: String,
    pub n: usize,
    pub eps: f64,
    pub kind: BoundKind,
    pub value: f64,
    pub regime: Regime,
    pub saturating_theta: Option<f64>,
    pub saturating_state: Option<StateVector>,
}

impl BoundResult {
    fn closed(witness: impl Into<String>, n: usize, eps: f64, kind: BoundKind, value: f64) -> Self {
        Self {
            witness: witness.into(),
            n,
            eps,
            kind,
            value,
            regime: Regime::ClosedForm,
            saturating_theta: None,
            saturating_state: None,
        }
    }
}

/// Two disjoint, non-empty blocks of 1-based party indices covering 1..=n.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionSpec {
    pub a: Vec<usize>,
    pub b: Vec<usize>,
}

impl PartitionSpec {
    pub fn new(n: usize, a: Vec<usize>, b: Vec<usize>) -> Result<Self> {
        if a.is_empty() || b.is_empty() {
            return Err(GmeError::Invalid("partition blocks must be non-empty".into()));
        }
        let mut seen = vec![false; n];
        for &k in a.iter().chain(&b) {
            if k == 0 || k > n || seen[k - 1] {
                return Err(GmeError::Invalid(format!(
                    "partition {a:?}|{b:?} is not a disjoint cover of 1..={n}"
                )));
            }
            seen[k - 1] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(GmeError::Invalid(format!(
                "partition {a:?}|{b:?} does not cover 1..={n}"
            )));
        }
        let (mut a, mut b) = (a, b);
        a.sort_unstable();
        b.sort_unstable();
        Ok(Self { a, b })
    }

    pub fn n(&self) -> usize {
        self.a.len() + self.b.len()
    }

    /// Every bipartition once, with party 1 in block a.
    pub fn all(n: usize) -> Vec<PartitionSpec> {
        let mut out = Vec::new();
        for mask in 0..(1usize << (n - 1)) {
            // bit k of mask puts party k+2 into block a
            let mut a = vec![1];
            let mut b = Vec::new();
            for k in 0..(n - 1) {
                if mask >> k & 1 == 1 {
                    a.push(k + 2);
                } else {
                    b.push(k + 2);
                }
            }
            if !b.is_empty() {
                out.push(PartitionSpec { a, b });
            }
        }
        out
    }

    pub fn label(&self) -> String {
        let s = |v: &[usize]| v.iter().map(|k| k.to_string()).collect::<String>();
        format!("{}|{}", s(&self.a), s(&self.b))
    }
}

fn alignment(eps: f64) -> (f64, f64) {
    (1.0 - 2.0 * eps, (eps * (1.0 - eps)).sqrt())
}

fn check_family(name: &'static str, n: usize) -> Result<()> {
    if n == 3 || n == 4 {
        Ok(())
    } else {
        Err(GmeError::OutOfRange {
            name,
            value: n as f64,
            min: 3.0,
            max: 4.0,
        })
    }
}

/// 2^{n-2}(1 - 2eps + 2 sqrt(eps(1-eps))) up to EPS_MAX, the device-independent 2^{n-3/2} beyond.
pub fn mermin_bisep_bound(n: usize, eps: f64) -> Result<BoundResult> {
    check_range("n", n as f64, 3.0, 10.0)?;
    check_range("epsilon", eps, 0.0, 0.5)?;
    let value = if eps <= EPS_MAX {
        let (q, r) = alignment(eps);
        2f64.powi(n as i32 - 2) * (q + 2.0 * r)
    } else {
        2f64.powf(n as f64 - 1.5)
    };
    Ok(BoundResult::closed(
        WitnessKind::Mermin(n).label(),
        n,
        eps,
        BoundKind::Biseparable,
        value,
    ))
}

pub fn mermin_di_bound(n: usize) -> Result<BoundResult> {
    check_range("n", n as f64, 3.0, 10.0)?;
    Ok(BoundResult::closed(
        WitnessKind::Mermin(n).label(),
        n,
        0.5,
        BoundKind::DeviceIndependent,
        2f64.powf(n as f64 - 1.5),
    ))
}

/// 9 * 2^{n-4} - 1 for stabilizer witnesses over partitions with at least two qubits per block.
pub fn multi_qubit_partition_bound(n: usize) -> Result<BoundResult> {
    check_range("n", n as f64, 4.0, 10.0)?;
    Ok(BoundResult::closed(
        WitnessKind::Stabilizer(n).label(),
        n,
        f64::NAN,
        BoundKind::MultiQubitPartition,
        9.0 * 2f64.powi(n as i32 - 4) - 1.0,
    ))
}

/// (2^{n-2} - 1) + 2^{n-2} sqrt(1 + 4(1-2eps) sqrt(eps(1-eps))): party 1 imprecise, others ideal.
pub fn stabilizer_single_party_bound(n: usize, eps: f64) -> Result<BoundResult> {
    check_family("n", n)?;
    check_range("epsilon", eps, 0.0, EPS_MAX)?;
    let (q, r) = alignment(eps);
    let k = 2f64.powi(n as i32 - 2);
    let value = (k - 1.0) + k * (1.0 + 4.0 * q * r).sqrt();
    Ok(BoundResult::closed(
        WitnessKind::Stabilizer(n).label(),
        n,
        eps,
        BoundKind::SinglePartyImprecise,
        value,
    ))
}

/// Value on |chi(pi/8)>^{(x)n} with every party equally imprecise.
pub fn stabilizer_fully_sep_bound(n: usize, eps: f64) -> Result<BoundResult> {
    check_family("n", n)?;
    check_range("epsilon", eps, 0.0, EPS_MAX)?;
    let (q, r) = alignment(eps);
    let value = if n == 3 {
        1.5 * (1.0 + SQRT_2) - 3.0 * SQRT_2 * eps - SQRT_2 * q.powi(3)
            + 2.0 * (3.0 + FRAC_1_SQRT_2 - 6.0 * eps + SQRT_2 * q * q) * r
    } else {
        17.0 / 4.0 + 20.0 * eps * (1.0 - eps) * q * q + 22.0 * q * r
    };
    let mut b = BoundResult::closed(
        WitnessKind::Stabilizer(n).label(),
        n,
        eps,
        BoundKind::FullySeparable,
        value,
    );
    b.saturating_theta = Some(PI / 8.0);
    Ok(b)
}

/// R_ij = sum_ab conj(phi_a) M_(a i),(b j) phi_b: contracts the leading d1-dimensional factor.
pub fn contract_first(m: &ComplexMatrix, d1: usize, phi: &[C64]) -> ComplexMatrix {
    let d2 = m.rows() / d1;
    let mut r = ComplexMatrix::zeros(d2, d2);
    for a in 0..d1 {
        for b in 0..d1 {
            let w = phi[a].conj() * phi[b];
            if w == ZERO {
                continue;
            }
            for i in 0..d2 {
                for j in 0..d2 {
                    r[(i, j)] += w * m[(a * d2 + i, b * d2 + j)];
                }
            }
        }
    }
    r
}

/// Contracts the trailing factor of dimension m.rows()/d1 with phi.
pub fn contract_second(m: &ComplexMatrix, d1: usize, phi: &[C64]) -> ComplexMatrix {
    let d2 = m.rows() / d1;
    let mut r = ComplexMatrix::zeros(d1, d1);
    for i in 0..d2 {
        for j in 0..d2 {
            let w = phi[i].conj() * phi[j];
            if w == ZERO {
                continue;
            }
            for a in 0..d1 {
                for b in 0..d1 {
                    r[(a, b)] += w * m[(a * d2 + i, b * d2 + j)];
                }
            }
        }
    }
    r
}

/// Top eigenvalue of the witness with party 1 fixed to `phi`.
pub fn reduced_max(m: &ComplexMatrix, phi: &[C64]) -> f64 {
    let r = contract_first(m, 2, phi);
    max_eigenvalue(&r).unwrap_or(f64::NEG_INFINITY)
}

/// max over theta in [0, pi) of the top eigenvalue with party 1 in |chi(theta)>.
/// Returns (theta, value, state attaining it).
pub fn theta_sweep(m: &ComplexMatrix, grid: usize) -> Result<(f64, f64, StateVector)> {
    if grid < 3 {
        return Err(GmeError::Invalid(format!("theta grid of {grid} points")));
    }
    let f = |t: f64| reduced_max(m, chi_state(t).amplitudes());
    let (theta, value) = grid_then_golden(f, 0.0, PI, grid, THETA_TOL);
    let state = attaining_state(m, &chi_state(theta))?;
    Ok((theta, value, state))
}

fn attaining_state(m: &ComplexMatrix, first: &StateVector) -> Result<StateVector> {
    let r = contract_first(m, 2, first.amplitudes());
    let e = herm_eig(&r, EigMode::MaxOnly)?;
    let v = e.vectors.unwrap().swap_remove(0);
    Ok(first.kron(&StateVector::new(v)?))
}

fn numeric_bisep(kind: WitnessKind, eps: f64, grid: usize) -> Result<(f64, f64, StateVector)> {
    let n = kind.n();
    let all = kind.tilted(&ImprecisionBudget::uniform(n, [eps; 3])?)?;
    let one = kind.tilted(&ImprecisionBudget::single_party(n, 0, eps)?)?;
    let a = theta_sweep(&all.matrix, grid)?;
    let b = theta_sweep(&one.matrix, grid)?;
    Ok(if b.1 > a.1 { b } else { a })
}

/// Numeric biseparable bound for the stabilizer witness, n = 3 or 4.
///
/// The larger of two theta sweeps: every party tilted by eps in the X-Z plane, and only
/// party 1 tilted. Ideal bound 2^{n-1} - 1 at eps = 0 without sweeping.
pub fn stabilizer_bisep_bound_numeric(n: usize, eps: f64, grid: usize) -> Result<BoundResult> {
    check_family("n", n)?;
    check_range("epsilon", eps, 0.0, 0.5)?;
    let kind = WitnessKind::Stabilizer(n);
    if eps == 0.0 {
        return Ok(BoundResult::closed(
            kind.label(),
            n,
            0.0,
            BoundKind::Biseparable,
            2f64.powi(n as i32 - 1) - 1.0,
        ));
    }
    let (theta, value, state) = numeric_bisep(kind, eps, grid)?;
    Ok(BoundResult {
        witness: kind.label(),
        n,
        eps,
        kind: BoundKind::Biseparable,
        value,
        regime: Regime::NumericThetaSweep,
        saturating_theta: Some(theta),
        saturating_state: Some(state),
    })
}

/// Curves for one witness at one eps.
#[derive(Debug, Clone)]
pub struct BoundSet {
    pub biseparable: BoundResult,
    pub single_party: BoundResult,
    pub fully_separable: Option<BoundResult>,
    pub quantum: Option<BoundResult>,
}

/// (|0> + e^{i pi/4}|1>)/sqrt2, the symmetric party-1 state for the W witness.
fn w_first_party() -> StateVector {
    StateVector::new(vec![C64::new(1.0, 0.0), C64::from_polar(1.0, FRAC_PI_4)]).unwrap()
}

pub fn w_witness_bounds(eps: f64) -> Result<BoundSet> {
    check_range("epsilon", eps, 0.0, EPS_MAX)?;
    let (q, r) = alignment(eps);
    let label = WitnessKind::W3.label();
    let biseparable = if eps == 0.0 {
        BoundResult::closed(&label, 3, 0.0, BoundKind::Biseparable, 1.0 + 5f64.sqrt())
    } else {
        let spec = WitnessKind::W3.tilted(&ImprecisionBudget::uniform(3, [eps; 3])?)?;
        let first = w_first_party();
        let value = reduced_max(&spec.matrix, first.amplitudes());
        BoundResult {
            witness: label.clone(),
            n: 3,
            eps,
            kind: BoundKind::Biseparable,
            value,
            regime: Regime::NumericThetaSweep,
            saturating_theta: Some(FRAC_PI_4),
            saturating_state: Some(attaining_state(&spec.matrix, &first)?),
        }
    };
    Ok(BoundSet {
        biseparable,
        single_party: BoundResult::closed(
            &label,
            3,
            eps,
            BoundKind::SinglePartyImprecise,
            1.0 + (5.0 + 16.0 * q * r).sqrt(),
        ),
        fully_separable: Some(BoundResult::closed(
            &label,
            3,
            eps,
            BoundKind::FullySeparable,
            3.0 * (1.0 + 4.0 * q * r),
        )),
        quantum: Some(BoundResult::closed(
            &label,
            3,
            eps,
            BoundKind::Quantum,
            2.0 * (1.0 + (1.0 + 48.0 * eps * (1.0 - eps) * q * q).sqrt()),
        )),
    })
}

pub fn cluster_witness_bounds(eps: f64) -> Result<BoundSet> {
    check_range("epsilon", eps, 0.0, EPS_MAX)?;
    let (q, r) = alignment(eps);
    let kind = WitnessKind::Cluster4;
    let label = kind.label();
    let biseparable = if eps == 0.0 {
        BoundResult::closed(&label, 4, 0.0, BoundKind::Biseparable, 4.0)
    } else {
        let (theta, value, state) = numeric_bisep(kind, eps, THETA_GRID)?;
        BoundResult {
            witness: label.clone(),
            n: 4,
            eps,
            kind: BoundKind::Biseparable,
            value,
            regime: Regime::NumericThetaSweep,
            saturating_theta: Some(theta),
            saturating_state: Some(state),
        }
    };
    let fully = 1.0
        + 2.0 * SQRT_2 * r
        + q * (4.0 * r + 3.0 * SQRT_2 + 2.0 * SQRT_2 * q * (2.0 * eps + 2.0 * r - 1.0));
    let mut fs = BoundResult::closed(&label, 4, eps, BoundKind::FullySeparable, fully);
    fs.saturating_theta = Some(PI / 8.0);
    let mut sp = BoundResult::closed(
        &label,
        4,
        eps,
        BoundKind::SinglePartyImprecise,
        2.0 * (1.0 + (1.0 + 4.0 * q * r).sqrt()),
    );
    sp.saturating_theta = Some(PI / 8.0);
    Ok(BoundSet {
        biseparable,
        single_party: sp,
        fully_separable: Some(fs),
        quantum: None,
    })
}

/// Largest eigenvalue over the ideal witness and the uniformly tilted one.
pub fn quantum_bound(kind: WitnessKind, eps: f64) -> Result<BoundResult> {
    check_range("epsilon", eps, 0.0, 0.5)?;
    let ideal = max_eigenvalue(&kind.ideal()?.matrix)?;
    let tilted = max_eigenvalue(&kind.tilted(&ImprecisionBudget::uniform(kind.n(), [eps; 3])?)?.matrix)?;
    let mut b = BoundResult::closed(kind.label(), kind.n(), eps, BoundKind::Quantum, ideal.max(tilted));
    b.regime = Regime::NumericThetaSweep;
    Ok(b)
}

/// Local observables of the saturating Mermin configuration: party 1 measures
/// qX + sY and qY + sX, everyone else measures X and Y.
pub fn saturating_observables(n: usize, eps: f64) -> Result<LocalObservables> {
    LocalObservables::from_budget(&ImprecisionBudget::single_party(n, 0, eps)?, TiltPlane::XY)
}

/// Qubit reordering: new qubit k is old qubit order[k] (0-based, qubit 0 most significant).
fn permuted_index(x: usize, n: usize, order: &[usize]) -> usize {
    let mut y = 0;
    for (k, &old) in order.iter().enumerate() {
        if x >> (n - 1 - k) & 1 == 1 {
            y |= 1 << (n - 1 - old);
        }
    }
    y
}

fn permute_matrix(m: &ComplexMatrix, n: usize, order: &[usize]) -> ComplexMatrix {
    let d = 1usize << n;
    let map: Vec<usize> = (0..d).map(|x| permuted_index(x, n, order)).collect();
    ComplexMatrix::from_fn(d, d, |i, j| m[(map[i], map[j])])
}

fn unpermute_state(v: &[C64], n: usize, order: &[usize]) -> Vec<C64> {
    let mut out = vec![ZERO; v.len()];
    for (x, a) in v.iter().enumerate() {
        out[permuted_index(x, n, order)] = *a;
    }
    out
}

fn top_vector(m: &ComplexMatrix) -> Result<(f64, Vec<C64>)> {
    let e = herm_eig(m, EigMode::MaxOnly)?;
    Ok((e.values[0], e.vectors.unwrap().swap_remove(0)))
}

/// Alternating maximization from a block-a starting state; returns (value, phi_a, phi_b).
fn seesaw(m: &ComplexMatrix, da: usize, start_a: Vec<C64>, iters: usize) -> Result<(f64, Vec<C64>, Vec<C64>)> {
    let mut a = start_a;
    let (mut val, mut b) = top_vector(&contract_first(m, da, &a))?;
    for _ in 0..iters {
        let (_, na) = top_vector(&contract_second(m, da, &b))?;
        a = na;
        let (v, nb) = top_vector(&contract_first(m, da, &a))?;
        b = nb;
        let done = (v - val).abs() < 1e-14;
        val = v;
        if done {
            break;
        }
    }
    Ok((val, a, b))
}

fn random_state(dim: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
    let mut v: Vec<C64> = (0..dim)
        .map(|_| C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
        .collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in &mut v {
        *z /= norm;
    }
    v
}

fn bloch_state(theta: f64, phi: f64) -> Vec<C64> {
    vec![C64::new((theta / 2.0).cos(), 0.0), C64::from_polar((theta / 2.0).sin(), phi)]
}

/// Best product value |phi_a>|phi_b> of the witness across one partition, with the
/// master seed used for the see-saw restarts.
pub fn bisep_brute_force_seeded(
    spec: &WitnessSpec,
    partition: &PartitionSpec,
    grid: usize,
    seed: u64,
) -> Result<BoundResult> {
    let n = spec.n;
    if n > 4 || partition.n() != n {
        return Err(GmeError::Invalid(format!(
            "brute force needs n <= 4 and a partition of {n} parties"
        )));
    }
    if grid < 2 {
        return Err(GmeError::Invalid(format!("Bloch grid of {grid} points")));
    }
    // a single-qubit block goes first so the Bloch grid can act on it
    let (first, second) = if partition.b.len() == 1 && partition.a.len() > 1 {
        (&partition.b, &partition.a)
    } else {
        (&partition.a, &partition.b)
    };
    let order: Vec<usize> = first.iter().chain(second).map(|k| k - 1).collect();
    let m = permute_matrix(&spec.matrix, n, &order);
    let da = 1usize << first.len();

    let mut starts: Vec<Vec<C64>> = Vec::new();
    if first.len() == 1 {
        let nphi = 2 * grid;
        let pts: Vec<(f64, f64)> = (0..grid)
            .flat_map(|i| {
                (0..nphi).map(move |k| {
                    (PI * i as f64 / (grid - 1) as f64, 2.0 * PI * k as f64 / nphi as f64)
                })
            })
            .collect();
        let vals: Vec<f64> = pts
            .par_iter()
            .map(|&(t, p)| {
                max_eigenvalue(&contract_first(&m, 2, &bloch_state(t, p))).unwrap_or(f64::NEG_INFINITY)
            })
            .collect();
        let mut best = 0;
        for (k, v) in vals.iter().enumerate() {
            if *v > vals[best] {
                best = k;
            }
        }
        starts.push(bloch_state(pts[best].0, pts[best].1));
    }
    for r in 0..SEESAW_RESTARTS {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, r as u64));
        starts.push(random_state(da, &mut rng));
    }
    let runs: Vec<Result<(f64, Vec<C64>, Vec<C64>)>> = starts
        .into_par_iter()
        .map(|s| seesaw(&m, da, s, SEESAW_ALTERNATIONS))
        .collect();
    let mut best: Option<(f64, Vec<C64>, Vec<C64>)> = None;
    for run in runs {
        let run = run?;
        if best.as_ref().map_or(true, |b| run.0 > b.0) {
            best = Some(run);
        }
    }
    let (value, a, b) = best.unwrap();
    let joint: Vec<C64> = a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect();
    let state = StateVector::new(unpermute_state(&joint, n, &order))?;
    Ok(BoundResult {
        witness: spec.name.clone(),
        n,
        eps: f64::NAN,
        kind: BoundKind::Biseparable,
        value,
        regime: Regime::BruteForce,
        saturating_theta: None,
        saturating_state: Some(state),
    })
}

/// Lower-bound oracle for the biseparable maximum across one partition.
pub fn bisep_brute_force(spec: &WitnessSpec, partition: &PartitionSpec, grid: usize) -> Result<BoundResult> {
    bisep_brute_force_seeded(spec, partition, grid, BRUTE_FORCE_SEED)
}

/// Oracle maximum over every bipartition.
pub fn bisep_brute_force_all(spec: &WitnessSpec, grid: usize) -> Result<(PartitionSpec, BoundResult)> {
    let mut best: Option<(PartitionSpec, BoundResult)> = None;
    for p in PartitionSpec::all(spec.n) {
        let r = bisep_brute_force(spec, &p, grid)?;
        if best.as_ref().map_or(true, |b| r.value > b.1.value) {
            best = Some((p, r));
        }
    }
    best.ok_or_else(|| GmeError::Invalid("no bipartitions".into()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpoofPoint {
    pub eps: f64,
    /// four-qubit Mermin value of the spoofing state under the saturating configuration
    pub predicted: f64,
    pub corrected_bound: f64,
    pub ideal_bound: f64,
}

pub fn spoofing_curve(eps_grid: &[f64]) -> Result<Vec<SpoofPoint>> {
    let state = spoof_state(4)?;
    eps_grid
        .par_iter()
        .map(|&eps| {
            check_range("epsilon", eps, 0.0, EPS_MAX)?;
            let w = WitnessKind::Mermin(4).build(&saturating_observables(4, eps)?)?;
            Ok(SpoofPoint {
                eps,
                predicted: expectation(&w.matrix, &state)?,
                corrected_bound: mermin_bisep_bound(4, eps)?.value,
                ideal_bound: 4.0,
            })
        })
        .collect()
}

/// One row of a bound curve; `None` where the witness has no such curve.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundRow {
    pub eps: f64,
    pub biseparable: f64,
    pub single_party: Option<f64>,
    pub fully_separable: Option<f64>,
    pub quantum: Option<f64>,
    pub regime: Regime,
}

fn bound_row(kind: WitnessKind, eps: f64) -> Result<BoundRow> {
    match kind {
        WitnessKind::Mermin(n) => {
            let b = mermin_bisep_bound(n, eps)?;
            Ok(BoundRow {
                eps,
                biseparable: b.value,
                single_party: Some(b.value),
                fully_separable: None,
                quantum: Some(quantum_bound(kind, eps)?.value),
                regime: b.regime,
            })
        }
        WitnessKind::Stabilizer(n) => {
            let b = stabilizer_bisep_bound_numeric(n, eps, THETA_GRID)?;
            Ok(BoundRow {
                eps,
                biseparable: b.value,
                single_party: Some(stabilizer_single_party_bound(n, eps)?.value),
                fully_separable: Some(stabilizer_fully_sep_bound(n, eps)?.value),
                quantum: Some(quantum_bound(kind, eps)?.value),
                regime: b.regime,
            })
        }
        WitnessKind::W3 | WitnessKind::Cluster4 => {
            let set = if kind == WitnessKind::W3 {
                w_witness_bounds(eps)?
            } else {
                cluster_witness_bounds(eps)?
            };
            let quantum = match set.quantum {
                Some(q) => q.value,
                None => quantum_bound(kind, eps)?.value,
            };
            Ok(BoundRow {
                eps,
                biseparable: set.biseparable.value,
                single_party: Some(set.single_party.value),
                fully_separable: set.fully_separable.map(|b| b.value),
                quantum: Some(quantum),
                regime: set.biseparable.regime,
            })
        }
    }
}

/// Bound curve over an eps grid; rows come back in grid order.
pub fn bound_curve(kind: WitnessKind, eps_grid: &[f64]) -> Result<Vec<BoundRow>> {
    if let WitnessKind::Stabilizer(n) = kind {
        check_family("n", n)?;
    }
    eps_grid.par_iter().map(|&e| bound_row(kind, e)).collect()
}

/// Smallest eps in [lo, hi] where the W biseparable curve reaches `level`.
pub fn w_crossing(level: f64, lo: f64, hi: f64) -> Result<f64> {
    let f = |e: f64| w_witness_bounds(e).map(|b| b.biseparable.value - level).unwrap_or(f64::NAN);
    crate::optimize::bisect(f, lo, hi, 1e-10)
}

/// Golden-section maximum of an expectation over |chi(theta)>^{(x)n}: the product-state oracle
/// for the fully-separable closed forms.
pub fn product_chi_max(m: &ComplexMatrix, n: usize) -> Result<(f64, f64)> {
    let f = |t: f64| {
        let c = chi_state(t);
        let mut s = c.clone();
        for _ in 1..n {
            s = s.kron(&c);
        }
        expectation(m, &s).unwrap_or(f64::NEG_INFINITY)
    };
    let (t0, _) = grid_then_golden(f, 0.0, PI, THETA_GRID, THETA_TOL);
    Ok(golden_max(f, t0 - 1e-3, t0 + 1e-3, 1e-12))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::witness::mermin_witness;

    #[test]
    fn mermin_pieces_meet() {
        let b = mermin_bisep_bound(4, EPS_MAX).unwrap().value;
        assert!((b - 2f64.powf(2.5)).abs() < 1e-12);
        assert!((mermin_bisep_bound(4, 0.0).unwrap().value - 4.0).abs() < 1e-15);
        assert!((mermin_bisep_bound(4, 0.5).unwrap().value - mermin_di_bound(4).unwrap().value).abs() < 1e-15);
        assert!(mermin_bisep_bound(2, 0.1).is_err());
        assert!(mermin_bisep_bound(4, 0.6).is_err());
    }

    #[test]
    fn partitions() {
        assert_eq!(PartitionSpec::all(4).len(), 7);
        assert_eq!(PartitionSpec::all(3).len(), 3);
        assert!(PartitionSpec::new(4, vec![1, 2], vec![2, 3, 4]).is_err());
        assert!(PartitionSpec::new(4, vec![1, 2], vec![3]).is_err());
        assert!(PartitionSpec::new(4, vec![], vec![1, 2, 3, 4]).is_err());
        assert_eq!(PartitionSpec::new(4, vec![2, 1], vec![4, 3]).unwrap().label(), "12|34");
    }

    #[test]
    fn contraction_matches_kron() {
        // <phi (x) psi| M |phi (x) psi> both ways
        let m = WitnessKind::Stabilizer(3).ideal().unwrap().matrix;
        let phi = chi_state(0.3);
        let psi = StateVector::new(vec![
            C64::new(0.1, 0.2),
            C64::new(-0.3, 0.0),
            C64::new(0.5, 0.1),
            C64::new(0.2, -0.4),
        ])
        .unwrap();
        let full = expectation(&m, &phi.kron(&psi)).unwrap();
        let r1 = contract_first(&m, 2, phi.amplitudes());
        let r2 = contract_second(&m, 2, psi.amplitudes());
        assert!((expectation(&r1, &psi).unwrap() - full).abs() < 1e-12);
        assert!((expectation(&r2, &phi).unwrap() - full).abs() < 1e-12);
    }

    #[test]
    fn sweep_reproduces_ideal_bounds() {
        for (n, want) in [(3usize, 3.0), (4, 7.0)] {
            let m = WitnessKind::Stabilizer(n).ideal().unwrap().matrix;
            let (_, v, s) = theta_sweep(&m, THETA_GRID).unwrap();
            assert!((v - want).abs() < 1e-7, "n={n} {v}");
            assert!((expectation(&m, &s).unwrap() - v).abs() < 1e-9);
        }
    }

    #[test]
    fn brute_force_mermin_ideal() {
        let spec = mermin_witness(4, None).unwrap();
        let p = PartitionSpec::new(4, vec![1], vec![2, 3, 4]).unwrap();
        let r = bisep_brute_force(&spec, &p, 40).unwrap();
        assert!(r.value <= 4.0 + 1e-9 && r.value > 4.0 - 1e-4, "{}", r.value);
        let s = r.saturating_state.unwrap();
        assert!((expectation(&spec.matrix, &s).unwrap() - r.value).abs() < 1e-9);
    }

    #[test]
    fn brute_force_is_seed_deterministic() {
        let spec = WitnessKind::Stabilizer(4).ideal().unwrap();
        let p = PartitionSpec::new(4, vec![1, 3], vec![2, 4]).unwrap();
        let a = bisep_brute_force_seeded(&spec, &p, 10, 7).unwrap().value;
        let b = bisep_brute_force_seeded(&spec, &p, 10, 7).unwrap().value;
        assert_eq!(a, b);
    }

    #[test]
    fn spoof_prediction_is_the_bound() {
        let pts = spoofing_curve(&[0.0, 0.005, 0.1]).unwrap();
        for p in pts {
            assert!((p.predicted - p.corrected_bound).abs() < 1e-9, "{p:?}");
        }
    }
}
