//! GHZ-fidelity lower bounds from an observed witness value.
//!
//! For fixed local observables the smallest fidelity compatible with <W> = w is the lower
//! boundary of the joint numerical range of (W, P_ghz), which is convex. Its Lagrange dual
//! max_lambda [lambda_min(P_ghz - lambda W) + lambda w] is concave in lambda and every lambda
//! gives a valid lower bound. Imprecision is handled by minimizing over tilt directions.

use std::cell::Cell;
use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{GmeError, Result};
use crate::linalg::{herm_eig, ComplexMatrix, EigMode, QuantumState, C64};
use crate::measurement::{tilted_bloch, Axis, ImprecisionBudget};
use crate::optimize::{compass_max, derive_seed, CompassOptions};
use crate::states::{ghz_state, Sign};
use crate::witness::{LocalObservables, WitnessKind, WitnessSpec};

pub const LAMBDA_GRID: usize = 400;
const LAMBDA_MIN: f64 = 1e-3;
const LAMBDA_MAX: f64 = 1e3;

/// <ghz_n| rho |ghz_n>
pub fn fidelity_ghz<S: QuantumState + ?Sized>(rho: &S) -> Result<f64> {
    let dim = rho.dim();
    if !dim.is_power_of_two() || dim < 4 {
        return Err(GmeError::DimensionMismatch {
            expected: dim.next_power_of_two().max(4),
            actual: dim,
        });
    }
    let g = ghz_state(dim.trailing_zeros() as usize, Sign::Plus)?;
    crate::linalg::expectation(&g.projector(), rho).map(|f| f.clamp(0.0, 1.0))
}

fn check_kind(kind: WitnessKind) -> Result<()> {
    match kind {
        WitnessKind::Mermin(4) | WitnessKind::Stabilizer(4) => Ok(()),
        k => Err(GmeError::Invalid(format!(
            "fidelity bounds exist for mermin4 and stabilizer4, not {k}"
        ))),
    }
}

/// w/8 for mermin4, (w - 3)/8 for stabilizer4.
pub fn closed_form_l0(kind: WitnessKind, w: f64) -> Result<f64> {
    check_kind(kind)?;
    Ok(match kind {
        WitnessKind::Mermin(_) => w / 8.0,
        _ => (w - 3.0) / 8.0,
    })
}

/// Largest value of the ideal witness, the denominator of the w fraction.
pub fn ideal_max(kind: WitnessKind) -> Result<f64> {
    check_kind(kind)?;
    Ok(match kind {
        WitnessKind::Mermin(_) => 8.0,
        _ => 11.0,
    })
}

/// Basis letters each party measures.
fn bases(kind: WitnessKind) -> [Axis; 2] {
    match kind {
        WitnessKind::Mermin(_) => [Axis::X, Axis::Y],
        _ => [Axis::X, Axis::Z],
    }
}

/// Tilt angle pointing at the other in-plane basis.
fn in_plane_angle(axis: Axis, other: Axis) -> f64 {
    if axis.perpendicular_pair().0 == other {
        0.0
    } else {
        FRAC_PI_2
    }
}

/// Local observables with party j's basis b tilted by its budget toward angle
/// angles[2j + b] in the plane perpendicular to b.
pub fn observables_from_angles(
    kind: WitnessKind,
    budget: &ImprecisionBudget,
    angles: &[f64],
) -> Result<LocalObservables> {
    let n = kind.n();
    if budget.n() != n || angles.len() != 2 * n {
        return Err(GmeError::DimensionMismatch {
            expected: 2 * n,
            actual: angles.len(),
        });
    }
    let mut obs = LocalObservables::ideal(n);
    for j in 0..n {
        for (b, axis) in bases(kind).into_iter().enumerate() {
            let eps = budget.eps(j, axis);
            if eps > 0.0 {
                obs.set(j, axis, tilted_bloch(axis, eps, angles[2 * j + b])?);
            }
        }
    }
    Ok(obs)
}

/// The pencil P_ghz - lambda W in the eigenbasis of W: diagonal -lambda d plus the rank-one
/// term u u^dagger with u = V^dagger |ghz>. Degenerate eigenvalues of W are merged into
/// clusters carrying their summed weight |u|^2 and multiplicity.
#[derive(Debug, Clone)]
pub struct Pencil {
    d: Vec<f64>,
    weight: Vec<f64>,
    mult: Vec<usize>,
    lo: f64,
    hi: f64,
}

impl Pencil {
    pub fn new(w_op: &ComplexMatrix) -> Result<Self> {
        let dim = w_op.rows();
        if !dim.is_power_of_two() || dim < 4 {
            return Err(GmeError::DimensionMismatch {
                expected: dim.next_power_of_two().max(4),
                actual: dim,
            });
        }
        let g = ghz_state(dim.trailing_zeros() as usize, Sign::Plus)?;
        let e = herm_eig(w_op, EigMode::Full)?;
        let vecs = e.vectors.clone().unwrap();
        let scale = e.values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let mut d: Vec<f64> = Vec::new();
        let mut weight: Vec<f64> = Vec::new();
        let mut mult: Vec<usize> = Vec::new();
        for (val, v) in e.values.iter().zip(&vecs) {
            let u: C64 = v.iter().zip(g.amplitudes()).map(|(a, b)| a.conj() * b).sum();
            match d.last() {
                Some(&last) if (last - val).abs() <= 1e-10 * scale => {
                    *weight.last_mut().unwrap() += u.norm_sqr();
                    *mult.last_mut().unwrap() += 1;
                }
                _ => {
                    d.push(*val);
                    weight.push(u.norm_sqr());
                    mult.push(1);
                }
            }
        }
        Ok(Self {
            lo: e.min(),
            hi: e.max(),
            d,
            weight,
            mult,
        })
    }

    /// Achievable range of <W>.
    pub fn range(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// Smallest eigenvalue of P - lambda W and <W> on its eigenvector.
    pub fn min_pair(&self, lambda: f64) -> (f64, f64) {
        const TINY: f64 = 1e-300;
        let e: Vec<f64> = self.d.iter().map(|d| -lambda * d).collect();
        // deflation: |u_c| below 8 ulp of the pencil scale decouples cluster c. Its root would
        // sit closer to e_c than one ulp, where the eigenvector weights cannot be resolved.
        let scale = 1.0 + e.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let deflate = (8.0 * f64::EPSILON * scale).powi(2);
        // clusters untouched by |ghz> (or degenerate ones) keep e_c as an exact eigenvalue
        let mut plain = (f64::INFINITY, f64::NAN);
        for c in 0..e.len() {
            if (self.mult[c] > 1 || self.weight[c] < deflate) && e[c] < plain.0 {
                plain = (e[c], self.d[c]);
            }
        }
        let mut poles: Vec<usize> = (0..e.len()).filter(|&c| self.weight[c] >= deflate).collect();
        poles.sort_by(|&a, &b| e[a].total_cmp(&e[b]));
        let Some(&c0) = poles.first() else {
            return plain;
        };
        let m0 = e[c0];
        let mut upper = m0 + self.weight[c0];
        if let Some(&c1) = poles.get(1) {
            upper = upper.min(e[c1]);
        }
        if plain.0 <= m0 {
            return plain;
        }
        // secular function 1 + sum_c w_c / (e_c - mu), increasing on (m0, upper)
        let f = |mu: f64| {
            1.0 + poles.iter().map(|&c| self.weight[c] / (e[c] - mu)).sum::<f64>()
        };
        let (mut a, mut b) = (m0, upper);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if f(m) < 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        let mu = 0.5 * (a + b);
        if plain.0 < mu {
            return plain;
        }
        let (mut num, mut den) = (0.0, 0.0);
        for &c in &poles {
            let gap = (e[c] - mu).abs().max(TINY.sqrt());
            let t = self.weight[c] / (gap * gap);
            num += self.d[c] * t;
            den += t;
        }
        (mu, num / den)
    }

    /// Dual value lambda_min(P - lambda W) + lambda w and its supergradient w - <W>.
    pub fn dual(&self, w: f64, lambda: f64) -> (f64, f64) {
        let (mu, wv) = self.min_pair(lambda);
        (mu + lambda * w, w - wv)
    }

    fn check(&self, w: f64) -> Result<()> {
        if w < self.lo || w > self.hi {
            Err(GmeError::Infeasible {
                value: w,
                min: self.lo,
                max: self.hi,
            })
        } else {
            Ok(())
        }
    }

    /// Maximum of the dual over a signed log grid, refined around the best grid point.
    pub fn bound(&self, w: f64, lambda_grid: usize) -> Result<(f64, f64)> {
        self.check(w)?;
        let grid = signed_grid(lambda_grid.max(4));
        let mut best = (f64::NEG_INFINITY, 0.0);
        for &l in &grid {
            let (g, _) = self.dual(w, l);
            if g > best.0 {
                best = (g, l);
            }
        }
        Ok(match self.refine(w, best.1) {
            Some(r) if r.0 >= best.0 => r,
            _ => best,
        })
    }

    /// Concave maximization from a warm start: bracket a sign change of the supergradient,
    /// then Illinois steps. For concave g the gap max g - g(m) is at most |g'(m)| times the
    /// bracket width, which is the stopping rule. Every evaluated lambda gives a valid bound,
    /// so the best value seen is returned; None when no sign change exists (w out of range).
    pub fn refine(&self, w: f64, lambda0: f64) -> Option<(f64, f64)> {
        const GAP: f64 = 1e-13;
        let f = |l: f64| self.dual(w, l);
        let (g0, d0) = f(lambda0);
        let mut best = (g0, lambda0);
        if !d0.is_finite() {
            return None;
        }
        if d0 == 0.0 {
            return Some(best);
        }
        let dir = d0.signum();
        let mut step = (1e-2 * lambda0.abs()).max(1e-4);
        let (mut a, mut da) = (lambda0, d0);
        let (mut b, mut db);
        loop {
            b = a + dir * step;
            let (g, d) = f(b);
            if g > best.0 {
                best = (g, b);
            }
            db = d;
            if !d.is_finite() || d.signum() != dir || step > LAMBDA_MAX {
                break;
            }
            a = b;
            da = d;
            step *= 4.0;
        }
        if !db.is_finite() || db.signum() == dir {
            return None;
        }
        let mut side = 0i8;
        for _ in 0..200 {
            let width = (b - a).abs();
            if width < 1e-14 * (1.0 + a.abs()) {
                break;
            }
            let mut m = a - da * (b - a) / (db - da);
            if !((m - a) * (m - b) < 0.0) {
                m = 0.5 * (a + b);
            }
            let (g, d) = f(m);
            if g > best.0 {
                best = (g, m);
            }
            if !d.is_finite() || d.abs() * width < GAP {
                break;
            }
            if d.signum() == da.signum() {
                a = m;
                da = d;
                if side == 1 {
                    db *= 0.5;
                }
                side = 1;
            } else {
                b = m;
                db = d;
                if side == -1 {
                    da *= 0.5;
                }
                side = -1;
            }
        }
        Some(best)
    }
}

fn signed_grid(points: usize) -> Vec<f64> {
    let half = points / 2;
    let ratio = (LAMBDA_MAX / LAMBDA_MIN).ln();
    let mut out = Vec::with_capacity(2 * half + 1);
    for k in (0..half).rev() {
        out.push(-LAMBDA_MIN * (ratio * k as f64 / (half - 1) as f64).exp());
    }
    out.push(0.0);
    for k in 0..half {
        out.push(LAMBDA_MIN * (ratio * k as f64 / (half - 1) as f64).exp());
    }
    out
}

/// Exact minimum fidelity at <W> = w for fixed observables: (bound, maximizing lambda).
pub fn lagrangian_bound(w_op: &ComplexMatrix, w: f64, lambda_grid: usize) -> Result<(f64, f64)> {
    Pencil::new(w_op)?.bound(w, lambda_grid)
}

#[derive(Debug, Clone)]
pub struct FidelityBoundQuery {
    pub witness: WitnessKind,
    pub observed: f64,
    pub budget: ImprecisionBudget,
    pub lambda_grid: usize,
    /// random restarts of the tilt search on top of the structured starts
    pub tilt_restarts: usize,
    pub seed: u64,
}

impl FidelityBoundQuery {
    pub fn new(witness: WitnessKind, observed: f64, budget: ImprecisionBudget) -> Self {
        Self {
            witness,
            observed,
            budget,
            lambda_grid: LAMBDA_GRID,
            tilt_restarts: 8,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FidelityBound {
    pub value: f64,
    /// worst tilt angles found, two per party
    pub angles: Vec<f64>,
    pub lambda: f64,
    pub lambda_grid: usize,
    pub tilt_starts: usize,
}

fn tilted_matrix(kind: WitnessKind, budget: &ImprecisionBudget, angles: &[f64]) -> Result<WitnessSpec> {
    kind.build(&observables_from_angles(kind, budget, angles)?)
}

/// Tilts pointing each basis at the other in-plane basis with every sign pattern.
fn structured_starts(kind: WitnessKind) -> Vec<Vec<f64>> {
    let [a, b] = bases(kind);
    let base = [in_plane_angle(a, b), in_plane_angle(b, a)];
    let n = kind.n();
    (0..(1usize << (2 * n)))
        .map(|mask| {
            (0..2 * n)
                .map(|k| base[k % 2] + if mask >> k & 1 == 1 { PI } else { 0.0 })
                .collect()
        })
        .collect()
}

/// Minimum over tilts of the fixed-tilt bound, searched from the given starting points.
fn search(query: &FidelityBoundQuery, starts: Vec<Vec<f64>>) -> Result<FidelityBound> {
    let kind = query.witness;
    let w = query.observed;
    let lambda0 = match lagrangian_bound(&kind.ideal()?.matrix, w, query.lambda_grid) {
        Ok((_, l)) => l,
        // the untilted operator may not reach w while some tilt does
        Err(GmeError::Infeasible { .. }) => 1.0,
        Err(e) => return Err(e),
    };
    // lambda of the previous evaluation warm-starts the next one within a run
    let eval_from = |angles: &[f64], warm: &Cell<f64>| -> f64 {
        let Ok(spec) = tilted_matrix(kind, &query.budget, angles) else {
            return f64::INFINITY;
        };
        let Ok(pencil) = Pencil::new(&spec.matrix) else {
            return f64::INFINITY;
        };
        if pencil.check(w).is_err() {
            return f64::INFINITY;
        }
        match pencil.refine(w, warm.get()) {
            Some((v, l)) => {
                warm.set(l);
                v
            }
            None => f64::INFINITY,
        }
    };
    let eval = |angles: &[f64]| eval_from(angles, &Cell::new(lambda0));
    // rank the structured starts by a single evaluation, refine the best four
    let mut scored: Vec<(f64, Vec<f64>)> = starts.into_par_iter().map(|s| (eval(&s), s)).collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut seeds: Vec<Vec<f64>> = scored.into_iter().take(4).map(|(_, s)| s).collect();
    for r in 0..query.tilt_restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(query.seed, r as u64));
        seeds.push((0..2 * kind.n()).map(|_| rng.gen_range(0.0..2.0 * PI)).collect());
    }
    let opts = CompassOptions {
        initial_step: 0.4,
        min_step: 1e-4,
        max_evals: 1500,
    };
    let n_starts = seeds.len();
    let runs: Vec<(Vec<f64>, f64)> = seeds
        .into_par_iter()
        .map(|s| {
            let warm = Cell::new(lambda0);
            let (x, fx) = compass_max(|a| -eval_from(a, &warm), s, opts);
            (x, -fx)
        })
        .collect();
    let (angles, value) = runs
        .into_iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    if !value.is_finite() {
        return Err(GmeError::Infeasible {
            value: w,
            min: f64::NAN,
            max: f64::NAN,
        });
    }
    // final exact evaluation with the full lambda grid
    let spec = tilted_matrix(kind, &query.budget, &angles)?;
    let (value, lambda) = lagrangian_bound(&spec.matrix, w, query.lambda_grid)?;
    Ok(FidelityBound {
        value,
        angles,
        lambda,
        lambda_grid: query.lambda_grid,
        tilt_starts: n_starts,
    })
}

/// Smallest GHZ fidelity compatible with the observed value under any tilts in the budget.
pub fn numeric_l_eps(query: &FidelityBoundQuery) -> Result<FidelityBound> {
    check_kind(query.witness)?;
    if query.budget.n() != 4 {
        return Err(GmeError::DimensionMismatch {
            expected: 4,
            actual: query.budget.n(),
        });
    }
    if query.budget.is_ideal() {
        let spec = query.witness.ideal()?;
        let (value, lambda) = lagrangian_bound(&spec.matrix, query.observed, query.lambda_grid)?;
        return Ok(FidelityBound {
            value,
            angles: vec![0.0; 8],
            lambda,
            lambda_grid: query.lambda_grid,
            tilt_starts: 0,
        });
    }
    search(query, structured_starts(query.witness))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidelityPoint {
    pub w_fraction: f64,
    pub l0: f64,
    /// None where no tilt configuration in the pool reaches the value
    pub l_eps: Option<f64>,
}

/// L0 and L_eps over fractions of the ideal maximum. Worst tilts found at the anchor fractions
/// form a shared pool; each point takes the minimum over the pool, so the curve is a
/// pointwise minimum of monotone fixed-tilt bounds.
pub fn fidelity_curve(
    kind: WitnessKind,
    budget: &ImprecisionBudget,
    fractions: &[f64],
    anchors: &[f64],
    seed: u64,
) -> Result<Vec<FidelityPoint>> {
    check_kind(kind)?;
    let wmax = ideal_max(kind)?;
    let mut pool: Vec<Vec<f64>> = vec![vec![0.0; 8]];
    if !budget.is_ideal() {
        for &a in anchors {
            let mut q = FidelityBoundQuery::new(kind, a * wmax, budget.clone());
            q.seed = seed;
            match numeric_l_eps(&q) {
                Ok(b) => pool.push(b.angles),
                Err(GmeError::Infeasible { .. }) => {}
                Err(e) => return Err(e),
            }
        }
    }
    let specs: Vec<WitnessSpec> = pool
        .iter()
        .map(|a| tilted_matrix(kind, budget, a))
        .collect::<Result<_>>()?;
    fractions
        .par_iter()
        .map(|&f| {
            let w = f * wmax;
            let mut best: Option<f64> = None;
            for s in &specs {
                match lagrangian_bound(&s.matrix, w, LAMBDA_GRID) {
                    Ok((v, _)) => best = Some(best.map_or(v, |b: f64| b.min(v))),
                    Err(GmeError::Infeasible { .. }) => {}
                    Err(e) => return Err(e),
                }
            }
            Ok(FidelityPoint {
                w_fraction: f,
                l0: closed_form_l0(kind, w)?,
                l_eps: best,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::StateVector;
    use crate::states::{apply_noise, NoiseKind, NoiseModel};

    #[test]
    fn fidelity_of_noisy_ghz() {
        let g = ghz_state(4, Sign::Plus).unwrap();
        assert!((fidelity_ghz(&g).unwrap() - 1.0).abs() < 1e-12);
        let d = apply_noise(&g, NoiseModel::new(NoiseKind::Dephasing, 0.7).unwrap()).unwrap();
        assert!((fidelity_ghz(&d).unwrap() - 0.7).abs() < 1e-12);
        let w = apply_noise(&g, NoiseModel::new(NoiseKind::Depolarizing, 0.7).unwrap()).unwrap();
        assert!((fidelity_ghz(&w).unwrap() - (0.7 + 0.3 / 16.0)).abs() < 1e-12);
        let one = StateVector::basis(1, 0);
        assert!(fidelity_ghz(&one).is_err());
    }

    #[test]
    fn closed_forms() {
        assert!((closed_form_l0(WitnessKind::Mermin(4), 8.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((closed_form_l0(WitnessKind::Stabilizer(4), 11.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(closed_form_l0(WitnessKind::W3, 1.0).is_err());
    }

    #[test]
    fn ideal_dual_matches_closed_form() {
        for (kind, w) in [(WitnessKind::Mermin(4), 7.4665), (WitnessKind::Stabilizer(4), 10.5168)] {
            let spec = kind.ideal().unwrap();
            let (v, _) = lagrangian_bound(&spec.matrix, w, LAMBDA_GRID).unwrap();
            let l0 = closed_form_l0(kind, w).unwrap();
            assert!((v - l0).abs() < 1e-6, "{kind}: {v} vs {l0}");
        }
        let spec = WitnessKind::Mermin(4).ideal().unwrap();
        assert!(matches!(
            lagrangian_bound(&spec.matrix, 8.5, LAMBDA_GRID),
            Err(GmeError::Infeasible { .. })
        ));
    }

    #[test]
    fn pencil_matches_direct_diagonalization() {
        let b = ImprecisionBudget::uniform(4, [0.02, 0.01, 0.03]).unwrap();
        let g = ghz_state(4, Sign::Plus).unwrap().projector();
        for (kind, ang) in [
            (WitnessKind::Mermin(4), [0.3, 1.1, 2.0, 0.4, 5.0, 1.0, 0.7, 2.2]),
            (WitnessKind::Mermin(4), [0.0; 8]),
            (WitnessKind::Stabilizer(4), [1.3, 0.1, 2.9, 4.4, 0.5, 3.0, 6.0, 0.2]),
        ] {
            let w = tilted_matrix(kind, &b, &ang).unwrap().matrix;
            let pencil = Pencil::new(&w).unwrap();
            for lambda in [-3.0, -0.2, 0.0, 0.05, 0.17, 1.0, 40.0] {
                let mut m = g.clone();
                m.axpy(-lambda, &w);
                let (direct, _) = crate::linalg::min_eigenpair(&m).unwrap();
                let (mu, _) = pencil.min_pair(lambda);
                assert!((mu - direct).abs() < 1e-9, "{kind} lambda {lambda}: {mu} vs {direct}");
            }
        }
        let ideal = WitnessKind::Mermin(4).ideal().unwrap().matrix;
        // lambda = 0 on a degenerate spectrum: P has rank one
        assert_eq!(Pencil::new(&ideal).unwrap().min_pair(0.0).0, 0.0);
    }

    #[test]
    fn structured_starts_point_in_plane() {
        let starts = structured_starts(WitnessKind::Stabilizer(4));
        assert_eq!(starts.len(), 256);
        let b = ImprecisionBudget::uniform(4, [0.01; 3]).unwrap();
        let obs = observables_from_angles(WitnessKind::Stabilizer(4), &b, &starts[0]).unwrap();
        // X leans toward Z, Z toward X: no Y component
        let x = obs.get(0, crate::linalg::Pauli::X);
        assert!(x[(0, 1)].im.abs() < 1e-15 && x[(0, 0)].re > 0.0);
    }
}
