//! The I_nm correlator functional with m dichotomic settings per party.
//!
//! Input vectors s = (s_1..s_n) are indexed base m with party 1 as the most significant digit;
//! outcome vectors r are n-bit integers with party 1 as the most significant bit, r_j = 0 for +1.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::PI;

use crate::error::{GmeError, Result};
use crate::linalg::{expectation, kron_all, QuantumState};
use crate::measurement::{projector_pair, BlochVector};
use crate::optimize::{compass_max, derive_seed, CompassOptions};

/// Restarts for the outer settings search.
pub const SETTINGS_RESTARTS: usize = 50;

/// Literature biseparable bound for I_43, 18 sqrt(3). External input, not derived here.
pub const I43_BISEP_LITERATURE: f64 = 31.176_914_536_239_79;

/// Conditional outcome distributions P(r|s), row s of length 2^n.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityTable {
    n: usize,
    m: usize,
    probs: Vec<f64>,
}

impl ProbabilityTable {
    pub fn new(n: usize, m: usize, probs: Vec<f64>) -> Result<Self> {
        if n == 0 || m < 2 {
            return Err(GmeError::Invalid(format!("I_nm needs n >= 1 and m >= 2, got n={n}, m={m}")));
        }
        let rows = m.pow(n as u32);
        let width = 1usize << n;
        if probs.len() != rows * width {
            return Err(GmeError::Invalid(format!(
                "incomplete probability table: {} entries, expected {} inputs x {} outcomes",
                probs.len(),
                rows,
                width
            )));
        }
        for (s, row) in probs.chunks(width).enumerate() {
            if row.iter().any(|p| !p.is_finite() || *p < -1e-12) {
                return Err(GmeError::Invalid(format!("negative or non-finite probability in row {s}")));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(GmeError::Invalid(format!("row {s} sums to {total}, not 1")));
            }
        }
        Ok(Self { n, m, probs })
    }

    pub fn from_fn(n: usize, m: usize, f: impl Fn(&[usize], usize) -> f64) -> Result<Self> {
        let rows = m.pow(n as u32);
        let mut probs = Vec::with_capacity(rows << n);
        for idx in 0..rows {
            let s = digits(idx, n, m);
            for r in 0..1usize << n {
                probs.push(f(&s, r));
            }
        }
        Self::new(n, m, probs)
    }

    /// Born-rule table of a state measured along the given settings.
    pub fn born<S: QuantumState + ?Sized>(state: &S, settings: &InmSettings) -> Result<Self> {
        let (n, m) = (settings.n, settings.m);
        if state.dim() != 1 << n {
            return Err(GmeError::DimensionMismatch {
                expected: 1 << n,
                actual: state.dim(),
            });
        }
        let pairs: Vec<_> = settings.dirs.iter().map(|d| projector_pair(*d)).collect();
        let rows = m.pow(n as u32);
        let mut probs = Vec::with_capacity(rows << n);
        for idx in 0..rows {
            let s = digits(idx, n, m);
            for r in 0..1usize << n {
                let factors = (0..n).map(|j| {
                    let (plus, minus) = &pairs[j * m + s[j]];
                    if (r >> (n - 1 - j)) & 1 == 0 {
                        plus
                    } else {
                        minus
                    }
                });
                probs.push(expectation(&kron_all(factors), state)?.max(0.0));
            }
        }
        Self::new(n, m, probs)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn get(&self, s: &[usize], r: usize) -> f64 {
        self.probs[(index(s, self.m) << self.n) + r]
    }

    /// Full correlator sum_r (-1)^{|r|} P(r|s).
    pub fn correlator(&self, s: &[usize]) -> f64 {
        let base = index(s, self.m) << self.n;
        (0..1usize << self.n)
            .map(|r| parity_sign(r) * self.probs[base + r])
            .sum()
    }
}

/// Measurement directions, party j setting k at `dirs[j * m + k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct InmSettings {
    pub n: usize,
    pub m: usize,
    pub dirs: Vec<BlochVector>,
}

impl InmSettings {
    /// Polar and azimuthal angle pairs, party-major.
    pub fn from_angles(n: usize, m: usize, angles: &[f64]) -> Result<Self> {
        if angles.len() != 2 * n * m {
            return Err(GmeError::DimensionMismatch {
                expected: 2 * n * m,
                actual: angles.len(),
            });
        }
        let dirs = angles
            .chunks(2)
            .map(|a| [a[0].sin() * a[1].cos(), a[0].sin() * a[1].sin(), a[0].cos()])
            .collect();
        Ok(Self { n, m, dirs })
    }

    /// Equatorial settings at azimuth k pi / m for every party; m = 2 gives X and Y.
    pub fn equatorial(n: usize, m: usize) -> Self {
        let dirs = (0..n)
            .flat_map(|_| (0..m).map(move |k| k as f64 * PI / m as f64))
            .map(|phi| [phi.cos(), phi.sin(), 0.0])
            .collect();
        Self { n, m, dirs }
    }
}

fn digits(mut idx: usize, n: usize, m: usize) -> Vec<usize> {
    let mut s = vec![0; n];
    for j in (0..n).rev() {
        s[j] = idx % m;
        idx /= m;
    }
    s
}

fn index(s: &[usize], m: usize) -> usize {
    s.iter().fold(0, |acc, &d| acc * m + d)
}

fn parity_sign(r: usize) -> f64 {
    if r.count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Weight of E_s in I_nm: (-1)^{s/m} for s = 0 mod m, (-1)^{(s-1)/m} for s = 1 mod m, else 0.
pub fn class_weight(s: usize, m: usize) -> f64 {
    match s % m {
        0 if (s / m) % 2 == 0 => 1.0,
        0 => -1.0,
        1 if ((s - 1) / m) % 2 == 0 => 1.0,
        1 => -1.0,
        _ => 0.0,
    }
}

/// I_nm from a full-correlator function of the input vector.
/// E_s sums the correlators of every input vector with digit sum s.
pub fn i_nm_from_correlators(n: usize, m: usize, corr: impl Fn(&[usize]) -> f64) -> f64 {
    let mut total = 0.0;
    for idx in 0..m.pow(n as u32) {
        let s = digits(idx, n, m);
        let w = class_weight(s.iter().sum(), m);
        if w != 0.0 {
            total += w * corr(&s);
        }
    }
    total
}

pub fn i_nm_value(table: &ProbabilityTable) -> f64 {
    i_nm_from_correlators(table.n, table.m, |s| table.correlator(s))
}

/// Full correlator of p|ghz+><ghz+| + (1-p)|ghz-><ghz-| along Bloch directions:
/// (prod z_j + prod(-z_j))/2 + (2p-1) Re prod (x_j + i y_j).
pub fn dephased_ghz_correlator(p: f64, dirs: &[&BlochVector]) -> f64 {
    let mut zp = 1.0;
    let mut zm = 1.0;
    let (mut re, mut im) = (1.0, 0.0);
    for d in dirs {
        zp *= d[2];
        zm *= -d[2];
        let (nr, ni) = (re * d[0] - im * d[1], re * d[1] + im * d[0]);
        re = nr;
        im = ni;
    }
    0.5 * (zp + zm) + (2.0 * p - 1.0) * re
}

/// I_nm of the dephased GHZ state without building any matrix.
pub fn i_nm_dephased(p: f64, settings: &InmSettings) -> f64 {
    let (n, m) = (settings.n, settings.m);
    i_nm_from_correlators(n, m, |s| {
        let dirs: Vec<&BlochVector> = (0..n).map(|j| &settings.dirs[j * m + s[j]]).collect();
        dephased_ghz_correlator(p, &dirs)
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizedSettings {
    pub settings: InmSettings,
    pub angles: Vec<f64>,
    pub value: f64,
}

/// Maximize I_nm of the dephased GHZ state over all Bloch directions.
/// Restarts are seeded per index and run as an order-preserving parallel map; results are sorted
/// best first, ties kept in restart order.
pub fn optimize_settings_dephased(
    n: usize,
    m: usize,
    p: f64,
    restarts: usize,
    seed: u64,
) -> Result<Vec<OptimizedSettings>> {
    let dim = 2 * n * m;
    let objective = |a: &[f64]| match InmSettings::from_angles(n, m, a) {
        Ok(s) => i_nm_dephased(p, &s),
        Err(_) => f64::NEG_INFINITY,
    };
    let mut runs: Vec<OptimizedSettings> = (0..restarts)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, k as u64));
            let x0: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
            let (angles, value) = compass_max(objective, x0, CompassOptions::default());
            let settings = InmSettings::from_angles(n, m, &angles).expect("length fixed above");
            OptimizedSettings {
                settings,
                angles,
                value,
            }
        })
        .collect();
    runs.sort_by(|a, b| b.value.total_cmp(&a.value));
    Ok(runs)
}
