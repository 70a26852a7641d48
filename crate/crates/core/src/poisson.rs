//! Monte-Carlo error bars from Poissonian counting statistics.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use crate::error::{GmeError, Result};
use crate::linalg::Pauli;
use crate::optimize::derive_seed;
use crate::states::letters;
use crate::witness::WitnessSpec;

pub const MIN_TRIALS: usize = 100;

/// Raw outcome counts of one measurement setting.
/// `counts[r]` with party 1 the most significant bit of r, bit 0 for the +1 outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct SettingCounts {
    pub letters: String,
    pub counts: Vec<u64>,
}

impl SettingCounts {
    pub fn new(letters: &str, counts: Vec<u64>) -> Result<Self> {
        let n = letters.chars().count();
        if counts.len() != 1 << n {
            return Err(GmeError::DimensionMismatch {
                expected: 1 << n,
                actual: counts.len(),
            });
        }
        if letters.chars().any(|c| !"XYZxyz".contains(c)) {
            return Err(GmeError::Invalid(format!("setting `{letters}` must use X, Y, Z only")));
        }
        Ok(Self {
            letters: letters.to_ascii_uppercase(),
            counts,
        })
    }

    /// Counts split over two outcomes so the full correlator equals `value`.
    pub fn synthetic(letters: &str, value: f64, total: u64) -> Result<Self> {
        let n = letters.chars().count();
        let even = ((1.0 + value) / 2.0 * total as f64).round() as u64;
        let mut counts = vec![0; 1 << n];
        counts[0] = even;
        counts[1] = total - even.min(total);
        Self::new(letters, counts)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Correlator over the parties where `mask` is set, identity positions marginalized.
fn marginal_correlator(counts: &[f64], mask: usize) -> f64 {
    let total: f64 = counts.iter().sum();
    if total == 0.0 {
        return 0.0;
    }
    let signed: f64 = counts
        .iter()
        .enumerate()
        .map(|(r, c)| if (r & mask).count_ones() % 2 == 0 { *c } else { -*c })
        .sum();
    signed / total
}

struct Plan {
    offset: f64,
    /// (coeff, setting index, outcome mask)
    terms: Vec<(f64, usize, usize)>,
}

/// Each non-identity term reads the setting whose letters agree on its support;
/// an exact letter match is preferred.
fn plan(spec: &WitnessSpec, settings: &[SettingCounts]) -> Result<Plan> {
    let n = spec.n;
    let (terms, offset) = spec.simplified();
    let parsed: Vec<Vec<Pauli>> = settings.iter().map(|s| letters(&s.letters)).collect();
    let mut out = Vec::with_capacity(terms.len());
    for t in &terms {
        let fits = |p: &Vec<Pauli>| {
            p.len() == n && t.letters.iter().zip(p).all(|(a, b)| *a == Pauli::I || a == b)
        };
        let idx = parsed
            .iter()
            .position(|p| *p == t.letters)
            .or_else(|| parsed.iter().position(fits))
            .ok_or_else(|| GmeError::MissingRecord(t.label()))?;
        let mask = t
            .letters
            .iter()
            .enumerate()
            .filter(|(_, p)| **p != Pauli::I)
            .fold(0, |m, (j, _)| m | 1 << (n - 1 - j));
        out.push((t.coeff, idx, mask));
    }
    Ok(Plan { offset, terms: out })
}

fn value_from(plan: &Plan, counts: &[Vec<f64>]) -> f64 {
    plan.offset
        + plan
            .terms
            .iter()
            .map(|(c, idx, mask)| c * marginal_correlator(&counts[*idx], *mask))
            .sum::<f64>()
}

/// Witness value from the raw counts, no resampling.
pub fn witness_from_counts(spec: &WitnessSpec, settings: &[SettingCounts]) -> Result<f64> {
    let plan = plan(spec, settings)?;
    let counts: Vec<Vec<f64>> = settings
        .iter()
        .map(|s| s.counts.iter().map(|c| *c as f64).collect())
        .collect();
    Ok(value_from(&plan, &counts))
}

/// Sample mean and standard deviation of the witness over Poisson-resampled counts.
/// Trial k draws from its own generator seeded by `derive_seed(seed, k)`.
pub fn poisson_witness_error(
    settings: &[SettingCounts],
    spec: &WitnessSpec,
    trials: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if trials < MIN_TRIALS {
        return Err(GmeError::Invalid(format!("need at least {MIN_TRIALS} trials, got {trials}")));
    }
    for s in settings {
        if s.total() == 0 {
            return Err(GmeError::ZeroCounts(s.letters.clone()));
        }
    }
    let plan = plan(spec, settings)?;
    let values: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, k as u64));
            let counts: Vec<Vec<f64>> = settings
                .iter()
                .map(|s| {
                    s.counts
                        .iter()
                        .map(|&c| {
                            if c == 0 {
                                0.0
                            } else {
                                Poisson::new(c as f64).expect("positive mean").sample(&mut rng)
                            }
                        })
                        .collect()
                })
                .collect();
            value_from(&plan, &counts)
        })
        .collect();
    let mean = values.iter().sum::<f64>() / trials as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
    Ok((mean, var.sqrt()))
}
