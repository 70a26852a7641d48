//! Small derivative-free optimizers: golden section, grid-then-golden, bisection, compass search.

use rayon::prelude::*;

use crate::error::{GmeError, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Maximizer of a unimodal f on [a, b], to x-tolerance `tol`.
pub fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Uniform grid of `n` points on [a, b) followed by golden refinement around the best point.
/// Grid evaluation runs as an order-preserving parallel map; ties go to the first grid point.
pub fn grid_then_golden(
    f: impl Fn(f64) -> f64 + Sync,
    a: f64,
    b: f64,
    n: usize,
    tol: f64,
) -> (f64, f64) {
    let h = (b - a) / n as f64;
    let vals: Vec<f64> = (0..n).into_par_iter().map(|k| f(a + h * k as f64)).collect();
    let mut best = 0;
    for (k, v) in vals.iter().enumerate() {
        if *v > vals[best] {
            best = k;
        }
    }
    let x0 = a + h * best as f64;
    let (x, fx) = golden_max(&f, x0 - h, x0 + h, tol);
    if fx >= vals[best] {
        (x, fx)
    } else {
        (x0, vals[best])
    }
}

/// Root of f on [a, b] by bisection; f(a) and f(b) must differ in sign.
pub fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> Result<f64> {
    let (mut fa, fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(GmeError::NoCrossing(format!(
            "f({a}) = {fa:.6e} and f({b}) = {fb:.6e} share a sign"
        )));
    }
    while (b - a).abs() > tol {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

#[derive(Debug, Clone, Copy)]
pub struct CompassOptions {
    pub initial_step: f64,
    pub min_step: f64,
    pub max_evals: usize,
}

impl Default for CompassOptions {
    fn default() -> Self {
        Self {
            initial_step: 0.5,
            min_step: 1e-7,
            max_evals: 20_000,
        }
    }
}

/// Compass (coordinate pattern) search maximizing f from x0.
pub fn compass_max(f: impl Fn(&[f64]) -> f64, x0: Vec<f64>, opts: CompassOptions) -> (Vec<f64>, f64) {
    let mut x = x0;
    let mut fx = f(&x);
    let mut step = opts.initial_step;
    let mut evals = 1;
    while step > opts.min_step && evals < opts.max_evals {
        let mut improved = false;
        for i in 0..x.len() {
            for dir in [1.0, -1.0] {
                let old = x[i];
                x[i] = old + dir * step;
                let ft = f(&x);
                evals += 1;
                if ft > fx {
                    fx = ft;
                    improved = true;
                    break;
                }
                x[i] = old;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (x, fx)
}

/// Seed for restart `k` derived from a master seed (splitmix64 step).
pub fn derive_seed(master: u64, k: u64) -> u64 {
    let mut z = master.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(k + 1));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_peak() {
        let (x, fx) = golden_max(|x| -(x - 0.3).powi(2), 0.0, 1.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-8 && fx.abs() < 1e-15);
    }

    #[test]
    fn grid_handles_multimodal() {
        let f = |x: f64| (3.0 * x).sin() + 0.1 * x;
        let (x, _) = grid_then_golden(f, 0.0, 10.0, 400, 1e-10);
        // global max near the last sin peak below 10
        let expect = (2.0 * std::f64::consts::PI * 4.0 + std::f64::consts::FRAC_PI_2) / 3.0;
        assert!((x - expect).abs() < 0.05, "{x}");
    }

    #[test]
    fn bisect_root_and_no_crossing() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-12).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-11);
        assert!(matches!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-9), Err(GmeError::NoCrossing(_))));
    }

    #[test]
    fn compass_quadratic() {
        let (x, fx) = compass_max(
            |v| -(v[0] - 1.0).powi(2) - (v[1] + 2.0).powi(2),
            vec![0.0, 0.0],
            CompassOptions::default(),
        );
        assert!((x[0] - 1.0).abs() < 1e-6 && (x[1] + 2.0).abs() < 1e-6 && fx > -1e-11);
    }

    #[test]
    fn seeds_differ() {
        assert_ne!(derive_seed(42, 0), derive_seed(42, 1));
        assert_eq!(derive_seed(42, 3), derive_seed(42, 3));
    }
}
