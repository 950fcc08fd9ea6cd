//! Counting statistics from the trace identities
//! `E N_A = ∫_A K(x,x) dx` and
//! `Cov(N_A, N_B) = ∫_{A∩B} K(x,x) dx − ∬_{A×B} K(x,y)² dx dy`,
//! evaluated in the √-variable where `K(x,y)² dx dy = K̃(s,t)² ds dt`.

use std::f64::consts::PI;

use rayon::prelude::*;

use super::grid::{hard_edge_exponent, interval_rule};
use super::ProcessSpec;
use crate::error::{Error, Result};
use crate::kernel::{transformed_diag, transformed_from_pairs};
use crate::specfun::bessel_pair;

const MEAN_TOL: f64 = 1e-10;
const COV_TOL: f64 = 1e-8;
const MAX_NODES: usize = 1 << 14;
const MAX_NODES_COV: usize = 4096;

fn check_interval(a: f64, b: f64) -> Result<()> {
    if !(a.is_finite() && b.is_finite() && a >= 0.0 && b >= a) {
        return Err(Error::domain(format!("need 0 <= a <= b, got ({a}, {b})")));
    }
    Ok(())
}

/// Nodes and weights on the x-window (lo, hi) in the √-variable.
fn piece(alpha: f64, lo: f64, hi: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let jacobi = if lo == 0.0 {
        hard_edge_exponent(alpha)
    } else {
        None
    };
    interval_rule(lo.sqrt(), hi.sqrt(), n, jacobi)
}

fn start_nodes(lo: f64, hi: f64) -> usize {
    16usize.max((3.0 * (hi.sqrt() - lo.sqrt()) / PI).ceil() as usize)
}

fn diag_integral(alpha: f64, lo: f64, hi: f64, n: usize) -> f64 {
    let (t, w) = piece(alpha, lo, hi, n);
    t.iter()
        .zip(&w)
        .map(|(&t, &w)| w * transformed_diag(alpha, t, bessel_pair(alpha, t)))
        .sum()
}

/// E N_(a,b) = ∫_a^b K(x,x) dx.
pub fn expected_count(spec: &ProcessSpec, a: f64, b: f64) -> Result<f64> {
    check_interval(a, b)?;
    if a == b {
        return Ok(0.0);
    }
    let alpha = spec.alpha();
    let mut n = start_nodes(a, b);
    let mut prev = diag_integral(alpha, a, b, n);
    while n < MAX_NODES {
        n *= 2;
        let cur = diag_integral(alpha, a, b, n);
        if (cur - prev).abs() < MEAN_TOL {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::NoConvergence {
        est_error: f64::NAN,
        tol: MEAN_TOL,
        nodes: n,
    })
}

struct Pieces {
    t: Vec<f64>,
    w: Vec<f64>,
    pairs: Vec<(f64, f64)>,
    in_a: Vec<bool>,
    in_b: Vec<bool>,
}

fn pieces(alpha: f64, a: (f64, f64), b: (f64, f64), n: usize) -> Pieces {
    let mut cuts = vec![a.0, a.1, b.0, b.1];
    cuts.sort_by(|p, q| p.partial_cmp(q).unwrap());
    cuts.dedup();
    let mut out = Pieces {
        t: Vec::new(),
        w: Vec::new(),
        pairs: Vec::new(),
        in_a: Vec::new(),
        in_b: Vec::new(),
    };
    for c in cuts.windows(2) {
        let (lo, hi) = (c[0], c[1]);
        let ia = a.0 <= lo && hi <= a.1;
        let ib = b.0 <= lo && hi <= b.1;
        if !(ia || ib) {
            continue;
        }
        let (t, w) = piece(alpha, lo, hi, n);
        out.in_a.extend(std::iter::repeat_n(ia, t.len()));
        out.in_b.extend(std::iter::repeat_n(ib, t.len()));
        out.t.extend(t);
        out.w.extend(w);
    }
    out.pairs = out.t.par_iter().map(|&t| bessel_pair(alpha, t)).collect();
    out
}

fn covariance_at(alpha: f64, a: (f64, f64), b: (f64, f64), n: usize) -> f64 {
    let p = pieces(alpha, a, b, n);
    let idx_a: Vec<usize> = (0..p.t.len()).filter(|&i| p.in_a[i]).collect();
    let idx_b: Vec<usize> = (0..p.t.len()).filter(|&i| p.in_b[i]).collect();
    let diag: f64 = (0..p.t.len())
        .filter(|&i| p.in_a[i] && p.in_b[i])
        .map(|i| p.w[i] * transformed_diag(alpha, p.t[i], p.pairs[i]))
        .sum();
    let rows: Vec<f64> = idx_a
        .par_iter()
        .map(|&i| {
            let mut acc = 0.0;
            for &j in &idx_b {
                let k = if i == j {
                    transformed_diag(alpha, p.t[i], p.pairs[i])
                } else {
                    transformed_from_pairs(alpha, p.t[i], p.pairs[i], p.t[j], p.pairs[j])
                };
                acc += p.w[j] * k * k;
            }
            p.w[i] * acc
        })
        .collect();
    diag - rows.iter().sum::<f64>()
}

/// Cov(N_A, N_B) for windows A = (a₁, b₁), B = (a₂, b₂) in any relative
/// position.
pub fn covariance_count(spec: &ProcessSpec, a: (f64, f64), b: (f64, f64)) -> Result<f64> {
    check_interval(a.0, a.1)?;
    check_interval(b.0, b.1)?;
    if a.0 == a.1 || b.0 == b.1 {
        return Ok(0.0);
    }
    let alpha = spec.alpha();
    let lo = a.0.min(b.0);
    let hi = a.1.max(b.1);
    let mut n = start_nodes(lo, hi);
    let mut prev = covariance_at(alpha, a, b, n);
    let mut diff = f64::INFINITY;
    while 2 * n <= MAX_NODES_COV {
        n *= 2;
        let cur = covariance_at(alpha, a, b, n);
        diff = (cur - prev).abs();
        if diff < COV_TOL {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::NoConvergence {
        est_error: diff,
        tol: COV_TOL,
        nodes: n,
    })
}

/// Var N_(a,b).
pub fn variance_count(spec: &ProcessSpec, a: f64, b: f64) -> Result<f64> {
    covariance_count(spec, (a, b), (a, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_near_origin() {
        // K(x,x) = 1/4 − x/16 + x²/128 − … for α = 0
        let spec = ProcessSpec::single(0.0, 1.0).unwrap();
        let v = expected_count(&spec, 0.0, 0.01).unwrap();
        assert!(
            (v - (0.0025 - 1e-4 / 32.0 + 1e-6 / 384.0)).abs() < 1e-11,
            "{v:.17e}"
        );
        assert_eq!(expected_count(&spec, 2.0, 2.0).unwrap(), 0.0);
        assert!(expected_count(&spec, 2.0, 1.0).is_err());
    }

    #[test]
    fn disjoint_windows_are_negatively_correlated() {
        let spec = ProcessSpec::single(0.5, 1.0).unwrap();
        let c = covariance_count(&spec, (0.0, 10.0), (20.0, 40.0)).unwrap();
        assert!(c < 0.0);
        let v = variance_count(&spec, 0.0, 10.0).unwrap();
        assert!(v > 0.0);
    }
}
