//! Bessel functions of the first kind, J_ν(x), for real ν > −1 and x ≥ 0.
//!
//! Three regimes, all returning the adjacent pair (J_ν, J_{ν+1}):
//! - ascending power series for x ≤ 2, where it has no cancellation;
//! - Miller backward recurrence normalised by
//!   `(x/2)^ν = Γ(ν+1) Σ_j (ν+2j) (ν+1)_{j−1}/j! J_{ν+2j}(x)` up to the
//!   asymptotic threshold;
//! - the Hankel expansion beyond it, with the phase assembled from sin x and
//!   cos x so the large argument is never reduced by hand.

use std::f64::consts::PI;

use super::ln_gamma_real;
use crate::error::{Error, Result};

const SERIES_MAX_X: f64 = 2.0;

fn asymptotic_min_x(nu: f64) -> f64 {
    30.0 + nu * nu
}

fn check(nu: f64, x: f64) -> Result<()> {
    if !nu.is_finite() || nu <= -1.0 {
        return Err(Error::domain(format!(
            "Bessel order must exceed -1, got {nu}"
        )));
    }
    if !x.is_finite() || x < 0.0 {
        return Err(Error::domain(format!(
            "Bessel argument must be finite and non-negative, got {x}"
        )));
    }
    Ok(())
}

fn series(nu: f64, x: f64) -> (f64, f64) {
    let (lg, _) = ln_gamma_real(nu + 1.0).expect("nu > -1");
    let half = 0.5 * x;
    let pref = (nu * half.ln() - lg).exp();
    let q = -half * half;
    let sum = |order: f64| {
        let mut term = 1.0;
        let mut acc = 1.0;
        for k in 1..200 {
            let kf = k as f64;
            term *= q / (kf * (order + kf));
            acc += term;
            if term.abs() < 1e-17 * acc.abs() {
                break;
            }
        }
        acc
    };
    let j0 = pref * sum(nu);
    let j1 = pref * half / (nu + 1.0) * sum(nu + 1.0);
    (j0, j1)
}

fn miller(nu: f64, x: f64) -> (f64, f64) {
    let mut top = (x + 30.0 + 6.0 * x.sqrt()).ceil() as usize;
    if top % 2 == 1 {
        top += 1;
    }
    const RESCALE_AT: f64 = 1e250;
    // f_k ~ J_{ν+k}, unnormalised
    let mut f_next = 0.0;
    let mut f_cur = 1e-30;
    // running Σ_{j≥1} (ν+2j) d_j f_{2j}, d_j = (ν+1)_{j−1}/j!
    let mut norm = 0.0;
    let mut weights = vec![0.0; top / 2 + 1];
    let mut d = 1.0;
    for (j, w) in weights.iter_mut().enumerate().skip(1) {
        if j > 1 {
            d *= (nu + (j - 1) as f64) / j as f64;
        }
        *w = (nu + 2.0 * j as f64) * d;
    }
    norm += weights[top / 2] * f_cur;
    let mut f1 = 0.0;
    let mut k = top;
    while k > 0 {
        let order = nu + k as f64;
        let f_prev = 2.0 * order / x * f_cur - f_next;
        f_next = f_cur;
        f_cur = f_prev;
        k -= 1;
        if k == 1 {
            f1 = f_cur;
        }
        if k > 0 && k.is_multiple_of(2) {
            norm += weights[k / 2] * f_cur;
        }
        if f_cur.abs() > RESCALE_AT {
            f_cur /= RESCALE_AT;
            f_next /= RESCALE_AT;
            norm /= RESCALE_AT;
            f1 /= RESCALE_AT;
        }
    }
    let f0 = f_cur;
    let total = f0 + norm;
    let (lg, _) = ln_gamma_real(nu + 1.0).expect("nu > -1");
    // (x/2)^ν / Γ(ν+1) = total · scale
    let scale = (nu * (0.5 * x).ln() - lg).exp() / total;
    (f0 * scale, f1 * scale)
}

/// Hankel P and Q series for order ν.
fn hankel_pq(nu: f64, x: f64) -> (f64, f64) {
    let mu = 4.0 * nu * nu;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut prev_abs = f64::INFINITY;
    for k in 1..200usize {
        let odd = (2 * k - 1) as f64;
        term *= (mu - odd * odd) / (8.0 * k as f64 * x);
        let a = term.abs();
        if a > prev_abs || a < 1e-17 {
            break;
        }
        prev_abs = a;
        // signs: P = a0 − a2 + a4 …, Q = a1 − a3 + …
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
    }
    (p, q)
}

fn hankel(nu: f64, x: f64) -> (f64, f64) {
    let amp = (2.0 / (PI * x)).sqrt();
    let (sx, cx) = x.sin_cos();
    let j = |order: f64| {
        let phi = (0.5 * order + 0.25) * PI;
        let (sp, cp) = phi.sin_cos();
        let cos_chi = cx * cp + sx * sp;
        let sin_chi = sx * cp - cx * sp;
        let (p, q) = hankel_pq(order, x);
        amp * (p * cos_chi - q * sin_chi)
    };
    (j(nu), j(nu + 1.0))
}

/// (J_ν(x), J_{ν+1}(x)) for ν > −1, x > 0.
pub(crate) fn bessel_pair(nu: f64, x: f64) -> (f64, f64) {
    debug_assert!(nu > -1.0 && x > 0.0);
    if x <= SERIES_MAX_X {
        series(nu, x)
    } else if x < asymptotic_min_x(nu) {
        miller(nu, x)
    } else {
        hankel(nu, x)
    }
}

/// J_ν(x).
pub fn bessel_j(nu: f64, x: f64) -> Result<f64> {
    check(nu, x)?;
    if x == 0.0 {
        return match nu {
            0.0 => Ok(1.0),
            n if n > 0.0 => Ok(0.0),
            _ => Err(Error::domain("J_nu(0) is infinite for negative order")),
        };
    }
    Ok(bessel_pair(nu, x).0)
}

/// J'_ν(x), from J'_ν = (ν/x) J_ν − J_{ν+1}.
pub fn bessel_j_prime(nu: f64, x: f64) -> Result<f64> {
    check(nu, x)?;
    if x == 0.0 {
        return match nu {
            n if n == 0.0 || n > 1.0 => Ok(0.0),
            1.0 => Ok(0.5),
            _ => Err(Error::domain("J'_nu(0) is infinite for this order")),
        };
    }
    let (j0, j1) = bessel_pair(nu, x);
    Ok(nu / x * j0 - j1)
}
