//! Log-gamma and digamma for complex arguments.
//!
//! Both use upward recurrence until `Re w >= SHIFT_TARGET` followed by the
//! Stirling series. Summing principal logarithms along the shift yields the
//! standard continuous branch of log Γ (cut along the negative real axis),
//! for which `ln_gamma(z + 1) = ln_gamma(z) + ln z` holds identically.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::{ensure_finite, is_nonpositive_integer};
use crate::error::{Error, Result};

const SHIFT_TARGET: f64 = 15.0;

/// B_{2k} for k = 1..=12.
pub(crate) const BERNOULLI_EVEN: [f64; 12] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
    854513.0 / 138.0,
    -236364091.0 / 2730.0,
];

fn pole_check(z: Complex64) -> Result<()> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::NonFinite("gamma argument"));
    }
    if is_nonpositive_integer(z, 1e-14) {
        return Err(Error::Pole { re: z.re, im: z.im });
    }
    Ok(())
}

/// Stirling series for log Γ(w), valid for `Re w >= SHIFT_TARGET`.
fn stirling(w: Complex64) -> Complex64 {
    let half_ln_2pi = 0.5 * (2.0 * PI).ln();
    let mut acc = (w - 0.5) * w.ln() - w + half_ln_2pi;
    let inv = w.inv();
    let inv2 = inv * inv;
    let mut pow = inv;
    for (k, b) in BERNOULLI_EVEN.iter().enumerate().take(10) {
        let k = (k + 1) as f64;
        acc += pow * (b / (2.0 * k * (2.0 * k - 1.0)));
        pow *= inv2;
    }
    acc
}

/// Principal-branch log Γ(z).
pub fn ln_gamma(z: Complex64) -> Result<Complex64> {
    pole_check(z)?;
    let mut w = z;
    let mut shift = Complex64::new(0.0, 0.0);
    while w.re < SHIFT_TARGET {
        shift += w.ln();
        w += 1.0;
    }
    ensure_finite(stirling(w) - shift, "ln_gamma")
}

/// Real log |Γ(x)| together with the sign of Γ(x).
pub(crate) fn ln_gamma_real(x: f64) -> Result<(f64, f64)> {
    let v = ln_gamma(Complex64::new(x, 0.0))?;
    // the imaginary part is kπ, odd k meaning Γ(x) < 0
    let k = (v.im / PI).round() as i64;
    Ok((v.re, if k % 2 == 0 { 1.0 } else { -1.0 }))
}

/// Digamma ψ(z) = d/dz log Γ(z).
pub fn digamma(z: Complex64) -> Result<Complex64> {
    pole_check(z)?;
    let mut w = z;
    let mut shift = Complex64::new(0.0, 0.0);
    while w.re < SHIFT_TARGET {
        shift += w.inv();
        w += 1.0;
    }
    let inv = w.inv();
    let inv2 = inv * inv;
    let mut acc = w.ln() - 0.5 * inv;
    let mut pow = inv2;
    for (k, b) in BERNOULLI_EVEN.iter().enumerate().take(10) {
        acc -= pow * (b / (2.0 * (k + 1) as f64));
        pow *= inv2;
    }
    ensure_finite(acc - shift, "digamma")
}
