//! Barnes G-function, log G(1 + z), for complex z.
//!
//! Two evaluation routes:
//! - `|z| < TAYLOR_RADIUS`: the Maclaurin series of log G(1+z), whose
//!   coefficients are ζ-values,
//!   `z/2·ln 2π − (z + (1+γ)z²)/2 + Σ_{k≥3} (−1)^{k−1} ζ(k−1) z^k / k`.
//! - otherwise: shift up with `G(1+w) = Γ(w) G(w)` until the large-argument
//!   expansion applies, then subtract the accumulated log Γ terms.
//!
//! The functional relation links the two routes, so checking it across the
//! Taylor disc boundary is a genuine consistency test of the coefficients.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;

use super::gamma::{ln_gamma, BERNOULLI_EVEN};
use super::{ensure_finite, is_nonpositive_integer, EULER_GAMMA};
use crate::error::{Error, Result};

const TAYLOR_RADIUS: f64 = 0.9;
const TAYLOR_TERMS: usize = 420;
const ASYMPTOTIC_MIN_RE: f64 = 10.0;
const ASYMPTOTIC_MIN_ABS: f64 = 15.0;
/// ζ'(−1)
const ZETA_PRIME_MINUS_ONE: f64 = -0.1654211437004509;

/// Largest |u| accepted by [`BarnesG::pair`].
pub const BARNES_PAIR_LIMIT: f64 = 4.0 * PI * PI;

/// ζ(s) for integer s ≥ 2 by Euler–Maclaurin summation.
pub(crate) fn zeta_int(s: u32) -> f64 {
    assert!(s >= 2);
    const N: u32 = 16;
    let sf = s as f64;
    let head: f64 = (1..N).rev().map(|k| (k as f64).powf(-sf)).sum();
    let n = N as f64;
    let mut tail = n.powf(1.0 - sf) / (sf - 1.0) + 0.5 * n.powf(-sf);
    // Σ_j B_{2j}/(2j)! · s(s+1)…(s+2j−2) · N^{−s−2j+1}
    let mut rising = sf; // s(s+1)...(s+2j-2) for j = 1
    let mut fact = 2.0; // (2j)!
    for j in 1..=8usize {
        let b = BERNOULLI_EVEN[j - 1];
        tail += b / fact * rising * n.powf(-sf - 2.0 * j as f64 + 1.0);
        let jf = j as f64;
        rising *= (sf + 2.0 * jf - 1.0) * (sf + 2.0 * jf);
        fact *= (2.0 * jf + 1.0) * (2.0 * jf + 2.0);
    }
    head + tail
}

/// Evaluator for log G(1 + z).
///
/// Holds the Maclaurin coefficient table; [`ln_barnes_g`] and
/// [`barnes_pair`] use a shared default instance.
#[derive(Debug, Clone)]
pub struct BarnesG {
    taylor: Vec<f64>,
}

impl Default for BarnesG {
    fn default() -> Self {
        Self::new()
    }
}

impl BarnesG {
    pub fn new() -> Self {
        let mut taylor = vec![0.0; TAYLOR_TERMS + 1];
        taylor[1] = 0.5 * (2.0 * PI).ln() - 0.5;
        taylor[2] = -0.5 * (1.0 + EULER_GAMMA);
        for (k, c) in taylor.iter_mut().enumerate().skip(3) {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            *c = sign * zeta_int(k as u32 - 1) / k as f64;
        }
        Self { taylor }
    }

    /// Evaluator whose series coefficients are scaled by `1 + eps`.
    /// Only useful as a sensitivity canary for the self-test.
    #[doc(hidden)]
    pub fn with_perturbed_coefficients(eps: f64) -> Self {
        let mut g = Self::new();
        for c in g.taylor.iter_mut().skip(1) {
            *c *= 1.0 + eps;
        }
        g
    }

    fn taylor(&self, z: Complex64) -> Complex64 {
        self.taylor
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// log G(1 + w) for large |w| with Re w > 0.
    fn asymptotic(w: Complex64) -> Complex64 {
        let ln_w = w.ln();
        let w2 = w * w;
        let mut acc = (w2 * 0.5 - 1.0 / 12.0) * ln_w - w2 * 0.75
            + w * (0.5 * (2.0 * PI).ln())
            + ZETA_PRIME_MINUS_ONE;
        let inv2 = (w2).inv();
        let mut pow = inv2;
        for (k, b) in BERNOULLI_EVEN.iter().enumerate().take(11).skip(1) {
            let kf = k as f64;
            acc += pow * (b / (4.0 * kf * (kf + 1.0)));
            pow *= inv2;
        }
        acc
    }

    /// log G(1 + z), continuous along paths avoiding the zeros of G.
    pub fn ln_g(&self, z: Complex64) -> Result<Complex64> {
        if !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::NonFinite("Barnes G argument"));
        }
        // G(1+z) = 0 exactly when 1+z is a non-positive integer
        if is_nonpositive_integer(z + 1.0, 1e-14) {
            return Err(Error::Zero { re: z.re, im: z.im });
        }
        if z.norm() < TAYLOR_RADIUS {
            return ensure_finite(self.taylor(z), "ln_barnes_g");
        }
        let mut shift = 0usize;
        while z.re + (shift as f64) < ASYMPTOTIC_MIN_RE
            || (z + shift as f64).norm() < ASYMPTOTIC_MIN_ABS
        {
            shift += 1;
        }
        // G(1+z+N) = G(1+z) Π_{k=1}^{N} Γ(z+k)
        let mut acc = Self::asymptotic(z + shift as f64);
        for k in 1..=shift {
            acc -= ln_gamma(z + k as f64)?;
        }
        ensure_finite(acc, "ln_barnes_g")
    }

    /// log[G(1 + u/2πi) G(1 − u/2πi)] for real u.
    pub fn pair(&self, u: f64) -> Result<f64> {
        if !u.is_finite() || u.abs() >= BARNES_PAIR_LIMIT {
            return Err(Error::Range {
                what: "barnes_pair",
                value: u,
            });
        }
        // u / (2πi) = −i u / 2π
        let z = Complex64::new(0.0, -u / (2.0 * PI));
        Ok(2.0 * self.ln_g(z)?.re)
    }
}

fn shared() -> &'static BarnesG {
    static G: OnceLock<BarnesG> = OnceLock::new();
    G.get_or_init(BarnesG::new)
}

/// log G(1 + z).
pub fn ln_barnes_g(z: Complex64) -> Result<Complex64> {
    shared().ln_g(z)
}

/// log[G(1 + u/2πi) G(1 − u/2πi)], real and even in u.
pub fn barnes_pair(u: f64) -> Result<f64> {
    shared().pair(u)
}
