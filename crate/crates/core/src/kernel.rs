//! The Bessel kernel
//!
//! `K(x, y) = [J_α(√x) √y J'_α(√y) − √x J'_α(√x) J_α(√y)] / (2(x − y))`
//!
//! and its √-substituted form `K̃(s, t) = 2√(st) K(s², t²)`. With
//! `φ(s) = s J_{α+1}(s)` and `ψ(s) = J_α(s)` the latter reads
//! `K̃(s, t) = √(st) [φ(s)ψ(t) − ψ(s)φ(t)] / (s² − t²)`.
//!
//! Close to the diagonal the quotient is replaced by its expansion about the
//! midpoint `c = (s+t)/2` in the half-gap `h = (s−t)/2`:
//! `[φ(s)ψ(t) − ψ(s)φ(t)]/(2h) = W + h²[(φ'''ψ − φψ''')/6 + (φ'ψ'' − φ''ψ')/2] + O(h⁴)`
//! with `W = φ'ψ − φψ'` evaluated at `c`.

use crate::error::{Error, Result};
use crate::specfun::bessel_pair;

/// Relative gap below which [`bessel_kernel`] switches to the midpoint expansion.
pub const DIAGONAL_SWITCH: f64 = 1e-6;

/// Scaled half-gap below which [`transformed_kernel`] uses the expansion.
const EXPANSION_SWITCH: f64 = 1e-4;

/// Hard-edge parameter α of the Bessel kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    alpha: f64,
}

impl KernelParams {
    pub fn new(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha <= -1.0 {
            return Err(Error::domain(format!("alpha must exceed -1, got {alpha}")));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

fn positive(v: f64, what: &str) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "{what} must be positive and finite, got {v}"
        )))
    }
}

/// φ, ψ and their first three derivatives at s.
struct Jet {
    phi: [f64; 4],
    psi: [f64; 4],
}

fn jet(alpha: f64, s: f64) -> Jet {
    let (ja, jb) = bessel_pair(alpha, s);
    let a2 = alpha * alpha;
    let psi0 = ja;
    let psi1 = alpha / s * ja - jb;
    let psi2 = -psi1 / s - (1.0 - a2 / (s * s)) * psi0;
    let psi3 =
        -psi2 / s + psi1 / (s * s) - (1.0 - a2 / (s * s)) * psi1 - 2.0 * a2 / (s * s * s) * psi0;
    let phi0 = s * jb;
    let phi1 = s * psi0 - alpha / s * phi0;
    let phi2 = psi0 + s * psi1 + alpha / (s * s) * phi0 - alpha / s * phi1;
    let phi3 = 2.0 * psi1 + s * psi2 - 2.0 * alpha / (s * s * s) * phi0
        + 2.0 * alpha / (s * s) * phi1
        - alpha / s * phi2;
    Jet {
        phi: [phi0, phi1, phi2, phi3],
        psi: [psi0, psi1, psi2, psi3],
    }
}

/// `[φ(c+h)ψ(c−h) − ψ(c+h)φ(c−h)] / (2h)` to O(h⁴).
fn midpoint_quotient(alpha: f64, c: f64, h: f64) -> f64 {
    let Jet { phi, psi } = jet(alpha, c);
    let w = phi[1] * psi[0] - phi[0] * psi[1];
    let corr =
        (phi[3] * psi[0] - phi[0] * psi[3]) / 6.0 + (phi[1] * psi[2] - phi[2] * psi[1]) / 2.0;
    w + h * h * corr
}

/// K̃ from precomputed pairs `(J_α, J_{α+1})` at two distinct points.
#[inline]
pub(crate) fn transformed_offdiag(s: f64, js: (f64, f64), t: f64, jt: (f64, f64)) -> f64 {
    let num = s * js.1 * jt.0 - t * js.0 * jt.1;
    (s * t).sqrt() * num / ((s - t) * (s + t))
}

/// K̃(s, s) from the pair `(J_α(s), J_{α+1}(s))`.
#[inline]
pub(crate) fn transformed_diag(alpha: f64, s: f64, js: (f64, f64)) -> f64 {
    let (a, b) = js;
    0.5 * (s * (a * a + b * b) - 2.0 * alpha * a * b)
}

fn near_diagonal(s: f64, t: f64) -> bool {
    let c = 0.5 * (s + t);
    let h = 0.5 * (s - t).abs();
    h * (1.0f64).max(1.0 / c) < EXPANSION_SWITCH
}

/// K̃ using precomputed pairs, falling back to the midpoint expansion when
/// the two points are too close for the quotient.
pub(crate) fn transformed_from_pairs(
    alpha: f64,
    s: f64,
    js: (f64, f64),
    t: f64,
    jt: (f64, f64),
) -> f64 {
    if s == t {
        transformed_diag(alpha, s, js)
    } else if near_diagonal(s, t) {
        transformed_midpoint(alpha, s, t)
    } else {
        transformed_offdiag(s, js, t, jt)
    }
}

fn transformed_midpoint(alpha: f64, s: f64, t: f64) -> f64 {
    let c = 0.5 * (s + t);
    let h = 0.5 * (s - t);
    // (s² − t²) = 4ch and the quotient above is over 2h
    (s * t).sqrt() * midpoint_quotient(alpha, c, h) / (2.0 * c)
}

/// K̃(s, t) = 2√(st) K(s², t²), analytic across the diagonal.
pub fn transformed_kernel(p: KernelParams, s: f64, t: f64) -> Result<f64> {
    positive(s, "s")?;
    positive(t, "t")?;
    let a = p.alpha;
    Ok(transformed_from_pairs(
        a,
        s,
        bessel_pair(a, s),
        t,
        bessel_pair(a, t),
    ))
}

/// K(x, y) for x, y > 0.
pub fn bessel_kernel(p: KernelParams, x: f64, y: f64) -> Result<f64> {
    positive(x, "x")?;
    positive(y, "y")?;
    let a = p.alpha;
    let (sx, sy) = (x.sqrt(), y.sqrt());
    if x == y {
        return Ok(transformed_diag(a, sx, bessel_pair(a, sx)) / (2.0 * sx));
    }
    if (x - y).abs() < DIAGONAL_SWITCH * x.max(1.0) {
        return Ok(transformed_midpoint(a, sx, sy) / (2.0 * (sx * sy).sqrt()));
    }
    let (jx, jx1) = bessel_pair(a, sx);
    let (jy, jy1) = bessel_pair(a, sy);
    // √x J'_α(√x) = α J_α(√x) − √x J_{α+1}(√x)
    let dx = a * jx - sx * jx1;
    let dy = a * jy - sy * jy1;
    Ok((jx * dy - dx * jy) / (2.0 * (x - y)))
}

/// K(x, x), the one-point density of the process.
pub fn bessel_kernel_diag(p: KernelParams, x: f64) -> Result<f64> {
    positive(x, "x")?;
    let s = x.sqrt();
    Ok(transformed_diag(p.alpha, s, bessel_pair(p.alpha, s)) / (2.0 * s))
}
