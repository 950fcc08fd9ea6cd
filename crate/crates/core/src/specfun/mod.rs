//! Special functions: complex log-gamma and digamma, the Barnes G-function,
//! and Bessel functions of the first kind of real order.
//!
//! Everything here is pure and allocation-free apart from the shared
//! Barnes coefficient table, which is built once and never mutated.

mod barnes;
mod bessel;
mod gamma;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub use barnes::{barnes_pair, ln_barnes_g, BarnesG, BARNES_PAIR_LIMIT};
pub(crate) use bessel::bessel_pair;
pub use bessel::{bessel_j, bessel_j_prime};
pub(crate) use gamma::ln_gamma_real;
pub use gamma::{digamma, ln_gamma};

/// Complex argument/value type used throughout the special-function layer.
pub type ComplexValue = Complex64;

/// Euler–Mascheroni constant γ_E.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

pub(crate) fn ensure_finite(z: Complex64, what: &'static str) -> Result<Complex64> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(z)
    } else {
        Err(Error::NonFinite(what))
    }
}

pub(crate) fn is_nonpositive_integer(z: Complex64, tol: f64) -> bool {
    let n = z.re.round();
    n <= 0.0 && (z.re - n).abs() <= tol && z.im.abs() <= tol
}
