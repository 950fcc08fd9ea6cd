//! Exact side: Nyström discretisation of the piecewise-thinned Bessel
//! operator, its log-determinant, and the trace identities for counting
//! statistics.
//!
//! All integrals run in the √-variable `t = √x`, in which the kernel is
//! [`transformed_kernel`](crate::kernel::transformed_kernel). Ill-conditioned
//! determinants (thinning close to zero on long windows, where `det(1 − K)`
//! is exponentially small) are recomputed in multiprecision arithmetic.

mod det;
mod grid;
mod moments;
mod mp;

use crate::error::{Error, Result};
use crate::kernel::KernelParams;

pub use det::{
    initial_nodes, log_det_fixed, log_exponential_moment, log_fredholm_det, log_fredholm_det_raw,
    log_fredholm_det_with, DetOptions, Precision, MAX_NODES_DEFAULT, TOL_DEFAULT,
};
pub use grid::{build_grid, build_thinned_grid, GridInterval, QuadratureGrid};
pub use moments::{covariance_count, expected_count, variance_count};

/// Hard-edge parameter and window endpoints `0 < x₁ < … < x_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessSpec {
    alpha: f64,
    thresholds: Vec<f64>,
}

impl ProcessSpec {
    pub fn new(alpha: f64, thresholds: Vec<f64>) -> Result<Self> {
        KernelParams::new(alpha)?;
        if thresholds.is_empty() {
            return Err(Error::config("at least one threshold is required"));
        }
        let mut prev = 0.0;
        for &x in &thresholds {
            if !x.is_finite() || x <= prev {
                return Err(Error::config(format!(
                    "thresholds must be positive and strictly increasing, got {thresholds:?}"
                )));
            }
            prev = x;
        }
        Ok(Self { alpha, thresholds })
    }

    pub fn single(alpha: f64, x: f64) -> Result<Self> {
        Self::new(alpha, vec![x])
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn m(&self) -> usize {
        self.thresholds.len()
    }

    pub fn kernel(&self) -> KernelParams {
        KernelParams::new(self.alpha).expect("validated on construction")
    }

    /// Smallest relative gap `(√x_k − √x_{k−1})/√x_k` between consecutive
    /// windows (1 for a single window).
    pub fn min_separation(&self) -> f64 {
        self.thresholds
            .windows(2)
            .map(|w| (w[1].sqrt() - w[0].sqrt()) / w[1].sqrt())
            .fold(1.0, f64::min)
    }

    /// The same process restricted to the single window `(0, x_j)`.
    pub fn window(&self, j: usize) -> Self {
        Self {
            alpha: self.alpha,
            thresholds: vec![self.thresholds[j]],
        }
    }
}

/// Thinning parameters `s_j ≥ 0`, one per window.
#[derive(Debug, Clone, PartialEq)]
pub struct ThinningVector {
    s: Vec<f64>,
}

impl ThinningVector {
    pub fn new(s: Vec<f64>) -> Result<Self> {
        if s.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::config(format!(
                "thinning parameters must be finite and non-negative, got {s:?}"
            )));
        }
        Ok(Self { s })
    }

    pub fn ones(m: usize) -> Self {
        Self { s: vec![1.0; m] }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.s
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    /// `u_j = log(s_j/s_{j+1})`, `u_m = log s_m`; needs every `s_j > 0`.
    pub fn to_fugacity(&self) -> Result<FugacityVector> {
        if self.s.iter().any(|v| *v <= 0.0) {
            return Err(Error::domain(
                "fugacity form needs strictly positive thinning parameters",
            ));
        }
        let m = self.s.len();
        let u = (0..m)
            .map(|j| {
                if j + 1 < m {
                    (self.s[j] / self.s[j + 1]).ln()
                } else {
                    self.s[j].ln()
                }
            })
            .collect();
        FugacityVector::new(u)
    }
}

/// Log-fugacities `u_j`, related to thinning by `s_j = exp(u_j + … + u_m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FugacityVector {
    u: Vec<f64>,
}

impl FugacityVector {
    pub fn new(u: Vec<f64>) -> Result<Self> {
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::config(format!(
                "fugacities must be finite, got {u:?}"
            )));
        }
        Ok(Self { u })
    }

    pub fn zeros(m: usize) -> Self {
        Self { u: vec![0.0; m] }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.u
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn to_thinning(&self) -> ThinningVector {
        let mut s = vec![0.0; self.u.len()];
        let mut acc = 0.0;
        for j in (0..self.u.len()).rev() {
            acc += self.u[j];
            s[j] = acc.exp();
        }
        ThinningVector { s }
    }
}

/// Signed log of a Fredholm determinant.
#[derive(Debug, Clone, PartialEq)]
pub struct LogDetResult {
    pub log_value: f64,
    pub sign: f64,
    pub nodes_per_interval: usize,
    /// Difference between the last two node-doubling values.
    pub est_error: f64,
    /// Mantissa bits used for the final evaluation (53 for hardware floats).
    pub precision_bits: u32,
}

impl LogDetResult {
    pub(crate) fn trivial() -> Self {
        Self {
            log_value: 0.0,
            sign: 1.0,
            nodes_per_interval: 0,
            est_error: 0.0,
            precision_bits: 53,
        }
    }
}
