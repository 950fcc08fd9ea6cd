//! Closed-form large-r side: the expansions of log E_α and log F_α, the
//! counting-statistic predictions and the limiting CLT covariances.
//!
//! ```text
//! μ_α(x) = √x/π − α/2        σ²(x) = log(4√x)/(2π²)
//! Σ(x_k, x_j) = log((√x_k + √x_j)/(√x_k − √x_j))/(2π²)
//! ```

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fredholm::{FugacityVector, ProcessSpec};
use crate::specfun::{barnes_pair, ln_barnes_g, EULER_GAMMA};

/// Smallest relative window gap `(√x_k − √x_j)/√x_k` accepted by [`big_sigma`].
pub const COLLISION_GUARD: f64 = 1e-9;

/// Relative gap below which [`separation_warning`] reports nearly colliding
/// windows.
pub const SEPARATION_WARN: f64 = 1e-2;

fn positive(x: f64, what: &str) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("{what} must be positive, got {x}")))
    }
}

pub fn mu_alpha(alpha: f64, x: f64) -> Result<f64> {
    positive(x, "x")?;
    Ok(x.sqrt() / PI - 0.5 * alpha)
}

pub fn sigma2(x: f64) -> Result<f64> {
    positive(x, "x")?;
    Ok((4.0 * x.sqrt()).ln() / (2.0 * PI * PI))
}

pub fn big_sigma(xk: f64, xj: f64) -> Result<f64> {
    positive(xj, "x_j")?;
    positive(xk, "x_k")?;
    let (a, b) = (xk.sqrt(), xj.sqrt());
    if (a - b) / a < COLLISION_GUARD {
        return Err(Error::domain(format!(
            "windows collide: need x_k > x_j with separation, got x_k={xk}, x_j={xj}"
        )));
    }
    Ok(((a + b) / (a - b)).ln() / (2.0 * PI * PI))
}

/// `(1 + γ_E)/(2π²)`, the constant in the single-window variance.
pub fn variance_constant() -> f64 {
    (1.0 + EULER_GAMMA) / (2.0 * PI * PI)
}

/// Order of the remainder, `log r/√r`. Never added to predictions.
pub fn error_scale(r: f64) -> f64 {
    r.ln() / r.sqrt()
}

/// Conditional centering `√(r(x − x₁))/π − (α/π) arccos(√x₁/√x)`.
pub fn mu_tilde(alpha: f64, r: f64, x1: f64, x: f64) -> Result<f64> {
    positive(r, "r")?;
    positive(x1, "x_1")?;
    if x.is_nan() || x <= x1 {
        return Err(Error::domain(format!("need x > x_1, got x={x}, x_1={x1}")));
    }
    Ok((r * (x - x1)).sqrt() / PI - alpha / PI * (x1.sqrt() / x.sqrt()).acos())
}

/// An asymptotic log-moment split into its summands.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpansionBreakdown {
    /// Σ u_j √(r x_j)/π (or its conditional analogue).
    pub sqrt_r_term: f64,
    /// Σ (u_j²/2) σ²(·).
    pub log_r_term: f64,
    /// Σ_{j<k} u_j u_k Σ(·,·).
    pub bilinear_term: f64,
    /// Σ log G(1 + u_j/2πi) G(1 − u_j/2πi).
    pub barnes_term: f64,
    /// The α-dependent part of the centering, −α u_j/2 per window.
    pub alpha_term: f64,
    pub total: f64,
}

impl ExpansionBreakdown {
    fn new(sqrt_r: f64, log_r: f64, bilinear: f64, barnes: f64, alpha: f64) -> Self {
        Self {
            sqrt_r_term: sqrt_r,
            log_r_term: log_r,
            bilinear_term: bilinear,
            barnes_term: barnes,
            alpha_term: alpha,
            total: sqrt_r + alpha + log_r + bilinear + barnes,
        }
    }
}

/// Reports windows closer than [`SEPARATION_WARN`].
pub fn separation_warning(spec: &ProcessSpec) -> Option<String> {
    let sep = spec.min_separation();
    (sep < SEPARATION_WARN).then(|| {
        format!(
            "windows nearly collide (relative gap {sep:.3e}); the expansion is not uniform there"
        )
    })
}

/// Large-r expansion of log E_α(r x⃗, u⃗) for fugacities `u⃗`.
pub fn log_moment_asymptotic(
    spec: &ProcessSpec,
    u: &FugacityVector,
    r: f64,
) -> Result<ExpansionBreakdown> {
    positive(r, "r")?;
    let x = spec.thresholds();
    let u = u.as_slice();
    if u.len() != x.len() {
        return Err(Error::config(format!(
            "{} fugacities for {} windows",
            u.len(),
            x.len()
        )));
    }
    let alpha = spec.alpha();
    let (mut sq, mut lr, mut bl, mut bp, mut al) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (j, (&uj, &xj)) in u.iter().zip(x).enumerate() {
        sq += uj * (r * xj).sqrt() / PI;
        al -= 0.5 * alpha * uj;
        lr += 0.5 * uj * uj * sigma2(r * xj)?;
        bp += barnes_pair(uj)?;
        for k in j + 1..x.len() {
            bl += uj * u[k] * big_sigma(x[k], xj)?;
        }
    }
    Ok(ExpansionBreakdown::new(sq, lr, bl, bp, al))
}

/// `log τ_α = log G(1+α) − (α/2) log 2π`.
pub fn log_tau(alpha: f64) -> Result<f64> {
    if !alpha.is_finite() || alpha <= -1.0 {
        return Err(Error::domain(format!("alpha must exceed -1, got {alpha}")));
    }
    Ok(ln_barnes_g(alpha.into())?.re - 0.5 * alpha * (2.0 * PI).ln())
}

/// Large-gap expansion `log τ_α − (α²/4) log(rx) − rx/4 + α√(rx)` of the
/// single-window gap probability.
pub fn log_gap_asymptotic_m1(alpha: f64, rx: f64) -> Result<f64> {
    positive(rx, "rx")?;
    Ok(log_tau(alpha)? - 0.25 * alpha * alpha * rx.ln() - 0.25 * rx + alpha * rx.sqrt())
}

/// Expansion of the conditional log-moment `log E^c_α(r x⃗, u⃗)` given an
/// empty first window; `u = (u_2, …, u_m)`.
pub fn log_conditional_asymptotic(
    spec: &ProcessSpec,
    u: &FugacityVector,
    r: f64,
) -> Result<ExpansionBreakdown> {
    positive(r, "r")?;
    let x = spec.thresholds();
    let m = x.len();
    if m < 2 {
        return Err(Error::config(
            "the conditional expansion needs at least two windows",
        ));
    }
    let u = u.as_slice();
    if u.len() != m - 1 {
        return Err(Error::config(format!(
            "{} fugacities for {} conditional windows",
            u.len(),
            m - 1
        )));
    }
    let alpha = spec.alpha();
    let x1 = x[0];
    let (mut sq, mut lr, mut bl, mut bp, mut al) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (i, &uj) in u.iter().enumerate() {
        let xj = x[i + 1];
        sq += uj * (r * (xj - x1)).sqrt() / PI;
        al -= uj * alpha / PI * (x1.sqrt() / xj.sqrt()).acos();
        lr += 0.5 * uj * uj * sigma2(r * (xj - x1))?;
        bp += barnes_pair(uj)?;
        for k in i + 1..u.len() {
            bl += uj * u[k] * big_sigma(x[k + 1] - x1, xj - x1)?;
        }
    }
    Ok(ExpansionBreakdown::new(sq, lr, bl, bp, al))
}

/// Predicted means, variances and covariances of the counting function.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountingPrediction {
    /// E N_(0, r x_j).
    pub mean: Vec<f64>,
    /// Var N_(0, r x_j).
    pub variance: Vec<f64>,
    /// (j, k, Cov(N_(0,r x_j), N_(0,r x_k))) for j < k.
    pub covariance: Vec<(usize, usize, f64)>,
    /// E N_(r x_{j−1}, r x_j) for j ≥ 2 (0-based index j).
    pub interval_mean: Vec<f64>,
    /// Var N_(r x_{j−1}, r x_j) for j ≥ 2.
    pub interval_variance: Vec<f64>,
}

pub fn predicted_counting_stats(spec: &ProcessSpec, r: f64) -> Result<CountingPrediction> {
    positive(r, "r")?;
    let a = spec.alpha();
    let x = spec.thresholds();
    let c = variance_constant();
    let mut out = CountingPrediction {
        mean: Vec::new(),
        variance: Vec::new(),
        covariance: Vec::new(),
        interval_mean: Vec::new(),
        interval_variance: Vec::new(),
    };
    for (j, &xj) in x.iter().enumerate() {
        out.mean.push(mu_alpha(a, r * xj)?);
        out.variance.push(sigma2(r * xj)? + c);
        for (k, &xk) in x.iter().enumerate().skip(j + 1) {
            out.covariance.push((j, k, big_sigma(xk, xj)?));
        }
        if j > 0 {
            let xp = x[j - 1];
            out.interval_mean
                .push(mu_alpha(a, r * xj)? - mu_alpha(a, r * xp)?);
            out.interval_variance
                .push(sigma2(r * xp)? + sigma2(r * xj)? + 2.0 * c - 2.0 * big_sigma(xj, xp)?);
        }
    }
    Ok(out)
}

/// Conditional predictions given `N_(0, r x₁) = 0`, for windows
/// `(r x₁, r x_j)`, j ≥ 2.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionalPrediction {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    /// (j, k, covariance) with 0-based window indices j < k, both ≥ 1.
    pub covariance: Vec<(usize, usize, f64)>,
}

pub fn predicted_conditional_stats(spec: &ProcessSpec, r: f64) -> Result<ConditionalPrediction> {
    positive(r, "r")?;
    let x = spec.thresholds();
    if x.len() < 2 {
        return Err(Error::config(
            "conditional statistics need at least two windows",
        ));
    }
    let a = spec.alpha();
    let x1 = x[0];
    let c = variance_constant();
    let mut out = ConditionalPrediction {
        mean: Vec::new(),
        variance: Vec::new(),
        covariance: Vec::new(),
    };
    for (j, &xj) in x.iter().enumerate().skip(1) {
        out.mean.push(mu_tilde(a, r, x1, xj)?);
        out.variance.push(sigma2(r * (xj - x1))? + c);
        for (k, &xk) in x.iter().enumerate().skip(j + 1) {
            out.covariance.push((j, k, big_sigma(xk - x1, xj - x1)?));
        }
    }
    Ok(out)
}

/// Which family of normalised counting variables a CLT refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CltVariant {
    /// N_(0, r x_j), j = 1..m.
    Cumulative,
    /// N_(0, r x₁) and the increments N_(r x_{j−1}, r x_j).
    Increments,
    /// N_(r x₁, r x_j) given N_(0, r x₁) = 0, j = 2..m.
    Conditional,
}

impl std::str::FromStr for CltVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cumulative" => Ok(Self::Cumulative),
            "increments" => Ok(Self::Increments),
            "conditional" => Ok(Self::Conditional),
            _ => Err(Error::config(format!(
                "unknown CLT variant '{s}' (cumulative, increments, conditional)"
            ))),
        }
    }
}

/// Limiting covariance matrix of the normalised variables.
pub fn clt_covariance(m: usize, variant: CltVariant) -> Result<Vec<Vec<f64>>> {
    let min = if variant == CltVariant::Conditional {
        2
    } else {
        1
    };
    if m < min {
        return Err(Error::config(format!(
            "{variant:?} CLT needs m >= {min}, got {m}"
        )));
    }
    let d = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
    let out = match variant {
        CltVariant::Cumulative => (0..m).map(|i| (0..m).map(|j| d(i, j)).collect()).collect(),
        CltVariant::Conditional => (1..m).map(|i| (1..m).map(|j| d(i, j)).collect()).collect(),
        CltVariant::Increments => {
            // 1-based indices as in the usual statement
            let e = |i: usize, j: usize| -> f64 {
                if i == 1 || j == 1 {
                    let o = if i == 1 { j } else { i };
                    d(1, o) - d(2, o) / 2f64.sqrt()
                } else {
                    d(i, j) - 0.5 * d(i, j + 1) - 0.5 * d(i + 1, j)
                }
            };
            (1..=m)
                .map(|i| (1..=m).map(|j| e(i, j)).collect())
                .collect()
        }
    };
    Ok(out)
}

/// Centering, scaling and limiting covariance of a counting CLT.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CltPrediction {
    pub variant: CltVariant,
    pub centering: Vec<f64>,
    pub scaling: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
}

pub fn clt_prediction(spec: &ProcessSpec, r: f64, variant: CltVariant) -> Result<CltPrediction> {
    positive(r, "r")?;
    let a = spec.alpha();
    let x = spec.thresholds();
    let m = x.len();
    let covariance = clt_covariance(m, variant)?;
    let mut centering = Vec::new();
    let mut scaling = Vec::new();
    match variant {
        CltVariant::Cumulative => {
            for &xj in x {
                centering.push(mu_alpha(a, r * xj)?);
                scaling.push(sigma2(r * xj)?.sqrt());
            }
        }
        CltVariant::Increments => {
            centering.push(mu_alpha(a, r * x[0])?);
            scaling.push(sigma2(r * x[0])?.sqrt());
            for w in x.windows(2) {
                centering.push(mu_alpha(a, r * w[1])? - mu_alpha(a, r * w[0])?);
                scaling.push((sigma2(r * w[1])? + sigma2(r * w[0])?).sqrt());
            }
        }
        CltVariant::Conditional => {
            for &xj in &x[1..] {
                centering.push(mu_tilde(a, r, x[0], xj)?);
                scaling.push(sigma2(r * (xj - x[0]))?.sqrt());
            }
        }
    }
    Ok(CltPrediction {
        variant,
        centering,
        scaling,
        covariance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_values() {
        assert!((mu_alpha(0.0, PI * PI).unwrap() - 1.0).abs() < 1e-15);
        assert!(sigma2(1.0 / 16.0).unwrap().abs() < 1e-16);
        let s = big_sigma(4.0, 1.0).unwrap();
        assert!((s - 3f64.ln() / (2.0 * PI * PI)).abs() < 1e-16);
        assert!((s - 0.055_656_348_725_935_28).abs() < 1e-15);
        assert!(big_sigma(1.0, 1.0).is_err());
        assert!(big_sigma(1.0, 2.0).is_err());
    }

    #[test]
    fn gap_constants() {
        assert_eq!(log_gap_asymptotic_m1(0.0, 100.0).unwrap(), -25.0);
        let v = log_gap_asymptotic_m1(2.0, 100.0).unwrap();
        assert!((v + 11.44305).abs() < 1e-5, "{v}");
    }

    #[test]
    fn increments_matrix() {
        let m2 = clt_covariance(2, CltVariant::Increments).unwrap();
        let h = 1.0 / 2f64.sqrt();
        assert_eq!(m2, vec![vec![1.0, -h], vec![-h, 1.0]]);
        let m3 = clt_covariance(3, CltVariant::Increments).unwrap();
        assert_eq!(m3[1][2], -0.5);
        assert_eq!(m3[2][1], -0.5);
        assert_eq!(m3[0][2], 0.0);
        assert_eq!(
            clt_covariance(1, CltVariant::Cumulative).unwrap(),
            vec![vec![1.0]]
        );
        assert_eq!(clt_covariance(3, CltVariant::Conditional).unwrap().len(), 2);
        assert!(clt_covariance(1, CltVariant::Conditional).is_err());
    }

    #[test]
    fn conditional_needs_two_windows() {
        let spec = ProcessSpec::single(0.0, 1.0).unwrap();
        let u = FugacityVector::new(vec![]).unwrap();
        assert!(matches!(
            log_conditional_asymptotic(&spec, &u, 10.0),
            Err(Error::Config(_))
        ));
    }
}
