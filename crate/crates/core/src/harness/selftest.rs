//! Invariant suite run by `hardedge selftest`.

use std::f64::consts::PI;
use std::fmt;
use std::time::Instant;

use num_complex::Complex64;
use serde::Serialize;

use crate::asymptotics::{
    big_sigma, clt_covariance, log_gap_asymptotic_m1, log_moment_asymptotic, sigma2,
    variance_constant, CltVariant,
};
use crate::error::Result;
use crate::fredholm::{
    log_det_fixed, log_exponential_moment, log_fredholm_det, log_fredholm_det_raw, variance_count,
    FugacityVector, Precision, ProcessSpec, ThinningVector,
};
use crate::kernel::{bessel_kernel, transformed_kernel, KernelParams};
use crate::specfun::{bessel_j, digamma, ln_gamma, BarnesG};

#[derive(Debug, Clone, Default)]
pub struct SelfTestOptions {
    /// Evaluator used for every Barnes G check.
    pub barnes: BarnesG,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub residual: f64,
    pub threshold: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelfTestReport {
    pub checks: Vec<Check>,
    pub elapsed_secs: f64,
}

impl SelfTestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for SelfTestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{} {:<34} residual={:.3e} threshold={:.1e}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.residual,
                c.threshold
            )?;
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        write!(
            f,
            "{} checks, {} failed, {:.2}s",
            self.checks.len(),
            failed,
            self.elapsed_secs
        )
    }
}

/// Sample points in the strip |Im z| ≤ 2, −0.45 ≤ Re z ≤ 3.
fn strip() -> Vec<Complex64> {
    let mut v = Vec::new();
    for i in 0..12 {
        for k in 0..9 {
            let re = -0.45 + 3.45 * i as f64 / 11.0;
            let im = -2.0 + 0.5 * k as f64;
            v.push(Complex64::new(re, im));
        }
    }
    v
}

fn max_of(it: impl Iterator<Item = Result<f64>>) -> Result<f64> {
    let mut m = 0.0f64;
    for v in it {
        let v = v?;
        m = if v.is_nan() { f64::INFINITY } else { m.max(v) };
    }
    Ok(m)
}

type CheckFn<'a> = Box<dyn Fn() -> Result<f64> + 'a>;

pub fn run_selftest(opts: &SelfTestOptions) -> SelfTestReport {
    let start = Instant::now();
    let g = &opts.barnes;
    let checks: Vec<(&'static str, f64, CheckFn)> = vec![
        (
            "gamma recurrence",
            1e-10,
            Box::new(|| {
                max_of(
                    strip()
                        .into_iter()
                        .map(|z| Ok((ln_gamma(z + 1.0)? - ln_gamma(z)? - z.ln()).norm())),
                )
            }),
        ),
        (
            "digamma recurrence",
            1e-10,
            Box::new(|| {
                max_of(
                    strip()
                        .into_iter()
                        .map(|z| Ok((digamma(z + 1.0)? - digamma(z)? - z.inv()).norm())),
                )
            }),
        ),
        (
            "barnes functional equation",
            1e-10,
            Box::new(|| {
                // log G(2+z) − log G(1+z) − log Γ(1+z) ∈ 2πiℤ
                max_of(strip().into_iter().map(|z| {
                    let d = g.ln_g(z + 1.0)? - g.ln_g(z)? - ln_gamma(z + 1.0)?;
                    let k = (d.im / (2.0 * PI)).round();
                    Ok(Complex64::new(d.re, d.im - 2.0 * PI * k).norm())
                }))
            }),
        ),
        (
            "barnes conjugate symmetry",
            1e-12,
            Box::new(|| {
                max_of(
                    strip()
                        .into_iter()
                        .map(|z| Ok((g.ln_g(z.conj())? - g.ln_g(z)?.conj()).norm())),
                )
            }),
        ),
        (
            "barnes pair even, zero at origin",
            1e-14,
            Box::new(|| {
                let mut m = g.pair(0.0)?.abs();
                for i in 1..40 {
                    let u = 0.9 * i as f64;
                    m = m.max((g.pair(u)? - g.pair(-u)?).abs());
                }
                Ok(m)
            }),
        ),
        (
            "bessel recurrence",
            1e-10,
            Box::new(|| {
                let mut m = 0.0f64;
                for &nu in &[0.3, 1.0, 1.5, 2.7, 5.0] {
                    for i in 0..400 {
                        let x = 0.1 * (1000.0f64).powf(i as f64 / 399.0);
                        let r = bessel_j(nu - 1.0, x)? + bessel_j(nu + 1.0, x)?
                            - 2.0 * nu / x * bessel_j(nu, x)?;
                        m = m.max(r.abs());
                    }
                }
                Ok(m)
            }),
        ),
        (
            "kernel symmetry",
            1e-13,
            Box::new(|| {
                let mut m = 0.0f64;
                for &a in &[-0.6, 0.0, 0.5, 2.3] {
                    let p = KernelParams::new(a)?;
                    for i in 1..30 {
                        for j in 1..30 {
                            let (x, y) = (0.37 * i as f64, 1.9 * j as f64);
                            let d = bessel_kernel(p, x, y)? - bessel_kernel(p, y, x)?;
                            m = m.max(d.abs());
                        }
                    }
                }
                Ok(m)
            }),
        ),
        (
            "kernel near-diagonal continuity",
            1e-10,
            Box::new(|| {
                // second difference straddling the switch to the midpoint expansion
                let mut m = 0.0f64;
                for &a in &[0.0, 0.5, 1.7] {
                    let p = KernelParams::new(a)?;
                    for &s in &[1.5, 4.0, 37.0] {
                        let k = |d: f64| transformed_kernel(p, s, s - d);
                        let d2 = k(1.99e-4)? - 2.0 * k(2.01e-4)? + k(2.03e-4)?;
                        m = m.max(d2.abs());
                    }
                }
                Ok(m)
            }),
        ),
        (
            "normalisation log F(1) = 0",
            0.0,
            Box::new(|| {
                let spec = ProcessSpec::new(0.7, vec![1.0, 2.5])?;
                Ok(
                    log_fredholm_det(&spec, &ThinningVector::ones(2), 50.0, 1e-9)?
                        .log_value
                        .abs(),
                )
            }),
        ),
        (
            "probability range and sign",
            0.0,
            Box::new(|| {
                let spec = ProcessSpec::new(0.3, vec![0.5, 1.0])?;
                let mut worst = 0.0f64;
                for s in [[0.2, 0.9], [0.0, 0.5], [1.0, 0.1]] {
                    let d = log_fredholm_det(&spec, &ThinningVector::new(s.to_vec())?, 30.0, 1e-9)?;
                    worst = worst.max(d.log_value.max(0.0));
                    if d.sign != 1.0 {
                        worst = f64::INFINITY;
                    }
                }
                Ok(worst)
            }),
        ),
        (
            "monotone in s",
            0.0,
            Box::new(|| {
                let spec = ProcessSpec::single(1.0, 1.0)?;
                let mut prev = f64::NEG_INFINITY;
                let mut worst = 0.0f64;
                for i in 0..=5 {
                    let s = ThinningVector::new(vec![0.2 * i as f64])?;
                    let v = log_fredholm_det(&spec, &s, 40.0, 1e-10)?.log_value;
                    worst = worst.max(prev - v);
                    prev = v;
                }
                Ok(worst.max(0.0))
            }),
        ),
        (
            "spectral convergence (drop ratio⁻¹)",
            0.1,
            Box::new(|| {
                let spec = ProcessSpec::new(0.5, vec![1.0, 2.0])?;
                let s = FugacityVector::new(vec![0.8, -0.6])?.to_thinning();
                let reference = log_det_fixed(&spec, &s, 100.0, 128, Precision::Double)?.0;
                let e1 =
                    (log_det_fixed(&spec, &s, 100.0, 12, Precision::Double)?.0 - reference).abs();
                let e2 =
                    (log_det_fixed(&spec, &s, 100.0, 24, Precision::Double)?.0 - reference).abs();
                Ok(e2 / e1.max(1e-300))
            }),
        ),
        (
            "sqrt vs raw representation",
            1e-7,
            Box::new(|| {
                let spec = ProcessSpec::single(0.0, 1.0)?;
                let s = ThinningVector::new(vec![0.4])?;
                let a = log_fredholm_det(&spec, &s, 25.0, 1e-12)?.log_value;
                let (b, _) = log_fredholm_det_raw(&spec, &s, 25.0, 200)?;
                Ok((a - b).abs())
            }),
        ),
        (
            "variance identity",
            1e-5,
            Box::new(|| {
                let spec = ProcessSpec::single(0.5, 1.0)?;
                let r = 60.0;
                let h = 1e-2;
                let l = |u: f64| -> Result<f64> {
                    Ok(
                        log_exponential_moment(&spec, &FugacityVector::new(vec![u])?, r, 1e-13)?
                            .log_value,
                    )
                };
                let fd = (l(h)? + l(-h)?) / (h * h);
                Ok((fd - variance_count(&spec, 0.0, r)?).abs())
            }),
        ),
        (
            "gap constant at alpha = 0",
            1e-8,
            Box::new(|| {
                let spec = ProcessSpec::single(0.0, 1.0)?;
                let v = log_fredholm_det(&spec, &ThinningVector::new(vec![0.0])?, 100.0, 1e-10)?;
                Ok((v.log_value - log_gap_asymptotic_m1(0.0, 100.0)?).abs())
            }),
        ),
        (
            "product-form identity",
            1e-12,
            Box::new(|| {
                let spec = ProcessSpec::new(0.4, vec![1.0, 3.0, 4.5])?;
                let u = [0.7, -1.1, 0.4];
                let r = 250.0;
                let full =
                    log_moment_asymptotic(&spec, &FugacityVector::new(u.to_vec())?, r)?.total;
                let mut single = 0.0;
                let mut cross = 0.0;
                for j in 0..3 {
                    single += log_moment_asymptotic(
                        &spec.window(j),
                        &FugacityVector::new(vec![u[j]])?,
                        r,
                    )?
                    .total;
                    for k in j + 1..3 {
                        let x = spec.thresholds();
                        cross += u[j] * u[k] * big_sigma(x[k], x[j])?;
                    }
                }
                Ok((full - single - cross).abs())
            }),
        ),
        (
            "second-derivative consistency",
            1e-10,
            Box::new(|| {
                let spec = ProcessSpec::single(0.0, 1.0)?;
                let r = 900.0;
                let f = |u: f64| -> Result<f64> {
                    Ok(log_moment_asymptotic(&spec, &FugacityVector::new(vec![u])?, r)?.total)
                };
                let d2 = |h: f64| -> Result<f64> { Ok((f(h)? - 2.0 * f(0.0)? + f(-h)?) / (h * h)) };
                let fd = (4.0 * d2(1e-2)? - d2(2e-2)?) / 3.0;
                Ok((fd - sigma2(r)? - variance_constant()).abs())
            }),
        ),
        (
            "clt matrices symmetric psd",
            1e-12,
            Box::new(|| {
                let mut worst = 0.0f64;
                for m in 2..7 {
                    for v in [
                        CltVariant::Cumulative,
                        CltVariant::Increments,
                        CltVariant::Conditional,
                    ] {
                        let c = clt_covariance(m, v)?;
                        let n = c.len();
                        let mat = nalgebra::DMatrix::from_fn(n, n, |i, j| c[i][j]);
                        worst = worst.max((&mat - mat.transpose()).abs().max());
                        let min = mat.symmetric_eigenvalues().min();
                        worst = worst.max(-min);
                    }
                }
                Ok(worst)
            }),
        ),
    ];
    let checks = checks
        .into_iter()
        .map(|(name, threshold, f)| {
            let residual = f().unwrap_or(f64::INFINITY);
            Check {
                name,
                residual,
                threshold,
                passed: residual <= threshold,
            }
        })
        .collect();
    SelfTestReport {
        checks,
        elapsed_secs: start.elapsed().as_secs_f64(),
    }
}
