//! Counting statistics: trace identities and Fredholm finite differences
//! against the closed-form predictions.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::compare::{linear_slope, pool};
use super::config::{ExperimentConfig, OutputFormat};
use crate::asymptotics::{predicted_conditional_stats, predicted_counting_stats};
use crate::error::{Error, Result};
use crate::fredholm::{
    covariance_count, expected_count, log_fredholm_det, variance_count, ProcessSpec, ThinningVector,
};

/// Step in u for the conditional finite differences.
pub const FD_STEP: f64 = 1e-2;
const FD_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentRow {
    pub r: f64,
    /// e.g. `mean[1]`, `cov[1,2]`, `interval_var[2]`, `cond_mean[2]`
    /// (1-based window labels).
    pub quantity: String,
    pub numeric: f64,
    pub predicted: f64,
    pub abs_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentsReport {
    pub rows: Vec<MomentRow>,
    /// Per interval window (x_{j−1}, x_j), j ≥ 2: fitted slope of the
    /// numeric variance against log r across the grid.
    pub interval_variance_slope: Vec<Option<f64>>,
}

fn row(r: f64, quantity: String, numeric: f64, predicted: f64) -> MomentRow {
    MomentRow {
        r,
        quantity,
        numeric,
        predicted,
        abs_diff: (numeric - predicted).abs(),
    }
}

/// Conditional log-moment `log E[e^{Σ v_j N_(r x₁, r x_j)} | N_(0, r x₁) = 0]`
/// for `v` indexed like `x[1..]`, up to the additive constant
/// `−log F(r x₁, 0)`, which cancels in every finite difference below.
fn conditional_log(spec: &ProcessSpec, v: &[f64], r: f64) -> Result<f64> {
    let m = spec.m();
    let mut s = vec![0.0; m];
    let mut acc = 0.0;
    for j in (1..m).rev() {
        acc += v[j - 1];
        s[j] = acc.exp();
    }
    let d = log_fredholm_det(spec, &ThinningVector::new(s)?, r, FD_TOL)?;
    if d.sign <= 0.0 {
        return Err(Error::domain(format!("determinant is negative at r = {r}")));
    }
    Ok(d.log_value)
}

/// Conditional mean, variance (window j) or covariance (windows j, k) by
/// central differences of the conditional log-moment.
fn conditional_stats(spec: &ProcessSpec, r: f64) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let m = spec.m();
    let h = FD_STEP;
    let l0 = conditional_log(spec, &vec![0.0; m - 1], r)?;
    let at = |i: usize, a: f64, k: Option<(usize, f64)>| -> Result<f64> {
        let mut v = vec![0.0; m - 1];
        v[i] += a;
        if let Some((k, b)) = k {
            v[k] += b;
        }
        conditional_log(spec, &v, r)
    };
    let mut mean = Vec::new();
    let mut var = Vec::new();
    let mut cov = Vec::new();
    for i in 0..m - 1 {
        let (p, q) = (at(i, h, None)?, at(i, -h, None)?);
        mean.push((p - q) / (2.0 * h));
        var.push((p - 2.0 * l0 + q) / (h * h));
        for k in i + 1..m - 1 {
            let pp = at(i, h, Some((k, h)))?;
            let pm = at(i, h, Some((k, -h)))?;
            let mp = at(i, -h, Some((k, h)))?;
            let mm = at(i, -h, Some((k, -h)))?;
            cov.push((pp - pm - mp + mm) / (4.0 * h * h));
        }
    }
    Ok((mean, var, cov))
}

fn moments_at(spec: &ProcessSpec, r: f64) -> Result<Vec<MomentRow>> {
    let x = spec.thresholds();
    let m = x.len();
    let pred = predicted_counting_stats(spec, r)?;
    let mut rows = Vec::new();
    for (j, &xj) in x.iter().enumerate() {
        let b = r * xj;
        rows.push(row(
            r,
            format!("mean[{}]", j + 1),
            expected_count(spec, 0.0, b)?,
            pred.mean[j],
        ));
        rows.push(row(
            r,
            format!("var[{}]", j + 1),
            variance_count(spec, 0.0, b)?,
            pred.variance[j],
        ));
    }
    for &(j, k, c) in &pred.covariance {
        let num = covariance_count(spec, (0.0, r * x[j]), (0.0, r * x[k]))?;
        rows.push(row(r, format!("cov[{},{}]", j + 1, k + 1), num, c));
    }
    for j in 1..m {
        let (a, b) = (r * x[j - 1], r * x[j]);
        rows.push(row(
            r,
            format!("interval_mean[{}]", j + 1),
            expected_count(spec, a, b)?,
            pred.interval_mean[j - 1],
        ));
        rows.push(row(
            r,
            format!("interval_var[{}]", j + 1),
            variance_count(spec, a, b)?,
            pred.interval_variance[j - 1],
        ));
    }
    if m >= 2 {
        let cp = predicted_conditional_stats(spec, r)?;
        let (mean, var, cov) = conditional_stats(spec, r)?;
        for j in 1..m {
            rows.push(row(
                r,
                format!("cond_mean[{}]", j + 1),
                mean[j - 1],
                cp.mean[j - 1],
            ));
            rows.push(row(
                r,
                format!("cond_var[{}]", j + 1),
                var[j - 1],
                cp.variance[j - 1],
            ));
        }
        for (&(j, k, c), &num) in cp.covariance.iter().zip(&cov) {
            rows.push(row(r, format!("cond_cov[{},{}]", j + 1, k + 1), num, c));
        }
    }
    Ok(rows)
}

pub fn run_moments(cfg: &ExperimentConfig) -> Result<MomentsReport> {
    cfg.validate()?;
    let spec = cfg.spec()?;
    let rs = cfg.r_grid.points();
    let per_r = pool(cfg.jobs)?.install(|| {
        rs.par_iter()
            .map(|&r| moments_at(&spec, r))
            .collect::<Result<Vec<_>>>()
    })?;
    let rows: Vec<MomentRow> = per_r.into_iter().flatten().collect();
    let interval_variance_slope = (2..=spec.m())
        .map(|j| {
            let key = format!("interval_var[{j}]");
            let pts: Vec<(f64, f64)> = rows
                .iter()
                .filter(|row| row.quantity == key)
                .map(|row| (row.r.ln(), row.numeric))
                .collect();
            linear_slope(&pts)
        })
        .collect();
    Ok(MomentsReport {
        rows,
        interval_variance_slope,
    })
}

pub const MOMENTS_CSV_HEADER: &str = "r,quantity,numeric,predicted,abs_diff";

pub fn write_moments(
    report: &MomentsReport,
    format: OutputFormat,
    w: &mut dyn Write,
) -> Result<()> {
    match format {
        OutputFormat::Csv => {
            writeln!(w, "{MOMENTS_CSV_HEADER}")?;
            for row in &report.rows {
                writeln!(
                    w,
                    "{:.16e},{},{:.16e},{:.16e},{:.16e}",
                    row.r, row.quantity, row.numeric, row.predicted, row.abs_diff
                )?;
            }
        }
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut *w, report).map_err(|e| Error::Io(e.to_string()))?;
            writeln!(w)?;
        }
    }
    Ok(())
}
