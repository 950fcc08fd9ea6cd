//! Numeric-versus-asymptotic sweeps over r.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, OutputFormat};
use crate::asymptotics::{
    log_conditional_asymptotic, log_gap_asymptotic_m1, log_moment_asymptotic, ExpansionBreakdown,
};
use crate::error::{Error, Result};
use crate::fredholm::{
    log_fredholm_det_with, DetOptions, FugacityVector, LogDetResult, ProcessSpec, ThinningVector,
};

/// Which closed form a configuration is compared against.
#[derive(Debug, Clone, PartialEq)]
pub enum Route {
    /// All `s_j > 0`: log E_α(r x⃗, u⃗).
    Moment(FugacityVector),
    /// One window, `s₁ = 0`: the large-gap expansion.
    Gap,
    /// `s₁ = 0`, m ≥ 2: log F(r x⃗, s⃗) − log F(r x₁, 0) against the
    /// conditional expansion, with `u = (u₂, …, u_m)`.
    Conditional(FugacityVector),
}

impl Route {
    pub fn select(cfg: &ExperimentConfig) -> Result<Self> {
        let s = cfg.thinning()?;
        let s = s.as_slice();
        if s[0] > 0.0 {
            if s.contains(&0.0) {
                return Err(Error::config(
                    "only the first thinning parameter may vanish for an asymptotic comparison",
                ));
            }
            return Ok(Route::Moment(
                ThinningVector::new(s.to_vec())?.to_fugacity()?,
            ));
        }
        if s.len() == 1 {
            return Ok(Route::Gap);
        }
        if s[1..].contains(&0.0) {
            return Err(Error::config(
                "only the first thinning parameter may vanish for an asymptotic comparison",
            ));
        }
        Ok(Route::Conditional(
            ThinningVector::new(s[1..].to_vec())?.to_fugacity()?,
        ))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Route::Moment(_) => "moment",
            Route::Gap => "gap",
            Route::Conditional(_) => "conditional",
        }
    }
}

/// Closed-form value with its summands where the expansion has them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticValue {
    pub route: &'static str,
    pub breakdown: Option<ExpansionBreakdown>,
    pub total: f64,
}

pub fn asymptotic_value(spec: &ProcessSpec, route: &Route, r: f64) -> Result<AsymptoticValue> {
    let breakdown = match route {
        Route::Moment(u) => Some(log_moment_asymptotic(spec, u, r)?),
        Route::Conditional(u) => Some(log_conditional_asymptotic(spec, u, r)?),
        Route::Gap => None,
    };
    let total = match &breakdown {
        Some(b) => b.total,
        None => log_gap_asymptotic_m1(spec.alpha(), r * spec.thresholds()[0])?,
    };
    Ok(AsymptoticValue {
        route: route.name(),
        breakdown,
        total,
    })
}

/// Numeric counterpart of [`asymptotic_value`]: `(log value, nodes, est_error)`.
pub fn numeric_value(
    spec: &ProcessSpec,
    s: &ThinningVector,
    route: &Route,
    r: f64,
    opts: &DetOptions,
) -> Result<(f64, usize, f64)> {
    let checked = |v: LogDetResult| {
        if v.sign > 0.0 {
            Ok(v)
        } else {
            Err(Error::domain(format!("determinant is negative at r = {r}")))
        }
    };
    match route {
        Route::Moment(u) => {
            let v = checked(log_fredholm_det_with(spec, &u.to_thinning(), r, opts)?)?;
            Ok((v.log_value, v.nodes_per_interval, v.est_error))
        }
        Route::Gap => {
            let v = checked(log_fredholm_det_with(spec, s, r, opts)?)?;
            Ok((v.log_value, v.nodes_per_interval, v.est_error))
        }
        Route::Conditional(_) => {
            let full = checked(log_fredholm_det_with(spec, s, r, opts)?)?;
            let base = checked(log_fredholm_det_with(
                &spec.window(0),
                &ThinningVector::new(vec![0.0])?,
                r,
                opts,
            )?)?;
            Ok((
                full.log_value - base.log_value,
                full.nodes_per_interval.max(base.nodes_per_interval),
                full.est_error + base.est_error,
            ))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RowFlag {
    Ok,
    NoConvergence,
}

impl RowFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            RowFlag::Ok => "ok",
            RowFlag::NoConvergence => "no_convergence",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub r: f64,
    pub log_numeric: f64,
    pub log_asymptotic: f64,
    pub abs_diff: f64,
    /// `abs_diff · √r / log r`.
    pub scaled_diff: f64,
    pub nodes: usize,
    pub est_error: f64,
    pub flag: RowFlag,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub route: &'static str,
    pub rows: Vec<ComparisonRow>,
    /// Slope of log(abs_diff) against log r over the upper half of the grid.
    pub exponent: Option<f64>,
}

fn compare_point(
    spec: &ProcessSpec,
    s: &ThinningVector,
    route: &Route,
    r: f64,
    opts: &DetOptions,
) -> Result<ComparisonRow> {
    let asym = asymptotic_value(spec, route, r)?.total;
    let (log_numeric, nodes, est_error, flag) = match numeric_value(spec, s, route, r, opts) {
        Ok((v, n, e)) => (v, n, e, RowFlag::Ok),
        Err(Error::NoConvergence {
            est_error, nodes, ..
        }) => (f64::NAN, nodes, est_error, RowFlag::NoConvergence),
        Err(e) => return Err(e),
    };
    let abs_diff = (log_numeric - asym).abs();
    Ok(ComparisonRow {
        r,
        log_numeric,
        log_asymptotic: asym,
        abs_diff,
        scaled_diff: abs_diff * r.sqrt() / r.ln(),
        nodes,
        est_error,
        flag,
    })
}

/// Least-squares slope of `log y` against `log x`; `None` with fewer than
/// two usable (finite, positive) points.
pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    linear_slope(&pts)
}

/// Least-squares slope of y against x.
pub fn linear_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Decay exponent from the last ⌈n/2⌉ rows (at least two).
pub fn decay_exponent(rows: &[ComparisonRow]) -> Option<f64> {
    let n = rows.len();
    let keep = n.div_ceil(2).max(2).min(n);
    let pts: Vec<(f64, f64)> = rows[n - keep..].iter().map(|r| (r.r, r.abs_diff)).collect();
    log_log_slope(&pts)
}

pub(crate) fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::config(format!("cannot start worker pool: {e}")))
}

pub fn run_compare(cfg: &ExperimentConfig) -> Result<CompareReport> {
    cfg.validate()?;
    let spec = cfg.spec()?;
    let s = cfg.thinning()?;
    let route = Route::select(cfg)?;
    let rs = cfg.r_grid.points();
    let opts = cfg.det_options();
    let rows = pool(cfg.jobs)?.install(|| {
        rs.par_iter()
            .map(|&r| compare_point(&spec, &s, &route, r, &opts))
            .collect::<Result<Vec<_>>>()
    })?;
    let exponent = decay_exponent(&rows);
    Ok(CompareReport {
        route: route.name(),
        rows,
        exponent,
    })
}

pub const CSV_HEADER: &str =
    "r,log_numeric,log_asymptotic,abs_diff,scaled_diff,nodes,est_error,flag";

pub fn write_compare(
    report: &CompareReport,
    format: OutputFormat,
    w: &mut dyn Write,
) -> Result<()> {
    match format {
        OutputFormat::Csv => {
            writeln!(w, "{CSV_HEADER}")?;
            for row in &report.rows {
                writeln!(
                    w,
                    "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{:.16e},{}",
                    row.r,
                    row.log_numeric,
                    row.log_asymptotic,
                    row.abs_diff,
                    row.scaled_diff,
                    row.nodes,
                    row.est_error,
                    row.flag.as_str()
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
