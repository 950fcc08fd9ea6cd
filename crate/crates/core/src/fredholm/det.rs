use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Dyn, LU};
use rayon::prelude::*;

use super::grid::{build_thinned_grid, QuadratureGrid};
use super::{mp, FugacityVector, LogDetResult, ProcessSpec, ThinningVector};
use crate::error::{Error, Result};
use crate::kernel::{transformed_diag, transformed_from_pairs};
use crate::quadrature::gauss_legendre;
use crate::specfun::bessel_pair;

pub const TOL_DEFAULT: f64 = 1e-9;
pub const MAX_NODES_DEFAULT: usize = 4096;

/// Switch to multiprecision once `κ₁ · ε` exceeds this fraction of `tol`.
const MP_TRIGGER: f64 = 1e-2;
const MP_GUARD_BITS: u32 = 32;

/// Arithmetic used for determinant evaluations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    /// Hardware floats, escalating to multiprecision when the matrix is
    /// too ill-conditioned for the requested tolerance.
    Auto,
    /// Hardware floats only.
    Double,
    /// Multiprecision with at least this many mantissa bits.
    Bits(u32),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetOptions {
    pub tol: f64,
    pub max_nodes: usize,
    /// Nodes per window on the first pass; defaults to [`initial_nodes`].
    pub initial_nodes: Option<usize>,
    pub precision: Precision,
}

impl Default for DetOptions {
    fn default() -> Self {
        Self {
            tol: TOL_DEFAULT,
            max_nodes: MAX_NODES_DEFAULT,
            initial_nodes: None,
            precision: Precision::Auto,
        }
    }
}

/// `max(32, ⌈3√(r x_m)/π⌉)`.
pub fn initial_nodes(spec: &ProcessSpec, r: f64) -> usize {
    let xm = *spec.thresholds().last().expect("non-empty");
    32usize.max((3.0 * (r * xm).sqrt() / PI).ceil() as usize)
}

struct DoubleEval {
    log: f64,
    sign: f64,
    cond: f64,
}

/// Per-node data shared by the hardware and multiprecision assemblies.
struct Nodes {
    t: Vec<f64>,
    pairs: Vec<(f64, f64)>,
    scale: Vec<f64>,
    sign: Vec<f64>,
}

fn nodes_of(grid: &QuadratureGrid, alpha: f64) -> Nodes {
    let mut t = Vec::new();
    let mut scale = Vec::new();
    let mut sign = Vec::new();
    for iv in &grid.intervals {
        for (&x, &w) in iv.nodes.iter().zip(&iv.weights) {
            t.push(x);
            scale.push((w * iv.factor.abs()).sqrt());
            sign.push(iv.factor.signum());
        }
    }
    let pairs = t.par_iter().map(|&x| bessel_pair(alpha, x)).collect();
    Nodes {
        t,
        pairs,
        scale,
        sign,
    }
}

/// `I − M` in column-major order, `M_ab = √(w_a|c_a|) K̃(t_a,t_b) √(w_b|c_b|) sgn c_b`.
fn assemble(
    nodes: &Nodes,
    alpha: f64,
    kernel: impl Fn(usize, usize) -> f64 + Sync,
) -> DMatrix<f64> {
    let n = nodes.t.len();
    let mut data = vec![0.0; n * n];
    data.par_chunks_mut(n).enumerate().for_each(|(b, col)| {
        let sb = nodes.scale[b] * nodes.sign[b];
        for (a, v) in col.iter_mut().enumerate() {
            let k = if a == b {
                transformed_diag(alpha, nodes.t[a], nodes.pairs[a])
            } else {
                kernel(a, b)
            };
            *v = -nodes.scale[a] * k * sb;
        }
        col[b] += 1.0;
    });
    DMatrix::from_vec(n, n, data)
}

fn solve_transpose(lu: &LU<f64, Dyn, Dyn>, b: DVector<f64>) -> DVector<f64> {
    let m = lu.lu_internal();
    let n = m.nrows();
    let mut y = b;
    if !m.tr_solve_upper_triangular_mut(&mut y) {
        return DVector::from_element(n, f64::INFINITY);
    }
    // unit lower factor
    for i in (0..n).rev() {
        let mut acc = y[i];
        for k in i + 1..n {
            acc -= m[(k, i)] * y[k];
        }
        y[i] = acc;
    }
    lu.p().inv_permute_rows(&mut y);
    y
}

/// Hager's estimate of ‖A⁻¹‖₁ from an LU factorisation.
pub(crate) fn inverse_norm1_estimate(lu: &LU<f64, Dyn, Dyn>) -> f64 {
    let n = lu.lu_internal().nrows();
    let mut x = DVector::from_element(n, 1.0 / n as f64);
    let mut est = 0.0;
    for _ in 0..5 {
        let Some(y) = lu.solve(&x) else {
            return f64::INFINITY;
        };
        est = y.iter().map(|v| v.abs()).sum();
        let xi = y.map(|v| if v >= 0.0 { 1.0 } else { -1.0 });
        let z = solve_transpose(lu, xi);
        let (j, zmax) =
            z.iter().enumerate().fold(
                (0, 0.0),
                |acc, (i, v)| if v.abs() > acc.1 { (i, v.abs()) } else { acc },
            );
        if !zmax.is_finite() {
            return f64::INFINITY;
        }
        if zmax <= z.dot(&x) {
            break;
        }
        x.fill(0.0);
        x[j] = 1.0;
    }
    est
}

fn log_det_lu(a: DMatrix<f64>) -> DoubleEval {
    let norm1 = a
        .column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let lu = a.lu();
    let m = lu.lu_internal();
    let mut log = 0.0;
    let mut sign = lu.p().determinant::<f64>();
    for i in 0..m.nrows() {
        let d = m[(i, i)];
        if d == 0.0 {
            return DoubleEval {
                log: f64::NEG_INFINITY,
                sign: 0.0,
                cond: f64::INFINITY,
            };
        }
        log += d.abs().ln();
        sign *= d.signum();
    }
    let cond = norm1 * inverse_norm1_estimate(&lu);
    DoubleEval { log, sign, cond }
}

fn eval_double(grid: &QuadratureGrid, alpha: f64) -> DoubleEval {
    let nodes = nodes_of(grid, alpha);
    let a = assemble(&nodes, alpha, |a, b| {
        transformed_from_pairs(
            alpha,
            nodes.t[a],
            nodes.pairs[a],
            nodes.t[b],
            nodes.pairs[b],
        )
    });
    log_det_lu(a)
}

fn needs_multiprecision(e: &DoubleEval, tol: f64) -> bool {
    let drift = e.cond * f64::EPSILON;
    !e.log.is_finite() || drift.is_nan() || drift > tol * MP_TRIGGER
}

/// Mantissa bits for which `κ · 2^{−bits}` stays below `MP_TRIGGER · tol`.
fn required_bits(log2_cond: f64, tol: f64) -> u32 {
    let cond_bits = if log2_cond.is_finite() {
        log2_cond.max(0.0)
    } else {
        0.0
    };
    (cond_bits + (1.0 / (MP_TRIGGER * tol)).log2()).ceil() as u32 + MP_GUARD_BITS
}

/// Multiprecision evaluation, raising the precision until the condition
/// estimate of the factorised matrix says it suffices.
fn eval_multi(
    grid: &QuadratureGrid,
    spec: &ProcessSpec,
    r: f64,
    tol: f64,
    bits: &mut u32,
    escalate: bool,
) -> Result<(f64, f64, u32)> {
    loop {
        let d = mp::log_det(grid, spec, r, *bits)?;
        let need = required_bits(d.log2_cond, tol);
        if !escalate || *bits >= need {
            return Ok((d.log, d.sign, d.prec));
        }
        *bits = (need + MP_GUARD_BITS).max(*bits + *bits / 2);
    }
}

enum Mode {
    Auto,
    Double,
    Multi { bits: u32, escalate: bool },
}

struct Eval {
    log: f64,
    sign: f64,
    bits: u32,
}

fn eval(
    grid: &QuadratureGrid,
    spec: &ProcessSpec,
    r: f64,
    tol: f64,
    mode: &mut Mode,
) -> Result<Eval> {
    match mode {
        Mode::Double => {
            let e = eval_double(grid, spec.alpha());
            Ok(Eval {
                log: e.log,
                sign: e.sign,
                bits: 53,
            })
        }
        Mode::Auto => {
            let e = eval_double(grid, spec.alpha());
            if !needs_multiprecision(&e, tol) {
                return Ok(Eval {
                    log: e.log,
                    sign: e.sign,
                    bits: 53,
                });
            }
            let bits = required_bits(e.cond.log2(), tol).max(128);
            *mode = Mode::Multi {
                bits,
                escalate: true,
            };
            eval(grid, spec, r, tol, mode)
        }
        Mode::Multi { bits, escalate } => {
            let (log, sign, used) = eval_multi(grid, spec, r, tol, bits, *escalate)?;
            Ok(Eval {
                log,
                sign,
                bits: used,
            })
        }
    }
}

fn mode_for(p: Precision) -> Mode {
    match p {
        Precision::Auto => Mode::Auto,
        Precision::Double => Mode::Double,
        Precision::Bits(b) => Mode::Multi {
            bits: b.max(64),
            escalate: false,
        },
    }
}

fn check_inputs(spec: &ProcessSpec, s: &ThinningVector, r: f64, tol: f64) -> Result<()> {
    if !r.is_finite() || r <= 0.0 {
        return Err(Error::config(format!("r must be positive, got {r}")));
    }
    if !tol.is_finite() || tol <= 0.0 {
        return Err(Error::config(format!("tol must be positive, got {tol}")));
    }
    if s.len() != spec.m() {
        return Err(Error::config(format!(
            "{} thinning parameters for {} windows",
            s.len(),
            spec.m()
        )));
    }
    Ok(())
}

/// `log det(1 − K)` on the thinned windows at a fixed node count, without
/// the doubling loop. Returns `(log |det|, sign, precision bits)`.
pub fn log_det_fixed(
    spec: &ProcessSpec,
    s: &ThinningVector,
    r: f64,
    n: usize,
    precision: Precision,
) -> Result<(f64, f64, u32)> {
    check_inputs(spec, s, r, TOL_DEFAULT)?;
    let grid = build_thinned_grid(spec, s, r, n)?;
    if grid.intervals.is_empty() {
        return Ok((0.0, 1.0, 53));
    }
    let mut mode = mode_for(precision);
    let e = eval(&grid, spec, r, TOL_DEFAULT, &mut mode)?;
    Ok((e.log, e.sign, e.bits))
}

/// log F_α(r x⃗, s⃗) with default options.
pub fn log_fredholm_det(
    spec: &ProcessSpec,
    s: &ThinningVector,
    r: f64,
    tol: f64,
) -> Result<LogDetResult> {
    log_fredholm_det_with(
        spec,
        s,
        r,
        &DetOptions {
            tol,
            ..DetOptions::default()
        },
    )
}

/// log F_α(r x⃗, s⃗), doubling the nodes per window until two successive
/// values agree to `opts.tol`.
pub fn log_fredholm_det_with(
    spec: &ProcessSpec,
    s: &ThinningVector,
    r: f64,
    opts: &DetOptions,
) -> Result<LogDetResult> {
    check_inputs(spec, s, r, opts.tol)?;
    if s.as_slice().iter().all(|&v| v == 1.0) {
        return Ok(LogDetResult::trivial());
    }
    let cap = opts.max_nodes.max(8);
    let mut n = opts
        .initial_nodes
        .unwrap_or_else(|| initial_nodes(spec, r))
        .clamp(4, cap / 2);
    let mut mode = mode_for(opts.precision);
    let grid = build_thinned_grid(spec, s, r, n)?;
    let mut prev = eval(&grid, spec, r, opts.tol, &mut mode)?;
    let mut diff = f64::INFINITY;
    while 2 * n <= cap {
        n *= 2;
        let grid = build_thinned_grid(spec, s, r, n)?;
        let cur = eval(&grid, spec, r, opts.tol, &mut mode)?;
        diff = if cur.sign == prev.sign {
            (cur.log - prev.log).abs()
        } else {
            f64::INFINITY
        };
        if diff < opts.tol {
            return Ok(LogDetResult {
                log_value: cur.log,
                sign: cur.sign,
                nodes_per_interval: n,
                est_error: diff,
                precision_bits: cur.bits,
            });
        }
        prev = cur;
    }
    Err(Error::NoConvergence {
        est_error: diff,
        tol: opts.tol,
        nodes: n,
    })
}

/// log E_α(r x⃗, u⃗) via `s_j = exp(u_j + … + u_m)`.
pub fn log_exponential_moment(
    spec: &ProcessSpec,
    u: &FugacityVector,
    r: f64,
    tol: f64,
) -> Result<LogDetResult> {
    log_fredholm_det(spec, &u.to_thinning(), r, tol)
}

/// Nyström log-determinant in the original variable x with n Gauss–Legendre
/// nodes per window. Hardware floats only; converges slowly unless α is an
/// even integer. Returns `(log |det|, sign)`.
pub fn log_fredholm_det_raw(
    spec: &ProcessSpec,
    s: &ThinningVector,
    r: f64,
    n: usize,
) -> Result<(f64, f64)> {
    check_inputs(spec, s, r, TOL_DEFAULT)?;
    if n < 4 {
        return Err(Error::config(format!(
            "need at least 4 nodes per interval, got {n}"
        )));
    }
    let rule = gauss_legendre(n);
    let mut x = Vec::new();
    let mut scale = Vec::new();
    let mut sign = Vec::new();
    let mut lower = 0.0;
    for (&xj, &sj) in spec.thresholds().iter().zip(s.as_slice()) {
        let upper = r * xj;
        let c = 1.0 - sj;
        if c != 0.0 {
            let (nodes, weights) = rule.mapped(lower, upper);
            for (v, w) in nodes.into_iter().zip(weights) {
                x.push(v);
                scale.push((w * c.abs()).sqrt());
                sign.push(c.signum());
            }
        }
        lower = upper;
    }
    if x.is_empty() {
        return Ok((0.0, 1.0));
    }
    let alpha = spec.alpha();
    let t: Vec<f64> = x.iter().map(|v| v.sqrt()).collect();
    let pairs = t.par_iter().map(|&v| bessel_pair(alpha, v)).collect();
    // K(x, y) = K̃(√x, √y) / (2 (xy)^{1/4})
    let quarter: Vec<f64> = t.iter().map(|v| v.sqrt()).collect();
    let nodes = Nodes {
        t,
        pairs,
        scale: scale
            .iter()
            .zip(&quarter)
            .map(|(s, q)| s / (2.0f64.sqrt() * q))
            .collect(),
        sign,
    };
    let a = assemble(&nodes, alpha, |a, b| {
        transformed_from_pairs(
            alpha,
            nodes.t[a],
            nodes.pairs[a],
            nodes.t[b],
            nodes.pairs[b],
        )
    });
    let e = log_det_lu(a);
    Ok((e.log, e.sign))
}
