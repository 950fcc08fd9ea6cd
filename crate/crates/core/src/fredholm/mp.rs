//! Multiprecision Nyström determinant for exponentially small F.
//!
//! Nodes and weights are the hardware rules polished by Newton's method at
//! the working precision, Bessel values come from the ascending series (the
//! working precision absorbs its cancellation, about `1.45 t` bits at t),
//! and the determinant is a plain partially pivoted LU.

use rug::ops::Pow;
use rug::Float;

use super::grid::{GridInterval, QuadratureGrid};
use super::ProcessSpec;
use crate::error::{Error, Result};
use crate::quadrature::{gauss_jacobi, gauss_legendre};

fn f(prec: u32, v: f64) -> Float {
    Float::with_val(prec, v)
}

fn converged(dx: &Float, x: &Float, prec: u32) -> bool {
    if dx.is_zero() {
        return true;
    }
    let ex = x.get_exp().unwrap_or(0).max(0);
    dx.get_exp().unwrap_or(i32::MIN) < ex - prec as i32 + 4
}

/// P_n(x), P_{n−1}(x).
fn legendre(n: usize, x: &Float, prec: u32) -> (Float, Float) {
    let mut p0 = f(prec, 1.0);
    let mut p1 = x.clone();
    for k in 2..=n {
        let kf = k as u32;
        let mut p2 = Float::with_val(prec, x * &p1);
        p2 *= 2 * kf - 1;
        p2 -= Float::with_val(prec, &p0 * (kf - 1));
        p2 /= kf;
        p0 = std::mem::replace(&mut p1, p2);
    }
    (p1, p0)
}

fn legendre_rule(n: usize, prec: u32) -> Vec<(Float, Float)> {
    let seed = gauss_legendre(n);
    seed.nodes
        .iter()
        .map(|&x0| {
            let mut x = f(prec, x0);
            let mut dp = f(prec, 0.0);
            for _ in 0..64 {
                let (p, pm1) = legendre(n, &x, prec);
                dp = legendre_derivative(n, &x, &p, &pm1, prec);
                let dx = Float::with_val(prec, &p / &dp);
                x -= &dx;
                if converged(&dx, &x, prec) {
                    break;
                }
            }
            let (p, pm1) = legendre(n, &x, prec);
            if !p.is_zero() {
                dp = legendre_derivative(n, &x, &p, &pm1, prec);
            }
            let one_minus = Float::with_val(prec, 1 - Float::with_val(prec, x.square_ref()));
            let w = Float::with_val(prec, 2 / (one_minus * dp.square()));
            (x, w)
        })
        .collect()
}

fn legendre_derivative(n: usize, x: &Float, p: &Float, pm1: &Float, prec: u32) -> Float {
    let num = Float::with_val(prec, x * p) - pm1;
    let den = Float::with_val(prec, x.square_ref()) - 1u32;
    Float::with_val(prec, num * n as u32) / den
}

/// P_n^{(0,b)}(x) and its derivative.
fn jacobi(n: usize, b: &Float, x: &Float, prec: u32) -> (Float, Float) {
    let two = f(prec, 2.0);
    let mut p0 = f(prec, 1.0);
    // (a − b + (a + b + 2) x)/2 with a = 0
    let mut p1 = Float::with_val(prec, (Float::with_val(prec, b + 2u32) * x - b) / &two);
    for k in 2..=n {
        let kf = k as u32;
        let c = Float::with_val(prec, b + 2 * kf);
        let a1 = Float::with_val(prec, Float::with_val(prec, b + kf) * (2 * kf))
            * Float::with_val(prec, &c - 2u32);
        let a2 = Float::with_val(prec, &c - 1u32) * -Float::with_val(prec, b.square_ref());
        let c12 = Float::with_val(prec, &c - 2u32) * Float::with_val(prec, &c - 1u32) * &c;
        let a4 = Float::with_val(prec, (kf - 1) * Float::with_val(prec, b + (kf - 1))) * 2u32 * &c;
        let mut p2 = Float::with_val(prec, c12 * x) + a2;
        p2 *= &p1;
        p2 -= a4 * &p0;
        p2 /= a1;
        p0 = std::mem::replace(&mut p1, p2);
    }
    let nf = n as u32;
    let c = Float::with_val(prec, b + 2 * nf);
    let one_minus = Float::with_val(prec, 1 - Float::with_val(prec, x.square_ref()));
    // (2n+b)(1−x²)P' = n(−b − (2n+b)x)P_n + 2n(n+b)P_{n−1}
    let t1 = Float::with_val(
        prec,
        -Float::with_val(prec, b + Float::with_val(prec, &c * x)),
    ) * nf
        * &p1;
    let t2 = Float::with_val(prec, b + nf) * (2 * nf) * &p0;
    let dp = Float::with_val(prec, t1 + t2) / (c * one_minus);
    (p1, dp)
}

fn jacobi_rule(n: usize, b: f64, prec: u32) -> Vec<(Float, Float)> {
    let seed = gauss_jacobi(n, b);
    let bf = f(prec, b);
    // Christoffel constant 2^{b+1} for the (0, b) weight
    let c = Float::with_val(prec, Float::with_val(prec, &bf + 1u32).exp2());
    seed.nodes
        .iter()
        .map(|&x0| {
            let mut x = f(prec, x0);
            for _ in 0..64 {
                let (p, dp) = jacobi(n, &bf, &x, prec);
                let dx = Float::with_val(prec, p / dp);
                x -= &dx;
                if converged(&dx, &x, prec) {
                    break;
                }
            }
            let (_, dp) = jacobi(n, &bf, &x, prec);
            let one_minus = Float::with_val(prec, 1 - Float::with_val(prec, x.square_ref()));
            let w = Float::with_val(prec, &c / (one_minus * dp.square()));
            (x, w)
        })
        .collect()
}

/// Σ_k (−t²/4)^k / (k! (order+1)_k).
fn bessel_sum(order: &Float, q: &Float, half_t: f64, prec: u32) -> Float {
    let mut term = f(prec, 1.0);
    let mut acc = f(prec, 1.0);
    let mut k = 1u32;
    loop {
        term *= q;
        term /= Float::with_val(prec, order + k) * k;
        acc += &term;
        if term.is_zero()
            || (k as f64 > half_t
                && term.get_exp().unwrap_or(i32::MIN)
                    < acc.get_exp().unwrap_or(0) - prec as i32 - 2)
        {
            return acc;
        }
        k += 1;
    }
}

/// (J_ν(t), J_{ν+1}(t)) by the ascending series.
fn bessel_pair(nu: &Float, t: &Float, prec: u32) -> (Float, Float) {
    let half = Float::with_val(prec, t / 2u32);
    let q = Float::with_val(prec, -Float::with_val(prec, half.square_ref()));
    let g = Float::with_val(prec, nu + 1u32).gamma();
    let pref = Float::with_val(prec, Float::with_val(prec, half.ln_ref()) * nu).exp() / g;
    let ht = half.to_f64();
    let s0 = bessel_sum(nu, &q, ht, prec);
    let nu1 = Float::with_val(prec, nu + 1u32);
    let s1 = bessel_sum(&nu1, &q, ht, prec);
    let j0 = Float::with_val(prec, &pref * s0);
    let j1 = pref * half / nu1 * s1;
    (j0, j1)
}

struct MpInterval {
    nodes: Vec<Float>,
    weights: Vec<Float>,
    factor: Float,
}

fn interval(iv: &GridInterval, spec: &ProcessSpec, r: f64, prec: u32) -> MpInterval {
    let n = iv.nodes.len();
    let th = spec.thresholds();
    let rf = f(prec, r);
    let lower = if iv.index == 0 {
        f(prec, 0.0)
    } else {
        Float::with_val(prec, &rf * th[iv.index - 1]).sqrt()
    };
    let upper = Float::with_val(prec, &rf * th[iv.index]).sqrt();
    let half = Float::with_val(prec, &upper - &lower) / 2u32;
    let rule = match iv.jacobi {
        None => legendre_rule(n, prec),
        Some(b) => jacobi_rule(n, b, prec),
    };
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for (x, w) in rule {
        let one_plus = Float::with_val(prec, &x + 1u32);
        nodes.push(Float::with_val(prec, &half * &one_plus) + &lower);
        let mut wt = Float::with_val(prec, &half * w);
        if let Some(b) = iv.jacobi {
            wt /= one_plus.pow(f(prec, b));
        }
        weights.push(wt);
    }
    let factor = Float::with_val(prec, 1u32 - f(prec, iv.thinning));
    MpInterval {
        nodes,
        weights,
        factor,
    }
}

/// log |det(1 − M)| and sign at `bits` of working precision (plus the
/// Bessel-series guard), with a condition estimate of `1 − M`.
pub(super) fn log_det(
    grid: &QuadratureGrid,
    spec: &ProcessSpec,
    r: f64,
    bits: u32,
) -> Result<MpDet> {
    let t_max = grid.intervals.iter().map(|i| i.upper).fold(0.0, f64::max);
    let prec = bits + (1.45 * t_max).ceil() as u32 + 16;
    let alpha = f(prec, spec.alpha());
    let mut t = Vec::new();
    let mut scale = Vec::new();
    let mut neg = Vec::new();
    for iv in &grid.intervals {
        let mi = interval(iv, spec, r, prec);
        let negative = mi.factor.is_sign_negative();
        let cabs = Float::with_val(prec, mi.factor.abs_ref());
        for (x, w) in mi.nodes.into_iter().zip(mi.weights) {
            scale.push(Float::with_val(prec, w * &cabs).sqrt());
            neg.push(negative);
            t.push(x);
        }
    }
    let n = t.len();
    let pairs: Vec<(Float, Float)> = t.iter().map(|x| bessel_pair(&alpha, x, prec)).collect();
    let sqrt_t: Vec<Float> = t
        .iter()
        .map(|x| Float::with_val(prec, x.sqrt_ref()))
        .collect();
    // a[i][j] row-major
    let mut a: Vec<Float> = Vec::with_capacity(n * n);
    for i in 0..n {
        let (ji, ji1) = &pairs[i];
        for j in 0..n {
            let k = if i == j {
                // (t(J_α² + J_{α+1}²) − 2α J_α J_{α+1}) / 2
                let s2 = Float::with_val(prec, ji.square_ref())
                    + Float::with_val(prec, ji1.square_ref());
                let mut v = Float::with_val(prec, &t[i] * s2);
                v -= Float::with_val(prec, ji * ji1) * &alpha * 2u32;
                v / 2u32
            } else {
                let (jj, jj1) = &pairs[j];
                let num = Float::with_val(prec, &t[i] * ji1) * jj
                    - Float::with_val(prec, &t[j] * ji) * jj1;
                let den =
                    Float::with_val(prec, &t[i] - &t[j]) * Float::with_val(prec, &t[i] + &t[j]);
                Float::with_val(prec, &sqrt_t[i] * &sqrt_t[j]) * num / den
            };
            let mut m = Float::with_val(prec, &scale[i] * &scale[j]) * k;
            if !neg[j] {
                m = -m;
            }
            if i == j {
                m += 1u32;
            }
            a.push(m);
        }
    }
    let norm1 = (0..n)
        .map(|j| {
            (0..n).fold(Float::with_val(prec, 0.0), |acc, i| {
                acc + Float::with_val(prec, a[i * n + j].abs_ref())
            })
        })
        .max_by(|p, q| p.partial_cmp(q).unwrap())
        .unwrap_or_else(|| Float::with_val(prec, 0.0));
    let mut log = Float::with_val(prec, 0.0);
    let mut sign = 1.0;
    let mut perm = Vec::with_capacity(n);
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&p, &q| a[p * n + col].cmp_abs(&a[q * n + col]).unwrap())
            .unwrap();
        if a[piv * n + col].is_zero() {
            return Err(Error::NonFinite("singular multiprecision matrix"));
        }
        perm.push(piv);
        if piv != col {
            for j in 0..n {
                a.swap(piv * n + j, col * n + j);
            }
            sign = -sign;
        }
        let (head, tail) = a.split_at_mut((col + 1) * n);
        let prow = &head[col * n..];
        let d = &prow[col];
        if d.is_sign_negative() {
            sign = -sign;
        }
        log += Float::with_val(prec, d.abs_ref()).ln();
        for row in tail.chunks_mut(n) {
            let l = Float::with_val(prec, &row[col] / d);
            for j in col + 1..n {
                row[j] -= &l * &prow[j];
            }
            row[col] = l;
        }
    }
    let lu = MpLu { a, perm, n, prec };
    let log2_cond = (norm1 * lu.inverse_norm1_estimate()).log2().to_f64();
    Ok(MpDet {
        log: log.to_f64(),
        sign,
        prec,
        log2_cond,
    })
}

pub(super) struct MpDet {
    pub log: f64,
    pub sign: f64,
    /// Working precision in bits.
    pub prec: u32,
    /// log₂ of the estimated 1-norm condition number.
    pub log2_cond: f64,
}

/// Packed row-major LU with unit lower factor and the row swaps applied
/// at each step.
struct MpLu {
    a: Vec<Float>,
    perm: Vec<usize>,
    n: usize,
    prec: u32,
}

#[allow(clippy::needless_range_loop)]
impl MpLu {
    fn solve(&self, b: &[Float]) -> Vec<Float> {
        let n = self.n;
        let mut y = b.to_vec();
        for (col, &p) in self.perm.iter().enumerate() {
            y.swap(col, p);
        }
        for i in 0..n {
            let mut acc = y[i].clone();
            for k in 0..i {
                acc -= &self.a[i * n + k] * &y[k];
            }
            y[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = y[i].clone();
            for k in i + 1..n {
                acc -= &self.a[i * n + k] * &y[k];
            }
            y[i] = acc / &self.a[i * n + i];
        }
        y
    }

    fn solve_transpose(&self, b: &[Float]) -> Vec<Float> {
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut acc = y[i].clone();
            for k in 0..i {
                acc -= &self.a[k * n + i] * &y[k];
            }
            y[i] = acc / &self.a[i * n + i];
        }
        for i in (0..n).rev() {
            let mut acc = y[i].clone();
            for k in i + 1..n {
                acc -= &self.a[k * n + i] * &y[k];
            }
            y[i] = acc;
        }
        for (col, &p) in self.perm.iter().enumerate().rev() {
            y.swap(col, p);
        }
        y
    }

    /// Hager's estimate of ‖A⁻¹‖₁.
    fn inverse_norm1_estimate(&self) -> Float {
        let n = self.n;
        let prec = self.prec;
        let mut x = vec![Float::with_val(prec, 1.0) / n as u32; n];
        let mut est = Float::with_val(prec, 0.0);
        for _ in 0..5 {
            let y = self.solve(&x);
            est = y.iter().fold(Float::with_val(prec, 0.0), |acc, v| {
                acc + Float::with_val(prec, v.abs_ref())
            });
            let xi: Vec<Float> = y
                .iter()
                .map(|v| Float::with_val(prec, if v.is_sign_negative() { -1 } else { 1 }))
                .collect();
            let z = self.solve_transpose(&xi);
            let (j, zmax) =
                z.iter()
                    .enumerate()
                    .fold((0, Float::with_val(prec, 0.0)), |acc, (i, v)| {
                        if v.cmp_abs(&acc.1) == Some(std::cmp::Ordering::Greater) {
                            (i, Float::with_val(prec, v.abs_ref()))
                        } else {
                            acc
                        }
                    });
            let ztx = z
                .iter()
                .zip(&x)
                .fold(Float::with_val(prec, 0.0), |acc, (p, q)| {
                    acc + Float::with_val(prec, p * q)
                });
            if zmax <= ztx {
                break;
            }
            x = vec![Float::with_val(prec, 0.0); n];
            x[j] = Float::with_val(prec, 1.0);
        }
        est
    }
}
