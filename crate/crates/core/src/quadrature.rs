//! Gauss–Legendre and Gauss–Jacobi rules on [−1, 1].
//!
//! Legendre nodes come from Newton's method on the three-term recurrence
//! started at the Tricomi-type guesses. Jacobi rules (weight `(1+x)^b`) are
//! seeded by Golub–Welsch, using an implicit QL sweep that tracks only the
//! first eigenvector component, then polished by Newton on the recurrence
//! with the weights taken from the closed-form Christoffel numbers.

use std::f64::consts::PI;

use crate::specfun::ln_gamma_real;

/// Nodes (ascending) and weights of a quadrature rule on [−1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    /// Affine map to (a, b); weights scale by (b − a)/2.
    pub fn mapped(&self, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        let nodes = self.nodes.iter().map(|&x| mid + half * x).collect();
        let weights = self.weights.iter().map(|&w| half * w).collect();
        (nodes, weights)
    }
}

/// P_n(x) and P_{n−1}(x).
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    (p1, p0)
}

/// n-point Gauss–Legendre rule.
pub fn gauss_legendre(n: usize) -> Rule {
    assert!(n >= 1);
    let nf = n as f64;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let theta = PI * (i as f64 + 0.75) / (nf + 0.5);
        let mut x = (theta.cos()) * (1.0 - (nf - 1.0) / (8.0 * nf * nf * nf));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, pm1) = legendre(n, x);
            dp = nf * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() <= 1e-16 {
                break;
            }
        }
        let (p, pm1) = legendre(n, x);
        if p != 0.0 {
            dp = nf * (x * p - pm1) / (x * x - 1.0);
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Rule { nodes, weights }
}

/// Jacobi polynomial P_n^{(a,b)}(x) and its derivative.
fn jacobi(n: usize, a: f64, b: f64, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = 0.5 * (a - b + (a + b + 2.0) * x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let c = 2.0 * kf + a + b;
        let a1 = 2.0 * kf * (kf + a + b) * (c - 2.0);
        let a2 = (c - 1.0) * (a * a - b * b);
        let a3 = (c - 2.0) * (c - 1.0) * c;
        let a4 = 2.0 * (kf + a - 1.0) * (kf + b - 1.0) * c;
        let p2 = ((a2 + a3 * x) * p1 - a4 * p0) / a1;
        p0 = p1;
        p1 = p2;
    }
    // (2n+a+b)(1−x²) P'_n = n[(a−b) − (2n+a+b)x] P_n + 2(n+a)(n+b) P_{n−1}
    let nf = n as f64;
    let c = 2.0 * nf + a + b;
    let dp = (nf * ((a - b) - c * x) * p1 + 2.0 * (nf + a) * (nf + b) * p0) / (c * (1.0 - x * x));
    (p1, dp)
}

/// Eigenvalues of a symmetric tridiagonal matrix and the squared first
/// components of its normalised eigenvectors (implicit QL, O(n²)).
fn tridiagonal_eigen_first(diag: &mut [f64], off: &mut [f64]) -> Vec<f64> {
    let n = diag.len();
    let mut z = vec![0.0; n];
    z[0] = 1.0;
    // off[i] couples i and i+1; off has length n with a trailing zero
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = diag[m].abs() + diag[m + 1].abs();
                if off[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter < 60, "tridiagonal QL failed to converge");
            let mut g = (diag[l + 1] - diag[l]) / (2.0 * off[l]);
            let mut r = g.hypot(1.0);
            g = diag[m] - diag[l] + off[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * off[i];
                let b = c * off[i];
                r = f.hypot(g);
                off[i + 1] = r;
                if r == 0.0 {
                    diag[i + 1] -= p;
                    off[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = diag[i + 1] - p;
                r = (diag[i] - g) * s + 2.0 * c * b;
                p = s * r;
                diag[i + 1] = g + p;
                g = c * r - b;
                let zf = z[i + 1];
                z[i + 1] = s * z[i] + c * zf;
                z[i] = c * z[i] - s * zf;
            }
            if underflow {
                continue;
            }
            diag[l] -= p;
            off[l] = g;
            off[m] = 0.0;
        }
    }
    z.iter().map(|v| v * v).collect()
}

/// n-point Gauss–Jacobi rule for the weight `(1 + x)^b` on [−1, 1], b > −1.
pub fn gauss_jacobi(n: usize, b: f64) -> Rule {
    assert!(n >= 1 && b > -1.0);
    let a = 0.0;
    let ab = a + b;
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n];
    for k in 0..n {
        let kf = k as f64;
        let c = 2.0 * kf + ab;
        diag[k] = if c.abs() < 1e-300 || (c + 2.0).abs() < 1e-300 {
            (b - a) / (ab + 2.0)
        } else {
            (b * b - a * a) / (c * (c + 2.0))
        };
        if k + 1 < n {
            let k1 = kf + 1.0;
            let c1 = 2.0 * k1 + ab;
            let num = 4.0 * k1 * (k1 + a) * (k1 + b) * (k1 + ab);
            let den = c1 * c1 * (c1 + 1.0) * (c1 - 1.0);
            off[k] = (num / den).sqrt();
        }
    }
    if n == 1 {
        diag[0] = (b - a) / (ab + 2.0);
    }
    let _ = tridiagonal_eigen_first(&mut diag, &mut off);
    let mut nodes = diag;
    nodes.sort_by(|p, q| p.partial_cmp(q).unwrap());

    // Christoffel numbers: w_i = C / ((1 − x_i²) P'_n(x_i)²)
    let nf = n as f64;
    let ln_c = (ab + 1.0) * 2f64.ln()
        + ln_gamma_real(nf + a + 1.0).unwrap().0
        + ln_gamma_real(nf + b + 1.0).unwrap().0
        - ln_gamma_real(nf + ab + 1.0).unwrap().0
        - ln_gamma_real(nf + 1.0).unwrap().0;
    let mut weights = vec![0.0; n];
    for (x, w) in nodes.iter_mut().zip(weights.iter_mut()) {
        for _ in 0..8 {
            let (p, dp) = jacobi(n, a, b, *x);
            let dx = p / dp;
            *x -= dx;
            if dx.abs() <= 1e-16 {
                break;
            }
        }
        let (_, dp) = jacobi(n, a, b, *x);
        *w = (ln_c - ((1.0 - *x * *x) * dp * dp).ln()).exp();
    }
    Rule { nodes, weights }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_four_point() {
        let r = gauss_legendre(4);
        let s: f64 = r.weights.iter().sum();
        assert!((s - 2.0).abs() < 1e-15);
        let x = (3.0 / 7.0 + 2.0 / 7.0 * (6.0f64 / 5.0).sqrt()).sqrt();
        assert!((r.nodes[3] - x).abs() < 1e-15);
        assert!(r.nodes.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn legendre_exact_for_polynomials() {
        for n in [5, 33, 257, 2048] {
            let r = gauss_legendre(n);
            // ∫ x^{2n−2} = 2/(2n−1) for n small enough to stay exact
            let deg = 2 * n.min(20) - 2;
            let v: f64 = r
                .nodes
                .iter()
                .zip(&r.weights)
                .map(|(x, w)| w * x.powi(deg as i32))
                .sum();
            assert!((v - 2.0 / (deg as f64 + 1.0)).abs() < 1e-13, "n={n}");
            let s: f64 = r.weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n={n}");
        }
    }

    #[test]
    fn jacobi_moments() {
        // ∫_{−1}^{1} (1+x)^b (1+x)^k dx = 2^{b+k+1}/(b+k+1)
        for &b in &[-0.8, -0.3, 0.4, 2.6] {
            for n in [4, 17, 120] {
                let r = gauss_jacobi(n, b);
                for k in 0..(2 * n.min(8)) {
                    let v: f64 = r
                        .nodes
                        .iter()
                        .zip(&r.weights)
                        .map(|(x, w)| w * (1.0 + x).powi(k as i32))
                        .sum();
                    let exact = 2f64.powf(b + k as f64 + 1.0) / (b + k as f64 + 1.0);
                    assert!((v - exact).abs() < 1e-12 * exact, "b={b} n={n} k={k}");
                }
                assert!(r.nodes.iter().all(|x| x.abs() < 1.0));
            }
        }
    }

    #[test]
    fn jacobi_with_zero_exponent_is_legendre() {
        let j = gauss_jacobi(12, 0.0);
        let l = gauss_legendre(12);
        for (a, b) in j.nodes.iter().zip(&l.nodes) {
            assert!((a - b).abs() < 1e-14);
        }
        for (a, b) in j.weights.iter().zip(&l.weights) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}
