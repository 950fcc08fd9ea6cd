use super::{ProcessSpec, ThinningVector};
use crate::error::{Error, Result};
use crate::quadrature::{gauss_jacobi, gauss_legendre};

/// One window `(√(r x_{j−1}), √(r x_j))` of the √-variable grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridInterval {
    /// Window index j (0-based).
    pub index: usize,
    pub lower: f64,
    pub upper: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Thinning parameter s_j.
    pub thinning: f64,
    /// Thinning factor `1 − s_j`.
    pub factor: f64,
    /// Exponent b of a Gauss–Jacobi rule with weight `(t − lower)^b`,
    /// when the hard-edge window uses one. Its effective weights already
    /// divide that factor back out.
    pub jacobi: Option<f64>,
}

/// Nyström grid over the windows that carry thinning.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    pub intervals: Vec<GridInterval>,
}

impl QuadratureGrid {
    pub fn total_nodes(&self) -> usize {
        self.intervals.iter().map(|i| i.nodes.len()).sum()
    }

    /// Window index of every node, in grid order.
    pub fn node_interval(&self) -> Vec<usize> {
        self.intervals
            .iter()
            .flat_map(|i| std::iter::repeat_n(i.index, i.nodes.len()))
            .collect()
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        self.intervals.iter().flat_map(|i| i.nodes.iter().copied())
    }

    pub fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.intervals
            .iter()
            .flat_map(|i| i.weights.iter().copied())
    }
}

/// Jacobi exponent `2α + 1` for the hard-edge window, or `None` when it is a
/// non-negative integer and the integrand is already analytic.
pub(crate) fn hard_edge_exponent(alpha: f64) -> Option<f64> {
    let b = 2.0 * alpha + 1.0;
    if b >= 0.0 && (b - b.round()).abs() < 1e-12 {
        None
    } else {
        Some(b)
    }
}

pub(crate) fn interval_rule(
    lower: f64,
    upper: f64,
    n: usize,
    jacobi: Option<f64>,
) -> (Vec<f64>, Vec<f64>) {
    match jacobi {
        None => gauss_legendre(n).mapped(lower, upper),
        Some(b) => {
            let rule = gauss_jacobi(n, b);
            let half = 0.5 * (upper - lower);
            let nodes = rule
                .nodes
                .iter()
                .map(|&x| lower + half * (1.0 + x))
                .collect();
            let weights = rule
                .nodes
                .iter()
                .zip(&rule.weights)
                .map(|(&x, &w)| half * w / (1.0 + x).powf(b))
                .collect();
            (nodes, weights)
        }
    }
}

fn check(r: f64, n: usize) -> Result<()> {
    if !r.is_finite() || r <= 0.0 {
        return Err(Error::config(format!("r must be positive, got {r}")));
    }
    if n < 4 {
        return Err(Error::config(format!(
            "need at least 4 nodes per interval, got {n}"
        )));
    }
    Ok(())
}

/// Grid with n nodes on every window, all factors 1 (full gap).
pub fn build_grid(spec: &ProcessSpec, r: f64, n: usize) -> Result<QuadratureGrid> {
    build_thinned_grid(spec, &ThinningVector::new(vec![0.0; spec.m()])?, r, n)
}

/// Grid with factors `1 − s_j`; windows with `s_j = 1` are left out.
pub fn build_thinned_grid(
    spec: &ProcessSpec,
    s: &ThinningVector,
    r: f64,
    n: usize,
) -> Result<QuadratureGrid> {
    check(r, n)?;
    if s.len() != spec.m() {
        return Err(Error::config(format!(
            "{} thinning parameters for {} windows",
            s.len(),
            spec.m()
        )));
    }
    let mut intervals = Vec::new();
    let mut lower = 0.0;
    for (j, (&x, &sj)) in spec.thresholds().iter().zip(s.as_slice()).enumerate() {
        let upper = (r * x).sqrt();
        if sj != 1.0 {
            let jacobi = if j == 0 {
                hard_edge_exponent(spec.alpha())
            } else {
                None
            };
            let (nodes, weights) = interval_rule(lower, upper, n, jacobi);
            intervals.push(GridInterval {
                index: j,
                lower,
                upper,
                nodes,
                weights,
                thinning: sj,
                factor: 1.0 - sj,
                jacobi,
            });
        }
        lower = upper;
    }
    Ok(QuadratureGrid { intervals })
}
