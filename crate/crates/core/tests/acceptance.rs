//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
//! criterion fails. Tolerances are pinned below.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use hardedge::asymptotics::{big_sigma, clt_covariance, log_tau, mu_alpha, sigma2, CltVariant};
use hardedge::fredholm::{
    expected_count, initial_nodes, log_det_fixed, log_exponential_moment, log_fredholm_det,
    log_fredholm_det_raw, variance_count, FugacityVector, Precision, ProcessSpec, ThinningVector,
};
use hardedge::harness::{
    linear_slope, run_compare, CompareReport, ExperimentConfig, RGrid, RowFlag, VectorMode,
};
use hardedge::specfun::{barnes_pair, bessel_j, ln_barnes_g, ln_gamma, ComplexValue, EULER_GAMMA};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-11;

// criterion 1
const RANDOM_SPECS: usize = 50;
const LOG_F_SLACK: f64 = 1e-12;
// criterion 2
const GAP_AT_400: f64 = 0.1;
const GAP_SHRINK: f64 = 1.5;
const GAP_NOISE_FLOOR: f64 = 1e-10;
// criterion 3
const THINNED_AT_400: f64 = 0.1;
const EXPONENT_BAND: (f64, f64) = (-0.9, -0.3);
// criteria 4 and 7
const REMAINDER_FACTOR: f64 = 3.0;
// criterion 5
const PRODUCT_TOL: f64 = 0.05;
// criterion 6
const MEAN_TOL: f64 = 0.1;
const VARIANCE_TOL: f64 = 0.05;
const SLOPE_BAND: (f64, f64) = (0.045, 0.056);
// criterion 8
const MGF_TOL: f64 = 0.15;
const MATRIX_TOL: f64 = 1e-15;
// criterion 9
const FUNCTIONAL_TOL: f64 = 1e-10;
const RECURRENCE_TOL: f64 = 1e-10;
// criterion 10
const DROP_FACTOR: f64 = 10.0;
const SPECTRAL_FLOOR: f64 = 1e-11;
const RAW_TOL: f64 = 1e-7;
const RAW_NODES: usize = 256;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn det(spec: &ProcessSpec, s: &[f64], r: f64) -> f64 {
    let d = log_fredholm_det(spec, &ThinningVector::new(s.to_vec()).unwrap(), r, TOL).unwrap();
    assert_eq!(d.sign, 1.0);
    d.log_value
}

fn moment(spec: &ProcessSpec, u: &[f64], r: f64) -> f64 {
    log_exponential_moment(spec, &FugacityVector::new(u.to_vec()).unwrap(), r, TOL)
        .unwrap()
        .log_value
}

fn config(alpha: f64, x: &[f64], mode: VectorMode, values: &[f64], grid: &str) -> ExperimentConfig {
    ExperimentConfig {
        alpha,
        thresholds: x.to_vec(),
        mode,
        values: values.to_vec(),
        r_grid: grid.parse::<RGrid>().unwrap(),
        tol: TOL,
        ..ExperimentConfig::default()
    }
}

fn all_converged(rep: &CompareReport) -> bool {
    rep.rows.iter().all(|r| r.flag == RowFlag::Ok)
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let mut worst = f64::NEG_INFINITY;
    let mut ones_exact = true;
    let mut signs = true;
    for _ in 0..RANDOM_SPECS {
        let alpha = -0.9 + 3.9 * (1.0 - rng.random::<f64>());
        let m = rng.random_range(1..=3);
        let mut x: Vec<f64> = (0..m).map(|_| rng.random_range(0.2..3.0)).collect();
        x.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for k in 1..m {
            if x[k] <= x[k - 1] + 0.05 {
                x[k] = x[k - 1] + 0.05;
            }
        }
        let r = rng.random_range(5.0..60.0);
        let spec = ProcessSpec::new(alpha, x).unwrap();
        let one = log_fredholm_det(&spec, &ThinningVector::ones(m), r, TOL).unwrap();
        ones_exact &= one.log_value == 0.0 && one.sign == 1.0;
        let s: Vec<f64> = (0..m)
            .map(|_| {
                if rng.random_bool(0.2) {
                    0.0
                } else {
                    rng.random::<f64>()
                }
            })
            .collect();
        let d = log_fredholm_det(&spec, &ThinningVector::new(s).unwrap(), r, TOL).unwrap();
        signs &= d.sign == 1.0;
        worst = worst.max(d.log_value);
    }
    outcome(
        ones_exact && signs && worst <= LOG_F_SLACK,
        format!("{RANDOM_SPECS} specs: log F(1)=0 exactly: {ones_exact}, signs +1: {signs}, max log F = {worst:.3e}"),
    )
}

fn criterion_2() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for alpha in [0.0, 0.5, 1.0] {
        let spec = ProcessSpec::single(alpha, 1.0).unwrap();
        let tau = log_tau(alpha).unwrap();
        let gap = |rx: f64| {
            let lead = -rx / 4.0 + alpha * rx.sqrt() - alpha * alpha / 4.0 * rx.ln();
            (det(&spec, &[0.0], rx) - lead - tau).abs()
        };
        let (g400, g1600) = (gap(400.0), gap(1600.0));
        let shrinks = g1600 <= GAP_NOISE_FLOOR || g400 / g1600 >= GAP_SHRINK;
        ok &= g400 <= GAP_AT_400 && shrinks;
        parts.push(format!("a={alpha}: {g400:.2e} -> {g1600:.2e}"));
    }
    outcome(ok, parts.join("; "))
}

fn criterion_3() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for alpha in [0.0, 1.0] {
        for u in [-1.0, 0.5, 2.0] {
            let cfg = config(
                alpha,
                &[1.0],
                VectorMode::Fugacity,
                &[u],
                "100:6400:4:geometric",
            );
            let rep = run_compare(&cfg).unwrap();
            let at400 = rep.rows[1].abs_diff;
            let e = rep.exponent.unwrap_or(f64::NAN);
            let pass = all_converged(&rep)
                && at400 <= THINNED_AT_400
                && e >= EXPONENT_BAND.0
                && e <= EXPONENT_BAND.1;
            ok &= pass;
            parts.push(format!(
                "a={alpha},u={u}: d400={at400:.1e} exp={e:.3}{}",
                if pass { "" } else { " (fail)" }
            ));
        }
    }
    outcome(ok, parts.join("; "))
}

fn remainder_bound(r: f64) -> f64 {
    REMAINDER_FACTOR * r.ln() / r.sqrt()
}

fn bounded_and_decreasing(rep: &CompareReport) -> (bool, bool) {
    let bounded = all_converged(rep) && rep.rows.iter().all(|r| r.abs_diff <= remainder_bound(r.r));
    let decreasing = rep.rows.windows(2).all(|w| w[1].abs_diff < w[0].abs_diff);
    (bounded, decreasing)
}

fn criterion_4() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for alpha in [0.0, 0.5] {
        for u in [[0.8, -0.6], [1.0, 1.0]] {
            let cfg = config(
                alpha,
                &[1.0, 2.0],
                VectorMode::Fugacity,
                &u,
                "100:1600:3:geometric",
            );
            let rep = run_compare(&cfg).unwrap();
            let (bounded, decreasing) = bounded_and_decreasing(&rep);
            ok &= bounded && decreasing;
            let diffs: Vec<String> = rep
                .rows
                .iter()
                .map(|r| format!("{:.1e}", r.abs_diff))
                .collect();
            parts.push(format!(
                "a={alpha},u=({},{}): [{}]{}{}",
                u[0],
                u[1],
                diffs.join(" "),
                if bounded { "" } else { " unbounded" },
                if decreasing { "" } else { " non-monotone" }
            ));
        }
    }
    outcome(ok, parts.join("; "))
}

fn criterion_5() -> Outcome {
    let (u, r) = (0.7, 1600.0);
    let spec = ProcessSpec::new(0.0, vec![1.0, 4.0]).unwrap();
    let joint = moment(&spec, &[u, u], r);
    let a = moment(&spec.window(0), &[u], r);
    let b = moment(&spec.window(1), &[u], r);
    let target = u * u * big_sigma(4.0, 1.0).unwrap();
    let diff = (joint - a - b - target).abs();
    outcome(
        diff <= PRODUCT_TOL,
        format!(
            "residual {:.6} vs u^2 Sigma(4,1) = {target:.6}, |diff| = {diff:.2e}",
            joint - a - b
        ),
    )
}

fn criterion_6() -> Outcome {
    let spec = ProcessSpec::single(0.0, 1.0).unwrap();
    let r = 400.0;
    let mean = expected_count(&spec, 0.0, r).unwrap();
    let dmean = (mean - mu_alpha(0.0, r).unwrap()).abs();
    let var = variance_count(&spec, 0.0, r).unwrap();
    let predicted = r.ln() / (4.0 * PI * PI) + (1.0 + 4f64.ln() + EULER_GAMMA) / (2.0 * PI * PI);
    let dvar = (var - predicted).abs();
    let pts: Vec<(f64, f64)> = "100:6400:7:geometric"
        .parse::<RGrid>()
        .unwrap()
        .points()
        .into_iter()
        .map(|r| (r.ln(), variance_count(&spec, r, 2.0 * r).unwrap()))
        .collect();
    let slope = linear_slope(&pts).unwrap();
    let ok =
        dmean <= MEAN_TOL && dvar <= VARIANCE_TOL && slope >= SLOPE_BAND.0 && slope <= SLOPE_BAND.1;
    outcome(
        ok,
        format!(
            "mean diff {dmean:.2e}, variance diff {dvar:.2e}, interval variance slope {slope:.5} (1/2pi^2 = {:.5})",
            1.0 / (2.0 * PI * PI)
        ),
    )
}

fn criterion_7() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for alpha in [0.0, 1.0] {
        for u2 in [0.5f64, -0.5] {
            let cfg = config(
                alpha,
                &[1.0, 2.0],
                VectorMode::Thinning,
                &[0.0, u2.exp()],
                "400:1600:2:geometric",
            );
            let rep = run_compare(&cfg).unwrap();
            assert_eq!(rep.route, "conditional");
            let (bounded, decreasing) = bounded_and_decreasing(&rep);
            ok &= bounded && decreasing;
            parts.push(format!(
                "a={alpha},u2={u2}: {:.1e} -> {:.1e}{}{}",
                rep.rows[0].abs_diff,
                rep.rows[1].abs_diff,
                if bounded { "" } else { " unbounded" },
                if decreasing { "" } else { " non-monotone" }
            ));
        }
    }
    outcome(ok, parts.join("; "))
}

fn criterion_8() -> Outcome {
    let h = 0.5f64.sqrt();
    let mut matrices = true;
    for m in 1..=5 {
        let c = clt_covariance(m, CltVariant::Cumulative).unwrap();
        let i = clt_covariance(m, CltVariant::Increments).unwrap();
        for a in 0..m {
            for b in 0..m {
                let id = if a == b { 1.0 } else { 0.0 };
                matrices &= (c[a][b] - id).abs() <= MATRIX_TOL;
                let expect = if a == b {
                    1.0
                } else if (a, b) == (0, 1) || (a, b) == (1, 0) {
                    -h
                } else if a >= 1 && b >= 1 && a.abs_diff(b) == 1 {
                    -0.5
                } else {
                    0.0
                };
                matrices &= (i[a][b] - expect).abs() <= MATRIX_TOL;
            }
        }
        if m >= 2 {
            let d = clt_covariance(m, CltVariant::Conditional).unwrap();
            matrices &= d.len() == m - 1;
            for (a, row) in d.iter().enumerate() {
                for (b, &v) in row.iter().enumerate() {
                    let id = if a == b { 1.0 } else { 0.0 };
                    matrices &= (v - id).abs() <= MATRIX_TOL;
                }
            }
        }
    }
    let r = 1e6;
    let spec = ProcessSpec::single(0.0, 1.0).unwrap();
    let sd = sigma2(r).unwrap().sqrt();
    let mut mgf = true;
    let mut parts = Vec::new();
    for t in [0.5, 1.0] {
        let u = t / sd;
        let v = moment(&spec, &[u], r) - u * mu_alpha(0.0, r).unwrap();
        mgf &= (v - t * t / 2.0).abs() <= MGF_TOL;
        parts.push(format!("t={t}: {v:.4} vs {:.3}", t * t / 2.0));
    }
    outcome(
        matrices && mgf,
        format!(
            "matrices exact: {matrices}; MGF at r=1e6 {}",
            parts.join(", ")
        ),
    )
}

fn criterion_9() -> Outcome {
    let mut gamma_res = 0.0f64;
    let mut barnes_res = 0.0f64;
    for i in 0..=30 {
        for k in 0..=24 {
            let z = ComplexValue::new(-0.45 + 5.45 * i as f64 / 30.0, -3.0 + 0.25 * k as f64);
            let g = ln_gamma(z + 1.0).unwrap() - ln_gamma(z).unwrap() - z.ln();
            gamma_res = gamma_res.max(g.norm());
            let b = ln_barnes_g(z + 1.0).unwrap()
                - ln_barnes_g(z).unwrap()
                - ln_gamma(z + 1.0).unwrap();
            let wrap = (b.im / (2.0 * PI)).round() * 2.0 * PI;
            barnes_res = barnes_res.max(ComplexValue::new(b.re, b.im - wrap).norm());
        }
    }
    let mut pair_ok = barnes_pair(0.0).unwrap() == 0.0;
    for i in 1..=60 {
        let u = 0.6 * i as f64;
        let (p, q) = (barnes_pair(u).unwrap(), barnes_pair(-u).unwrap());
        pair_ok &= p.is_finite() && p == q;
    }
    let mut bessel_res = 0.0f64;
    for nu in [0.2, 0.5, 1.0, 1.7, 3.0, 6.5] {
        for i in 0..=500 {
            let x = 0.1 + 99.9 * i as f64 / 500.0;
            let res = bessel_j(nu - 1.0, x).unwrap() + bessel_j(nu + 1.0, x).unwrap()
                - 2.0 * nu / x * bessel_j(nu, x).unwrap();
            bessel_res = bessel_res.max(res.abs());
        }
    }
    outcome(
        gamma_res < FUNCTIONAL_TOL && barnes_res < FUNCTIONAL_TOL && pair_ok && bessel_res < RECURRENCE_TOL,
        format!(
            "gamma {gamma_res:.1e}, barnes {barnes_res:.1e}, pair real/even/zero: {pair_ok}, bessel {bessel_res:.1e}"
        ),
    )
}

/// Every configuration the other criteria evaluate, at its largest r.
fn acceptance_configs() -> Vec<(ProcessSpec, Vec<f64>, f64)> {
    let mut v = Vec::new();
    let single = |a: f64| ProcessSpec::single(a, 1.0).unwrap();
    let fug = |u: &[f64]| {
        FugacityVector::new(u.to_vec())
            .unwrap()
            .to_thinning()
            .as_slice()
            .to_vec()
    };
    for a in [0.0, 0.5, 1.0] {
        v.push((single(a), vec![0.0], 1600.0));
    }
    for a in [0.0, 1.0] {
        for u in [-1.0, 0.5, 2.0] {
            v.push((single(a), fug(&[u]), 6400.0));
        }
    }
    for a in [0.0, 0.5] {
        for u in [[0.8, -0.6], [1.0, 1.0]] {
            v.push((
                ProcessSpec::new(a, vec![1.0, 2.0]).unwrap(),
                fug(&u),
                1600.0,
            ));
        }
    }
    v.push((
        ProcessSpec::new(0.0, vec![1.0, 4.0]).unwrap(),
        fug(&[0.7, 0.7]),
        1600.0,
    ));
    for a in [0.0, 1.0] {
        for u2 in [0.5f64, -0.5] {
            v.push((
                ProcessSpec::new(a, vec![1.0, 2.0]).unwrap(),
                vec![0.0, u2.exp()],
                1600.0,
            ));
        }
    }
    let sd = sigma2(1e6).unwrap().sqrt();
    for t in [0.5, 1.0] {
        v.push((single(0.0), fug(&[t / sd]), 1e6));
    }
    v
}

fn criterion_10() -> Outcome {
    let mut spectral = true;
    let mut worst_ratio = f64::INFINITY;
    let mut pairs = 0;
    let configs = acceptance_configs();
    for (spec, s, r) in &configs {
        let thin = ThinningVector::new(s.clone()).unwrap();
        let reference = det(spec, s, *r);
        let floor = SPECTRAL_FLOOR * reference.abs().max(1.0);
        let t = (r * spec.thresholds().last().unwrap()).sqrt();
        let mut n = 8usize.max((2.0 * t / PI).ceil() as usize);
        let err = |n: usize| {
            (log_det_fixed(spec, &thin, *r, n, Precision::Auto)
                .unwrap()
                .0
                - reference)
                .abs()
        };
        let mut e = err(n);
        while e > floor && n <= initial_nodes(spec, *r) {
            let e2 = err(2 * n);
            pairs += 1;
            let ratio = e / e2.max(floor);
            worst_ratio = worst_ratio.min(ratio);
            spectral &= e2 <= floor || ratio >= DROP_FACTOR;
            n *= 2;
            e = e2;
        }
        spectral &= e <= floor;
    }
    let mut raw_worst = 0.0f64;
    let mut raw_count = 0;
    for (spec, s, r) in configs
        .iter()
        .filter(|c| c.0.alpha() == 0.0 && c.1.iter().all(|&v| v > 0.0))
    {
        if *r > 6400.0 {
            continue;
        }
        let (raw, sign) = log_fredholm_det_raw(
            spec,
            &ThinningVector::new(s.clone()).unwrap(),
            *r,
            RAW_NODES,
        )
        .unwrap();
        raw_worst = raw_worst.max(if sign == 1.0 {
            (raw - det(spec, s, *r)).abs()
        } else {
            f64::INFINITY
        });
        raw_count += 1;
    }
    outcome(
        spectral && raw_worst <= RAW_TOL,
        format!(
            "{} configs, {pairs} doublings above floor, smallest drop {worst_ratio:.1e}; sqrt vs raw on {raw_count} configs: {raw_worst:.1e}",
            configs.len()
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("normalisation and range", criterion_1),
        ("m=1 gap constant", criterion_2),
        ("m=1 thinned constant", criterion_3),
        ("multi-window expansion", criterion_4),
        ("product form", criterion_5),
        ("counting statistics", criterion_6),
        ("conditional expansion", criterion_7),
        ("clt structure", criterion_8),
        ("special functions", criterion_9),
        ("quadrature robustness", criterion_10),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let id = format!("criterion_{}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|p| id.contains(p.as_str())) {
            continue;
        }
        let start = Instant::now();
        let o = f();
        if !o.passed {
            failed += 1;
        }
        println!(
            "{} {:>2} {:<24} {} [{:.1}s]",
            if o.passed { "PASS" } else { "FAIL" },
            i + 1,
            name,
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
