use std::f64::consts::PI;

use hardedge::asymptotics::log_moment_asymptotic;
use hardedge::fredholm::{
    build_grid, covariance_count, expected_count, log_det_fixed, log_exponential_moment,
    log_fredholm_det, log_fredholm_det_raw, log_fredholm_det_with, variance_count, DetOptions,
    FugacityVector, Precision, ProcessSpec, ThinningVector,
};
use hardedge::kernel::{bessel_kernel, bessel_kernel_diag, KernelParams};
use hardedge::quadrature::gauss_legendre;
use hardedge::specfun::EULER_GAMMA;
use hardedge::Error;
use proptest::prelude::*;

const TOL: f64 = 1e-12;

fn thin(s: &[f64]) -> ThinningVector {
    ThinningVector::new(s.to_vec()).unwrap()
}

fn log_f(spec: &ProcessSpec, s: &[f64], r: f64) -> f64 {
    log_fredholm_det(spec, &thin(s), r, TOL).unwrap().log_value
}

/// −tr K − tr K²/2 on (0, b) with a plain Gauss–Legendre rule in x.
fn two_term_series(alpha: f64, b: f64) -> f64 {
    let k = KernelParams::new(alpha).unwrap();
    let (x, w) = gauss_legendre(40).mapped(0.0, b);
    let mut tr1 = 0.0;
    let mut tr2 = 0.0;
    for i in 0..x.len() {
        tr1 += w[i] * bessel_kernel_diag(k, x[i]).unwrap();
        for j in 0..x.len() {
            let kij = if i == j {
                bessel_kernel_diag(k, x[i]).unwrap()
            } else {
                bessel_kernel(k, x[i], x[j]).unwrap()
            };
            tr2 += w[i] * w[j] * kij * kij;
        }
    }
    -tr1 - 0.5 * tr2
}

#[test]
fn grid_construction() {
    let one = ProcessSpec::single(0.0, 1.0).unwrap();
    let g = build_grid(&one, 1.0, 4).unwrap();
    assert_eq!(g.total_nodes(), 4);
    assert!(g.nodes().all(|t| t > 0.0 && t < 1.0));
    assert!((g.weights().sum::<f64>() - 1.0).abs() < 1e-15);
    assert!(build_grid(&one, 1.0, 3).is_err());

    let two = ProcessSpec::new(0.0, vec![1.0, 2.0]).unwrap();
    let g = build_grid(&two, 4.0, 16).unwrap();
    assert_eq!(g.total_nodes(), 32);
    let second = &g.intervals[1];
    assert_eq!((second.lower, second.upper), (2.0, 8f64.sqrt()));
    assert!(second.nodes.iter().all(|&t| t > 2.0 && t < 8f64.sqrt()));
    assert!(second.weights.iter().all(|&w| w > 0.0));
    assert!((second.weights.iter().sum::<f64>() - (8f64.sqrt() - 2.0)).abs() < 1e-13);
    assert_eq!(g.node_interval().iter().filter(|&&j| j == 1).count(), 16);
}

#[test]
fn no_thinning_is_exactly_zero() {
    let spec = ProcessSpec::new(0.7, vec![1.0, 2.0, 5.0]).unwrap();
    let d = log_fredholm_det(&spec, &ThinningVector::ones(3), 50.0, TOL).unwrap();
    assert_eq!((d.log_value, d.sign), (0.0, 1.0));
    let e = log_exponential_moment(&spec, &FugacityVector::zeros(3), 50.0, TOL).unwrap();
    assert_eq!(e.log_value, 0.0);
}

#[test]
fn small_window_matches_the_series() {
    let spec = ProcessSpec::single(0.0, 1.0).unwrap();
    let v = log_f(&spec, &[0.0], 0.01);
    let oracle = two_term_series(0.0, 0.01);
    assert!((v - oracle).abs() < 1e-5, "{v} vs {oracle}");
    let trace_only = -expected_count(&spec, 0.0, 0.01).unwrap();
    assert!((v - trace_only).abs() < 1e-5);
}

#[test]
fn gap_at_one_hundred() {
    let spec = ProcessSpec::single(0.0, 1.0).unwrap();
    let v = log_f(&spec, &[0.0], 100.0);
    assert!((v + 25.0).abs() < 0.15, "{v}");
}

#[test]
fn two_window_moment_near_the_expansion() {
    let spec = ProcessSpec::new(0.0, vec![1.0, 2.0]).unwrap();
    let u = FugacityVector::new(vec![0.5, 0.5]).unwrap();
    let v = log_exponential_moment(&spec, &u, 100.0, TOL)
        .unwrap()
        .log_value;
    let a = log_moment_asymptotic(&spec, &u, 100.0).unwrap().total;
    assert!((v - a).abs() < 0.25, "{v} vs {a}");
}

#[test]
fn positive_fugacity_is_supported() {
    let spec = ProcessSpec::single(0.0, 1.0).unwrap();
    let d = log_exponential_moment(&spec, &FugacityVector::new(vec![2.0]).unwrap(), 100.0, TOL)
        .unwrap();
    assert!(d.log_value > 0.0 && d.log_value.is_finite());
}

#[test]
fn node_cap_reports_no_convergence() {
    let spec = ProcessSpec::single(0.0, 1.0).unwrap();
    let opts = DetOptions {
        tol: 1e-14,
        max_nodes: 16,
        initial_nodes: Some(4),
        precision: Precision::Double,
    };
    let e = log_fredholm_det_with(&spec, &thin(&[0.0]), 400.0, &opts).unwrap_err();
    assert!(matches!(e, Error::NoConvergence { .. }));
    assert_eq!(e.exit_code(), 3);
}

#[test]
fn counting_statistics() {
    let spec = ProcessSpec::single(0.0, 1.0).unwrap();
    assert!(expected_count(&spec, 1.0, 1.0 + 1e-12).unwrap().abs() < 1e-11);
    let mean = expected_count(&spec, 0.0, 400.0).unwrap();
    assert!((mean - 20.0 / PI).abs() < 0.1, "{mean}");
    let split = expected_count(&spec, 0.0, 1.0).unwrap() + expected_count(&spec, 1.0, 2.0).unwrap();
    assert!((split - expected_count(&spec, 0.0, 2.0).unwrap()).abs() < 1e-8);

    let var = variance_count(&spec, 0.0, 400.0).unwrap();
    let predicted =
        400f64.ln() / (4.0 * PI * PI) + (1.0 + 4f64.ln() + EULER_GAMMA) / (2.0 * PI * PI);
    assert!((var - predicted).abs() < 0.05, "{var} vs {predicted}");

    let cov = covariance_count(&spec, (0.0, 100.0), (0.0, 400.0)).unwrap();
    assert!((cov - 3f64.ln() / (2.0 * PI * PI)).abs() < 0.1, "{cov}");
}

#[test]
fn variance_is_the_second_derivative() {
    let spec = ProcessSpec::single(0.0, 1.0).unwrap();
    let r = 100.0;
    let h = 1e-3;
    let e = |u: f64| {
        log_exponential_moment(&spec, &FugacityVector::new(vec![u]).unwrap(), r, TOL)
            .unwrap()
            .log_value
    };
    let second = (e(h) - 2.0 * e(0.0) + e(-h)) / (h * h);
    let var = variance_count(&spec, 0.0, r).unwrap();
    assert!((second - var).abs() < 1e-3, "{second} vs {var}");
}

#[test]
fn representation_invariance() {
    for (alpha, x, s, r) in [
        (0.0, vec![1.0], vec![0.0], 100.0),
        (0.0, vec![1.0, 3.0], vec![0.3, 0.8], 40.0),
        (2.0, vec![1.0], vec![0.5], 60.0),
    ] {
        let spec = ProcessSpec::new(alpha, x).unwrap();
        let (raw, sign) = log_fredholm_det_raw(&spec, &thin(&s), r, 128).unwrap();
        assert_eq!(sign, 1.0);
        assert!((raw - log_f(&spec, &s, r)).abs() < 1e-7);
    }
}

#[test]
fn spectral_convergence() {
    let spec = ProcessSpec::new(0.5, vec![1.0, 2.0]).unwrap();
    let s = thin(&[0.2, 0.6]);
    let r = 400.0;
    let reference = log_fredholm_det(&spec, &s, r, 1e-13).unwrap().log_value;
    let err =
        |n: usize| (log_det_fixed(&spec, &s, r, n, Precision::Auto).unwrap().0 - reference).abs();
    let (e1, e2) = (err(20), err(40));
    assert!(e1 > 1e-12 && e2 < e1 / 10.0, "{e1} {e2}");
}

fn random_case() -> impl Strategy<Value = (ProcessSpec, Vec<f64>, f64)> {
    (-0.9f64..3.0, 1usize..=3, 1.0f64..40.0).prop_flat_map(|(alpha, m, r)| {
        (
            prop::collection::vec(0.3f64..1.0, m),
            prop::collection::vec(0.0f64..=1.0, m),
        )
            .prop_map(move |(steps, s)| {
                let x: Vec<f64> = steps
                    .iter()
                    .scan(0.0, |acc, d| {
                        *acc += d;
                        Some(*acc)
                    })
                    .collect();
                (ProcessSpec::new(alpha, x).unwrap(), s, r)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(30))]

    #[test]
    fn normalised((spec, _s, r) in random_case()) {
        let d = log_fredholm_det(&spec, &ThinningVector::ones(spec.m()), r, TOL).unwrap();
        prop_assert_eq!(d.log_value, 0.0);
        prop_assert_eq!(d.sign, 1.0);
    }

    #[test]
    fn probability_range((spec, s, r) in random_case()) {
        let d = log_fredholm_det(&spec, &thin(&s), r, TOL).unwrap();
        prop_assert_eq!(d.sign, 1.0);
        prop_assert!(d.log_value <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn monotone_in_each_thinning((spec, s, r) in random_case(), j in 0usize..3, bump in 0.01f64..0.5) {
        let j = j % spec.m();
        let mut t = s.clone();
        t[j] += bump;
        prop_assert!(log_f(&spec, &t, r) >= log_f(&spec, &s, r) - 1e-10);
    }
}
