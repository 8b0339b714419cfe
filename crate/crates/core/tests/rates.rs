//! Rate fitting, equi-attraction bounds, the singular ODE example and the
//! experiment runner.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use robinlab::error::LabError;
use robinlab::family::CoefficientFamily;
use robinlab::manifolds::attractor_rate_experiment;
use robinlab::mesh::Mesh1D;
use robinlab::rates::{
    equi_attraction_bound, exponential_rate_bound, fit_rate, ode_example_experiment,
    run_experiment, write_reports, ExperimentKind, FitMode, LabConfig, OdeExampleConfig,
    OdeNonlinearity, RateBoundParams, RateSeries, SingularOde,
};

/// Minimiser of `2(C (c/ν)^{L/γ} δ + ν)` from its first-order condition.
fn calculus_minimum(p: &RateBoundParams, delta: f64) -> f64 {
    let r = p.l / p.gamma;
    let nu = (r * p.c_conv * p.c.powf(r) * delta).powf(p.gamma / (p.gamma + p.l));
    2.0 * (p.c_conv * (p.c / nu).powf(r) * delta + nu)
}

#[test]
fn unit_parameters_give_the_textbook_value() {
    let p = RateBoundParams::default();
    let r = equi_attraction_bound(&p, p.exponential_theta_inverse(), p.exponential_range(), 0.01).unwrap();
    assert!((r.value - 0.4).abs() < 1e-10);
    assert!((calculus_minimum(&p, 0.01) - 0.4).abs() < 1e-14);
    let zero = equi_attraction_bound(&p, p.exponential_theta_inverse(), p.exponential_range(), 0.0).unwrap();
    assert_eq!(zero.value, 0.0);
    assert!(zero.zero_perturbation);
}

#[test]
fn numeric_minimum_matches_calculus_and_closed_form_on_random_tuples() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..10 {
        let p = RateBoundParams {
            gamma: rng.gen_range(0.3..3.0),
            l: rng.gen_range(0.3..3.0),
            c: rng.gen_range(0.5..3.0),
            c_conv: rng.gen_range(0.5..3.0),
            ..RateBoundParams::default()
        };
        let delta = 10f64.powf(rng.gen_range(-6.0..-2.0));
        let oracle = calculus_minimum(&p, delta);
        let numeric = equi_attraction_bound(&p, p.exponential_theta_inverse(), p.exponential_range(), delta)
            .unwrap()
            .value;
        let (l, prefactor) = exponential_rate_bound(&p).unwrap();
        assert!((l - p.gamma / (p.gamma + p.l)).abs() < 1e-15);
        assert!((numeric - oracle).abs() <= 1e-9 * oracle, "{numeric} vs {oracle}");
        assert!((prefactor * delta.powf(l) - oracle).abs() <= 1e-9 * oracle);
        let half = equi_attraction_bound(&p, p.exponential_theta_inverse(), p.exponential_range(), 0.5 * delta)
            .unwrap()
            .value;
        assert!((half / numeric - 0.5f64.powf(l)).abs() < 1e-8);
    }
}

#[test]
fn rate_exponent_increases_towards_one_with_the_attraction_rate() {
    let mut last = 0.0;
    for gamma in [0.5, 1.0, 2.0, 8.0, 64.0, 1024.0] {
        let p = RateBoundParams {
            gamma,
            ..RateBoundParams::default()
        };
        let (l, _) = exponential_rate_bound(&p).unwrap();
        assert!(l > last && l < 1.0);
        last = l;
    }
    assert!(last > 0.99);
}

#[test]
fn exact_power_data_fit_exactly() {
    let delta = |e: f64| 3.0 * e;
    let pairs: Vec<(f64, f64)> = (4..=10)
        .map(|k| {
            let e = 2f64.powi(-k);
            (e, delta(e).powf(0.7))
        })
        .collect();
    let fit = fit_rate(&RateSeries::new(&pairs, delta), FitMode::Power).unwrap();
    assert!((fit.exponent - 0.7).abs() < 1e-12);
    assert!((fit.r_squared - 1.0).abs() < 1e-12);
}

#[test]
fn log_corrected_data_have_unit_spread_and_a_depressed_slope() {
    let series = |shift: i32| {
        let pairs: Vec<(f64, f64)> = (4..=10)
            .map(|k| {
                let d = 2f64.powi(-k - shift);
                (d, d * d.ln().abs())
            })
            .collect();
        RateSeries::new(&pairs, |e| e)
    };
    let logc = fit_rate(&series(0), FitMode::Logcorrected).unwrap();
    assert!((logc.spread - 1.0).abs() < 1e-12);
    let mut last = 0.0;
    for shift in [0, 10, 20, 40] {
        let e = fit_rate(&series(shift), FitMode::Power).unwrap().exponent;
        assert!(e < 1.0 && e > last);
        last = e;
    }
}

#[test]
fn constant_series_is_flagged_as_non_converging() {
    let pairs: Vec<(f64, f64)> = (4..=9).map(|k| (2f64.powi(-k), 0.3)).collect();
    let fit = fit_rate(&RateSeries::new(&pairs, |e| e), FitMode::Power).unwrap();
    assert!(fit.exponent.abs() < 1e-12);
    assert!(fit.non_converging);
}

#[test]
fn too_few_points_are_rejected_and_zeros_excluded() {
    let pairs = [(0.1, 0.1), (0.05, 0.05), (0.025, 0.025), (0.0, 0.0)];
    let err = fit_rate(&RateSeries::new(&pairs, |e| e), FitMode::Power).unwrap_err();
    assert!(matches!(err, LabError::InsufficientPoints(3)));
}

proptest! {
    #[test]
    fn fitted_exponent_is_scale_equivariant(k in 1e-3f64..1e3, p in 0.2f64..2.0, noise_seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
        let pairs: Vec<(f64, f64)> = (4..=10)
            .map(|j| {
                let e = 2f64.powi(-j);
                (e, e.powf(p) * rng.gen_range(0.8..1.25))
            })
            .collect();
        let scaled: Vec<(f64, f64)> = pairs.iter().map(|&(e, v)| (e, k * v)).collect();
        let a = fit_rate(&RateSeries::new(&pairs, |e| e), FitMode::Power).unwrap();
        let b = fit_rate(&RateSeries::new(&scaled, |e| e), FitMode::Power).unwrap();
        prop_assert!((a.exponent - b.exponent).abs() < 1e-12);
    }
}

#[test]
fn limit_equilibria_match_a_bisection_oracle() {
    // μ x = 2 tanh x with μ = 1: the positive root by bisection on [1, 3]
    let g = |x: f64| x - 2.0 * x.tanh();
    let (mut lo, mut hi) = (1.0, 3.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(lo) * g(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let xbar = 0.5 * (lo + hi);
    let sys = SingularOde::new(1.0, 0.0, OdeNonlinearity::Tanh2).unwrap();
    let mut xs: Vec<f64> = sys.equilibria().iter().map(|y| y[0]).collect();
    xs.sort_by(f64::total_cmp);
    assert_eq!(xs.len(), 3);
    assert!((xs[0] + xbar).abs() < 1e-12 && xs[1].abs() < 1e-12 && (xs[2] - xbar).abs() < 1e-12);
    // the perturbed system shares the equilibria, with zero velocity
    let pert = SingularOde::new(1.0, 0.1, OdeNonlinearity::Tanh2).unwrap();
    for y in pert.equilibria() {
        assert_eq!(y[1], 0.0);
        assert!(xs.iter().any(|x| (x - y[0]).abs() < 1e-12));
    }
}

#[test]
fn linear_ode_attractors_coincide() {
    let sweep = [0.1, 0.05, 0.025, 0.0125];
    let rep = ode_example_experiment(1.0, OdeNonlinearity::Zero, &sweep, &OdeExampleConfig::default()).unwrap();
    assert!(rep.rows.iter().all(|r| r.d_h == 0.0));
    assert!(rep.fit.is_none());
}

fn small_config(kind: ExperimentKind, dir: &std::path::Path) -> LabConfig {
    let mut cfg = LabConfig::for_experiment(kind);
    cfg.mesh.n = 32;
    cfg.output.dir = dir.to_path_buf();
    cfg
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [a.path(), b.path()] {
        let cfg = small_config(ExperimentKind::EigenRate, dir);
        let out = run_experiment(&cfg).unwrap();
        write_reports(&out, &cfg).unwrap();
    }
    for file in ["series.csv", "fit.json", "meta.json"] {
        let x = std::fs::read(a.path().join("eigen-rate").join(file)).unwrap();
        let y = std::fs::read(b.path().join("eigen-rate").join(file)).unwrap();
        assert_eq!(x, y, "{file} differs");
    }
    let csv = std::fs::read_to_string(a.path().join("eigen-rate/series.csv")).unwrap();
    assert!(!csv.contains('\r'));
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("eps,delta,gap_k0"));
    assert_eq!(lines.count(), 7);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(a.path().join("eigen-rate/fit.json")).unwrap()).unwrap();
    for key in ["experiment", "eps", "delta", "value", "exponent", "r2", "ratio_min", "ratio_max", "verdict"] {
        assert!(json.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn zero_eps_row_is_kept_and_excluded_from_the_fit() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(ExperimentKind::ResolventRate, dir.path());
    cfg.sweep.eps = Some(vec![0.0625, 0.03125, 0.015625, 0.0078125, 0.0]);
    let out = run_experiment(&cfg).unwrap();
    let last = out.rows.last().unwrap();
    assert_eq!((last[0], last[2]), (0.0, 0.0));
    let fit = out.fit.as_ref().unwrap();
    assert_eq!(fit.points_used, 4);
    assert_eq!(fit.excluded, vec![0.0]);
    assert!(out.notes.iter().any(|n| n.contains("excluded")));
}

#[test]
fn linear_experiments_emit_their_mesh_certifications() {
    let dir = tempfile::tempdir().unwrap();
    for kind in [
        ExperimentKind::ResolventRate,
        ExperimentKind::EigenRate,
        ExperimentKind::ProjectionRate,
        ExperimentKind::LinearSemigroupRate,
    ] {
        let out = run_experiment(&small_config(kind, dir.path())).unwrap();
        assert_eq!(out.certifications.len(), 1, "{kind}");
        assert_eq!(out.certifications[0].kind, "mesh");
        assert_eq!(out.certifications[0].refined, 64.0);
        assert!(out.certifications[0].passed);
    }
    let mut cfg = small_config(ExperimentKind::ResolventRate, dir.path());
    cfg.mesh.certify = false;
    let out = run_experiment(&cfg).unwrap();
    assert!(out.certifications.is_empty());
    assert!(out.notes.iter().any(|n| n.contains("skipped")));
}

#[test]
fn attractor_runner_reproduces_the_standalone_experiment() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(ExperimentKind::AttractorRate, dir.path());
    cfg.sweep.eps = Some(vec![0.0625, 0.03125, 0.015625, 0.0078125]);
    cfg.mesh.certify = false;
    let out = run_experiment(&cfg).unwrap();
    let fam = CoefficientFamily::default_family();
    let mesh = Mesh1D::uniform(32).unwrap();
    let acfg = robinlab::manifolds::AttractorConfig {
        integrator: cfg.integrator,
        seed: cfg.experiment.seed,
        ..Default::default()
    };
    let direct = attractor_rate_experiment(&fam, &mesh, &cfg.sweep.values(), &acfg).unwrap();
    assert_eq!(out.rows.len(), direct.rows.len());
    for (row, d) in out.rows.iter().zip(&direct.rows) {
        assert_eq!(row[0], d.eps);
        assert_eq!(row[2], d.d_h);
        assert_eq!(row[3], d.d_h_curve);
    }
}

#[test]
fn config_errors_name_the_offending_key() {
    let err = LabConfig::parse("[experiment]\nname = \"eigen-rate\"\n[integrator]\ndt = \"fast\"\n").unwrap_err();
    match err {
        LabError::Config { path, .. } => assert_eq!(path, "integrator.dt"),
        other => panic!("unexpected error {other:?}"),
    }
    let err = LabConfig::parse("[experiment]\nname = \"no-such-experiment\"\n").unwrap_err();
    assert!(matches!(err, LabError::Config { ref path, .. } if path == "experiment.name"));
    let err = LabConfig::parse("[sweep]\nk_min = 4\n").unwrap_err();
    assert!(matches!(err, LabError::Config { .. }));
    // semantic validation runs on parse and names the section
    let err = LabConfig::parse("[experiment]\nname = \"shadowing\"\n[integrator]\ndt = -1.0\n").unwrap_err();
    assert!(matches!(err, LabError::Config { ref path, .. } if path == "integrator"));
}
