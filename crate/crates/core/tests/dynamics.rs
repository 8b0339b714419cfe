//! Time stepping, equilibria and semigroup gaps against independent
//! oracles.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use robinlab::dynamics::{
    default_guesses, evolve, find_equilibria, linear_semigroup_gap, step, EquilibriumOptions,
    IntegratorConfig, LinearSemigroup, NonlinearTerm, Scheme,
};
use robinlab::family::CoefficientFamily;
use robinlab::fem::{assemble_operator, h1_norm, NormTag};
use robinlab::mesh::Mesh1D;
use robinlab::rates::{fit_rate, FitMode, RateSeries};

/// `Σ e^{−λ_k t}(φ_kᵀ M u0) φ_k` from a dense symmetric eigendecomposition of
/// `L⁻¹ K L⁻ᵀ` with `M = L Lᵀ`.
fn eigen_expansion(k: &DMatrix<f64>, m: &DMatrix<f64>, u0: &DVector<f64>, t: f64) -> DVector<f64> {
    let l = m.clone().cholesky().unwrap().l();
    let linv = l.clone().try_inverse().unwrap();
    let a = &linv * k * linv.transpose();
    let a = (&a + a.transpose()) * 0.5;
    let eig = a.symmetric_eigen();
    let y0 = l.transpose() * u0;
    let coeff = eig.eigenvectors.transpose() * y0;
    let decayed = DVector::from_fn(coeff.len(), |i, _| coeff[i] * (-eig.eigenvalues[i] * t).exp());
    linv.transpose() * (&eig.eigenvectors * decayed)
}

#[test]
fn linear_evolution_matches_eigen_expansion() {
    let fam = CoefficientFamily::robin_test(1.0, 0.5);
    let mesh = Mesh1D::uniform(32).unwrap();
    let op = assemble_operator(&fam, &mesh, 0.0).unwrap();
    let nl = NonlinearTerm::new(&fam, &mesh, 0.0);
    let u0 = mesh.interpolate(|x| (std::f64::consts::PI * x).cos() + x * x);
    let exact = eigen_expansion(&op.k().to_dense(), &op.m().to_dense(), &u0, 0.5);
    let cfg = IntegratorConfig {
        dt: 1e-4,
        ..Default::default()
    };
    let u = evolve(&u0, 0.5, &op, &nl, &cfg).unwrap();
    let err = h1_norm(&op, &(&u - &exact)).unwrap() / h1_norm(&op, &exact).unwrap();
    assert!(err < 1e-6, "relative error {err}");
    // and the eigenbasis semigroup agrees with the same oracle
    let s = LinearSemigroup::new(&op).unwrap();
    assert!((s.apply(0.5, &u0) - &exact).amax() < 1e-10);
}

#[test]
fn three_equilibria_confirmed_by_a_dense_guess_sweep() {
    let fam = CoefficientFamily::default_family();
    let mesh = Mesh1D::uniform(64).unwrap();
    let opts = EquilibriumOptions::default();
    let set = find_equilibria(&fam, &mesh, 0.0, None, &opts).unwrap();
    assert_eq!(set.len(), 3);
    assert_eq!(set.unstable_dims, vec![0, 1, 0]);
    assert!(set.all_hyperbolic());
    let op = assemble_operator(&fam, &mesh, 0.0).unwrap();
    let dense = default_guesses(&op, 3.0, 210, 4).unwrap();
    let oracle = find_equilibria(&fam, &mesh, 0.0, Some(&dense), &opts).unwrap();
    assert_eq!(oracle.len(), 3);
    for (a, b) in set.points.iter().zip(&oracle.points) {
        assert!(h1_norm(&op, &(a - b)).unwrap() < 1e-8);
    }
}

#[test]
fn single_equilibrium_when_the_growth_rate_is_small() {
    use robinlab::family::StandardParams;
    let fam = CoefficientFamily::standard(StandardParams {
        a: 1.0,
        ..Default::default()
    });
    let mesh = Mesh1D::uniform(32).unwrap();
    let set = find_equilibria(&fam, &mesh, 0.0, None, &EquilibriumOptions::default()).unwrap();
    assert_eq!(set.len(), 1);
    assert_eq!(set.unstable_dims, vec![0]);
    assert!(set.points[0].amax() < 1e-10);
}

#[test]
fn equilibria_are_fixed_by_one_step() {
    let fam = CoefficientFamily::default_family();
    let mesh = Mesh1D::uniform(64).unwrap();
    let set = find_equilibria(&fam, &mesh, 0.1, None, &EquilibriumOptions::default()).unwrap();
    let op = assemble_operator(&fam, &mesh, 0.1).unwrap();
    let nl = NonlinearTerm::new(&fam, &mesh, 0.1);
    for scheme in [Scheme::ImexEuler, Scheme::ImexCn] {
        let cfg = IntegratorConfig {
            dt: 1e-3,
            scheme,
            ..Default::default()
        };
        for u in &set.points {
            let next = step(u, &op, &nl, &cfg).unwrap();
            assert!(h1_norm(&op, &(next - u)).unwrap() <= 1e-9);
        }
    }
}

#[test]
fn step_halving_shows_first_and_second_order() {
    let fam = CoefficientFamily::default_family();
    let mesh = Mesh1D::uniform(32).unwrap();
    let op = assemble_operator(&fam, &mesh, 0.1).unwrap();
    let nl = NonlinearTerm::new(&fam, &mesh, 0.1);
    let u0 = mesh.interpolate(|x| 0.5 * (std::f64::consts::PI * x).cos());
    // Crank–Nicolson damps stiff modes only like (1 − 4/(dt λ)) per step, so
    // its asymptotic range starts at much smaller steps
    let euler_dts = [0.02, 0.01, 0.005, 0.0025];
    let cn_dts = [6.25e-4, 3.125e-4, 1.5625e-4, 7.8125e-5];
    for (scheme, order, dts) in [(Scheme::ImexEuler, 1.0, euler_dts), (Scheme::ImexCn, 2.0, cn_dts)] {
        let run = |dt: f64| {
            let cfg = IntegratorConfig {
                dt,
                scheme,
                ..Default::default()
            };
            evolve(&u0, 1.0, &op, &nl, &cfg).unwrap()
        };
        let pairs: Vec<(f64, f64)> = dts
            .iter()
            .map(|&dt| (dt, h1_norm(&op, &(run(dt) - run(0.5 * dt))).unwrap()))
            .collect();
        let fit = fit_rate(&RateSeries::new(&pairs, |dt| dt), FitMode::Power).unwrap();
        assert!((fit.exponent - order).abs() < 0.15, "{scheme:?}: slope {}", fit.exponent);
    }
}

#[test]
fn large_initial_data_enter_a_common_absorbing_ball() {
    let fam = CoefficientFamily::default_family();
    let mesh = Mesh1D::uniform(32).unwrap();
    let op = assemble_operator(&fam, &mesh, 0.0).unwrap();
    let nl = NonlinearTerm::new(&fam, &mesh, 0.0);
    let eq = find_equilibria(&fam, &mesh, 0.0, None, &EquilibriumOptions::default()).unwrap();
    let radius = eq
        .points
        .iter()
        .map(|u| h1_norm(&op, u).unwrap())
        .fold(0.0, f64::max);
    let cfg = IntegratorConfig {
        dt: 1e-2,
        ..Default::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..20 {
        let raw = DVector::from_fn(op.dim(), |_, _| rng.gen_range(-1.0..1.0));
        let u0 = &raw * (rng.gen_range(1.0..10.0) / h1_norm(&op, &raw).unwrap());
        let u = evolve(&u0, 50.0, &op, &nl, &cfg).unwrap();
        assert!(h1_norm(&op, &u).unwrap() <= 1.01 * radius);
    }
}

#[test]
fn each_limit_equilibrium_has_exactly_one_perturbed_neighbour() {
    let fam = CoefficientFamily::default_family();
    let mesh = Mesh1D::uniform(64).unwrap();
    let opts = EquilibriumOptions::default();
    let op = assemble_operator(&fam, &mesh, 0.0).unwrap();
    let e0 = find_equilibria(&fam, &mesh, 0.0, None, &opts).unwrap();
    for k in [5, 7, 9] {
        let eps = 2f64.powi(-k);
        let ee = find_equilibria(&fam, &mesh, eps, None, &opts).unwrap();
        let delta = fam.delta(eps);
        for u0 in &e0.points {
            let near = ee
                .points
                .iter()
                .filter(|u| h1_norm(&op, &(*u - u0)).unwrap() <= delta)
                .count();
            assert_eq!(near, 1, "ε = {eps}");
        }
    }
}

#[test]
fn linear_semigroup_gap_stays_below_the_contraction_bound() {
    // ‖S_ε(t) − S_0(t)‖ ≤ ‖S_ε(t)‖ + ‖S_0(t)‖ ≤ 2: the gap never exceeds the
    // trivial bound for the contractive semigroups
    let fam = CoefficientFamily::default_family();
    let mesh = Mesh1D::uniform(32).unwrap();
    let op0 = assemble_operator(&fam, &mesh, 0.0).unwrap();
    let ope = assemble_operator(&fam, &mesh, 0.25).unwrap();
    for t in [0.1, 0.5, 1.0, 2.0] {
        let g = linear_semigroup_gap(&ope, &op0, t, NormTag::L2, NormTag::L2).unwrap();
        assert!(g > 0.0 && g <= 2.0);
    }
}
