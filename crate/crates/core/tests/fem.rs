//! Assembly, norms and solves checked against independent oracles.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use robinlab::family::CoefficientFamily;
use robinlab::fem::{
    assemble_operator, energy_norm, h1_norm, l2_norm, operator_gap_norm, resolvent_solve,
    solve_elliptic, NormTag,
};
use robinlab::mesh::Mesh1D;
use robinlab::spectral::eigenpairs;

/// Composite Simpson rule with `n` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

#[test]
fn stiffness_entries_match_high_order_quadrature() {
    let fam = CoefficientFamily::builder("p = 1 + x")
        .lambda(0.0)
        .diffusion(|x, _| 1.0 + x)
        .test_mode(true)
        .build();
    let mesh = Mesh1D::uniform(2).unwrap();
    let op = assemble_operator(&fam, &mesh, 0.0).unwrap();
    let nodes = mesh.nodes().to_vec();
    // hat-function derivatives on each element
    let dphi = |i: usize, x: f64| -> f64 {
        let xi = nodes[i];
        if i > 0 && x >= nodes[i - 1] && x <= xi {
            1.0 / (xi - nodes[i - 1])
        } else if i + 1 < nodes.len() && x >= xi && x <= nodes[i + 1] {
            -1.0 / (nodes[i + 1] - xi)
        } else {
            0.0
        }
    };
    let k = op.k().to_dense();
    for i in 0..3 {
        for j in 0..3 {
            let mut exact = 0.0;
            for e in 0..2 {
                let (a, b) = (nodes[e], nodes[e + 1]);
                let mid = 0.5 * (a + b);
                exact += simpson(|x| (1.0 + x) * dphi(i, mid) * dphi(j, mid), a, b, 2000);
            }
            assert!((k[(i, j)] - exact).abs() < 1e-12, "K[{i},{j}] = {} vs {exact}", k[(i, j)]);
        }
    }
}

#[test]
fn assembled_matrices_are_symmetric_and_definite() {
    let fam = CoefficientFamily::default_family();
    let mesh = Mesh1D::uniform(40).unwrap();
    for eps in [0.0, 0.1, 0.5] {
        let op = assemble_operator(&fam, &mesh, eps).unwrap();
        for m in [op.k(), op.m(), op.h1()] {
            let d = m.to_dense();
            assert_eq!(d, d.transpose());
            assert!(d.clone().cholesky().is_some());
        }
    }
}

#[test]
fn energy_norm_is_sandwiched_by_h1_norm() {
    let fam = CoefficientFamily::default_family();
    let mesh = Mesh1D::uniform(64).unwrap();
    let m0 = fam.m0();
    let big_m = fam.upper_bound();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for eps in [0.0, 0.0625, 0.5] {
        let op = assemble_operator(&fam, &mesh, eps).unwrap();
        for _ in 0..100 {
            let u = DVector::from_fn(op.dim(), |_, _| rng.gen_range(-1.0..1.0));
            let e = energy_norm(&op, &u).unwrap().powi(2);
            let h = h1_norm(&op, &u).unwrap().powi(2);
            assert!(m0 * h <= e * (1.0 + 1e-12), "lower bound fails: {e} < {m0}·{h}");
            assert!(e <= big_m * h * (1.0 + 1e-12), "upper bound fails: {e} > {big_m}·{h}");
        }
    }
}

#[test]
fn manufactured_cosine_converges_at_second_order() {
    // −u″ + u = (1 + π²) cos πx with u′·n + 2u = ±2 at the ends
    let pi = std::f64::consts::PI;
    let fam = CoefficientFamily::robin_test(1.0, 1.0);
    let mut errors = Vec::new();
    let sizes = [16, 32, 64, 128];
    for &n in &sizes {
        let mesh = Mesh1D::uniform(n).unwrap();
        let op = assemble_operator(&fam, &mesh, 0.0).unwrap();
        let rhs = mesh.interpolate(|x| (1.0 + pi * pi) * (pi * x).cos());
        let u = solve_elliptic(&op, &rhs, (2.0, -2.0)).unwrap();
        let exact = mesh.interpolate(|x| (pi * x).cos());
        errors.push(l2_norm(&op, &(u - exact)).unwrap());
    }
    for w in errors.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((order - 2.0).abs() < 0.15, "observed order {order}, errors {errors:?}");
    }
}

#[test]
fn resolvent_of_an_eigenvector_is_a_scaled_eigenvector() {
    let fam = CoefficientFamily::default_family();
    let mesh = Mesh1D::uniform(50).unwrap();
    let op = assemble_operator(&fam, &mesh, 0.1).unwrap();
    let sys = eigenpairs(&op, 3).unwrap();
    for k in 0..3 {
        let phi = sys.vector(k);
        let load = op.m().matvec(&phi);
        let u = resolvent_solve(&op, 1.0, &load).unwrap();
        let expected = &phi / (1.0 + sys.value(k));
        assert!((u - &expected).amax() < 1e-9 * expected.amax());
    }
}

/// Dense `‖L_outᵀ D L_in⁻ᵀ‖₂` with `G = L Lᵀ` for both Gram matrices.
fn dense_gap(a: &DMatrix<f64>, b: &DMatrix<f64>, m: &DMatrix<f64>, g_in: &DMatrix<f64>, g_out: &DMatrix<f64>) -> f64 {
    let d = a.clone().try_inverse().unwrap() * m - b.clone().try_inverse().unwrap() * m;
    let l_in = g_in.clone().cholesky().unwrap().l();
    let l_out = g_out.clone().cholesky().unwrap().l();
    let l_in_inv_t = l_in.try_inverse().unwrap().transpose();
    let t = l_out.transpose() * d * l_in_inv_t;
    t.singular_values().max()
}

#[test]
fn operator_gap_matches_dense_svd() {
    let fam = CoefficientFamily::default_family();
    let mesh = Mesh1D::uniform(32).unwrap();
    let a = assemble_operator(&fam, &mesh, 0.2).unwrap();
    let b = assemble_operator(&fam, &mesh, 0.0).unwrap();
    for (tin, tout) in [(NormTag::L2, NormTag::H1), (NormTag::L2, NormTag::L2), (NormTag::H1, NormTag::H1)] {
        let power = operator_gap_norm(&a, &b, tin, tout).unwrap();
        let dense = dense_gap(
            &a.k().to_dense(),
            &b.k().to_dense(),
            &a.m().to_dense(),
            &a.gram(tin).to_dense(),
            &a.gram(tout).to_dense(),
        );
        assert!((power - dense).abs() <= 1e-6 * dense, "{tin:?}→{tout:?}: {power} vs {dense}");
    }
}

#[test]
fn operator_gap_of_identical_operators_is_zero() {
    let fam = CoefficientFamily::default_family();
    let mesh = Mesh1D::uniform(16).unwrap();
    let a = assemble_operator(&fam, &mesh, 0.3).unwrap();
    assert_eq!(operator_gap_norm(&a, &a, NormTag::L2, NormTag::H1).unwrap(), 0.0);
}
