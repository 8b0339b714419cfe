//! Hausdorff distances, attractor samples and unstable-manifold graphs.

use nalgebra::DVector;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use robinlab::dynamics::{find_equilibria, EquilibriumOptions};
use robinlab::family::{CoefficientFamily, StandardParams};
use robinlab::manifolds::{
    build_attractor, curve_hausdorff_distance, directed_hausdorff, exponential_attraction_check,
    hausdorff_distance, hausdorff_points, manifold_gap, point_segment_distance,
    trajectory_oracle_distance, unstable_graph, AttractorConfig, GraphConfig,
};
use robinlab::mesh::Mesh1D;

/// Textbook `max_a min_b ‖a − b‖` with no pruning, written independently.
fn oracle_directed(a: &[DVector<f64>], b: &[DVector<f64>]) -> f64 {
    let mut worst: f64 = 0.0;
    for p in a {
        let mut best = f64::INFINITY;
        for q in b {
            best = best.min((p - q).norm_squared());
        }
        worst = worst.max(best);
    }
    worst.sqrt()
}

fn cloud(rng: &mut ChaCha8Rng, n: usize, dim: usize, shift: f64) -> Vec<DVector<f64>> {
    (0..n)
        .map(|_| DVector::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0) + shift))
        .collect()
}

#[test]
fn hausdorff_matches_brute_force_exactly_on_random_clouds() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for trial in 0..40 {
        let na = rng.gen_range(1..=500);
        let nb = rng.gen_range(1..=500);
        let dim = rng.gen_range(1..=6);
        let a = cloud(&mut rng, na, dim, 0.0);
        let b = cloud(&mut rng, nb, dim, 0.1 * trial as f64);
        let r = hausdorff_points(&a, &b).unwrap();
        assert_eq!(r.dist_ab, oracle_directed(&a, &b));
        assert_eq!(r.dist_ba, oracle_directed(&b, &a));
        assert_eq!(r.symmetric, r.dist_ab.max(r.dist_ba));
    }
}

proptest! {
    #[test]
    fn hausdorff_is_a_pseudometric(
        seed in any::<u64>(),
        na in 1usize..40,
        nb in 1usize..40,
        nc in 1usize..40,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = cloud(&mut rng, na, 3, 0.0);
        let b = cloud(&mut rng, nb, 3, 0.5);
        let c = cloud(&mut rng, nc, 3, -0.5);
        let d = |x: &[DVector<f64>], y: &[DVector<f64>]| hausdorff_points(x, y).unwrap().symmetric;
        prop_assert_eq!(d(&a, &a), 0.0);
        prop_assert_eq!(d(&a, &b), d(&b, &a));
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-12);
        prop_assert!(d(&a, &b) >= 0.0);
    }
}

#[test]
fn hausdorff_rejects_empty_sets() {
    let a = vec![DVector::from_vec(vec![0.0])];
    assert!(directed_hausdorff(&a, &[]).is_err());
    assert!(hausdorff_points(&[], &a).is_err());
}

#[test]
fn point_segment_distance_matches_closed_form() {
    let a = DVector::from_vec(vec![0.0, 0.0]);
    let b = DVector::from_vec(vec![2.0, 0.0]);
    for (p, expected) in [
        (vec![1.0, 1.0], 1.0),
        (vec![-1.0, 0.0], 1.0),
        (vec![3.0, 4.0], (1.0f64 + 16.0).sqrt()),
        (vec![0.5, -0.25], 0.25),
    ] {
        let d = point_segment_distance(&DVector::from_vec(p), &a, &b);
        assert!((d - expected).abs() < 1e-15);
    }
}

#[test]
fn attractor_is_a_point_when_zero_is_the_only_equilibrium() {
    let fam = CoefficientFamily::standard(StandardParams {
        a: 1.0,
        ..Default::default()
    });
    let mesh = Mesh1D::uniform(32).unwrap();
    let eq = find_equilibria(&fam, &mesh, 0.0, None, &EquilibriumOptions::default()).unwrap();
    assert_eq!(eq.len(), 1);
    let sample = build_attractor(&fam, &mesh, 0.0, &AttractorConfig::default()).unwrap();
    assert_eq!(sample.equilibrium_count(), 1);
    assert_eq!(sample.len(), 1);
    assert!(sample.points[0].amax() < 1e-10);
}

#[test]
fn default_attractor_has_three_equilibria_and_two_connections() {
    let fam = CoefficientFamily::default_family();
    let mesh = Mesh1D::uniform(32).unwrap();
    let cfg = AttractorConfig::default();
    let a0 = build_attractor(&fam, &mesh, 0.0, &cfg).unwrap();
    assert_eq!(a0.equilibrium_count(), 3);
    assert_eq!(a0.links.len(), 2);
    let middle = a0.equilibria.unstable_dims.iter().position(|&d| d == 1).unwrap();
    for &(src, dst) in &a0.links {
        assert_eq!(src, middle);
        assert_ne!(dst, middle);
    }
    // the sample is close to itself under the curve-aware distance and both
    // distances order as they should against a perturbed attractor
    let ae = build_attractor(&fam, &mesh, 0.0625, &cfg).unwrap();
    let points = hausdorff_distance(&ae, &a0).unwrap().symmetric;
    let curves = curve_hausdorff_distance(&ae, &a0).unwrap().symmetric;
    assert!(curves > 0.0 && curves <= points + 1e-15);
    assert_eq!(curve_hausdorff_distance(&a0, &a0).unwrap().symmetric, 0.0);
}

#[test]
fn unstable_graph_is_contractive_and_matches_trajectories() {
    let fam = CoefficientFamily::default_family();
    let mesh = Mesh1D::uniform(32).unwrap();
    let zero = DVector::zeros(mesh.n_nodes());
    let base = find_equilibria(&fam, &mesh, 0.0, Some(&[zero]), &EquilibriumOptions::default())
        .unwrap()
        .points[0]
        .clone();
    let cfg = GraphConfig {
        grid_n: 41,
        ..GraphConfig::default()
    };
    let g = unstable_graph(&base, &fam, &mesh, 0.0, &cfg).unwrap();
    assert!(g.theta_contraction < 1.0);
    assert_eq!(g.unstable_dim(), 1);
    assert!(g.s(&[0.0]).norm() < 1e-8);
    let integ = robinlab::dynamics::IntegratorConfig::default();
    let oracle = trajectory_oracle_distance(&g, &integ, 0.1).unwrap();
    assert!(oracle <= 1e-4, "oracle distance {oracle}");
    let fit = exponential_attraction_check(&g, 4, 1, &integ).unwrap();
    assert!(fit.min_r2 >= 0.99);
    assert!((fit.gamma_hat - fit.alpha).abs() <= 0.3 * fit.alpha);
    assert_eq!(manifold_gap(&g, &g).unwrap(), 0.0);
}
