//! Reduced systems, reduced maps and shadowing against local oracles.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use robinlab::dynamics::{find_equilibria, EquilibriumOptions};
use robinlab::family::CoefficientFamily;
use robinlab::fem::{assemble_operator, h1_norm};
use robinlab::mesh::Mesh1D;
use robinlab::reduction::{
    lpsp_attractor_bound, map_gap, pseudo_trajectory_defect, reduce, reduced_attractor,
    reduced_map, shadow_solve, Neighborhood, ReducedAttractorConfig, ReductionConfig,
    ShadowOptions,
};

fn setup() -> (CoefficientFamily, Mesh1D) {
    (CoefficientFamily::default_family(), Mesh1D::uniform(32).unwrap())
}

#[test]
fn linear_reduced_map_is_the_diagonal_exponential() {
    let fam = CoefficientFamily::robin_test(1.0, 0.5);
    let mesh = Mesh1D::uniform(32).unwrap();
    let sys = reduce(&fam, &mesh, 0.0, Some(2), &ReductionConfig::default()).unwrap();
    let map = reduced_map(&sys);
    let v = DVector::from_vec(vec![0.3, -0.2]);
    let exact = DVector::from_fn(2, |k, _| v[k] * (-sys.lambda[k]).exp());
    let tv = map.eval(&v).unwrap();
    assert!((tv - exact).amax() < 1e-6);
}

#[test]
fn map_fixed_points_are_reduced_equilibria_and_lift_to_full_ones() {
    let (fam, mesh) = setup();
    let sys = reduce(&fam, &mesh, 0.0, None, &ReductionConfig::default()).unwrap();
    let map = reduced_map(&sys);
    let op = assemble_operator(&fam, &mesh, 0.0).unwrap();
    let full = find_equilibria(&fam, &mesh, 0.0, None, &EquilibriumOptions::default()).unwrap();
    for u in &full.points {
        let v = sys.equilibrium(&sys.project(u)).unwrap();
        assert!((map.eval(&v).unwrap() - &v).norm() <= 1e-8);
        // quasi-static slaving reproduces the full equilibrium, whose tail
        // is itself stationary
        let lifted = sys.lift(&v).unwrap();
        assert!(h1_norm(&op, &(lifted - u)).unwrap() <= 1e-8);
    }
}

#[test]
fn injected_noise_sets_the_pseudo_trajectory_defect() {
    let (fam, mesh) = setup();
    let sys = reduce(&fam, &mesh, 0.0, None, &ReductionConfig::default()).unwrap();
    let map = reduced_map(&sys);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let start = DVector::from_fn(map.dim(), |_, _| rng.gen_range(-0.3..0.3));
    let orbit = map.orbit(&start, 40).unwrap();
    let lip = map.lipschitz_estimate(&orbit).unwrap();
    let delta = 1e-4;
    let noisy: Vec<DVector<f64>> = orbit
        .iter()
        .map(|y| {
            let dir = loop {
                let d = DVector::from_fn(map.dim(), |_, _| rng.gen_range(-1.0..1.0));
                if d.norm() <= 1.0 {
                    break d;
                }
            };
            y + dir * delta
        })
        .collect();
    let defect = pseudo_trajectory_defect(&noisy, &map).unwrap();
    assert!(defect >= 0.5 * delta && defect <= (1.0 + lip) * delta * 1.01, "{defect} vs Lip {lip}");
    assert!(pseudo_trajectory_defect(&orbit, &map).unwrap() < 1e-12);
}

#[test]
fn pinned_pseudo_orbit_is_shadowed_by_the_fixed_point() {
    let (fam, mesh) = setup();
    let sys = reduce(&fam, &mesh, 0.0, None, &ReductionConfig::default()).unwrap();
    let map = reduced_map(&sys);
    let full = find_equilibria(&fam, &mesh, 0.0, None, &EquilibriumOptions::default()).unwrap();
    // the saddle at the origin and one sink, both hyperbolic for the map
    for u in [&full.points[1], &full.points[2]] {
        let fixed = sys.equilibrium(&sys.project(u)).unwrap();
        let offset = DVector::from_fn(map.dim(), |k, _| if k == 0 { 3e-5 } else { -4e-5 });
        let seq = vec![&fixed + &offset; 60];
        let res = shadow_solve(&seq, &map, &ShadowOptions::default()).unwrap();
        let middle = &res.orbit[30];
        assert!((middle - &fixed).norm() < 1e-3 * offset.norm(), "{}", (middle - &fixed).norm());
        assert!((res.distance - offset.norm()).abs() < 0.05 * offset.norm());
    }
}

#[test]
fn identical_maps_have_zero_gap_and_zero_bound() {
    let (fam, mesh) = setup();
    let sys = reduce(&fam, &mesh, 0.0, None, &ReductionConfig::default()).unwrap();
    let map = reduced_map(&sys);
    let full = find_equilibria(&fam, &mesh, 0.0, None, &EquilibriumOptions::default()).unwrap();
    let guesses: Vec<DVector<f64>> = full.points.iter().map(|u| sys.project(u)).collect();
    let att = reduced_attractor(&sys, &guesses, &ReducedAttractorConfig::default()).unwrap();
    assert_eq!(att.equilibria.len(), 3);
    let nbhd = Neighborhood::around(&att.points, 0.2, 0.05, 5).unwrap();
    assert!(att.points.iter().all(|p| nbhd.contains(p)));
    assert_eq!(map_gap(&map, &map, &nbhd).unwrap(), 0.0);
    assert_eq!(lpsp_attractor_bound(&map, &map, &nbhd, 1.0, &[&att, &att]).unwrap(), 0.0);
    let far = DVector::from_element(map.dim(), 1e3);
    assert!(!nbhd.contains(&far));
}
