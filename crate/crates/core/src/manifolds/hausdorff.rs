//! Hausdorff distances between attractor samples: exact over the finite
//! point sets, and a curve-aware variant that measures distances to the
//! connection polylines.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::manifolds::AttractorSample;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HausdorffResult {
    /// `dist_H(A, B) = max_a min_b ‖a − b‖`.
    pub dist_ab: f64,
    /// `dist_H(B, A)`.
    pub dist_ba: f64,
    /// `max(dist_ab, dist_ba)`.
    pub symmetric: f64,
}

fn dist2(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Directed Hausdorff semidistance between Euclidean point clouds, with the
/// early-exit rule: once some `b` is closer to `a` than the running maximum,
/// `a` cannot raise it. The result is bit-identical to the brute-force value.
pub fn directed_hausdorff(a: &[DVector<f64>], b: &[DVector<f64>]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(LabError::EmptySet);
    }
    let mut cmax: f64 = 0.0;
    // start each scan at the previous nearest index: consecutive samples of
    // a curve have nearby nearest neighbours
    let mut hint = 0usize;
    for p in a {
        let mut cmin = f64::INFINITY;
        let nb = b.len();
        let start = hint;
        for off in 0..nb {
            let j = (start + off) % nb;
            let d = dist2(p, &b[j]);
            if d < cmin {
                cmin = d;
                hint = j;
            }
            if cmin < cmax {
                break;
            }
        }
        if cmin > cmax {
            cmax = cmin;
        }
    }
    Ok(cmax.sqrt())
}

/// Unpruned `max_a min_b ‖a − b‖`, the oracle for [`directed_hausdorff`].
pub fn brute_force_directed(a: &[DVector<f64>], b: &[DVector<f64>]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(LabError::EmptySet);
    }
    let worst = a
        .iter()
        .map(|p| b.iter().map(|q| dist2(p, q)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    Ok(worst.sqrt())
}

/// Both semidistances and the symmetric distance of Euclidean clouds.
pub fn hausdorff_points(a: &[DVector<f64>], b: &[DVector<f64>]) -> Result<HausdorffResult> {
    let dist_ab = directed_hausdorff(a, b)?;
    let dist_ba = directed_hausdorff(b, a)?;
    Ok(HausdorffResult {
        dist_ab,
        dist_ba,
        symmetric: dist_ab.max(dist_ba),
    })
}

/// Euclidean distance from `p` to the segment `[a, b]`.
pub fn point_segment_distance(p: &DVector<f64>, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let t = if len2 > 0.0 {
        ((p - a).dot(&ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p - a - ab * t).norm()
}

/// Euclidean distance from `p` to a polyline (a single point counts as a
/// degenerate polyline).
pub fn point_polyline_distance(p: &DVector<f64>, curve: &[DVector<f64>]) -> f64 {
    match curve.len() {
        0 => f64::INFINITY,
        1 => (p - &curve[0]).norm(),
        _ => curve
            .windows(2)
            .map(|w| point_segment_distance(p, &w[0], &w[1]))
            .fold(f64::INFINITY, f64::min),
    }
}

fn check_compatible(a: &AttractorSample, b: &AttractorSample) -> Result<()> {
    if a.points.is_empty() || b.points.is_empty() {
        return Err(LabError::EmptySet);
    }
    if a.mesh != b.mesh || a.norm_tag != b.norm_tag {
        return Err(LabError::InvalidArgument(
            "attractor samples live on different meshes or norms".into(),
        ));
    }
    Ok(())
}

/// Exact Hausdorff distances between two samples in their comparison norm.
pub fn hausdorff_distance(a: &AttractorSample, b: &AttractorSample) -> Result<HausdorffResult> {
    check_compatible(a, b)?;
    hausdorff_points(&a.euclidean_points(), &b.euclidean_points())
}

/// Hausdorff distances where each sample point is compared with the other
/// set's connection polylines (and its isolated equilibria), removing the
/// sampling-resolution floor of the point-set distance.
pub fn curve_hausdorff_distance(
    a: &AttractorSample,
    b: &AttractorSample,
) -> Result<HausdorffResult> {
    check_compatible(a, b)?;
    curve_hausdorff_points(
        &a.euclidean_points(),
        a.curves(),
        &b.euclidean_points(),
        b.curves(),
    )
}

/// Curve-aware Hausdorff distances of Euclidean point sets whose curves are
/// given as index lists into the respective point arrays.
pub fn curve_hausdorff_points(
    a: &[DVector<f64>],
    a_curves: &[Vec<usize>],
    b: &[DVector<f64>],
    b_curves: &[Vec<usize>],
) -> Result<HausdorffResult> {
    if a.is_empty() || b.is_empty() {
        return Err(LabError::EmptySet);
    }
    let directed = |pts: &[DVector<f64>], other: &[DVector<f64>], curves: &[Vec<usize>]| {
        let polylines: Vec<Vec<DVector<f64>>> = curves
            .iter()
            .map(|c| c.iter().map(|&i| other[i].clone()).collect())
            .collect();
        pts.iter()
            .map(|p| {
                let to_curves = polylines
                    .iter()
                    .map(|c| point_polyline_distance(p, c))
                    .fold(f64::INFINITY, f64::min);
                let to_points = other
                    .iter()
                    .map(|q| (p - q).norm())
                    .fold(f64::INFINITY, f64::min);
                to_curves.min(to_points)
            })
            .fold(0.0, f64::max)
    };
    let dist_ab = directed(a, b, b_curves);
    let dist_ba = directed(b, a, a_curves);
    Ok(HausdorffResult {
        dist_ab,
        dist_ba,
        symmetric: dist_ab.max(dist_ba),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pruned_equals_brute_force_on_random_clouds() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let na = rng.gen_range(1..300);
            let nb = rng.gen_range(1..300);
            let cloud = |n: usize, rng: &mut ChaCha8Rng| -> Vec<DVector<f64>> {
                (0..n)
                    .map(|_| DVector::from_fn(6, |_, _| rng.gen_range(-1.0..1.0)))
                    .collect()
            };
            let a = cloud(na, &mut rng);
            let b = cloud(nb, &mut rng);
            assert_eq!(
                directed_hausdorff(&a, &b).unwrap(),
                brute_force_directed(&a, &b).unwrap()
            );
        }
    }

    #[test]
    fn segment_distance() {
        let a = DVector::from_vec(vec![0.0, 0.0]);
        let b = DVector::from_vec(vec![2.0, 0.0]);
        let p = DVector::from_vec(vec![1.0, 1.0]);
        assert!((point_segment_distance(&p, &a, &b) - 1.0).abs() < 1e-15);
        let q = DVector::from_vec(vec![3.0, 0.0]);
        assert!((point_segment_distance(&q, &a, &b) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn empty_set_is_an_error() {
        let a = vec![DVector::zeros(2)];
        assert!(matches!(directed_hausdorff(&a, &[]), Err(LabError::EmptySet)));
    }
}
