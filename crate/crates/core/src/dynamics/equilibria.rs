//! Equilibria `K u = h^ε(u)` by damped Newton, with Morse indices and
//! hyperbolicity from Sturm counts of the linearization pencil.

use std::io::Write;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::banded::SymTridiagonal;
use crate::dynamics::NonlinearTerm;
use crate::error::{LabError, Result};
use crate::family::CoefficientFamily;
use crate::fem::{assemble_operator, dual_l2_norm, h1_norm, DiscreteOperator, DiscreteState};
use crate::mesh::Mesh1D;
use crate::spectral::eigenpairs;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EquilibriumOptions {
    /// Two roots closer than this (H¹) are the same equilibrium.
    pub dedupe_radius: f64,
    /// Linearization eigenvalues within this distance of 0 make a point
    /// non-hyperbolic.
    pub hyperbolicity_margin: f64,
    /// Residual (dual L² norm) accepted as converged.
    pub residual_tol: f64,
    pub max_newton: usize,
}

impl Default for EquilibriumOptions {
    fn default() -> Self {
        Self {
            dedupe_radius: 1e-6,
            hyperbolicity_margin: 1e-6,
            residual_tol: 1e-10,
            max_newton: 60,
        }
    }
}

/// Equilibria at one ε, ordered by mean value.
#[derive(Debug, Clone)]
pub struct EquilibriumSet {
    pub points: Vec<DiscreteState>,
    pub unstable_dims: Vec<usize>,
    pub hyperbolic: Vec<bool>,
    pub residuals: Vec<f64>,
    pub eps: f64,
}

impl EquilibriumSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn all_hyperbolic(&self) -> bool {
        self.hyperbolic.iter().all(|&h| h)
    }
}

/// `F(u) = K u − h(u)`.
pub fn residual(op: &DiscreteOperator, nl: &NonlinearTerm, u: &DiscreteState) -> DVector<f64> {
    op.k().matvec(u) - nl.load(u)
}

/// Jacobian `J(u) = K − Dh(u)` of the residual. The linearized flow
/// `M w′ = −J w` is unstable along the negative eigenvalues of `(J, M)`.
pub fn linearization(op: &DiscreteOperator, nl: &NonlinearTerm, u: &DiscreteState) -> SymTridiagonal {
    SymTridiagonal::lin_comb(1.0, op.k(), -1.0, &nl.jacobian(u))
}

/// Damped Newton from `guess`; `None` if it does not converge.
pub fn newton(
    op: &DiscreteOperator,
    nl: &NonlinearTerm,
    guess: &DiscreteState,
    opts: &EquilibriumOptions,
) -> Result<Option<(DiscreteState, f64)>> {
    let mut u = guess.clone();
    let mut r = residual(op, nl, &u);
    let mut rn = dual_l2_norm(op, &r)?;
    for _ in 0..opts.max_newton {
        if rn <= 0.01 * opts.residual_tol {
            break;
        }
        let lu = match linearization(op, nl, &u).lu() {
            Ok(lu) => lu,
            Err(_) => return Ok(None),
        };
        let du = lu.solve(&r);
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial = &u - &du * lambda;
            let rt = residual(op, nl, &trial);
            let rtn = dual_l2_norm(op, &rt)?;
            if rtn < (1.0 - 1e-4 * lambda) * rn || (rtn <= rn && rn <= opts.residual_tol) {
                u = trial;
                r = rt;
                rn = rtn;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if rn <= opts.residual_tol && u.iter().all(|x| x.is_finite()) {
        Ok(Some((u, rn)))
    } else {
        Ok(None)
    }
}

/// The default guess sweep: `levels` constants spread over
/// `[−u_max, u_max]`, each also perturbed by ± the first `modes` non-constant
/// eigenfunctions of the operator (scaled to unit maximum).
pub fn default_guesses(
    op: &DiscreteOperator,
    u_max: f64,
    levels: usize,
    modes: usize,
) -> Result<Vec<DiscreteState>> {
    let n = op.dim();
    let sys = eigenpairs(op, (modes + 1).min(n))?;
    let shapes: Vec<DVector<f64>> = (1..sys.count())
        .map(|k| {
            let v = sys.vector(k);
            let s = v.amax();
            v / s
        })
        .collect();
    let mut out = Vec::new();
    for i in 0..levels {
        let c = if levels == 1 {
            0.0
        } else {
            -u_max + 2.0 * u_max * i as f64 / (levels - 1) as f64
        };
        let base = DVector::from_element(n, c);
        out.push(base.clone());
        for shape in &shapes {
            out.push(&base + shape);
            out.push(&base - shape);
        }
    }
    Ok(out)
}

/// Number of negative eigenvalues of `(J, M)` and whether no eigenvalue lies
/// within `margin` of zero.
pub fn morse_index(j: &SymTridiagonal, m: &SymTridiagonal, margin: f64) -> (usize, bool) {
    let below = j.sturm_count(-margin, m);
    let above = j.sturm_count(margin, m);
    (j.sturm_count(0.0, m), below == above)
}

/// Solve for all equilibria reachable from `guesses` (or the default sweep
/// of 21 levels with two eigenfunction perturbations when `None`).
pub fn find_equilibria(
    fam: &CoefficientFamily,
    mesh: &Mesh1D,
    eps: f64,
    guesses: Option<&[DiscreteState]>,
    opts: &EquilibriumOptions,
) -> Result<EquilibriumSet> {
    let op = assemble_operator(fam, mesh, eps)?;
    let nl = NonlinearTerm::new(fam, mesh, eps);
    let owned;
    let guesses = match guesses {
        Some(g) => g,
        None => {
            owned = default_guesses(&op, 3.0, 21, 2)?;
            &owned[..]
        }
    };
    if guesses.is_empty() {
        return Err(LabError::InvalidArgument("no initial guesses".into()));
    }
    let mut roots: Vec<(DiscreteState, f64)> = Vec::new();
    for g in guesses {
        if let Some((u, res)) = newton(&op, &nl, g, opts)? {
            let mut duplicate = false;
            for (v, _) in &roots {
                if h1_norm(&op, &(&u - v))? <= opts.dedupe_radius {
                    duplicate = true;
                    break;
                }
            }
            if !duplicate {
                roots.push((u, res));
            }
        }
    }
    if roots.is_empty() {
        return Err(LabError::NoEquilibria);
    }
    let ones = DVector::from_element(op.dim(), 1.0);
    let mean = |u: &DiscreteState| op.m().bilinear(&ones, u);
    roots.sort_by(|a, b| mean(&a.0).total_cmp(&mean(&b.0)));
    let mut set = EquilibriumSet {
        points: Vec::new(),
        unstable_dims: Vec::new(),
        hyperbolic: Vec::new(),
        residuals: Vec::new(),
        eps,
    };
    for (u, res) in roots {
        let j = linearization(&op, &nl, &u);
        let (idx, hyp) = morse_index(&j, op.m(), opts.hyperbolicity_margin);
        set.points.push(u);
        set.unstable_dims.push(idx);
        set.hyperbolic.push(hyp);
        set.residuals.push(res);
    }
    Ok(set)
}

/// Pair the points of two equilibrium sets by H¹-nearest neighbour and
/// return the pair distances in the order of `a`.
pub fn equilibrium_gap(
    a: &EquilibriumSet,
    b: &EquilibriumSet,
    op: &DiscreteOperator,
) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(LabError::CardinalityMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let mut used = vec![false; b.len()];
    let mut out = Vec::with_capacity(a.len());
    for pa in &a.points {
        let mut best = (usize::MAX, f64::INFINITY);
        for (j, pb) in b.points.iter().enumerate() {
            let d = h1_norm(op, &(pa - pb))?;
            if d < best.1 {
                best = (j, d);
            }
        }
        if used[best.0] {
            return Err(LabError::AmbiguousMatching);
        }
        used[best.0] = true;
        out.push(best.1);
    }
    Ok(out)
}

/// Equilibrium report with rows `index, morse_index, hyperbolic, residual,
/// node values…`.
pub fn write_equilibrium_csv<W: Write>(mut out: W, set: &EquilibriumSet) -> Result<()> {
    let n = set.points.first().map_or(0, |u| u.len());
    let mut header: Vec<String> = ["index", "morse_index", "hyperbolic", "residual"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((0..n).map(|i| format!("node_{i}")));
    writeln!(out, "{}", header.join(","))?;
    for (i, u) in set.points.iter().enumerate() {
        let mut row = vec![
            i.to_string(),
            set.unstable_dims[i].to_string(),
            set.hyperbolic[i].to_string(),
            format!("{:.16e}", set.residuals[i]),
        ];
        row.extend(u.iter().map(|x| format!("{x:.16e}")));
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_is_an_equilibrium_of_the_default_family() {
        let fam = CoefficientFamily::default_family();
        let mesh = Mesh1D::uniform(16).unwrap();
        let zero = DVector::zeros(17);
        let set = find_equilibria(
            &fam,
            &mesh,
            0.0,
            Some(&[zero]),
            &EquilibriumOptions::default(),
        )
        .unwrap();
        assert_eq!(set.len(), 1);
        assert!(set.residuals[0] <= 1e-12);
        assert_eq!(set.unstable_dims[0], 1);
        assert!(set.hyperbolic[0]);
    }

    #[test]
    fn cardinality_mismatch_is_reported() {
        let fam = CoefficientFamily::default_family();
        let mesh = Mesh1D::uniform(16).unwrap();
        let op = assemble_operator(&fam, &mesh, 0.0).unwrap();
        let full = find_equilibria(&fam, &mesh, 0.0, None, &EquilibriumOptions::default()).unwrap();
        let mut partial = full.clone();
        partial.points.pop();
        assert!(matches!(
            equilibrium_gap(&full, &partial, &op),
            Err(LabError::CardinalityMismatch { .. })
        ));
        assert!(equilibrium_gap(&full, &full, &op).unwrap().iter().all(|&d| d == 0.0));
    }

    #[test]
    fn morse_index_counts_negative_pencil_eigenvalues() {
        let j = SymTridiagonal::new(vec![-1.0, 2.0, 3.0], vec![0.0, 0.0]).unwrap();
        let m = SymTridiagonal::identity(3);
        assert_eq!(morse_index(&j, &m, 1e-6), (1, true));
        let singular = SymTridiagonal::new(vec![0.0, 2.0, 3.0], vec![0.0, 0.0]).unwrap();
        assert!(!morse_index(&singular, &m, 1e-6).1);
    }
}
