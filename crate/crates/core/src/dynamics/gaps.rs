//! Distances between the ε and limit semigroups, linear and nonlinear.

use nalgebra::{DMatrix, DVector};

use crate::dynamics::{evolve, IntegratorConfig, NonlinearTerm};
use crate::error::{LabError, Result};
use crate::family::CoefficientFamily;
use crate::fem::{assemble_operator, h1_norm, DiscreteOperator, DiscreteState, NormTag};
use crate::linalg::{generalized_eigen, gram_weighted_norm};
use crate::mesh::Mesh1D;

/// The linear semigroup `e^{−At}` of an operator, in its eigenbasis:
/// `S(t) = Φ diag(e^{−λ_k t}) Φᵀ M` acting on nodal functions.
#[derive(Debug, Clone)]
pub struct LinearSemigroup {
    values: DVector<f64>,
    vectors: DMatrix<f64>,
    mphi: DMatrix<f64>,
}

impl LinearSemigroup {
    pub fn new(op: &DiscreteOperator) -> Result<Self> {
        let (values, vectors) = generalized_eigen(op.k(), op.m())?;
        let mphi = op.m().matmat(&vectors);
        Ok(Self {
            values,
            vectors,
            mphi,
        })
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn matrix(&self, t: f64) -> DMatrix<f64> {
        let mut scaled = self.vectors.clone();
        for (k, mut col) in scaled.column_iter_mut().enumerate() {
            col *= (-self.values[k] * t).exp();
        }
        scaled * self.mphi.transpose()
    }

    pub fn apply(&self, t: f64, u: &DiscreteState) -> DiscreteState {
        let coeff = self.mphi.transpose() * u;
        let decayed = DVector::from_fn(coeff.len(), |k, _| coeff[k] * (-self.values[k] * t).exp());
        &self.vectors * decayed
    }
}

/// Operator norm of `e^{−A_a t} − e^{−A_b t}` between the tagged norms.
pub fn linear_semigroup_gap(
    a: &DiscreteOperator,
    b: &DiscreteOperator,
    t: f64,
    in_norm: NormTag,
    out_norm: NormTag,
) -> Result<f64> {
    let sa = LinearSemigroup::new(a)?;
    let sb = LinearSemigroup::new(b)?;
    semigroup_difference_norm(&sa, &sb, b, t, in_norm, out_norm)
}

/// Same as [`linear_semigroup_gap`] with precomputed eigenbases.
pub fn semigroup_difference_norm(
    sa: &LinearSemigroup,
    sb: &LinearSemigroup,
    op: &DiscreteOperator,
    t: f64,
    in_norm: NormTag,
    out_norm: NormTag,
) -> Result<f64> {
    if !(t > 0.0) {
        return Err(LabError::InvalidArgument(format!("t = {t} must be positive")));
    }
    let diff = sa.matrix(t) - sb.matrix(t);
    gram_weighted_norm(&diff, op.gram_factor(in_norm)?, op.gram_factor(out_norm)?)
}

/// `‖T_ε(t)u0 − T_0(t)u0‖_{H¹}`, both runs with identical integrator
/// settings so their time-discretization errors largely cancel.
pub fn nonlinear_semigroup_gap(
    fam: &CoefficientFamily,
    mesh: &Mesh1D,
    eps: f64,
    u0: &DiscreteState,
    t: f64,
    cfg: &IntegratorConfig,
) -> Result<f64> {
    let op0 = assemble_operator(fam, mesh, 0.0)?;
    let nl0 = NonlinearTerm::new(fam, mesh, 0.0);
    let ope = assemble_operator(fam, mesh, eps)?;
    let nle = NonlinearTerm::new(fam, mesh, eps);
    let u_eps = evolve(u0, t, &ope, &nle, cfg)?;
    let u_0 = evolve(u0, t, &op0, &nl0, cfg)?;
    h1_norm(&op0, &(u_eps - u_0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn semigroup_is_identity_at_zero_and_a_semigroup() {
        let fam = CoefficientFamily::robin_test(1.0, 1.0);
        let mesh = Mesh1D::uniform(12).unwrap();
        let op = assemble_operator(&fam, &mesh, 0.0).unwrap();
        let s = LinearSemigroup::new(&op).unwrap();
        assert!((s.matrix(0.0) - DMatrix::identity(13, 13)).amax() < 1e-11);
        let prod = s.matrix(0.3) * s.matrix(0.2);
        assert!((prod - s.matrix(0.5)).amax() < 1e-12);
    }

    #[test]
    fn identical_operators_have_zero_semigroup_gap() {
        let fam = CoefficientFamily::default_family();
        let mesh = Mesh1D::uniform(12).unwrap();
        let op = assemble_operator(&fam, &mesh, 0.1).unwrap();
        let gap = linear_semigroup_gap(&op, &op, 1.0, NormTag::L2, NormTag::H1).unwrap();
        assert_eq!(gap, 0.0);
        assert!(linear_semigroup_gap(&op, &op, 0.0, NormTag::L2, NormTag::H1).is_err());
    }

    #[test]
    fn nonlinear_gap_vanishes_at_eps_zero() {
        let fam = CoefficientFamily::default_family();
        let mesh = Mesh1D::uniform(16).unwrap();
        let u0 = mesh.interpolate(|x| 0.5 * (std::f64::consts::PI * x).cos());
        let cfg = IntegratorConfig {
            dt: 1e-2,
            ..Default::default()
        };
        let gap = nonlinear_semigroup_gap(&fam, &mesh, 0.0, &u0, 0.5, &cfg).unwrap();
        assert_eq!(gap, 0.0);
    }
}
