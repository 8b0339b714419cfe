//! Galerkin reduction onto the first `M` modes of the ε = 0 operator with
//! quasi-static slaving of the tail.
//!
//! Writing `K_ε = K_0 + (K_ε − K_0)`, the semi-discrete problem becomes
//! `M u′ + K_0 u = h_eff(u)` with `h_eff(u) = h^ε(u) − (K_ε − K_0) u`. With
//! `Φ` the first `M` eigenvectors of `(K_0, M)` and `u = Φ v + w`, the tail is
//! slaved by `w = S h_eff(Φ v + w)`, `S = K_0⁻¹ − Φ Λ⁻¹ Φᵀ`, and the reduced
//! flow is `v′ = −Λ v + Φᵀ h_eff(Φ v + w(v))`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::banded::{SymTridiagonal, TridiagCholesky};
use crate::dynamics::NonlinearTerm;
use crate::error::{check_len, LabError, Result};
use crate::family::CoefficientFamily;
use crate::fem::{assemble_operator, DiscreteOperator, DiscreteState};
use crate::linalg::generalized_eigen;
use crate::mesh::Mesh1D;
use crate::spectral::{eigenpairs, gap_condition_profile, select_rank};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReductionConfig {
    /// Upper bound for the reduction rank; the rank is the largest spectral
    /// gap at or below it.
    pub max_rank: usize,
    /// H¹ change at which the slaving iteration stops.
    pub slaving_tol: f64,
    pub max_slaving_iters: usize,
    /// RK4 step of the reduced flow inside the time-1 map.
    pub inner_dt: f64,
}

impl Default for ReductionConfig {
    fn default() -> Self {
        Self {
            max_rank: 2,
            slaving_tol: 1e-10,
            max_slaving_iters: 200,
            inner_dt: 5e-2,
        }
    }
}

impl ReductionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_rank == 0 || !(self.slaving_tol > 0.0) || !(self.inner_dt > 0.0) {
            return Err(LabError::InvalidArgument(
                "reduction needs a positive rank cap, slaving tolerance and inner dt".into(),
            ));
        }
        Ok(())
    }
}

/// Result of one slaving solve.
#[derive(Debug, Clone)]
pub struct Slaved {
    pub tail: DVector<f64>,
    pub iterations: usize,
    /// H¹ size of the last fixed-point update, a bound on the residual
    /// `‖w − S h_eff(Φv + w)‖` up to the contraction factor.
    pub residual: f64,
}

/// The reduced system at one ε in the shared ε = 0 basis.
#[derive(Debug, Clone)]
pub struct ReducedSystem {
    pub eps: f64,
    pub rank: usize,
    /// `Φ`, the first `rank` `M`-orthonormal eigenvectors of the ε = 0
    /// operator.
    pub modes: DMatrix<f64>,
    /// Their eigenvalues `Λ`.
    pub lambda: DVector<f64>,
    pub cfg: ReductionConfig,
    modes_t: DMatrix<f64>,
    op0: DiscreteOperator,
    k0: TridiagCholesky,
    k_diff: SymTridiagonal,
    nl: NonlinearTerm,
}

/// Reduce the family at `eps` onto `rank` modes (or, when `rank` is `None`,
/// onto the rank with the largest gap up to `cfg.max_rank`).
pub fn reduce(
    fam: &CoefficientFamily,
    mesh: &Mesh1D,
    eps: f64,
    rank: Option<usize>,
    cfg: &ReductionConfig,
) -> Result<ReducedSystem> {
    cfg.validate()?;
    let op0 = assemble_operator(fam, mesh, 0.0)?;
    let ope = assemble_operator(fam, mesh, eps)?;
    let rank = match rank {
        Some(r) => r,
        None => {
            let sys = eigenpairs(&op0, (cfg.max_rank + 1).min(op0.dim()))?;
            select_rank(&gap_condition_profile(&sys)?, cfg.max_rank)?
        }
    };
    if rank == 0 || rank >= op0.dim() {
        return Err(LabError::InvalidArgument(format!(
            "reduction rank {rank} outside 1..{}",
            op0.dim()
        )));
    }
    let (values, vectors) = generalized_eigen(op0.k(), op0.m())?;
    let lambda = values.rows(0, rank).into_owned();
    if lambda.iter().any(|&l| !(l > 0.0)) {
        return Err(LabError::NotPositiveDefinite("ε = 0 operator".into()));
    }
    let modes = vectors.columns(0, rank).into_owned();
    let k0 = op0.k_factor()?.clone();
    Ok(ReducedSystem {
        eps,
        rank,
        modes_t: modes.transpose(),
        modes,
        lambda,
        cfg: *cfg,
        k0,
        k_diff: SymTridiagonal::lin_comb(1.0, ope.k(), -1.0, op0.k()),
        nl: NonlinearTerm::new(fam, mesh, eps),
        op0,
    })
}

impl ReducedSystem {
    pub fn dim(&self) -> usize {
        self.rank
    }

    /// The ε = 0 operator whose eigenbasis is shared.
    pub fn op0(&self) -> &DiscreteOperator {
        &self.op0
    }

    /// `h_eff(u) = h^ε(u) − (K_ε − K_0) u`.
    pub fn h_eff(&self, u: &DiscreteState) -> DVector<f64> {
        self.nl.load(u) - self.k_diff.matvec(u)
    }

    /// Jacobian of `h_eff`.
    pub fn h_eff_jacobian(&self, u: &DiscreteState) -> SymTridiagonal {
        SymTridiagonal::lin_comb(1.0, &self.nl.jacobian(u), -1.0, &self.k_diff)
    }

    /// `S r = K_0⁻¹ r − Φ Λ⁻¹ Φᵀ r`, the tail part of the elliptic solve.
    pub fn slaving_operator(&self, r: &DVector<f64>) -> DVector<f64> {
        let coeff = &self.modes_t * r;
        let scaled = DVector::from_fn(self.rank, |i, _| coeff[i] / self.lambda[i]);
        self.k0.solve(r) - &self.modes * scaled
    }

    fn h1(&self, w: &DVector<f64>) -> f64 {
        self.op0.h1().quad_form(w).max(0.0).sqrt()
    }

    /// Solve `w = S h_eff(Φ v + w)` by fixed-point iteration.
    pub fn slave(&self, v: &DVector<f64>, warm: Option<&DVector<f64>>) -> Result<Slaved> {
        check_len(self.rank, v.len())?;
        let head = &self.modes * v;
        let mut w = warm.cloned().unwrap_or_else(|| DVector::zeros(head.len()));
        let mut prev = f64::INFINITY;
        let mut growth = 0;
        for iter in 1..=self.cfg.max_slaving_iters {
            let next = self.slaving_operator(&self.h_eff(&(&head + &w)));
            let change = self.h1(&(&next - &w));
            w = next;
            if !change.is_finite() {
                return Err(LabError::SlavingDivergence(f64::INFINITY));
            }
            if change <= self.cfg.slaving_tol {
                return Ok(Slaved {
                    tail: w,
                    iterations: iter,
                    residual: change,
                });
            }
            if change >= prev {
                growth += 1;
                if growth >= 3 {
                    return Err(LabError::SlavingDivergence(change / prev));
                }
            }
            prev = change;
        }
        Err(LabError::SlavingDivergence(prev))
    }

    /// `s(v)`, the slaved tail.
    pub fn s(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.slave(v, None)?.tail)
    }

    /// `Φ v + s(v)`.
    pub fn lift(&self, v: &DVector<f64>) -> Result<DiscreteState> {
        Ok(&self.modes * v + self.s(v)?)
    }

    /// Reduced coordinates `Φᵀ M u` of a full state.
    pub fn project(&self, u: &DiscreteState) -> DVector<f64> {
        &self.modes_t * self.op0.m().matvec(u)
    }

    /// Residual of the slaving equation in the dual L² norm of the tail
    /// equation `K_0 w − (I − MΦΦᵀ) h_eff(Φv + w)`.
    pub fn slaving_residual(&self, v: &DVector<f64>) -> Result<f64> {
        let w = self.s(v)?;
        let h = self.h_eff(&(&self.modes * v + &w));
        let mphi = self.op0.m().matmat(&self.modes);
        let r = self.op0.k().matvec(&w) - (&h - &mphi * (&self.modes_t * &h));
        crate::fem::dual_l2_norm(&self.op0, &r)
    }

    /// Reduced vector field and the slaved tail at `v`.
    pub fn rhs(&self, v: &DVector<f64>, warm: Option<&DVector<f64>>) -> Result<(DVector<f64>, DVector<f64>)> {
        let sl = self.slave(v, warm)?;
        let u = &self.modes * v + &sl.tail;
        let f = -self.lambda.component_mul(v) + &self.modes_t * self.h_eff(&u);
        Ok((f, sl.tail))
    }

    /// Reduced vector field, its Jacobian, and the slaved tail. The tail
    /// derivative `X = Dw` solves `X = S Dh (Φ + X)`, iterated like the
    /// slaving itself.
    pub fn rhs_jacobian(
        &self,
        v: &DVector<f64>,
        warm: Option<&DVector<f64>>,
    ) -> Result<(DVector<f64>, DMatrix<f64>, DVector<f64>)> {
        let (f, jac, tail, _) = self.rhs_jacobian_warm(v, warm, None)?;
        Ok((f, jac, tail))
    }

    /// [`ReducedSystem::rhs_jacobian`] with warm starts for both the tail
    /// and its derivative; also returns the derivative.
    pub(crate) fn rhs_jacobian_warm(
        &self,
        v: &DVector<f64>,
        warm: Option<&DVector<f64>>,
        warm_x: Option<&DMatrix<f64>>,
    ) -> Result<(DVector<f64>, DMatrix<f64>, DVector<f64>, DMatrix<f64>)> {
        let (f, tail) = self.rhs(v, warm)?;
        let u = &self.modes * v + &tail;
        let dh = self.h_eff_jacobian(&u);
        let n = u.len();
        let mut x = warm_x
            .cloned()
            .unwrap_or_else(|| DMatrix::zeros(n, self.rank));
        let mut converged = false;
        for _ in 0..self.cfg.max_slaving_iters {
            let load = dh.matmat(&(&self.modes + &x));
            let mut next = self.k0.solve_mat(&load);
            let mut coeff = &self.modes_t * &load;
            for (i, mut row) in coeff.row_iter_mut().enumerate() {
                row /= self.lambda[i];
            }
            next -= &self.modes * coeff;
            let change = (&next - &x).amax();
            x = next;
            if change <= 1e-12 * (1.0 + x.amax()) {
                converged = true;
                break;
            }
            if !change.is_finite() {
                break;
            }
        }
        if !converged {
            return Err(LabError::SlavingDivergence(x.amax()));
        }
        let jac = DMatrix::from_diagonal(&(-&self.lambda))
            + &self.modes_t * dh.matmat(&(&self.modes + &x));
        Ok((f, jac, tail, x))
    }

    /// Newton on the reduced vector field from `guess`.
    pub fn equilibrium(&self, guess: &DVector<f64>) -> Result<DVector<f64>> {
        let mut v = guess.clone();
        for _ in 0..50 {
            let (f, j, _) = self.rhs_jacobian(&v, None)?;
            if f.norm() <= 1e-12 {
                return Ok(v);
            }
            let step = j
                .lu()
                .solve(&f)
                .ok_or_else(|| LabError::Singular("reduced Jacobian".into()))?;
            v -= step;
        }
        let (f, _) = self.rhs(&v, None)?;
        if f.norm() <= 1e-10 {
            Ok(v)
        } else {
            Err(LabError::NoConvergence {
                method: "reduced Newton",
                iterations: 50,
            })
        }
    }
}
