//! Ordered eigenpairs of the pencil `(K, M)`, rank-m spectral projections
//! and the gaps between them across ε.

use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_len, LabError, Result};
use crate::fem::{DiscreteOperator, DiscreteState, NormTag};
use crate::linalg::{generalized_eigen, gram_weighted_norm};

/// Eigenvalues closer than this are treated as a cluster.
pub const CLUSTER_TOL: f64 = 1e-8;

/// The lowest generalized eigenpairs of an operator.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    values: DVector<f64>,
    vectors: DMatrix<f64>,
    op: DiscreteOperator,
}

impl EigenSystem {
    pub fn count(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn value(&self, k: usize) -> f64 {
        self.values[k]
    }

    pub fn vector(&self, k: usize) -> DVector<f64> {
        self.vectors.column(k).into_owned()
    }

    pub fn op(&self) -> &DiscreteOperator {
        &self.op
    }

    /// Largest relative residual `‖Kφ − λMφ‖_{M⁻¹} / |λ|` over the pairs.
    pub fn max_residual(&self) -> f64 {
        let chol = self.op.m_factor();
        (0..self.count())
            .map(|k| {
                let phi = self.vector(k);
                let r = self.op.k().matvec(&phi) - self.op.m().matvec(&phi) * self.values[k];
                chol.solve_l(&r).norm() / self.values[k].abs().max(1.0)
            })
            .fold(0.0, f64::max)
    }

    /// `max |Φᵀ M Φ − I|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let mphi = self.op.m().matmat(&self.vectors);
        let gram = self.vectors.transpose() * mphi;
        (gram - DMatrix::identity(self.count(), self.count())).amax()
    }
}

/// The lowest `count` eigenpairs of `K φ = λ M φ`.
pub fn eigenpairs(op: &DiscreteOperator, count: usize) -> Result<EigenSystem> {
    if count == 0 || count > op.dim() {
        return Err(LabError::InvalidArgument(format!(
            "eigenpair count {count} outside 1..={}",
            op.dim()
        )));
    }
    let (values, vectors) = generalized_eigen(op.k(), op.m())?;
    Ok(EigenSystem {
        values: values.rows(0, count).into_owned(),
        vectors: vectors.columns(0, count).into_owned(),
        op: op.clone(),
    })
}

/// `Q u = Σ_{k<m} (φ_kᵀ M u) φ_k`.
#[derive(Debug, Clone)]
pub struct SpectralProjector {
    basis: DMatrix<f64>,
    op: DiscreteOperator,
}

impl SpectralProjector {
    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn op(&self) -> &DiscreteOperator {
        &self.op
    }

    /// Modal coordinates `Φᵀ M u`.
    pub fn coefficients(&self, u: &DiscreteState) -> Result<DVector<f64>> {
        check_len(self.op.dim(), u.len())?;
        Ok(self.basis.transpose() * self.op.m().matvec(u))
    }

    pub fn apply(&self, u: &DiscreteState) -> Result<DiscreteState> {
        Ok(&self.basis * self.coefficients(u)?)
    }

    /// Dense matrix `Φ Φᵀ M`.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mphi = self.op.m().matmat(&self.basis);
        &self.basis * mphi.transpose()
    }
}

/// Rank-`m` projection onto the lowest eigenspace. Refuses a cut inside an
/// eigenvalue cluster.
pub fn spectral_projection(sys: &EigenSystem, m: usize) -> Result<SpectralProjector> {
    let full = sys.op.dim();
    if m > sys.count() {
        return Err(LabError::InvalidArgument(format!(
            "rank {m} exceeds the {} computed eigenpairs",
            sys.count()
        )));
    }
    if m > 0 && m < full {
        if m == sys.count() {
            return Err(LabError::InvalidArgument(format!(
                "rank {m} needs eigenpair {m} to certify the spectral gap"
            )));
        }
        let gap = sys.values[m] - sys.values[m - 1];
        if gap <= CLUSTER_TOL * sys.values[m].abs().max(1.0) {
            return Err(LabError::DegenerateCut { rank: m, gap });
        }
    }
    Ok(SpectralProjector {
        basis: sys.vectors.columns(0, m).into_owned(),
        op: sys.op.clone(),
    })
}

/// Operator norm of `Q_a − Q_b` between the tagged norms (dense SVD of the
/// Gram-weighted difference).
pub fn projection_gap(
    qa: &SpectralProjector,
    qb: &SpectralProjector,
    in_norm: NormTag,
    out_norm: NormTag,
) -> Result<f64> {
    if qa.rank() != qb.rank() {
        return Err(LabError::InvalidArgument(format!(
            "rank mismatch: {} vs {}",
            qa.rank(),
            qb.rank()
        )));
    }
    if qa.op.mesh() != qb.op.mesh() {
        return Err(LabError::InvalidArgument("projectors live on different meshes".into()));
    }
    let diff = qa.to_dense() - qb.to_dense();
    let op = &qb.op;
    gram_weighted_norm(&diff, op.gram_factor(in_norm)?, op.gram_factor(out_norm)?)
}

fn cluster_check(sys: &EigenSystem, k: usize) -> Result<()> {
    let v = &sys.values;
    let scale = v[k].abs().max(1.0);
    for j in [k.wrapping_sub(1), k + 1] {
        if j < v.len() {
            let gap = (v[j] - v[k]).abs();
            if gap < CLUSTER_TOL * scale {
                return Err(LabError::EigenCluster { index: k, gap });
            }
        }
    }
    Ok(())
}

/// `|λ_k^a − λ_k^b|`, matching eigenvalues by index.
pub fn eigenvalue_gap(a: &EigenSystem, b: &EigenSystem, k: usize) -> Result<f64> {
    if k >= a.count() || k >= b.count() {
        return Err(LabError::InvalidArgument(format!("eigenvalue index {k} out of range")));
    }
    cluster_check(a, k)?;
    cluster_check(b, k)?;
    Ok((a.values[k] - b.values[k]).abs())
}

/// The gaps `λ_m − λ_{m−1}` for m = 1..count.
pub fn gap_condition_profile(sys: &EigenSystem) -> Result<Vec<f64>> {
    if sys.count() < 2 {
        return Err(LabError::InvalidArgument(
            "gap profile needs at least two eigenvalues".into(),
        ));
    }
    Ok(sys
        .values
        .as_slice()
        .windows(2)
        .map(|w| w[1] - w[0])
        .collect())
}

/// Reduction rank with the largest gap `λ_m − λ_{m−1}` among `1 ≤ m ≤ cap`
/// (ties go to the smaller rank).
pub fn select_rank(profile: &[f64], cap: usize) -> Result<usize> {
    let cap = cap.min(profile.len());
    if cap == 0 {
        return Err(LabError::InvalidArgument("rank cap must be positive".into()));
    }
    let mut best = 1;
    for m in 2..=cap {
        if profile[m - 1] > profile[best - 1] {
            best = m;
        }
    }
    Ok(best)
}

/// Eigen-report CSV with columns `k, lambda_eps, lambda_0, abs_gap, eps`.
pub fn write_eigen_report<W: Write>(
    mut out: W,
    sys_eps: &EigenSystem,
    sys_0: &EigenSystem,
    count: usize,
) -> Result<()> {
    writeln!(out, "k,lambda_eps,lambda_0,abs_gap,eps")?;
    let eps = sys_eps.op.eps();
    for k in 0..count.min(sys_eps.count()).min(sys_0.count()) {
        let (a, b) = (sys_eps.values[k], sys_0.values[k]);
        writeln!(out, "{k},{a:.16e},{b:.16e},{:.16e},{eps:.16e}", (a - b).abs())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::CoefficientFamily;
    use crate::fem::assemble_operator;
    use crate::mesh::Mesh1D;

    fn neumann(n: usize, c: f64) -> DiscreteOperator {
        assemble_operator(
            &CoefficientFamily::neumann_test(c),
            &Mesh1D::uniform(n).unwrap(),
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn eigensystem_invariants_hold() {
        let op = neumann(40, 2.0);
        let sys = eigenpairs(&op, 10).unwrap();
        assert!(sys.orthonormality_defect() < 1e-10);
        assert!(sys.max_residual() < 1e-9);
        assert!((sys.value(0) - 2.0).abs() < 1e-10);
    }

    #[test]
    fn projector_edge_ranks() {
        let op = neumann(8, 1.0);
        let sys = eigenpairs(&op, 9).unwrap();
        let u = DVector::from_fn(9, |i, _| (i as f64).sin());
        let id = spectral_projection(&sys, 9).unwrap();
        assert!((id.apply(&u).unwrap() - &u).amax() < 1e-12);
        let zero = spectral_projection(&sys, 0).unwrap();
        assert_eq!(zero.apply(&u).unwrap().amax(), 0.0);
        let q = spectral_projection(&sys, 3).unwrap();
        let qu = q.apply(&u).unwrap();
        assert!((q.apply(&qu).unwrap() - &qu).amax() < 1e-12);
    }

    #[test]
    fn degenerate_cut_is_refused() {
        let k = crate::banded::SymTridiagonal::identity(3);
        let op = neumann(2, 1.0);
        // K = M would give one triple eigenvalue; K = I gives distinct ones,
        // so force a cluster by hand
        let (mut vals, vecs) = generalized_eigen(&k, op.m()).unwrap();
        vals[1] = vals[0];
        let sys = EigenSystem {
            values: vals,
            vectors: vecs,
            op,
        };
        assert!(matches!(
            spectral_projection(&sys, 1),
            Err(LabError::DegenerateCut { .. })
        ));
        assert!(matches!(eigenvalue_gap(&sys, &sys, 1), Err(LabError::EigenCluster { .. })));
    }

    #[test]
    fn rank_selection_takes_largest_gap_under_cap() {
        assert_eq!(select_rank(&[1.0, 5.0, 2.0, 9.0], 3).unwrap(), 2);
        assert_eq!(select_rank(&[1.0, 5.0, 2.0, 9.0], 10).unwrap(), 4);
        assert!(select_rank(&[1.0], 0).is_err());
    }
}
