//! Dense helpers built on the tridiagonal factorizations: the generalized
//! symmetric eigenproblem and Gram-weighted operator norms.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::banded::{SymTridiagonal, TridiagCholesky};
use crate::error::{check_len, LabError, Result};

/// All eigenpairs of `K φ = λ M φ` for symmetric `K` and positive definite
/// `M`, ascending, with `M`-orthonormal eigenvectors whose entry of largest
/// magnitude is positive.
pub fn generalized_eigen(
    k: &SymTridiagonal,
    m: &SymTridiagonal,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    check_len(k.dim(), m.dim())?;
    let chol = m.cholesky()?;
    let n = k.dim();
    // C = L⁻¹ K L⁻ᵀ, formed column by column
    let mut c = DMatrix::zeros(n, n);
    let mut e = DVector::zeros(n);
    for j in 0..n {
        e.fill(0.0);
        e[j] = 1.0;
        let col = chol.solve_l(&k.matvec(&chol.solve_lt(&e)));
        c.set_column(j, &col);
    }
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(c, f64::EPSILON, 0).ok_or(LabError::NoConvergence {
        method: "symmetric eigensolver",
        iterations: 0,
    })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut phi = chol.solve_lt(&eig.eigenvectors.column(src).into_owned());
        fix_sign(&mut phi);
        vectors.set_column(dst, &phi);
    }
    Ok((values, vectors))
}

/// Flip `v` so that its entry of largest magnitude is positive.
pub fn fix_sign(v: &mut DVector<f64>) {
    let mut best = 0.0f64;
    let mut sign = 1.0;
    for &x in v.iter() {
        // ties broken towards the first occurrence
        if x.abs() > best * (1.0 + 1e-12) {
            best = x.abs();
            sign = x.signum();
        }
    }
    if sign < 0.0 {
        v.neg_mut();
    }
}

/// Operator norm of the dense matrix `d` from the `G_in` norm to the
/// `G_out` norm: the largest singular value of `L_outᵀ D L_in⁻ᵀ`.
pub fn gram_weighted_norm(
    d: &DMatrix<f64>,
    g_in: &TridiagCholesky,
    g_out: &TridiagCholesky,
) -> Result<f64> {
    check_len(g_in.dim(), d.ncols())?;
    check_len(g_out.dim(), d.nrows())?;
    let n_in = d.ncols();
    let mut w = DMatrix::zeros(d.nrows(), n_in);
    let mut e = DVector::zeros(n_in);
    for j in 0..n_in {
        e.fill(0.0);
        e[j] = 1.0;
        let col = g_out.apply_lt(&(d * g_in.solve_lt(&e)));
        w.set_column(j, &col);
    }
    Ok(w.singular_values().max())
}

/// Dense `A⁻¹ B` for a Cholesky-factored `A` and tridiagonal `B`.
pub fn dense_solve_times(a: &TridiagCholesky, b: &SymTridiagonal) -> DMatrix<f64> {
    a.solve_mat(&b.to_dense())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generalized_eigen_is_m_orthonormal() {
        let k = SymTridiagonal::new(vec![2.0, 3.0, 4.0, 5.0], vec![-1.0, 0.5, -0.3]).unwrap();
        let m = SymTridiagonal::new(vec![1.0, 2.0, 1.5, 1.0], vec![0.2, 0.1, 0.3]).unwrap();
        let (vals, vecs) = generalized_eigen(&k, &m).unwrap();
        let md = m.to_dense();
        let kd = k.to_dense();
        let gram = vecs.transpose() * &md * &vecs;
        assert!((gram - DMatrix::identity(4, 4)).amax() < 1e-12);
        for j in 0..4 {
            let phi = vecs.column(j);
            assert!((&kd * phi - vals[j] * (&md * phi)).amax() < 1e-11);
            let imax = phi.iamax();
            assert!(phi[imax] > 0.0);
        }
        assert!(vals.as_slice().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn gram_weighted_norm_of_identity_between_equal_grams_is_one() {
        let g = SymTridiagonal::new(vec![3.0, 3.0, 3.0], vec![1.0, 1.0]).unwrap();
        let ch = g.cholesky().unwrap();
        let norm = gram_weighted_norm(&DMatrix::identity(3, 3), &ch, &ch).unwrap();
        assert!((norm - 1.0).abs() < 1e-12);
    }
}
