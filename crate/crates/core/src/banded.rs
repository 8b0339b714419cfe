//! Symmetric tridiagonal matrices and their factorizations.
//!
//! Every P1 matrix on a 1D mesh is tridiagonal, so all linear solves in the
//! laboratory go through the O(n) routines here: a Cholesky factorization for
//! positive definite matrices, a partially pivoted LU for indefinite ones
//! (Newton Jacobians, shifted resolvents), and a Sturm count of negative
//! pivots for inertia.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_len, LabError, Result};

/// Symmetric tridiagonal matrix stored as its diagonal and first
/// off-diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal {
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(LabError::InvalidArgument("empty matrix".into()));
        }
        check_len(diag.len() - 1, off.len())?;
        Ok(Self { diag, off })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            diag: vec![0.0; n],
            off: vec![0.0; n.saturating_sub(1)],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            diag: vec![1.0; n],
            off: vec![0.0; n.saturating_sub(1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn off(&self) -> &[f64] {
        &self.off
    }

    pub(crate) fn diag_mut(&mut self) -> &mut [f64] {
        &mut self.diag
    }

    pub(crate) fn off_mut(&mut self) -> &mut [f64] {
        &mut self.off
    }

    /// `a·A + b·B`.
    pub fn lin_comb(a: f64, lhs: &Self, b: f64, rhs: &Self) -> Self {
        assert_eq!(lhs.dim(), rhs.dim(), "dimension mismatch in lin_comb");
        Self {
            diag: lhs
                .diag
                .iter()
                .zip(&rhs.diag)
                .map(|(x, y)| a * x + b * y)
                .collect(),
            off: lhs
                .off
                .iter()
                .zip(&rhs.off)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.diag
            .iter()
            .chain(&self.off)
            .fold(0.0, |m: f64, x| m.max(x.abs()))
    }

    pub fn matvec(&self, u: &DVector<f64>) -> DVector<f64> {
        let n = self.dim();
        assert_eq!(u.len(), n, "dimension mismatch in matvec");
        let mut out = DVector::zeros(n);
        for i in 0..n {
            let mut s = self.diag[i] * u[i];
            if i > 0 {
                s += self.off[i - 1] * u[i - 1];
            }
            if i + 1 < n {
                s += self.off[i] * u[i + 1];
            }
            out[i] = s;
        }
        out
    }

    /// Applies the matrix to every column of `u`.
    pub fn matmat(&self, u: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(u.nrows(), u.ncols());
        for j in 0..u.ncols() {
            out.set_column(j, &self.matvec(&u.column(j).into_owned()));
        }
        out
    }

    /// `uᵀ A u`.
    pub fn quad_form(&self, u: &DVector<f64>) -> f64 {
        let n = self.dim();
        assert_eq!(u.len(), n, "dimension mismatch in quad_form");
        let mut s = 0.0;
        for i in 0..n {
            s += self.diag[i] * u[i] * u[i];
        }
        for i in 0..n.saturating_sub(1) {
            s += 2.0 * self.off[i] * u[i] * u[i + 1];
        }
        s
    }

    /// `uᵀ A v`.
    pub fn bilinear(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        u.dot(&self.matvec(v))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n {
            a[(i, i)] = self.diag[i];
        }
        for i in 0..n.saturating_sub(1) {
            a[(i, i + 1)] = self.off[i];
            a[(i + 1, i)] = self.off[i];
        }
        a
    }

    pub fn cholesky(&self) -> Result<TridiagCholesky> {
        TridiagCholesky::factor(self)
    }

    pub fn lu(&self) -> Result<TridiagLu> {
        TridiagLu::factor(&self.off, &self.diag, &self.off)
    }

    /// Number of eigenvalues of the pencil `(A, B)` strictly below `sigma`,
    /// for positive definite `B`: by Sylvester's law of inertia, the number
    /// of negative pivots in the LDLᵀ factorization of `A − σB`.
    pub fn sturm_count(&self, sigma: f64, b: &Self) -> usize {
        let shifted = Self::lin_comb(1.0, self, -sigma, b);
        let tiny = f64::EPSILON * shifted.max_abs().max(f64::MIN_POSITIVE);
        let mut count = 0;
        let mut d = 0.0;
        for i in 0..shifted.dim() {
            d = if i == 0 {
                shifted.diag[0]
            } else {
                shifted.diag[i] - shifted.off[i - 1] * shifted.off[i - 1] / d
            };
            if d == 0.0 {
                d = -tiny;
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }
}

/// `A = L Lᵀ` with lower bidiagonal `L`.
#[derive(Debug, Clone)]
pub struct TridiagCholesky {
    diag: Vec<f64>,
    sub: Vec<f64>,
}

impl TridiagCholesky {
    pub fn factor(a: &SymTridiagonal) -> Result<Self> {
        let n = a.dim();
        let mut diag = vec![0.0; n];
        let mut sub = vec![0.0; n.saturating_sub(1)];
        // pivots at rounding level relative to the row scale signal a
        // singular (semi-definite) matrix
        let tiny = 1e-13 * a.max_abs();
        for i in 0..n {
            let mut piv = a.diag[i];
            if i > 0 {
                sub[i - 1] = a.off[i - 1] / diag[i - 1];
                piv -= sub[i - 1] * sub[i - 1];
            }
            if !(piv > tiny) || !piv.is_finite() {
                return Err(LabError::NotPositiveDefinite(format!(
                    "non-positive pivot {piv:e} at row {i}"
                )));
            }
            diag[i] = piv.sqrt();
        }
        Ok(Self { diag, sub })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// `L⁻¹ b`.
    pub fn solve_l(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut y = b.clone();
        for i in 0..self.dim() {
            if i > 0 {
                y[i] -= self.sub[i - 1] * y[i - 1];
            }
            y[i] /= self.diag[i];
        }
        y
    }

    /// `L⁻ᵀ b`.
    pub fn solve_lt(&self, b: &DVector<f64>) -> DVector<f64> {
        let n = self.dim();
        let mut x = b.clone();
        for i in (0..n).rev() {
            if i + 1 < n {
                x[i] -= self.sub[i] * x[i + 1];
            }
            x[i] /= self.diag[i];
        }
        x
    }

    /// `A⁻¹ b`.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        self.solve_lt(&self.solve_l(b))
    }

    pub fn solve_mat(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(b.nrows(), b.ncols());
        for j in 0..b.ncols() {
            out.set_column(j, &self.solve(&b.column(j).into_owned()));
        }
        out
    }

    /// `Lᵀ u`, so that `|Lᵀu|² = uᵀAu`: maps into Euclidean coordinates of
    /// the `A`-inner product.
    pub fn apply_lt(&self, u: &DVector<f64>) -> DVector<f64> {
        let n = self.dim();
        let mut y = DVector::zeros(n);
        for i in 0..n {
            y[i] = self.diag[i] * u[i];
            if i + 1 < n {
                y[i] += self.sub[i] * u[i + 1];
            }
        }
        y
    }

    /// `L y`.
    pub fn apply_l(&self, y: &DVector<f64>) -> DVector<f64> {
        let n = self.dim();
        let mut u = DVector::zeros(n);
        for i in 0..n {
            u[i] = self.diag[i] * y[i];
            if i > 0 {
                u[i] += self.sub[i - 1] * y[i - 1];
            }
        }
        u
    }

    pub fn to_dense_l(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut l = DMatrix::zeros(n, n);
        for i in 0..n {
            l[(i, i)] = self.diag[i];
            if i > 0 {
                l[(i, i - 1)] = self.sub[i - 1];
            }
        }
        l
    }
}

/// LU factorization with partial pivoting of a general tridiagonal matrix
/// (the LAPACK `gttrf` scheme: pivoting creates one extra superdiagonal).
#[derive(Debug, Clone)]
pub struct TridiagLu {
    dl: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swapped: Vec<bool>,
}

impl TridiagLu {
    /// Factor the matrix with sub-diagonal `sub`, diagonal `diag` and
    /// super-diagonal `sup`.
    pub fn factor(sub: &[f64], diag: &[f64], sup: &[f64]) -> Result<Self> {
        let n = diag.len();
        if n == 0 {
            return Err(LabError::InvalidArgument("empty matrix".into()));
        }
        check_len(n - 1, sub.len())?;
        check_len(n - 1, sup.len())?;
        let scale = diag
            .iter()
            .chain(sub)
            .chain(sup)
            .fold(0.0f64, |m, x| m.max(x.abs()));
        let mut dl = sub.to_vec();
        let mut d = diag.to_vec();
        let mut du = sup.to_vec();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] != 0.0 {
                    let fact = dl[i] / d[i];
                    dl[i] = fact;
                    d[i + 1] -= fact * du[i];
                }
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
                swapped[i] = true;
            }
        }
        let tiny = 1e-14 * scale;
        if let Some(i) = d.iter().position(|x| x.abs() <= tiny || !x.is_finite()) {
            return Err(LabError::Singular(format!(
                "zero pivot at row {i} (|pivot| = {:e}, scale {:e})",
                d[i].abs(),
                scale
            )));
        }
        Ok(Self {
            dl,
            d,
            du,
            du2,
            swapped,
        })
    }

    pub fn dim(&self) -> usize {
        self.d.len()
    }

    pub fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let n = self.dim();
        assert_eq!(rhs.len(), n, "dimension mismatch in LU solve");
        let mut b = rhs.clone();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - self.dl[i] * b[i];
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
        b
    }
}

/// Estimate of `min |σ|` over the eigenvalues σ of the pencil `(A, B)` with
/// `B` positive definite, by inverse iteration. Returns an error if `A` is
/// numerically singular.
pub fn smallest_pencil_magnitude(a: &SymTridiagonal, b: &SymTridiagonal) -> Result<f64> {
    let lu = a.lu()?;
    let n = a.dim();
    let mut x = DVector::from_fn(n, |i, _| 1.0 + 0.37 * ((i * 7919) % 13) as f64);
    let mut estimate = f64::INFINITY;
    for _ in 0..200 {
        let norm = b.quad_form(&x).sqrt();
        x /= norm;
        let y = lu.solve(&b.matvec(&x));
        // Rayleigh quotient of A⁻¹B in the B-inner product
        let rq = b.bilinear(&x, &y);
        let next = 1.0 / rq.abs().max(f64::MIN_POSITIVE);
        let converged = (next - estimate).abs() <= 1e-10 * next;
        estimate = next;
        x = y;
        if converged {
            break;
        }
    }
    Ok(estimate)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SymTridiagonal {
        SymTridiagonal::new(vec![4.0, 5.0, 6.0, 3.0], vec![1.0, -2.0, 0.5]).unwrap()
    }

    #[test]
    fn matvec_and_quad_form_match_dense() {
        let a = sample();
        let u = DVector::from_vec(vec![1.0, -2.0, 0.5, 3.0]);
        let dense = a.to_dense();
        assert!((a.matvec(&u) - &dense * &u).amax() < 1e-14);
        assert!((a.quad_form(&u) - u.dot(&(&dense * &u))).abs() < 1e-12);
    }

    #[test]
    fn cholesky_solves_and_transforms() {
        let a = sample();
        let ch = a.cholesky().unwrap();
        let b = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0]);
        let x = ch.solve(&b);
        assert!((a.matvec(&x) - &b).amax() < 1e-13);
        let y = ch.apply_lt(&b);
        assert!((y.norm_squared() - a.quad_form(&b)).abs() < 1e-12);
        assert!((ch.solve_lt(&y) - &b).amax() < 1e-13);
        let l = ch.to_dense_l();
        assert!((&l * l.transpose() - a.to_dense()).amax() < 1e-13);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = SymTridiagonal::new(vec![1.0, -1.0], vec![0.0]).unwrap();
        assert!(matches!(a.cholesky(), Err(LabError::NotPositiveDefinite(_))));
    }

    #[test]
    fn pivoted_lu_solves_indefinite_systems() {
        let a = SymTridiagonal::new(
            vec![1e-20, -3.0, 2.0, 0.0, 1.0],
            vec![2.0, 1.0, -4.0, 3.0],
        )
        .unwrap();
        let lu = a.lu().unwrap();
        let b = DVector::from_vec(vec![1.0, -1.0, 2.0, 0.5, 3.0]);
        let x = lu.solve(&b);
        assert!((a.matvec(&x) - &b).amax() < 1e-12);
    }

    #[test]
    fn lu_reports_singularity() {
        let a = SymTridiagonal::new(vec![1.0, 1.0], vec![1.0]).unwrap();
        assert!(matches!(a.lu(), Err(LabError::Singular(_))));
    }

    #[test]
    fn sturm_count_matches_dense_inertia() {
        let a = SymTridiagonal::new(
            vec![-2.0, 1.0, 3.0, -1.0, 5.0],
            vec![1.0, 0.5, 2.0, -1.0],
        )
        .unwrap();
        let b = SymTridiagonal::new(vec![2.0, 2.0, 2.0, 2.0, 2.0], vec![0.5, 0.5, 0.5, 0.5])
            .unwrap();
        let ch = b.cholesky().unwrap();
        let linv = ch.to_dense_l().try_inverse().unwrap();
        let c = &linv * a.to_dense() * linv.transpose();
        let eig = nalgebra::SymmetricEigen::new(c).eigenvalues;
        for sigma in [-3.0, -0.5, 0.0, 0.7, 2.0, 10.0] {
            let dense = eig.iter().filter(|&&l| l < sigma).count();
            assert_eq!(a.sturm_count(sigma, &b), dense, "sigma = {sigma}");
        }
    }

    #[test]
    fn inverse_iteration_finds_smallest_magnitude() {
        let a = SymTridiagonal::new(vec![2.0, 2.0, 2.0], vec![-1.0, -1.0]).unwrap();
        let b = SymTridiagonal::identity(3);
        let est = smallest_pencil_magnitude(&a, &b).unwrap();
        let exact = 2.0 - 2.0f64.sqrt();
        assert!((est - exact).abs() < 1e-8);
    }
}
