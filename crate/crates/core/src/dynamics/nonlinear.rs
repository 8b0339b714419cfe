//! The reaction term `h^ε(u) = f^ε(u) in Ω + g^ε(u) on ∂Ω` as a load vector.

use nalgebra::DVector;
use rand::Rng;

use crate::banded::SymTridiagonal;
use crate::family::CoefficientFamily;
use crate::fem::{dual_l2_norm, h1_norm, DiscreteOperator, DiscreteState, GAUSS3};
use crate::mesh::Mesh1D;
use crate::error::Result;

/// Galerkin load of the reactions at a fixed ε.
///
/// The interior part is `∫ f^ε(u_h) φ_i`, integrated elementwise by 3-point
/// Gauss quadrature; the boundary part adds `g^ε(u(0))` and `g^ε(u(1))` to
/// the endpoint rows. Its derivative is a symmetric tridiagonal matrix.
#[derive(Debug, Clone)]
pub struct NonlinearTerm {
    fam: CoefficientFamily,
    eps: f64,
    nodes: Vec<f64>,
}

impl NonlinearTerm {
    pub fn new(fam: &CoefficientFamily, mesh: &Mesh1D, eps: f64) -> Self {
        Self {
            fam: fam.clone(),
            eps,
            nodes: mesh.nodes().to_vec(),
        }
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn family(&self) -> &CoefficientFamily {
        &self.fam
    }

    pub fn dim(&self) -> usize {
        self.nodes.len()
    }

    /// Load vector `h^ε(u)`.
    ///
    /// # Panics
    /// If `u` does not have one entry per mesh node.
    pub fn load(&self, u: &DiscreteState) -> DVector<f64> {
        let n = self.dim();
        assert_eq!(u.len(), n, "state length does not match the mesh");
        let mut out = DVector::zeros(n);
        for e in 0..n - 1 {
            let h = self.nodes[e + 1] - self.nodes[e];
            let (ul, ur) = (u[e], u[e + 1]);
            let mut left = 0.0;
            let mut right = 0.0;
            for &(s, w) in &GAUSS3 {
                let fv = w * h * self.fam.f(ul + s * (ur - ul), self.eps);
                left += fv * (1.0 - s);
                right += fv * s;
            }
            out[e] += left;
            out[e + 1] += right;
        }
        out[0] += self.fam.g(u[0], self.eps);
        out[n - 1] += self.fam.g(u[n - 1], self.eps);
        out
    }

    /// Derivative `Dh^ε(u) = ∫ f′(u_h) φ_i φ_j + B g′(u)`.
    pub fn jacobian(&self, u: &DiscreteState) -> SymTridiagonal {
        let n = self.dim();
        assert_eq!(u.len(), n, "state length does not match the mesh");
        let mut d = SymTridiagonal::zeros(n);
        for e in 0..n - 1 {
            let h = self.nodes[e + 1] - self.nodes[e];
            let (ul, ur) = (u[e], u[e + 1]);
            let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
            for &(s, w) in &GAUSS3 {
                let dv = w * h * self.fam.df(ul + s * (ur - ul), self.eps);
                a += dv * (1.0 - s) * (1.0 - s);
                b += dv * (1.0 - s) * s;
                c += dv * s * s;
            }
            d.diag_mut()[e] += a;
            d.diag_mut()[e + 1] += c;
            d.off_mut()[e] += b;
        }
        d.diag_mut()[0] += self.fam.dg(u[0], self.eps);
        d.diag_mut()[n - 1] += self.fam.dg(u[n - 1], self.eps);
        d
    }

    /// Sampled Lipschitz quotient `‖h(u) − h(v)‖_{L²-dual} / ‖u − v‖_{H¹}`
    /// over random pairs with H¹-sized entries up to `radius`.
    pub fn sampled_lipschitz<R: Rng>(
        &self,
        op: &DiscreteOperator,
        radius: f64,
        samples: usize,
        rng: &mut R,
    ) -> Result<f64> {
        let n = self.dim();
        let mut best: f64 = 0.0;
        for _ in 0..samples {
            let u = DVector::from_fn(n, |_, _| rng.gen_range(-radius..radius));
            let v = &u + DVector::from_fn(n, |_, _| rng.gen_range(-0.1..0.1));
            let num = dual_l2_norm(op, &(self.load(&u) - self.load(&v)))?;
            let den = h1_norm(op, &(&u - &v))?;
            if den > 0.0 {
                best = best.max(num / den);
            }
        }
        Ok(best)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::assemble_operator;
    use rand::SeedableRng;

    #[test]
    fn linear_reaction_load_is_scaled_mass() {
        let fam = CoefficientFamily::builder("linear")
            .interior_reaction(|u, _| 2.0 * u, |_, _| 2.0)
            .build();
        let mesh = Mesh1D::uniform(8).unwrap();
        let op = assemble_operator(&fam, &mesh, 0.0).unwrap();
        let nl = NonlinearTerm::new(&fam, &mesh, 0.0);
        let u = mesh.interpolate(|x| (2.0 * x).exp());
        assert!((nl.load(&u) - op.m().matvec(&u) * 2.0).amax() < 1e-14);
        assert!((nl.jacobian(&u).to_dense() - op.m().to_dense() * 2.0).amax() < 1e-14);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let fam = CoefficientFamily::default_family();
        let mesh = Mesh1D::uniform(10).unwrap();
        let nl = NonlinearTerm::new(&fam, &mesh, 0.2);
        let u = mesh.interpolate(|x| 3.0 * (3.0 * x).cos() + 0.3);
        let jac = nl.jacobian(&u).to_dense();
        for j in 0..u.len() {
            let mut up = u.clone();
            let mut um = u.clone();
            up[j] += 1e-6;
            um[j] -= 1e-6;
            let col = (nl.load(&up) - nl.load(&um)) / 2e-6;
            assert!((col - jac.column(j)).amax() < 1e-7, "column {j}");
        }
    }

    #[test]
    fn sampled_lipschitz_constant_is_finite() {
        let fam = CoefficientFamily::default_family();
        let mesh = Mesh1D::uniform(16).unwrap();
        let op = assemble_operator(&fam, &mesh, 0.0).unwrap();
        let nl = NonlinearTerm::new(&fam, &mesh, 0.0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let lip = nl.sampled_lipschitz(&op, 5.0, 50, &mut rng).unwrap();
        let (lf, lg) = fam.reaction_lipschitz(0.0);
        // interior part ≤ Lf‖u−v‖_{L²}; a unit point load has dual L² norm
        // ≤ √(6/h) and the trace is bounded by √coth(1/2)·‖·‖_{H¹}
        let bound = lf + 2.0 * lg * (6.0f64 * 16.0).sqrt() * (1.0 / 0.5f64.tanh()).sqrt();
        assert!(lip > 0.0 && lip <= bound);
    }
}
