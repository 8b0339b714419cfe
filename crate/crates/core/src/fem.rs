//! P1 finite elements for the Robin operator
//! `A_ε u = −(p_ε u′)′ + (λ + V_ε) u` with `p_ε ∂_n u + (λ + b_ε) u` on the
//! boundary, plus discrete norms, elliptic and resolvent solves, and
//! operator-gap norms between two discretized operators.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::banded::{smallest_pencil_magnitude, SymTridiagonal, TridiagCholesky};
use crate::error::{check_len, LabError, Result};
use crate::family::{CoefficientFamily, Endpoint};
use crate::mesh::Mesh1D;

/// Nodal coefficient vector of a P1 function.
pub type DiscreteState = DVector<f64>;

/// 3-point Gauss rule on the reference element [0, 1]: (abscissa, weight).
pub const GAUSS3: [(f64, f64); 3] = [
    (0.112_701_665_379_258_31, 5.0 / 18.0),
    (0.5, 8.0 / 18.0),
    (0.887_298_334_620_741_7, 5.0 / 18.0),
];

/// Which discrete norm to measure a state with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormTag {
    /// `uᵀ M u`, the L² norm.
    L2,
    /// `uᵀ (K1 + M) u`, the reference H¹ norm.
    H1,
    /// `uᵀ K u`, the energy norm of the operator itself.
    Energy,
}

impl std::str::FromStr for NormTag {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l2" => Ok(Self::L2),
            "h1" => Ok(Self::H1),
            "energy" => Ok(Self::Energy),
            other => Err(LabError::InvalidArgument(format!("unknown norm `{other}`"))),
        }
    }
}

/// Assembled matrices of `A_ε` on a mesh, with their Cholesky factors.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    mesh: Mesh1D,
    eps: f64,
    k: SymTridiagonal,
    m: SymTridiagonal,
    k1: SymTridiagonal,
    h1: SymTridiagonal,
    k_chol: Option<TridiagCholesky>,
    m_chol: TridiagCholesky,
    h1_chol: TridiagCholesky,
}

impl DiscreteOperator {
    pub fn mesh(&self) -> &Mesh1D {
        &self.mesh
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn dim(&self) -> usize {
        self.k.dim()
    }

    /// Matrix of the bilinear form `⟨A_ε u, v⟩`.
    pub fn k(&self) -> &SymTridiagonal {
        &self.k
    }

    /// Consistent P1 mass matrix.
    pub fn m(&self) -> &SymTridiagonal {
        &self.m
    }

    /// Unit-diffusion stiffness matrix `∫ u′v′`.
    pub fn k1(&self) -> &SymTridiagonal {
        &self.k1
    }

    /// Gram matrix `K1 + M` of the reference H¹ norm.
    pub fn h1(&self) -> &SymTridiagonal {
        &self.h1
    }

    pub fn boundary_nodes(&self) -> (usize, usize) {
        self.mesh.boundary_nodes()
    }

    pub fn k_factor(&self) -> Result<&TridiagCholesky> {
        self.k_chol.as_ref().ok_or_else(|| {
            LabError::NotPositiveDefinite("stiffness matrix is not positive definite".into())
        })
    }

    pub fn m_factor(&self) -> &TridiagCholesky {
        &self.m_chol
    }

    pub fn gram(&self, tag: NormTag) -> &SymTridiagonal {
        match tag {
            NormTag::L2 => &self.m,
            NormTag::H1 => &self.h1,
            NormTag::Energy => &self.k,
        }
    }

    pub fn gram_factor(&self, tag: NormTag) -> Result<&TridiagCholesky> {
        match tag {
            NormTag::L2 => Ok(&self.m_chol),
            NormTag::H1 => Ok(&self.h1_chol),
            NormTag::Energy => self.k_factor(),
        }
    }

    /// `B·(g0, g1)`: boundary values placed on the endpoint rows.
    pub fn boundary_load(&self, values: (f64, f64)) -> DVector<f64> {
        let (l, r) = self.boundary_nodes();
        let mut out = DVector::zeros(self.dim());
        out[l] += values.0;
        out[r] += values.1;
        out
    }
}

/// Assemble `K`, `M` and `K1` for the family at `eps`.
pub fn assemble_operator(
    fam: &CoefficientFamily,
    mesh: &Mesh1D,
    eps: f64,
) -> Result<DiscreteOperator> {
    if !(eps >= 0.0 && eps <= fam.eps_max()) {
        return Err(LabError::InvalidArgument(format!(
            "eps = {eps} outside [0, {}]",
            fam.eps_max()
        )));
    }
    let n = mesh.n_nodes();
    let floor = if fam.test_mode() { 0.0 } else { fam.m0() };
    let mut k = SymTridiagonal::zeros(n);
    let mut m = SymTridiagonal::zeros(n);
    let mut k1 = SymTridiagonal::zeros(n);
    let lambda = fam.lambda();
    for (e, w) in mesh.nodes().windows(2).enumerate() {
        let (x0, x1) = (w[0], w[1]);
        let h = x1 - x0;
        let mut stiff = 0.0;
        let mut react = [[0.0; 2]; 2];
        for &(s, wq) in &GAUSS3 {
            let x = x0 + s * h;
            let p = fam.p(x, eps);
            if p <= 0.0 || p < floor {
                return Err(LabError::CoefficientFloor(format!(
                    "p({x}, {eps}) = {p} below floor {floor}"
                )));
            }
            stiff += wq * p / h;
            let c = lambda + fam.v(x, eps);
            let phi = [1.0 - s, s];
            for i in 0..2 {
                for j in 0..2 {
                    react[i][j] += wq * h * c * phi[i] * phi[j];
                }
            }
        }
        let kd = k.diag_mut();
        kd[e] += stiff + react[0][0];
        kd[e + 1] += stiff + react[1][1];
        k.off_mut()[e] += -stiff + react[0][1];

        let md = m.diag_mut();
        md[e] += h / 3.0;
        md[e + 1] += h / 3.0;
        m.off_mut()[e] += h / 6.0;

        let k1d = k1.diag_mut();
        k1d[e] += 1.0 / h;
        k1d[e + 1] += 1.0 / h;
        k1.off_mut()[e] -= 1.0 / h;
    }
    let (l, r) = mesh.boundary_nodes();
    k.diag_mut()[l] += lambda + fam.b(Endpoint::Left, eps);
    k.diag_mut()[r] += lambda + fam.b(Endpoint::Right, eps);

    let k_chol = match k.cholesky() {
        Ok(c) => Some(c),
        Err(e) if !fam.test_mode() => return Err(e),
        Err(_) => None,
    };
    let h1 = SymTridiagonal::lin_comb(1.0, &k1, 1.0, &m);
    let m_chol = m.cholesky()?;
    let h1_chol = h1.cholesky()?;
    Ok(DiscreteOperator {
        mesh: mesh.clone(),
        eps,
        k,
        m,
        k1,
        h1,
        k_chol,
        m_chol,
        h1_chol,
    })
}

pub fn norm(op: &DiscreteOperator, tag: NormTag, u: &DiscreteState) -> Result<f64> {
    check_len(op.dim(), u.len())?;
    Ok(op.gram(tag).quad_form(u).max(0.0).sqrt())
}

/// `sqrt(uᵀ K u)`.
pub fn energy_norm(op: &DiscreteOperator, u: &DiscreteState) -> Result<f64> {
    norm(op, NormTag::Energy, u)
}

/// `sqrt(uᵀ (K1 + M) u)`.
pub fn h1_norm(op: &DiscreteOperator, u: &DiscreteState) -> Result<f64> {
    norm(op, NormTag::H1, u)
}

/// `sqrt(uᵀ M u)`.
pub fn l2_norm(op: &DiscreteOperator, u: &DiscreteState) -> Result<f64> {
    norm(op, NormTag::L2, u)
}

/// Dual norm `sqrt(rᵀ M⁻¹ r)` of a load vector, i.e. the L² norm of its
/// Riesz representative.
pub fn dual_l2_norm(op: &DiscreteOperator, r: &DVector<f64>) -> Result<f64> {
    check_len(op.dim(), r.len())?;
    Ok(op.m_factor().solve_l(r).norm())
}

/// Solve `K u = M·rhs_interior + B·rhs_boundary`.
pub fn solve_elliptic(
    op: &DiscreteOperator,
    rhs_interior: &DiscreteState,
    rhs_boundary: (f64, f64),
) -> Result<DiscreteState> {
    check_len(op.dim(), rhs_interior.len())?;
    let load = op.m().matvec(rhs_interior) + op.boundary_load(rhs_boundary);
    let u = op.k_factor()?.solve(&load);
    let residual = (op.k().matvec(&u) - &load).amax();
    if residual > 1e-10 * load.amax().max(f64::MIN_POSITIVE) {
        return Err(LabError::Singular(format!(
            "elliptic residual {residual:e} exceeds tolerance"
        )));
    }
    Ok(u)
}

/// Solve `(μ M + K) u = load`.
pub fn resolvent_solve(op: &DiscreteOperator, mu: f64, load: &DVector<f64>) -> Result<DiscreteState> {
    check_len(op.dim(), load.len())?;
    let shifted = SymTridiagonal::lin_comb(mu, op.m(), 1.0, op.k());
    if let Ok(ch) = shifted.cholesky() {
        // definite: the pencil has no spectrum near zero unless the smallest
        // pivot says so, which inverse iteration below would also catch
        if mu >= 0.0 {
            return Ok(ch.solve(load));
        }
    }
    let lu = shifted.lu()?;
    let smallest = smallest_pencil_magnitude(&shifted, op.m())?;
    let radius = spectral_radius_bound(&shifted, op.m());
    if smallest <= 1e-11 * radius {
        return Err(LabError::Singular(format!(
            "shift {mu} lies on the spectrum (distance {smallest:e})"
        )));
    }
    Ok(lu.solve(load))
}

/// Gershgorin-type upper bound for the spectral radius of the pencil
/// `(A, M)` with `M` a P1 mass matrix.
pub(crate) fn spectral_radius_bound(a: &SymTridiagonal, m: &SymTridiagonal) -> f64 {
    // λ_min(M) ≥ min_i (m_ii − Σ|m_ij|); for P1 mass this is ≥ h_min/6 > 0
    let n = m.dim();
    let mut mmin = f64::INFINITY;
    let mut amax: f64 = 0.0;
    for i in 0..n {
        let mut mr = m.diag()[i];
        let mut ar = a.diag()[i].abs();
        if i > 0 {
            mr -= m.off()[i - 1].abs();
            ar += a.off()[i - 1].abs();
        }
        if i + 1 < n {
            mr -= m.off()[i].abs();
            ar += a.off()[i].abs();
        }
        mmin = mmin.min(mr);
        amax = amax.max(ar);
    }
    amax / mmin.max(f64::MIN_POSITIVE)
}

/// Maximum iterations of the operator-gap power iteration.
const GAP_MAX_ITERS: usize = 100_000;

/// Operator norm of `K_A⁻¹ − K_B⁻¹`, acting on interior loads `M w` and
/// measured from `in_norm` (of `w`) to `out_norm`.
///
/// Power iteration on the `G_in`-self-adjoint operator
/// `G_in⁻¹ Dᵀ G_out D` with `D = K_A⁻¹M − K_B⁻¹M`. Two independent random
/// starts must agree to 1e−6.
pub fn operator_gap_norm(
    a: &DiscreteOperator,
    b: &DiscreteOperator,
    in_norm: NormTag,
    out_norm: NormTag,
) -> Result<f64> {
    check_len(a.dim(), b.dim())?;
    if a.mesh() != b.mesh() {
        return Err(LabError::InvalidArgument("operators live on different meshes".into()));
    }
    let ka = a.k_factor()?;
    let kb = b.k_factor()?;
    let m = a.m();
    let g_out = a.gram(out_norm);
    let g_in_factor = a.gram_factor(in_norm)?;
    let g_in = a.gram(in_norm);
    let d = |w: &DVector<f64>| {
        let load = m.matvec(w);
        ka.solve(&load) - kb.solve(&load)
    };
    let dt = |y: &DVector<f64>| m.matvec(&(ka.solve(y) - kb.solve(y)));

    let run = |seed: u64| -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut w = DVector::from_fn(a.dim(), |_, _| rng.gen_range(-1.0..1.0));
        let mut prev = 0.0;
        for _ in 0..GAP_MAX_ITERS {
            let nw = g_in.quad_form(&w).sqrt();
            w /= nw;
            let x = d(&w);
            let s2 = g_out.quad_form(&x);
            if s2 == 0.0 {
                return Ok(0.0);
            }
            if (s2 - prev).abs() <= 1e-12 * s2 {
                return Ok(s2.sqrt());
            }
            prev = s2;
            w = g_in_factor.solve(&dt(&g_out.matvec(&x)));
        }
        Err(LabError::NoConvergence {
            method: "operator-gap power iteration",
            iterations: GAP_MAX_ITERS,
        })
    };
    let s1 = run(0x5eed_0001)?;
    let s2 = run(0x5eed_0002)?;
    let scale = s1.max(s2);
    if scale > 0.0 && (s1 - s2).abs() > 1e-6 * scale {
        return Err(LabError::NoConvergence {
            method: "operator-gap power iteration (start disagreement)",
            iterations: GAP_MAX_ITERS,
        });
    }
    Ok(scale)
}
