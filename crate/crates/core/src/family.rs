//! The ε-parametrised problem data.
//!
//! A [`CoefficientFamily`] bundles the diffusion `p`, the interior potential
//! `V`, the boundary potential `b`, the shift `λ`, the interior and boundary
//! reactions `f`, `g`, and the functions that bound how far each of them moves
//! away from its ε = 0 value.

use std::fmt;
use std::sync::Arc;

use crate::error::{LabError, Result};

pub type SpaceFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type BoundaryFn = Arc<dyn Fn(Endpoint, f64) -> f64 + Send + Sync>;
pub type ReactionFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type RateFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// The two boundary points of Ω = (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endpoint {
    Left,
    Right,
}

impl Endpoint {
    pub const BOTH: [Endpoint; 2] = [Endpoint::Left, Endpoint::Right];

    pub fn coordinate(self) -> f64 {
        match self {
            Endpoint::Left => 0.0,
            Endpoint::Right => 1.0,
        }
    }
}

/// C² saturation: the identity on `[-limit, limit]`, constant beyond
/// `limit + width`, joined by the quintic `z - z⁴ + 3z⁵/5`.
pub fn smooth_clamp(u: f64, limit: f64, width: f64) -> f64 {
    let a = u.abs();
    if a <= limit {
        return u;
    }
    let z = ((a - limit) / width).min(1.0);
    let s = z - z.powi(4) + 0.6 * z.powi(5);
    u.signum() * (limit + width * s)
}

pub fn smooth_clamp_deriv(u: f64, limit: f64, width: f64) -> f64 {
    let a = u.abs();
    if a <= limit {
        return 1.0;
    }
    let z = ((a - limit) / width).min(1.0);
    1.0 - 4.0 * z.powi(3) + 3.0 * z.powi(4)
}

/// Parameters of the standard perturbation family used by every rate
/// experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StandardParams {
    /// Linear growth rate of the interior reaction `a·u − u³`.
    pub a: f64,
    /// Shift λ.
    pub lambda: f64,
    /// Amplitude of the boundary reaction `0.25·tanh(u)`.
    pub boundary_gain: f64,
    /// Saturation level of the reaction cutoff.
    pub u_max: f64,
    /// Width of the quintic blending zone of the cutoff.
    pub cutoff_width: f64,
    /// Positivity floor m0.
    pub m0: f64,
    /// Largest admissible ε.
    pub eps_max: f64,
}

impl Default for StandardParams {
    fn default() -> Self {
        Self {
            a: 5.0,
            lambda: 1.0,
            boundary_gain: 0.25,
            u_max: 3.0,
            cutoff_width: 1.0,
            m0: 0.5,
            eps_max: 0.5,
        }
    }
}

#[derive(Clone)]
pub struct CoefficientFamily {
    name: String,
    p: SpaceFn,
    v: SpaceFn,
    b: BoundaryFn,
    lambda: f64,
    f: ReactionFn,
    df: ReactionFn,
    g: ReactionFn,
    dg: ReactionFn,
    p_gap: RateFn,
    eta: RateFn,
    tau: RateFn,
    kappa: RateFn,
    xi: RateFn,
    m0: f64,
    eps_max: f64,
    test_mode: bool,
}

impl fmt::Debug for CoefficientFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientFamily")
            .field("name", &self.name)
            .field("lambda", &self.lambda)
            .field("m0", &self.m0)
            .field("eps_max", &self.eps_max)
            .field("test_mode", &self.test_mode)
            .finish_non_exhaustive()
    }
}

impl CoefficientFamily {
    pub fn builder(name: impl Into<String>) -> FamilyBuilder {
        FamilyBuilder::new(name)
    }

    /// The default family: p = 1 + ε sin 2πx, V = ε cos πx, b = ε,
    /// f = a·u − u³ + ε tanh u (cut off smoothly beyond `u_max`),
    /// g = (1 + ε)·0.25·tanh u. Every perturbation size is a multiple of ε.
    pub fn standard(params: StandardParams) -> Self {
        let StandardParams {
            a,
            lambda,
            boundary_gain,
            u_max,
            cutoff_width,
            m0,
            eps_max,
        } = params;
        let two_pi = 2.0 * std::f64::consts::PI;
        let pi = std::f64::consts::PI;
        Self::builder(format!("standard(a={a})"))
            .lambda(lambda)
            .diffusion(move |x, eps| 1.0 + eps * (two_pi * x).sin())
            .potential(move |x, eps| eps * (pi * x).cos())
            .boundary_potential(|_, eps| eps)
            .interior_reaction(
                move |u, eps| {
                    let c = smooth_clamp(u, u_max, cutoff_width);
                    a * c - c * c * c + eps * c.tanh()
                },
                move |u, eps| {
                    let c = smooth_clamp(u, u_max, cutoff_width);
                    let sech = 1.0 / c.cosh();
                    (a - 3.0 * c * c + eps * sech * sech)
                        * smooth_clamp_deriv(u, u_max, cutoff_width)
                },
            )
            .boundary_reaction(
                move |u, eps| (1.0 + eps) * boundary_gain * u.tanh(),
                move |u, eps| {
                    let sech = 1.0 / u.cosh();
                    (1.0 + eps) * boundary_gain * sech * sech
                },
            )
            .rates(
                |eps| eps,
                |eps| eps,
                |eps| eps,
                |eps| eps,
                move |eps| boundary_gain * eps,
            )
            .m0(m0)
            .eps_max(eps_max)
            .build()
    }

    pub fn default_family() -> Self {
        Self::standard(StandardParams::default())
    }

    /// p ≡ 1, V ≡ 0, shift `c` and boundary potential b ≡ −c, so that the
    /// boundary coefficient λ + b vanishes: the Neumann Laplacian plus `c`,
    /// with no reactions. Runs in test mode since λ + b = 0 violates m0 > 0.
    pub fn neumann_test(c: f64) -> Self {
        Self::builder(format!("neumann(c={c})"))
            .lambda(c)
            .boundary_potential(move |_, _| -c)
            .m0(0.0)
            .test_mode(true)
            .build()
    }

    /// p ≡ 1, V ≡ 0, constant boundary potential `b` and shift `lambda`, no
    /// reactions.
    pub fn robin_test(lambda: f64, b: f64) -> Self {
        let test = lambda <= 0.0 || lambda + b <= 0.0;
        Self::builder(format!("robin(lambda={lambda},b={b})"))
            .lambda(lambda)
            .boundary_potential(move |_, _| b)
            .m0(if test { 0.0 } else { lambda.min(lambda + b).min(1.0) })
            .test_mode(test)
            .build()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn m0(&self) -> f64 {
        self.m0
    }

    pub fn eps_max(&self) -> f64 {
        self.eps_max
    }

    pub fn test_mode(&self) -> bool {
        self.test_mode
    }

    pub fn p(&self, x: f64, eps: f64) -> f64 {
        (self.p)(x, eps)
    }

    pub fn v(&self, x: f64, eps: f64) -> f64 {
        (self.v)(x, eps)
    }

    pub fn b(&self, e: Endpoint, eps: f64) -> f64 {
        (self.b)(e, eps)
    }

    pub fn f(&self, u: f64, eps: f64) -> f64 {
        (self.f)(u, eps)
    }

    pub fn df(&self, u: f64, eps: f64) -> f64 {
        (self.df)(u, eps)
    }

    pub fn g(&self, u: f64, eps: f64) -> f64 {
        (self.g)(u, eps)
    }

    pub fn dg(&self, u: f64, eps: f64) -> f64 {
        (self.dg)(u, eps)
    }

    pub fn p_gap(&self, eps: f64) -> f64 {
        (self.p_gap)(eps)
    }

    pub fn eta(&self, eps: f64) -> f64 {
        (self.eta)(eps)
    }

    pub fn tau(&self, eps: f64) -> f64 {
        (self.tau)(eps)
    }

    pub fn kappa(&self, eps: f64) -> f64 {
        (self.kappa)(eps)
    }

    pub fn xi(&self, eps: f64) -> f64 {
        (self.xi)(eps)
    }

    /// Size of the perturbation of the linear operator, ‖p_ε − p_0‖ + η + τ.
    pub fn delta_linear(&self, eps: f64) -> f64 {
        self.p_gap(eps) + self.eta(eps) + self.tau(eps)
    }

    /// Total perturbation size δ(ε) = ‖p_ε − p_0‖ + η + τ + κ + ξ.
    pub fn delta(&self, eps: f64) -> f64 {
        self.delta_linear(eps) + self.kappa(eps) + self.xi(eps)
    }

    /// Upper constant M0 of the norm equivalence
    /// `m0‖u‖²_{H¹} ≤ ⟨A_ε u, u⟩ ≤ M0‖u‖²_{H¹}`, from dense sampling of the
    /// coefficients over [0, ε_max]. The boundary term uses the sharp 1D trace
    /// constant `u(0)² + u(1)² ≤ coth(1/2)‖u‖²_{H¹}`.
    pub fn upper_bound(&self) -> f64 {
        let trace = 1.0 / 0.5f64.tanh();
        let mut bulk: f64 = 0.0;
        let mut boundary: f64 = 0.0;
        for eps in sample_grid(0.0, self.eps_max, 33) {
            for x in sample_grid(0.0, 1.0, 513) {
                bulk = bulk.max(self.p(x, eps)).max(self.lambda + self.v(x, eps));
            }
            for e in Endpoint::BOTH {
                boundary = boundary.max(self.lambda + self.b(e, eps));
            }
        }
        bulk + boundary.max(0.0) * trace
    }

    /// Check the coefficient floors and the declared perturbation bounds by
    /// dense sampling on `[0, eps_max]`.
    pub fn check_invariants(&self) -> Result<()> {
        let floor = if self.test_mode { 0.0 } else { self.m0 };
        if !self.test_mode && self.m0 <= 0.0 {
            return Err(LabError::CoefficientFloor(
                "m0 must be positive outside test mode".into(),
            ));
        }
        let xs = sample_grid(0.0, 1.0, 257);
        let us = sample_grid(-8.0, 8.0, 401);
        let slack = 1e-12;
        for eps in sample_grid(0.0, self.eps_max, 17) {
            let mut dp: f64 = 0.0;
            let mut dv: f64 = 0.0;
            for &x in &xs {
                let p = self.p(x, eps);
                if p < floor.max(f64::MIN_POSITIVE) {
                    return Err(LabError::CoefficientFloor(format!(
                        "p({x}, {eps}) = {p} below floor {floor}"
                    )));
                }
                let lv = self.lambda + self.v(x, eps);
                if lv < floor {
                    return Err(LabError::CoefficientFloor(format!(
                        "lambda + V({x}, {eps}) = {lv} below floor {floor}"
                    )));
                }
                dp = dp.max((p - self.p(x, 0.0)).abs());
                dv = dv.max((self.v(x, eps) - self.v(x, 0.0)).abs());
            }
            let mut db: f64 = 0.0;
            for e in Endpoint::BOTH {
                let lb = self.lambda + self.b(e, eps);
                if lb < floor {
                    return Err(LabError::CoefficientFloor(format!(
                        "lambda + b({e:?}, {eps}) = {lb} below floor {floor}"
                    )));
                }
                db = db.max((self.b(e, eps) - self.b(e, 0.0)).abs());
            }
            let mut df: f64 = 0.0;
            let mut dg: f64 = 0.0;
            for &u in &us {
                df = df.max((self.f(u, eps) - self.f(u, 0.0)).abs());
                dg = dg.max((self.g(u, eps) - self.g(u, 0.0)).abs());
            }
            let checks = [
                ("p-gap", dp, self.p_gap(eps)),
                ("eta", dv, self.eta(eps)),
                ("tau", db, self.tau(eps)),
                ("kappa", df, self.kappa(eps)),
                ("xi", dg, self.xi(eps)),
            ];
            for (label, measured, declared) in checks {
                if measured > declared * (1.0 + 1e-9) + slack {
                    return Err(LabError::CoefficientFloor(format!(
                        "{label}({eps}) declared {declared} but sampled {measured}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Largest |f'| and |g'| over sampled states, i.e. the Lipschitz constants
    /// of the reactions at this ε.
    pub fn reaction_lipschitz(&self, eps: f64) -> (f64, f64) {
        let mut lf: f64 = 0.0;
        let mut lg: f64 = 0.0;
        for u in sample_grid(-10.0, 10.0, 2001) {
            lf = lf.max(self.df(u, eps).abs());
            lg = lg.max(self.dg(u, eps).abs());
        }
        (lf, lg)
    }
}

fn sample_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Builder for ad hoc families; every coefficient defaults to zero except
/// p ≡ 1, and every rate function defaults to zero.
pub struct FamilyBuilder {
    family: CoefficientFamily,
}

impl FamilyBuilder {
    fn new(name: impl Into<String>) -> Self {
        let zero: ReactionFn = Arc::new(|_, _| 0.0);
        let zero_rate: RateFn = Arc::new(|_| 0.0);
        Self {
            family: CoefficientFamily {
                name: name.into(),
                p: Arc::new(|_, _| 1.0),
                v: zero.clone(),
                b: Arc::new(|_, _| 0.0),
                lambda: 1.0,
                f: zero.clone(),
                df: zero.clone(),
                g: zero.clone(),
                dg: zero,
                p_gap: zero_rate.clone(),
                eta: zero_rate.clone(),
                tau: zero_rate.clone(),
                kappa: zero_rate.clone(),
                xi: zero_rate,
                m0: 0.5,
                eps_max: 0.5,
                test_mode: false,
            },
        }
    }

    pub fn lambda(mut self, lambda: f64) -> Self {
        self.family.lambda = lambda;
        self
    }

    pub fn diffusion(mut self, p: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.family.p = Arc::new(p);
        self
    }

    pub fn potential(mut self, v: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.family.v = Arc::new(v);
        self
    }

    pub fn boundary_potential(
        mut self,
        b: impl Fn(Endpoint, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.family.b = Arc::new(b);
        self
    }

    pub fn interior_reaction(
        mut self,
        f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        df: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.family.f = Arc::new(f);
        self.family.df = Arc::new(df);
        self
    }

    pub fn boundary_reaction(
        mut self,
        g: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        dg: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.family.g = Arc::new(g);
        self.family.dg = Arc::new(dg);
        self
    }

    /// Declared bounds on ‖p_ε − p_0‖, η, τ, κ, ξ.
    pub fn rates(
        mut self,
        p_gap: impl Fn(f64) -> f64 + Send + Sync + 'static,
        eta: impl Fn(f64) -> f64 + Send + Sync + 'static,
        tau: impl Fn(f64) -> f64 + Send + Sync + 'static,
        kappa: impl Fn(f64) -> f64 + Send + Sync + 'static,
        xi: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.family.p_gap = Arc::new(p_gap);
        self.family.eta = Arc::new(eta);
        self.family.tau = Arc::new(tau);
        self.family.kappa = Arc::new(kappa);
        self.family.xi = Arc::new(xi);
        self
    }

    pub fn m0(mut self, m0: f64) -> Self {
        self.family.m0 = m0;
        self
    }

    pub fn eps_max(mut self, eps_max: f64) -> Self {
        self.family.eps_max = eps_max;
        self
    }

    /// Allow m0 = 0 (e.g. Neumann data with λ = 0) for analytic oracles.
    pub fn test_mode(mut self, on: bool) -> Self {
        self.family.test_mode = on;
        self
    }

    pub fn build(self) -> CoefficientFamily {
        self.family
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clamp_is_identity_inside_and_saturates_outside() {
        assert_eq!(smooth_clamp(2.5, 3.0, 1.0), 2.5);
        assert_eq!(smooth_clamp(-3.0, 3.0, 1.0), -3.0);
        assert!((smooth_clamp(10.0, 3.0, 1.0) - 3.6).abs() < 1e-15);
        assert!((smooth_clamp(-10.0, 3.0, 1.0) + 3.6).abs() < 1e-15);
        // C¹ and monotone across the blending zone
        let mut prev = smooth_clamp(3.0, 3.0, 1.0);
        for i in 1..=100 {
            let u = 3.0 + i as f64 * 0.01;
            let c = smooth_clamp(u, 3.0, 1.0);
            assert!(c >= prev);
            let fd = (smooth_clamp(u + 1e-6, 3.0, 1.0) - smooth_clamp(u - 1e-6, 3.0, 1.0)) / 2e-6;
            assert!((fd - smooth_clamp_deriv(u, 3.0, 1.0)).abs() < 1e-5);
            prev = c;
        }
    }

    #[test]
    fn default_family_satisfies_declared_bounds() {
        let fam = CoefficientFamily::default_family();
        fam.check_invariants().unwrap();
        assert!((fam.delta(0.1) - 0.425).abs() < 1e-15);
        assert!((fam.delta_linear(0.1) - 0.3).abs() < 1e-15);
        assert_eq!(fam.f(0.0, 0.3), 0.0);
        assert_eq!(fam.g(0.0, 0.3), 0.0);
    }

    #[test]
    fn reaction_derivatives_match_finite_differences() {
        let fam = CoefficientFamily::default_family();
        for &u in &[-4.2, -3.3, -1.0, 0.0, 0.7, 2.9, 3.5] {
            for &eps in &[0.0, 0.1] {
                let h = 1e-6;
                let fd = (fam.f(u + h, eps) - fam.f(u - h, eps)) / (2.0 * h);
                assert!((fd - fam.df(u, eps)).abs() < 1e-5, "f' at {u}");
                let gd = (fam.g(u + h, eps) - fam.g(u - h, eps)) / (2.0 * h);
                assert!((gd - fam.dg(u, eps)).abs() < 1e-7, "g' at {u}");
            }
        }
    }

    #[test]
    fn understated_rate_is_detected() {
        let fam = CoefficientFamily::builder("bad")
            .potential(|x, eps| 2.0 * eps * x)
            .rates(|_| 0.0, |eps| eps, |_| 0.0, |_| 0.0, |_| 0.0)
            .build();
        assert!(matches!(
            fam.check_invariants(),
            Err(LabError::CoefficientFloor(_))
        ));
    }

    #[test]
    fn floor_violation_is_detected_outside_test_mode() {
        let fam = CoefficientFamily::builder("neg")
            .lambda(0.1)
            .m0(0.5)
            .build();
        assert!(fam.check_invariants().is_err());
        assert!(CoefficientFamily::neumann_test(0.0).check_invariants().is_ok());
    }
}
