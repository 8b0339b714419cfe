//! Equi-attraction bounds: attractor distance from semigroup convergence
//! plus uniform attraction.
//!
//! If every attractor attracts uniformly with envelope `Θ(t)` and the
//! semigroups satisfy `‖T_ε(t)x − T_0(t)x‖ ≤ C e^{Lt} δ`, then
//! `d_H(A_ε, A_0) ≤ min_ν 2 (C e^{L Θ⁻¹(ν)} δ + ν)`. For `Θ(t) = c e^{−γt}`
//! the minimum is `c̄ δ^{γ/(γ+L)}` in closed form.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Constants of the equi-attraction bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateBoundParams {
    /// Prefactor `C` of the semigroup convergence estimate.
    pub c_conv: f64,
    /// Lipschitz growth exponent `L`.
    pub l: f64,
    /// Attraction exponent `γ` of an exponential envelope.
    pub gamma: f64,
    /// Envelope prefactor `c`.
    pub c: f64,
    /// Linear decay rate `α`.
    pub alpha_decay: f64,
    /// Dual exponent `β ∈ [1/4, 1/2]`; labels bound shapes only.
    pub beta: f64,
    /// Interpolation exponent `θ ∈ (0, 1/2]`.
    pub theta: f64,
}

impl Default for RateBoundParams {
    fn default() -> Self {
        Self {
            c_conv: 1.0,
            l: 1.0,
            gamma: 1.0,
            c: 1.0,
            alpha_decay: 1.0,
            beta: 0.5,
            theta: 0.5,
        }
    }
}

impl RateBoundParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.c_conv, self.l, self.gamma, self.c, self.alpha_decay];
        if positive.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
            return Err(LabError::InvalidArgument(
                "C, L, γ, c and α must be positive and finite".into(),
            ));
        }
        if !(self.theta > 0.0 && self.theta <= 0.5) {
            return Err(LabError::InvalidArgument(format!(
                "θ = {} outside (0, 1/2]",
                self.theta
            )));
        }
        if !(0.25..=0.5).contains(&self.beta) {
            return Err(LabError::InvalidArgument(format!(
                "β = {} outside [1/4, 1/2]",
                self.beta
            )));
        }
        Ok(())
    }

    /// Inverse of the exponential envelope `Θ(t) = c e^{−γt}`, defined on
    /// `(0, c]`.
    pub fn exponential_theta_inverse(&self) -> impl Fn(f64) -> f64 + '_ {
        move |nu: f64| (self.c / nu).ln() / self.gamma
    }

    /// Range `(ν_min, ν_max)` of the exponential envelope used as bracket.
    pub fn exponential_range(&self) -> (f64, f64) {
        (self.c * (-100.0f64).exp(), self.c)
    }
}

/// Outcome of the numeric minimization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    pub value: f64,
    /// Minimizer `ν*` (0 in the zero-perturbation limit).
    pub nu: f64,
    /// The perturbation was zero; the infimum 0 is approached as ν → 0⁺.
    pub zero_perturbation: bool,
}

const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// `min_ν 2 (C e^{L Θ⁻¹(ν)} δ + ν)` over `ν ∈ nu_range`, by golden-section
/// search in `log ν` to relative tolerance 1e−10. The objective is first
/// scanned on a coarse grid; a non-unimodal profile or a minimum on the
/// bracket edge is an error.
pub fn equi_attraction_bound(
    params: &RateBoundParams,
    theta_inverse: impl Fn(f64) -> f64,
    nu_range: (f64, f64),
    delta: f64,
) -> Result<BoundResult> {
    params.validate()?;
    if !(delta >= 0.0) {
        return Err(LabError::InvalidArgument(format!("δ = {delta} must be ≥ 0")));
    }
    if delta == 0.0 {
        return Ok(BoundResult {
            value: 0.0,
            nu: 0.0,
            zero_perturbation: true,
        });
    }
    let (lo, hi) = nu_range;
    if !(lo > 0.0 && hi > lo) {
        return Err(LabError::Bracket(format!("invalid ν range ({lo}, {hi})")));
    }
    let objective = |s: f64| {
        let nu = s.exp();
        2.0 * (params.c_conv * (params.l * theta_inverse(nu)).exp() * delta + nu)
    };
    let (a0, b0) = (lo.ln(), hi.ln());
    // coarse unimodality scan
    let n = 1024;
    let grid: Vec<f64> = (0..=n)
        .map(|i| objective(a0 + (b0 - a0) * i as f64 / n as f64))
        .collect();
    let imin = grid
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |b, (i, &v)| if v < b.1 { (i, v) } else { b })
        .0;
    if imin == 0 || imin == n {
        return Err(LabError::Bracket(format!(
            "minimum at the edge of the ν range ({lo:e}, {hi:e})"
        )));
    }
    let tol = |x: f64, y: f64| 1e-12 * x.abs().max(y.abs()).max(f64::MIN_POSITIVE);
    for i in 1..imin {
        if grid[i] > grid[i - 1] + tol(grid[i], grid[i - 1]) {
            return Err(LabError::Bracket("objective is not unimodal".into()));
        }
    }
    for i in imin + 1..=n {
        if grid[i] < grid[i - 1] - tol(grid[i], grid[i - 1]) {
            return Err(LabError::Bracket("objective is not unimodal".into()));
        }
    }
    let step = (b0 - a0) / n as f64;
    let (mut a, mut b) = (a0 + step * (imin - 1) as f64, a0 + step * (imin + 1) as f64);
    let mut x1 = b - GOLDEN * (b - a);
    let mut x2 = a + GOLDEN * (b - a);
    let (mut f1, mut f2) = (objective(x1), objective(x2));
    for _ in 0..500 {
        if (b - a) <= 1e-10 * (1.0 + 0.5 * (a + b).abs()) * 1e-2 {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - GOLDEN * (b - a);
            f1 = objective(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + GOLDEN * (b - a);
            f2 = objective(x2);
        }
    }
    let s = 0.5 * (a + b);
    Ok(BoundResult {
        value: objective(s),
        nu: s.exp(),
        zero_perturbation: false,
    })
}

/// Exponent `l = γ/(γ+L)` and prefactor `c̄` of the closed-form minimum for
/// an exponential envelope:
/// `c̄ = 2 [(L/γ)^{−L/(γ+L)} + (L/γ)^{γ/(γ+L)}] c^{L/(γ+L)} C^{γ/(γ+L)}`,
/// so that the bound is `c̄ δ^l`.
pub fn exponential_rate_bound(params: &RateBoundParams) -> Result<(f64, f64)> {
    params.validate()?;
    let (g, l) = (params.gamma, params.l);
    let r = l / g;
    let exponent = g / (g + l);
    let prefactor = 2.0
        * (r.powf(-l / (g + l)) + r.powf(exponent))
        * params.c.powf(l / (g + l))
        * params.c_conv.powf(exponent);
    Ok((exponent, prefactor))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_case_has_exponent_one_half() {
        let p = RateBoundParams {
            gamma: 2.5,
            l: 2.5,
            ..Default::default()
        };
        assert_eq!(exponential_rate_bound(&p).unwrap().0, 0.5);
    }

    #[test]
    fn unit_case_is_zero_point_four() {
        let p = RateBoundParams::default();
        let r = equi_attraction_bound(&p, p.exponential_theta_inverse(), p.exponential_range(), 0.01)
            .unwrap();
        assert!((r.value - 0.4).abs() < 1e-10);
        let (l, c) = exponential_rate_bound(&p).unwrap();
        assert!((c * 0.01f64.powf(l) - 0.4).abs() < 1e-14);
    }

    #[test]
    fn zero_perturbation_is_flagged() {
        let p = RateBoundParams::default();
        let r = equi_attraction_bound(&p, p.exponential_theta_inverse(), p.exponential_range(), 0.0)
            .unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.zero_perturbation);
    }

    #[test]
    fn non_unimodal_objective_is_rejected() {
        let p = RateBoundParams::default();
        // a wiggly inverse envelope
        let wiggly = |nu: f64| (1.0 / nu).ln() + 3.0 * (10.0 * nu.ln()).sin();
        assert!(matches!(
            equi_attraction_bound(&p, wiggly, (1e-6, 1.0), 0.01),
            Err(LabError::Bracket(_))
        ));
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        let p = RateBoundParams {
            theta: 0.7,
            ..Default::default()
        };
        assert!(p.validate().is_err());
        let p = RateBoundParams {
            beta: 0.1,
            ..Default::default()
        };
        assert!(p.validate().is_err());
    }
}
