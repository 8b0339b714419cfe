//! IMEX time stepping of `M u′ + K u = h^ε(u)`: the linear part implicitly,
//! the reaction explicitly.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::banded::{SymTridiagonal, TridiagCholesky};
use crate::dynamics::NonlinearTerm;
use crate::error::{check_len, LabError, Result};
use crate::fem::{h1_norm, DiscreteOperator, DiscreteState};

/// H¹ norm beyond which a trajectory is declared divergent.
pub const DIVERGENCE_GUARD: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// `(M + dt K) u⁺ = M u + dt h(u)`.
    ImexEuler,
    /// Trapezoidal `K`, reaction at an explicit midpoint predictor.
    ImexCn,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub scheme: Scheme,
    pub t_final: f64,
    /// Acceptance threshold (H¹) for the dt-halving certification.
    pub tolerance: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            scheme: Scheme::ImexCn,
            t_final: 1.0,
            tolerance: 1e-4,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(LabError::InvalidArgument(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.t_final >= 0.0) || !(self.tolerance > 0.0) {
            return Err(LabError::InvalidArgument(
                "t_final must be non-negative and tolerance positive".into(),
            ));
        }
        Ok(())
    }
}

/// One-step map with its linear system factored once.
#[derive(Debug, Clone)]
pub struct Stepper<'a> {
    op: &'a DiscreteOperator,
    nl: &'a NonlinearTerm,
    scheme: Scheme,
    dt: f64,
    lhs: TridiagCholesky,
    explicit: SymTridiagonal,
    half_lhs: Option<TridiagCholesky>,
}

impl<'a> Stepper<'a> {
    pub fn new(
        op: &'a DiscreteOperator,
        nl: &'a NonlinearTerm,
        scheme: Scheme,
        dt: f64,
    ) -> Result<Self> {
        check_len(op.dim(), nl.dim())?;
        if !(dt > 0.0) {
            return Err(LabError::InvalidArgument(format!("dt = {dt} must be positive")));
        }
        let theta = match scheme {
            Scheme::ImexEuler => 1.0,
            Scheme::ImexCn => 0.5,
        };
        let lhs = SymTridiagonal::lin_comb(1.0, op.m(), theta * dt, op.k()).cholesky()?;
        let explicit = SymTridiagonal::lin_comb(1.0, op.m(), -(1.0 - theta) * dt, op.k());
        let half_lhs = match scheme {
            Scheme::ImexEuler => None,
            Scheme::ImexCn => {
                Some(SymTridiagonal::lin_comb(1.0, op.m(), 0.25 * dt, op.k()).cholesky()?)
            }
        };
        Ok(Self {
            op,
            nl,
            scheme,
            dt,
            lhs,
            explicit,
            half_lhs,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn step(&self, u: &DiscreteState) -> Result<DiscreteState> {
        check_len(self.op.dim(), u.len())?;
        let next = match self.scheme {
            Scheme::ImexEuler => {
                let rhs = self.op.m().matvec(u) + self.nl.load(u) * self.dt;
                self.lhs.solve(&rhs)
            }
            Scheme::ImexCn => {
                // predictor: trapezoidal half step, reaction frozen at u
                let half_lhs = self.half_lhs.as_ref().expect("factored for IMEX-CN");
                let half_rhs = self.op.m().matvec(u) - self.op.k().matvec(u) * (0.25 * self.dt)
                    + self.nl.load(u) * (0.5 * self.dt);
                let u_half = half_lhs.solve(&half_rhs);
                let rhs = self.explicit.matvec(u) + self.nl.load(&u_half) * self.dt;
                self.lhs.solve(&rhs)
            }
        };
        if next.iter().any(|x| !x.is_finite()) {
            return Err(LabError::Divergence("non-finite state".into()));
        }
        Ok(next)
    }
}

/// One step of the configured scheme.
pub fn step(
    u: &DiscreteState,
    op: &DiscreteOperator,
    nl: &NonlinearTerm,
    cfg: &IntegratorConfig,
) -> Result<DiscreteState> {
    cfg.validate()?;
    Stepper::new(op, nl, cfg.scheme, cfg.dt)?.step(u)
}

/// Number of full steps of size `dt` in `t`, and the remainder.
pub(crate) fn split_time(t: f64, dt: f64) -> (usize, f64) {
    let q = t / dt;
    let r = q.round();
    if (q - r).abs() <= 1e-9 * r.max(1.0) {
        (r as usize, 0.0)
    } else {
        let k = q.floor();
        (k as usize, t - k * dt)
    }
}

/// `u(t)` from `u0`, with a final partial step if `t` is not a multiple of
/// `dt`.
pub fn evolve(
    u0: &DiscreteState,
    t: f64,
    op: &DiscreteOperator,
    nl: &NonlinearTerm,
    cfg: &IntegratorConfig,
) -> Result<DiscreteState> {
    let mut last = u0.clone();
    evolve_observed(u0, t, op, nl, cfg, |_, u| {
        last = u.clone();
        true
    })?;
    Ok(last)
}

/// Integrate from `u0` up to `t`, calling `observe(time, state)` after every
/// step (and once at t = 0). Integration stops early when `observe` returns
/// `false`. Returns the time reached.
pub fn evolve_observed(
    u0: &DiscreteState,
    t: f64,
    op: &DiscreteOperator,
    nl: &NonlinearTerm,
    cfg: &IntegratorConfig,
    mut observe: impl FnMut(f64, &DiscreteState) -> bool,
) -> Result<f64> {
    cfg.validate()?;
    check_len(op.dim(), u0.len())?;
    if !(t >= 0.0) {
        return Err(LabError::InvalidArgument(format!("negative time {t}")));
    }
    if !observe(0.0, u0) {
        return Ok(0.0);
    }
    let (steps, rem) = split_time(t, cfg.dt);
    let stepper = Stepper::new(op, nl, cfg.scheme, cfg.dt)?;
    let mut u = u0.clone();
    let mut time = 0.0;
    let guard = |u: &DiscreteState, time: f64| -> Result<()> {
        let n = h1_norm(op, u)?;
        if n > DIVERGENCE_GUARD {
            return Err(LabError::Divergence(format!(
                "H1 norm {n:e} at t = {time}; reduce dt"
            )));
        }
        Ok(())
    };
    for k in 1..=steps {
        u = stepper.step(&u)?;
        time = k as f64 * cfg.dt;
        guard(&u, time)?;
        if !observe(time, &u) {
            return Ok(time);
        }
    }
    if rem > 0.0 {
        u = Stepper::new(op, nl, cfg.scheme, rem)?.step(&u)?;
        time = t;
        guard(&u, time)?;
        observe(time, &u);
    }
    Ok(time)
}

/// States every `every` steps (plus the final one) up to time `t`.
pub fn trajectory(
    u0: &DiscreteState,
    t: f64,
    op: &DiscreteOperator,
    nl: &NonlinearTerm,
    cfg: &IntegratorConfig,
    every: usize,
) -> Result<Vec<(f64, DiscreteState)>> {
    let every = every.max(1);
    let mut out = Vec::new();
    let mut count = 0usize;
    let mut pending: Option<(f64, DiscreteState)> = None;
    evolve_observed(u0, t, op, nl, cfg, |time, u| {
        if count % every == 0 {
            out.push((time, u.clone()));
            pending = None;
        } else {
            pending = Some((time, u.clone()));
        }
        count += 1;
        true
    })?;
    out.extend(pending);
    Ok(out)
}

/// Trajectory dump with rows `t, node_0, …, node_n`.
pub fn write_trajectory_csv<W: Write>(mut out: W, traj: &[(f64, DiscreteState)]) -> Result<()> {
    let n = traj.first().map_or(0, |(_, u)| u.len());
    let mut header = vec!["t".to_string()];
    header.extend((0..n).map(|i| format!("node_{i}")));
    writeln!(out, "{}", header.join(","))?;
    for (t, u) in traj {
        let mut row = vec![format!("{t:.16e}")];
        row.extend(u.iter().map(|x| format!("{x:.16e}")));
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Outcome of comparing `T(1)u0` at `dt` and `dt/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DtCertificate {
    pub dt: f64,
    pub horizon: f64,
    pub difference: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Certify that halving `dt` changes `T(horizon)u0` by less than the
/// configured tolerance in H¹.
pub fn certify_dt(
    u0: &DiscreteState,
    horizon: f64,
    op: &DiscreteOperator,
    nl: &NonlinearTerm,
    cfg: &IntegratorConfig,
) -> Result<DtCertificate> {
    let coarse = evolve(u0, horizon, op, nl, cfg)?;
    let half = IntegratorConfig {
        dt: 0.5 * cfg.dt,
        ..*cfg
    };
    let fine = evolve(u0, horizon, op, nl, &half)?;
    let difference = h1_norm(op, &(coarse - fine))?;
    Ok(DtCertificate {
        dt: cfg.dt,
        horizon,
        difference,
        tolerance: cfg.tolerance,
        passed: difference < cfg.tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::CoefficientFamily;
    use crate::fem::assemble_operator;
    use crate::mesh::Mesh1D;
    use crate::spectral::eigenpairs;

    #[test]
    fn euler_step_scales_eigenmode() {
        let fam = CoefficientFamily::robin_test(1.0, 0.5);
        let mesh = Mesh1D::uniform(20).unwrap();
        let op = assemble_operator(&fam, &mesh, 0.0).unwrap();
        let nl = NonlinearTerm::new(&fam, &mesh, 0.0);
        let sys = eigenpairs(&op, 3).unwrap();
        let cfg = IntegratorConfig {
            dt: 0.01,
            scheme: Scheme::ImexEuler,
            ..Default::default()
        };
        let phi = sys.vector(2);
        let next = step(&phi, &op, &nl, &cfg).unwrap();
        assert!((next - &phi / (1.0 + 0.01 * sys.value(2))).amax() < 1e-12);
    }

    #[test]
    fn time_split_handles_partial_steps() {
        assert_eq!(split_time(1.0, 1e-3), (1000, 0.0));
        let (k, r) = split_time(0.0105, 1e-3);
        assert_eq!(k, 10);
        assert!((r - 0.0005).abs() < 1e-15);
        assert_eq!(split_time(0.0, 0.1), (0, 0.0));
    }

    #[test]
    fn evolve_zero_time_is_identity() {
        let fam = CoefficientFamily::default_family();
        let mesh = Mesh1D::uniform(8).unwrap();
        let op = assemble_operator(&fam, &mesh, 0.0).unwrap();
        let nl = NonlinearTerm::new(&fam, &mesh, 0.0);
        let u0 = mesh.interpolate(|x| x - 0.3);
        let u = evolve(&u0, 0.0, &op, &nl, &IntegratorConfig::default()).unwrap();
        assert_eq!(u, u0);
    }

    #[test]
    fn invalid_dt_is_rejected() {
        let cfg = IntegratorConfig {
            dt: 0.0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }
}
