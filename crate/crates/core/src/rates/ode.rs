//! The singularly perturbed ODE example
//! `ε x″ + x′ + μ x = f(x)`, written as the first-order system
//! `x′ = v/ε`, `v′ = −μ x − v/ε + f(x)` with `v = ε x′`, against its limit
//! `x′ = −μ x + f(x)` embedded as `(x, 0)`.
//!
//! Time stepping uses the L-stable two-stage SDIRK scheme, so steps much
//! larger than ε resolve the slow dynamics while damping the fast layer.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::manifolds::attractor::resample_arc_length;
use crate::manifolds::{curve_hausdorff_points, point_segment_distance};
use crate::rates::fit::{fit_rate, linear_regression, FitMode, RateFit, RateSeries};

/// The scalar nonlinearity `f`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OdeNonlinearity {
    /// `f(x) = 2 tanh x`.
    Tanh2,
    /// `f ≡ 0`.
    Zero,
}

impl OdeNonlinearity {
    pub fn f(self, x: f64) -> f64 {
        match self {
            Self::Tanh2 => 2.0 * x.tanh(),
            Self::Zero => 0.0,
        }
    }

    pub fn df(self, x: f64) -> f64 {
        match self {
            Self::Tanh2 => 2.0 / x.cosh().powi(2),
            Self::Zero => 0.0,
        }
    }

    /// `sup |f|`, which bounds every equilibrium by `sup|f| / μ`.
    pub fn bound(self) -> f64 {
        match self {
            Self::Tanh2 => 2.0,
            Self::Zero => 0.0,
        }
    }
}

/// One member of the family: `eps > 0` is the `(x, v)` system, `eps = 0` the
/// scalar limit ODE.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularOde {
    pub mu: f64,
    pub eps: f64,
    pub f: OdeNonlinearity,
}

impl SingularOde {
    pub fn new(mu: f64, eps: f64, f: OdeNonlinearity) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) || !(eps >= 0.0 && eps.is_finite()) {
            return Err(LabError::InvalidArgument(format!(
                "need μ > 0 and ε ≥ 0, got μ = {mu}, ε = {eps}"
            )));
        }
        Ok(Self { mu, eps, f })
    }

    pub fn dim(&self) -> usize {
        if self.eps > 0.0 {
            2
        } else {
            1
        }
    }

    pub fn rhs(&self, y: &DVector<f64>) -> DVector<f64> {
        let x = y[0];
        let slow = -self.mu * x + self.f.f(x);
        if self.eps > 0.0 {
            let v = y[1];
            DVector::from_vec(vec![v / self.eps, slow - v / self.eps])
        } else {
            DVector::from_element(1, slow)
        }
    }

    pub fn jacobian(&self, y: &DVector<f64>) -> DMatrix<f64> {
        let d = -self.mu + self.f.df(y[0]);
        if self.eps > 0.0 {
            let r = 1.0 / self.eps;
            DMatrix::from_row_slice(2, 2, &[0.0, r, d, -r])
        } else {
            DMatrix::from_element(1, 1, d)
        }
    }

    /// Embed a state in the common `(x, v)` phase space.
    pub fn embed(&self, y: &DVector<f64>) -> DVector<f64> {
        if self.eps > 0.0 {
            y.clone()
        } else {
            DVector::from_vec(vec![y[0], 0.0])
        }
    }

    /// Equilibria `μ x = f(x)` (with `v = 0`), ascending, by Newton from a
    /// grid of starts over `[−sup|f|/μ − 1, sup|f|/μ + 1]`.
    pub fn equilibria(&self) -> Vec<DVector<f64>> {
        let r = self.f.bound() / self.mu + 1.0;
        let mut roots: Vec<f64> = Vec::new();
        for i in 0..=80 {
            let mut x = -r + 2.0 * r * i as f64 / 80.0;
            for _ in 0..100 {
                let g = self.mu * x - self.f.f(x);
                let dg = self.mu - self.f.df(x);
                if dg == 0.0 {
                    break;
                }
                let step = g / dg;
                x -= step;
                if step.abs() <= 1e-15 * x.abs().max(1.0) {
                    break;
                }
            }
            let res = (self.mu * x - self.f.f(x)).abs();
            if res <= 1e-13 && !roots.iter().any(|&z| (z - x).abs() < 1e-8) {
                roots.push(x);
            }
        }
        roots.sort_by(f64::total_cmp);
        roots
            .into_iter()
            .map(|x| {
                if self.eps > 0.0 {
                    DVector::from_vec(vec![x, 0.0])
                } else {
                    DVector::from_element(1, x)
                }
            })
            .collect()
    }

    /// Unstable eigen-directions (real eigenvalues with positive real part)
    /// of the linearization at `y`.
    pub fn unstable_directions(&self, y: &DVector<f64>) -> Vec<DVector<f64>> {
        let j = self.jacobian(y);
        let n = j.nrows();
        if n == 1 {
            return if j[(0, 0)] > 0.0 {
                vec![DVector::from_element(1, 1.0)]
            } else {
                Vec::new()
            };
        }
        // 2×2: eigenvalues of [[0, a], [c, −a]] are real
        let (a, c) = (j[(0, 1)], j[(1, 0)]);
        let tr = -a;
        let det = -a * c;
        let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
        let mut out = Vec::new();
        for s in [(tr + disc) / 2.0, (tr - disc) / 2.0] {
            if s > 0.0 {
                // (J − s) w = 0 with first row (−s, a)
                let w = DVector::from_vec(vec![a, s]);
                out.push(w.normalize());
            }
        }
        out
    }
}

/// Diagonal coefficient of the L-stable two-stage SDIRK scheme.
const SDIRK_GAMMA: f64 = 1.0 - std::f64::consts::FRAC_1_SQRT_2;
/// Consecutive step halvings tolerated before the integrator gives up.
const MAX_HALVINGS: usize = 20;

/// Solve the stage equation `Y = base + hγ F(Y)` by Newton from `base`.
fn sdirk_stage(sys: &SingularOde, base: &DVector<f64>, h: f64) -> Option<DVector<f64>> {
    let n = base.len();
    let mut y = base.clone();
    let scale = 1.0 + base.amax();
    for _ in 0..12 {
        let r = &y - base - sys.rhs(&y) * (h * SDIRK_GAMMA);
        let jm = DMatrix::identity(n, n) - sys.jacobian(&y) * (h * SDIRK_GAMMA);
        let dy = jm.lu().solve(&r)?;
        y -= &dy;
        if !y.iter().all(|v| v.is_finite()) {
            return None;
        }
        if dy.amax() <= 1e-13 * scale {
            return Some(y);
        }
    }
    None
}

/// One SDIRK2 step of size `h`; `None` when a stage Newton solve fails.
pub fn sdirk2_step(sys: &SingularOde, y: &DVector<f64>, h: f64) -> Option<DVector<f64>> {
    let g = SDIRK_GAMMA;
    let y1 = sdirk_stage(sys, y, h)?;
    let k1 = sys.rhs(&y1);
    let base = y + &k1 * (h * (1.0 - g));
    let y2 = sdirk_stage(sys, &base, h)?;
    let k2 = sys.rhs(&y2);
    Some(y + (k1 * (1.0 - g) + k2 * g) * h)
}

/// Integrate from `y0` with nominal step `dt` up to `t`, calling
/// `observe(time, state)` after every step (and at t = 0); stops early when
/// `observe` returns `false`. A failed step is retried with half the step
/// size; more than 20 consecutive halvings are reported as a stiffness
/// failure. Returns the time reached.
pub fn sdirk2_evolve(
    sys: &SingularOde,
    y0: &DVector<f64>,
    t: f64,
    dt: f64,
    mut observe: impl FnMut(f64, &DVector<f64>) -> bool,
) -> Result<f64> {
    if !(dt > 0.0) || !(t >= 0.0) {
        return Err(LabError::InvalidArgument(format!("need dt > 0, t ≥ 0; got {dt}, {t}")));
    }
    if !observe(0.0, y0) {
        return Ok(0.0);
    }
    let mut y = y0.clone();
    let mut time = 0.0;
    while time < t - 1e-12 * t.max(1.0) {
        let target = dt.min(t - time);
        let mut h = target;
        let mut done = 0.0;
        let mut halvings = 0;
        while done < target - 1e-15 * target {
            let h_try = h.min(target - done);
            match sdirk2_step(sys, &y, h_try) {
                Some(next) => {
                    y = next;
                    done += h_try;
                }
                None => {
                    halvings += 1;
                    if halvings > MAX_HALVINGS {
                        return Err(LabError::Stiffness(format!(
                            "step rejected {MAX_HALVINGS} times in a row at t = {time:e}"
                        )));
                    }
                    h *= 0.5;
                }
            }
        }
        time += target;
        if !observe(time, &y) {
            return Ok(time);
        }
    }
    Ok(time)
}

/// Settings of the ODE example.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OdeExampleConfig {
    /// Nominal SDIRK step for the attractor connections.
    pub dt: f64,
    /// Nominal SDIRK step for the attraction and growth measurements.
    pub measure_dt: f64,
    /// Launch offset along unstable eigenvectors.
    pub launch: f64,
    /// Arrival radius around the target equilibrium.
    pub arrival_tol: f64,
    /// Give up on a connection after this time.
    pub t_max: f64,
    /// Arc-length samples per connection.
    pub samples_per_connection: usize,
    /// Trial states for the attraction and Lipschitz measurements.
    pub trials: usize,
    pub seed: u64,
}

impl Default for OdeExampleConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            measure_dt: 1e-2,
            launch: 1e-4,
            arrival_tol: 1e-6,
            t_max: 500.0,
            samples_per_connection: 200,
            trials: 24,
            seed: 7,
        }
    }
}

/// Equilibria plus arc-length-sampled connections, in `(x, v)` coordinates.
#[derive(Debug, Clone)]
pub struct OdeAttractor {
    pub points: Vec<DVector<f64>>,
    pub curves: Vec<Vec<usize>>,
    pub equilibrium_count: usize,
}

impl OdeAttractor {
    /// Distance from an embedded state to the sample, curve-aware.
    pub fn distance(&self, p: &DVector<f64>) -> f64 {
        let to_points = self
            .points
            .iter()
            .map(|q| (p - q).norm())
            .fold(f64::INFINITY, f64::min);
        self.curves
            .iter()
            .flat_map(|c| c.windows(2))
            .map(|w| point_segment_distance(p, &self.points[w[0]], &self.points[w[1]]))
            .fold(to_points, f64::min)
    }
}

/// Attractor sample of one member of the family.
pub fn ode_attractor(sys: &SingularOde, cfg: &OdeExampleConfig) -> Result<OdeAttractor> {
    let eq = sys.equilibria();
    if eq.is_empty() {
        return Err(LabError::NoEquilibria);
    }
    let mut points: Vec<DVector<f64>> = eq.iter().map(|e| sys.embed(e)).collect();
    let mut curves = Vec::new();
    for (i, e) in eq.iter().enumerate() {
        for dir in sys.unstable_directions(e) {
            for sign in [1.0, -1.0] {
                let start = e + &dir * (sign * cfg.launch);
                let mut traj = vec![sys.embed(&start)];
                let mut arrived = None;
                let mut last = sys.embed(&start);
                sdirk2_evolve(sys, &start, cfg.t_max, cfg.dt, |_, y| {
                    let p = sys.embed(y);
                    if (&p - &last).norm() >= 1e-4 {
                        traj.push(p.clone());
                        last = p.clone();
                    }
                    for (j, other) in eq.iter().enumerate() {
                        if j != i && (y - other).norm() <= cfg.arrival_tol {
                            arrived = Some(j);
                            return false;
                        }
                    }
                    true
                })?;
                let Some(j) = arrived else {
                    return Err(LabError::NoConvergence {
                        method: "ODE connection (no equilibrium reached)",
                        iterations: (cfg.t_max / cfg.dt) as usize,
                    });
                };
                let mut curve = vec![sys.embed(e)];
                curve.extend(traj);
                curve.push(sys.embed(&eq[j]));
                let sampled =
                    resample_arc_length(&curve, cfg.samples_per_connection, |d| Ok(d.norm()))?;
                let base = points.len();
                curves.push((base..base + sampled.len()).collect());
                points.extend(sampled);
            }
        }
    }
    Ok(OdeAttractor {
        points,
        curves,
        equilibrium_count: eq.len(),
    })
}

/// Decay rate of `max_trials dist(T(t)y, A)`: log-linear fit over the part
/// of the decay with distance in `[1e−5, 1e−2]`.
pub fn attraction_rate(
    sys: &SingularOde,
    attractor: &OdeAttractor,
    trials: &[DVector<f64>],
    cfg: &OdeExampleConfig,
) -> Result<f64> {
    let horizon = 60.0;
    let every = 0.25;
    let n_obs = (horizon / every) as usize;
    let mut envelope = vec![0.0f64; n_obs + 1];
    for y0 in trials {
        let mut next = 0usize;
        sdirk2_evolve(sys, y0, horizon, cfg.measure_dt, |t, y| {
            if t >= next as f64 * every - 1e-9 && next <= n_obs {
                envelope[next] = envelope[next].max(attractor.distance(&sys.embed(y)));
                next += 1;
            }
            true
        })?;
    }
    let pts: Vec<(f64, f64)> = envelope
        .iter()
        .enumerate()
        .filter(|(_, &d)| (1e-5..=1e-2).contains(&d))
        .map(|(k, &d)| (k as f64 * every, d.ln()))
        .collect();
    if pts.len() < 4 {
        return Err(LabError::NonDecay(format!(
            "only {} envelope samples in the fit window",
            pts.len()
        )));
    }
    let (slope, _, _) = linear_regression(&pts);
    if !(slope < 0.0) {
        return Err(LabError::NonDecay(format!("envelope slope {slope}")));
    }
    Ok(-slope)
}

/// Growth exponent of nearby-pair separations: the largest
/// `ln(|Δ(t)|/|Δ(0)|)/t` over pairs at distance 1e−6 and t ∈ {1, 2, 3}.
pub fn lipschitz_growth(
    sys: &SingularOde,
    bases: &[DVector<f64>],
    cfg: &OdeExampleConfig,
    seed: u64,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sep0 = 1e-6;
    let mut best = f64::NEG_INFINITY;
    for y0 in bases {
        let dir = DVector::from_fn(y0.len(), |_, _| rng.gen_range(-1.0..1.0)).normalize();
        let mut a_states = Vec::new();
        sdirk2_evolve(sys, y0, 3.0, cfg.measure_dt, |t, y| {
            if (t - t.round()).abs() < 1e-9 && t > 0.5 {
                a_states.push(sys.embed(y));
            }
            true
        })?;
        let y1 = y0 + &dir * sep0;
        let mut k = 0;
        sdirk2_evolve(sys, &y1, 3.0, cfg.measure_dt, |t, y| {
            if (t - t.round()).abs() < 1e-9 && t > 0.5 {
                let sep = (sys.embed(y) - &a_states[k]).norm();
                best = best.max((sep / sep0).ln() / t.round());
                k += 1;
            }
            true
        })?;
    }
    Ok(best)
}

/// One ε of the ODE sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdeRow {
    pub eps: f64,
    pub d_h: f64,
    pub gamma_hat: f64,
    pub l_hat: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OdeExampleReport {
    pub rows: Vec<OdeRow>,
    pub series: RateSeries,
    /// Power fit of `d_H` against ε; `None` when every gap vanishes.
    pub fit: Option<RateFit>,
    /// Smallest measured attraction rate over the sweep.
    pub gamma_hat: f64,
    /// Largest measured growth exponent over the sweep.
    pub l_hat: f64,
    /// `γ̂ / (γ̂ + L̂)`.
    pub predicted_exponent: f64,
    /// Limit equilibria `x` with `μ x = f(x)`.
    pub limit_equilibria: Vec<f64>,
}

/// Hausdorff distance between the sampled attractors of the ε system and
/// the embedded limit system over a sweep, with the measured attraction and
/// growth rates that enter the predicted exponent.
pub fn ode_example_experiment(
    mu: f64,
    f: OdeNonlinearity,
    eps_sweep: &[f64],
    cfg: &OdeExampleConfig,
) -> Result<OdeExampleReport> {
    let limit = SingularOde::new(mu, 0.0, f)?;
    let a0 = ode_attractor(&limit, cfg)?;
    let limit_equilibria: Vec<f64> = limit.equilibria().iter().map(|e| e[0]).collect();
    let span = limit_equilibria
        .iter()
        .fold(0.0f64, |m, x| m.max(x.abs()))
        .max(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    // trial states in a box around the attractor; v scaled like ε·x′
    let raw: Vec<(f64, f64)> = (0..cfg.trials.max(1))
        .map(|_| (rng.gen_range(-2.0..2.0) * span, rng.gen_range(-1.0..1.0)))
        .collect();
    let mut rows = Vec::new();
    for &eps in eps_sweep {
        if eps == 0.0 {
            rows.push(OdeRow {
                eps,
                d_h: 0.0,
                gamma_hat: f64::NAN,
                l_hat: f64::NAN,
            });
            continue;
        }
        let sys = SingularOde::new(mu, eps, f)?;
        let a_eps = ode_attractor(&sys, cfg)?;
        if a_eps.equilibrium_count != a0.equilibrium_count {
            return Err(LabError::Structural(format!(
                "{} equilibria at ε = {eps}, {} in the limit",
                a_eps.equilibrium_count, a0.equilibrium_count
            )));
        }
        let d_h = curve_hausdorff_points(&a_eps.points, &a_eps.curves, &a0.points, &a0.curves)?
            .symmetric;
        let trials: Vec<DVector<f64>> = raw
            .iter()
            .map(|&(x, v)| DVector::from_vec(vec![x, v * eps]))
            .collect();
        let (gamma_hat, l_hat) = if f == OdeNonlinearity::Zero {
            (mu, 0.0)
        } else {
            let gamma_hat = attraction_rate(&sys, &a_eps, &trials, cfg)?;
            let bases: Vec<DVector<f64>> = a_eps.points.iter().step_by(25).cloned().collect();
            let l_hat = lipschitz_growth(&sys, &bases, cfg, cfg.seed ^ eps.to_bits())?;
            (gamma_hat, l_hat)
        };
        rows.push(OdeRow {
            eps,
            d_h,
            gamma_hat,
            l_hat,
        });
    }
    let pairs: Vec<(f64, f64)> = rows.iter().map(|r| (r.eps, r.d_h)).collect();
    let series = RateSeries::new(&pairs, |e| e);
    let fit = if rows.iter().any(|r| r.d_h > 0.0) {
        Some(fit_rate(&series, FitMode::Power)?)
    } else {
        None
    };
    let measured: Vec<&OdeRow> = rows.iter().filter(|r| r.eps > 0.0).collect();
    let gamma_hat = measured.iter().map(|r| r.gamma_hat).fold(f64::INFINITY, f64::min);
    let l_hat = measured.iter().map(|r| r.l_hat).fold(f64::NEG_INFINITY, f64::max).max(0.0);
    Ok(OdeExampleReport {
        rows,
        series,
        fit,
        gamma_hat,
        l_hat,
        predicted_exponent: gamma_hat / (gamma_hat + l_hat),
        limit_equilibria,
    })
}
