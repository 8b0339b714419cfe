//! Local unstable manifolds as graphs over the unstable eigenspace,
//! computed by iterating the Lyapunov–Perron transform on a grid.
//!
//! Around an equilibrium `u*` write `u = u* + Ψ z` in the `M`-orthonormal
//! eigenbasis of the linearization pencil `(J, M)`, `J = K − Dh(u*)`. With
//! eigenvalues `μ` the modal equation is `z′ = −μ z + Ψᵀ R(Ψ z)`, where `R`
//! is the nonlinear remainder of `h` at `u*`. Unstable coordinates `v`
//! (μ < 0) parametrize the manifold; the stable coordinates are
//! `y = s(v)` with
//!
//! `s(Θ)_k = ∫_{−T}^0 e^{μ_k r} ρ_k(v(r), s(v(r))) dr`,
//!
//! `v` solving the unstable equation backward from `v(0) = Θ`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::banded::SymTridiagonal;
use crate::dynamics::{evolve_observed, linearization, IntegratorConfig, NonlinearTerm};
use crate::error::{LabError, Result};
use crate::family::CoefficientFamily;
use crate::fem::{assemble_operator, h1_norm, DiscreteOperator, DiscreteState};
use crate::linalg::generalized_eigen;
use crate::mesh::Mesh1D;
use crate::rates::fit::linear_regression;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GraphConfig {
    /// Half-width of the box in unstable coordinates.
    pub box_radius: f64,
    /// Grid nodes per unstable dimension.
    pub grid_n: usize,
    /// RK4 step of the backward unstable flow.
    pub tau: f64,
    /// Stop when the sup-grid change (H¹) falls below this.
    pub tol: f64,
    /// The backward horizon T satisfies `e^{−αT} ≤ truncation`, α the
    /// slowest stable rate.
    pub truncation: f64,
    pub max_iters: usize,
    /// Box halvings allowed when the transform fails to contract.
    pub max_halvings: usize,
    /// Drop the nonlinear remainder (linearized dynamics).
    pub zero_remainder: bool,
    pub hyperbolicity_margin: f64,
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self {
            box_radius: 0.25,
            grid_n: 81,
            tau: 0.01,
            tol: 1e-8,
            truncation: 1e-8,
            max_iters: 60,
            max_halvings: 10,
            zero_remainder: false,
            hyperbolicity_margin: 1e-6,
        }
    }
}

/// Splitting of the state space at an equilibrium.
#[derive(Debug, Clone)]
pub struct ModalFrame {
    pub base: DiscreteState,
    /// All pencil eigenvalues, ascending.
    pub mu: DVector<f64>,
    /// `M`-orthonormal eigenvectors.
    pub psi: DMatrix<f64>,
    /// `Ψᵀ`, cached for projections of loads.
    psi_t: DMatrix<f64>,
    /// `Ψᵀ M`, cached for splitting states.
    psi_t_m: DMatrix<f64>,
    pub unstable_dim: usize,
    jac: SymTridiagonal,
    h_base: DVector<f64>,
}

impl ModalFrame {
    pub fn new(
        op: &DiscreteOperator,
        nl: &NonlinearTerm,
        base: &DiscreteState,
        margin: f64,
    ) -> Result<Self> {
        let j = linearization(op, nl, base);
        let (mu, psi) = generalized_eigen(&j, op.m())?;
        let closest = mu.iter().fold(f64::INFINITY, |m, x| m.min(x.abs()));
        if closest < margin {
            return Err(LabError::NonHyperbolic(closest));
        }
        let unstable_dim = mu.iter().filter(|&&x| x < 0.0).count();
        let psi_t = psi.transpose();
        let psi_t_m = op.m().matmat(&psi).transpose();
        Ok(Self {
            base: base.clone(),
            mu,
            psi,
            psi_t,
            psi_t_m,
            unstable_dim,
            jac: nl.jacobian(base),
            h_base: nl.load(base),
        })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    /// Modal coordinates of `u − u*`.
    pub fn coordinates(&self, u: &DiscreteState) -> DVector<f64> {
        &self.psi_t_m * (u - &self.base)
    }

    /// `u* + Ψ z`.
    pub fn state(&self, z: &DVector<f64>) -> DiscreteState {
        &self.base + &self.psi * z
    }

    /// Modal projection `Ψᵀ R(w)` of the remainder
    /// `R(w) = h(u*+w) − h(u*) − Dh(u*) w`.
    pub fn remainder(&self, nl: &NonlinearTerm, w: &DVector<f64>) -> DVector<f64> {
        let r = nl.load(&(&self.base + w)) - &self.h_base - self.jac.matvec(w);
        &self.psi_t * r
    }
}

/// A converged Lyapunov–Perron graph.
#[derive(Debug, Clone)]
pub struct ManifoldGraph {
    pub frame: ModalFrame,
    pub eps: f64,
    pub box_radius: f64,
    pub grid_n: usize,
    /// Stable coordinates at each grid node (row-major for two dimensions).
    pub grid: Vec<DVector<f64>>,
    /// `sup ‖s(v)‖_{H¹}` over the grid.
    pub d_sup: f64,
    /// Largest H¹ Lipschitz quotient between neighbouring grid nodes.
    pub delta_lip: f64,
    /// Observed contraction factor of the transform.
    pub theta_contraction: f64,
    pub iterations: usize,
    pub halvings: usize,
    pub final_change: f64,
    op: DiscreteOperator,
    nl: NonlinearTerm,
    stable_gram: DMatrix<f64>,
    unstable_gram: DMatrix<f64>,
}

fn grid_axis(radius: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| -radius + 2.0 * radius * i as f64 / (n - 1) as f64)
        .collect()
}

/// Multilinear interpolation on the uniform box grid, clamped to the box.
fn interpolate(grid: &[DVector<f64>], radius: f64, n: usize, v: &[f64]) -> DVector<f64> {
    let h = 2.0 * radius / (n - 1) as f64;
    let locate = |x: f64| {
        let t = ((x + radius) / h).clamp(0.0, (n - 1) as f64);
        let i = (t.floor() as usize).min(n - 2);
        (i, t - i as f64)
    };
    match v.len() {
        1 => {
            let (i, a) = locate(v[0]);
            &grid[i] * (1.0 - a) + &grid[i + 1] * a
        }
        2 => {
            let (i, a) = locate(v[0]);
            let (j, b) = locate(v[1]);
            let at = |i: usize, j: usize| &grid[i * n + j];
            at(i, j) * ((1.0 - a) * (1.0 - b))
                + at(i + 1, j) * (a * (1.0 - b))
                + at(i, j + 1) * ((1.0 - a) * b)
                + at(i + 1, j + 1) * (a * b)
        }
        _ => unreachable!("grid dimension is 1 or 2"),
    }
}

/// `∫_0^τ e^{−μσ} dσ` and `∫_0^τ σ e^{−μσ} dσ / τ`, stable for small μτ.
fn exp_weights(mu: f64, tau: f64) -> (f64, f64) {
    let x = mu * tau;
    if x.abs() < 1e-4 {
        // series: I0 = τ(1 − x/2 + x²/6), I1/τ = τ(1/2 − x/3 + x²/8)
        (
            tau * (1.0 - x / 2.0 + x * x / 6.0),
            tau * (0.5 - x / 3.0 + x * x / 8.0),
        )
    } else {
        let e = (-x).exp();
        ((1.0 - e) / mu, (1.0 - e * (1.0 + x)) / (mu * mu * tau))
    }
}

struct Transform<'a> {
    frame: &'a ModalFrame,
    nl: &'a NonlinearTerm,
    du: usize,
    tau: f64,
    steps: usize,
    zero_remainder: bool,
    w0: Vec<f64>,
    w1: Vec<f64>,
    decay: Vec<f64>,
}

impl<'a> Transform<'a> {
    fn new(frame: &'a ModalFrame, nl: &'a NonlinearTerm, cfg: &GraphConfig) -> Self {
        let du = frame.unstable_dim;
        let alpha = frame.mu[du];
        let horizon = (1.0 / cfg.truncation).ln() / alpha;
        let steps = (horizon / cfg.tau).ceil() as usize;
        let mut w0 = Vec::new();
        let mut w1 = Vec::new();
        let mut decay = Vec::new();
        for k in du..frame.dim() {
            let mu = frame.mu[k];
            let (a, b) = exp_weights(mu, cfg.tau);
            w0.push(a);
            w1.push(b);
            decay.push((-mu * cfg.tau).exp());
        }
        Self {
            frame,
            nl,
            du,
            tau: cfg.tau,
            steps,
            zero_remainder: cfg.zero_remainder,
            w0,
            w1,
            decay,
        }
    }

    /// Modal remainder at unstable coordinates `v` with stable part `y`.
    fn rho(&self, v: &[f64], y: &DVector<f64>) -> DVector<f64> {
        let n = self.frame.dim();
        if self.zero_remainder {
            return DVector::zeros(n);
        }
        let mut z = DVector::zeros(n);
        z.rows_mut(0, self.du).copy_from_slice(v);
        z.rows_mut(self.du, n - self.du).copy_from(y);
        let w = &self.frame.psi * z;
        self.frame.remainder(self.nl, &w)
    }

    fn apply(&self, grid: &[DVector<f64>], radius: f64, n_grid: usize, theta: &[f64]) -> DVector<f64> {
        let du = self.du;
        let ns = self.frame.dim() - du;
        let mu = &self.frame.mu;
        let rhs = |v: &[f64]| -> (Vec<f64>, DVector<f64>) {
            let y = interpolate(grid, radius, n_grid, v);
            let rho = self.rho(v, &y);
            let dv: Vec<f64> = (0..du).map(|i| -mu[i] * v[i] + rho[i]).collect();
            (dv, rho.rows(du, ns).into_owned())
        };
        let mut v = theta.to_vec();
        let mut acc = DVector::zeros(ns);
        let mut weight: Vec<f64> = vec![1.0; ns];
        // G at the right end of the current interval
        let (mut k1, mut g_right) = rhs(&v);
        let h = -self.tau;
        for _ in 0..self.steps {
            // RK4 step backward in time
            let shift = |base: &[f64], k: &[f64], c: f64| -> Vec<f64> {
                base.iter().zip(k).map(|(b, k)| b + c * k).collect()
            };
            let (k2, _) = rhs(&shift(&v, &k1, 0.5 * h));
            let (k3, _) = rhs(&shift(&v, &k2, 0.5 * h));
            let (k4, _) = rhs(&shift(&v, &k3, h));
            for i in 0..du {
                v[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            let (k1_next, g_left) = rhs(&v);
            // interval [r − τ, r]: e^{μr}[G_r I0 + (G_{r−τ} − G_r) I1/τ]
            for k in 0..ns {
                acc[k] += weight[k]
                    * (g_right[k] * self.w0[k] + (g_left[k] - g_right[k]) * self.w1[k]);
                weight[k] *= self.decay[k];
            }
            k1 = k1_next;
            g_right = g_left;
        }
        acc
    }
}

/// Iterate the Lyapunov–Perron transform at the equilibrium `base` until the
/// sup-grid change drops below `cfg.tol`. When the transform does not
/// contract the box radius is halved, up to `cfg.max_halvings` times.
pub fn unstable_graph(
    base: &DiscreteState,
    fam: &CoefficientFamily,
    mesh: &Mesh1D,
    eps: f64,
    cfg: &GraphConfig,
) -> Result<ManifoldGraph> {
    let op = assemble_operator(fam, mesh, eps)?;
    let nl = NonlinearTerm::new(fam, mesh, eps);
    let frame = ModalFrame::new(&op, &nl, base, cfg.hyperbolicity_margin)?;
    let du = frame.unstable_dim;
    if !(1..=2).contains(&du) {
        return Err(LabError::InvalidArgument(format!(
            "unstable dimension {du} is outside the grid range 1..=2"
        )));
    }
    if cfg.grid_n < 2 {
        return Err(LabError::InvalidArgument("grid needs at least two nodes".into()));
    }
    let ns = frame.dim() - du;
    let psi_s = frame.psi.columns(du, ns).into_owned();
    let psi_u = frame.psi.columns(0, du).into_owned();
    let stable_gram = psi_s.transpose() * op.h1().matmat(&psi_s);
    let unstable_gram = psi_u.transpose() * op.h1().matmat(&psi_u);
    let transform = Transform::new(&frame, &nl, cfg);

    let mut radius = cfg.box_radius;
    let mut last_theta = f64::NAN;
    for halvings in 0..=cfg.max_halvings {
        let axis = grid_axis(radius, cfg.grid_n);
        let nodes: Vec<Vec<f64>> = if du == 1 {
            axis.iter().map(|&a| vec![a]).collect()
        } else {
            axis.iter()
                .flat_map(|&a| axis.iter().map(move |&b| vec![a, b]))
                .collect()
        };
        let mut grid = vec![DVector::zeros(ns); nodes.len()];
        let mut prev_change = f64::NAN;
        let mut theta: f64 = 0.0;
        let mut failed = false;
        let mut converged = None;
        for iter in 1..=cfg.max_iters {
            let next: Vec<DVector<f64>> = nodes
                .iter()
                .map(|node| transform.apply(&grid, radius, cfg.grid_n, node))
                .collect();
            let change = next
                .iter()
                .zip(&grid)
                .map(|(a, b)| {
                    let d = a - b;
                    d.dot(&(&stable_gram * &d)).max(0.0).sqrt()
                })
                .fold(0.0, f64::max);
            grid = next;
            if iter >= 2 && prev_change > 100.0 * cfg.tol {
                let ratio = change / prev_change;
                theta = theta.max(ratio);
                if ratio >= 1.0 && iter >= 3 {
                    failed = true;
                    last_theta = ratio;
                    break;
                }
            }
            if !change.is_finite() {
                failed = true;
                last_theta = f64::INFINITY;
                break;
            }
            prev_change = change;
            if change <= cfg.tol {
                converged = Some((iter, change));
                break;
            }
        }
        match converged {
            Some((iterations, final_change)) if !failed => {
                let norm_s = |y: &DVector<f64>| y.dot(&(&stable_gram * y)).max(0.0).sqrt();
                let d_sup = grid.iter().map(norm_s).fold(0.0, f64::max);
                let delta_lip = neighbour_lipschitz(&grid, &nodes, du, cfg.grid_n, &stable_gram, &unstable_gram);
                return Ok(ManifoldGraph {
                    frame,
                    eps,
                    box_radius: radius,
                    grid_n: cfg.grid_n,
                    grid,
                    d_sup,
                    delta_lip,
                    theta_contraction: theta,
                    iterations,
                    halvings,
                    final_change,
                    op,
                    nl,
                    stable_gram,
                    unstable_gram,
                });
            }
            None if !failed => {
                return Err(LabError::NoConvergence {
                    method: "Lyapunov-Perron iteration",
                    iterations: cfg.max_iters,
                })
            }
            _ => radius *= 0.5,
        }
    }
    Err(LabError::ContractionFailure(last_theta))
}

fn neighbour_lipschitz(
    grid: &[DVector<f64>],
    nodes: &[Vec<f64>],
    du: usize,
    n: usize,
    stable_gram: &DMatrix<f64>,
    unstable_gram: &DMatrix<f64>,
) -> f64 {
    let quotient = |a: usize, b: usize| {
        let ds = &grid[a] - &grid[b];
        let dv = DVector::from_iterator(du, nodes[a].iter().zip(&nodes[b]).map(|(x, y)| x - y));
        let num = ds.dot(&(stable_gram * &ds)).max(0.0).sqrt();
        let den = dv.dot(&(unstable_gram * &dv)).max(0.0).sqrt();
        num / den
    };
    let mut best: f64 = 0.0;
    if du == 1 {
        for i in 0..n - 1 {
            best = best.max(quotient(i, i + 1));
        }
    } else {
        for i in 0..n {
            for j in 0..n {
                if i + 1 < n {
                    best = best.max(quotient(i * n + j, (i + 1) * n + j));
                }
                if j + 1 < n {
                    best = best.max(quotient(i * n + j, i * n + j + 1));
                }
            }
        }
    }
    best
}

impl ManifoldGraph {
    pub fn unstable_dim(&self) -> usize {
        self.frame.unstable_dim
    }

    pub fn op(&self) -> &DiscreteOperator {
        &self.op
    }

    pub fn nonlinear(&self) -> &NonlinearTerm {
        &self.nl
    }

    /// Stable coordinates `s(v)`.
    pub fn s(&self, v: &[f64]) -> DVector<f64> {
        interpolate(&self.grid, self.box_radius, self.grid_n, v)
    }

    /// The manifold point `u* + Ψ_u v + Ψ_s s(v)`.
    pub fn lift(&self, v: &[f64]) -> DiscreteState {
        let du = self.unstable_dim();
        let n = self.frame.dim();
        let mut z = DVector::zeros(n);
        z.rows_mut(0, du).copy_from_slice(v);
        z.rows_mut(du, n - du).copy_from(&self.s(v));
        self.frame.state(&z)
    }

    pub fn contains(&self, v: &[f64]) -> bool {
        v.iter().all(|x| x.abs() <= self.box_radius)
    }

    /// Unstable coordinates of `u` and its H¹ distance to the graph along
    /// the stable fibre, `‖Ψ_s (y − s(v))‖_{H¹}`.
    pub fn split_distance(&self, u: &DiscreteState) -> (Vec<f64>, f64) {
        let du = self.unstable_dim();
        let z = self.frame.coordinates(u);
        let v: Vec<f64> = z.rows(0, du).iter().copied().collect();
        let d = z.rows(du, z.len() - du) - self.s(&v);
        let dist = d.dot(&(&self.stable_gram * &d)).max(0.0).sqrt();
        (v, dist)
    }

    /// Grid nodes in unstable coordinates.
    pub fn nodes(&self) -> Vec<Vec<f64>> {
        let axis = grid_axis(self.box_radius, self.grid_n);
        if self.unstable_dim() == 1 {
            axis.iter().map(|&a| vec![a]).collect()
        } else {
            axis.iter()
                .flat_map(|&a| axis.iter().map(move |&b| vec![a, b]))
                .collect()
        }
    }

    /// Largest sampled H¹ Lipschitz quotient of `s` over random pairs in the
    /// box (interpolated, so bounded by `delta_lip` up to rounding).
    pub fn sampled_lipschitz(&self, samples: usize, seed: u64) -> f64 {
        let du = self.unstable_dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = self.box_radius;
        let mut best: f64 = 0.0;
        for _ in 0..samples {
            let a: Vec<f64> = (0..du).map(|_| rng.gen_range(-r..r)).collect();
            let b: Vec<f64> = (0..du).map(|_| rng.gen_range(-r..r)).collect();
            let ds = self.s(&a) - self.s(&b);
            let dv = DVector::from_iterator(du, a.iter().zip(&b).map(|(x, y)| x - y));
            let num = ds.dot(&(&self.stable_gram * &ds)).max(0.0).sqrt();
            let den = dv.dot(&(&self.unstable_gram * &dv)).max(0.0).sqrt();
            if den > 1e-12 {
                best = best.max(num / den);
            }
        }
        best
    }

    /// Largest distance to the graph along the forward flow of the lifted
    /// point `lift(v0)`, while the flow stays inside the box, up to `t`.
    pub fn invariance_defect(&self, v0: &[f64], t: f64, cfg: &IntegratorConfig) -> Result<f64> {
        let u0 = self.lift(v0);
        let mut worst: f64 = 0.0;
        evolve_observed(&u0, t, &self.op, &self.nl, cfg, |_, u| {
            let (v, d) = self.split_distance(u);
            if !self.contains(&v) {
                return false;
            }
            worst = worst.max(d);
            true
        })?;
        Ok(worst)
    }
}

/// Sup-grid H¹ distance between the lifted graphs `u*_a + Ψ_u v + Ψ_s s(v)`
/// of two graphs on the same grid (eigenvector signs are fixed by the
/// largest-entry convention, so the unstable coordinates correspond).
pub fn manifold_gap(a: &ManifoldGraph, b: &ManifoldGraph) -> Result<f64> {
    if a.grid_n != b.grid_n
        || (a.box_radius - b.box_radius).abs() > 1e-15 * a.box_radius
        || a.unstable_dim() != b.unstable_dim()
    {
        return Err(LabError::InvalidArgument(
            "graphs are not defined on the same grid".into(),
        ));
    }
    let mut worst: f64 = 0.0;
    for node in a.nodes() {
        let d = a.lift(&node) - b.lift(&node);
        worst = worst.max(h1_norm(&a.op, &d)?);
    }
    Ok(worst)
}

/// Result of an exponential-attraction measurement.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttractionFit {
    /// Mean fitted decay rate over the trials.
    pub gamma_hat: f64,
    pub gammas: Vec<f64>,
    /// Smallest R² of the per-trial log-linear fits.
    pub min_r2: f64,
    /// First stable eigenvalue of the linearization.
    pub alpha: f64,
}

/// Launch `trials` random states near the base, off the graph, and fit the
/// exponential decay rate of their distance to the graph.
pub fn exponential_attraction_check(
    graph: &ManifoldGraph,
    trials: usize,
    seed: u64,
    cfg: &IntegratorConfig,
) -> Result<AttractionFit> {
    let du = graph.unstable_dim();
    let n = graph.frame.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gammas = Vec::new();
    let mut min_r2: f64 = 1.0;
    let r = graph.box_radius;
    for trial in 0..trials {
        let v0: Vec<f64> = (0..du).map(|_| rng.gen_range(-1e-3 * r..1e-3 * r)).collect();
        let mut z = DVector::zeros(n);
        z.rows_mut(0, du).copy_from_slice(&v0);
        let mut y = graph.s(&v0);
        // off-graph offset in the slowest few stable modes
        for k in 0..3.min(n - du) {
            y[k] += rng.gen_range(0.5..1.0) * 1e-2 * r * if k == 0 { 1.0 } else { 0.5 };
        }
        z.rows_mut(du, n - du).copy_from(&y);
        let u0 = graph.frame.state(&z);
        let mut samples: Vec<(f64, f64)> = Vec::new();
        let horizon = 3.0;
        evolve_observed(&u0, horizon, &graph.op, &graph.nl, cfg, |t, u| {
            let (v, d) = graph.split_distance(u);
            if !graph.contains(&v) {
                return false;
            }
            samples.push((t, d));
            d > 1e-6
        })?;
        // skip the transient of the faster modes, stop above the graph
        // accuracy floor
        let pts: Vec<(f64, f64)> = samples
            .iter()
            .filter(|(t, d)| *t >= 0.2 && *d > 1e-6)
            .map(|(t, d)| (*t, d.ln()))
            .collect();
        if pts.len() < 10 {
            return Err(LabError::NonDecay(format!(
                "trial {trial}: only {} usable samples",
                pts.len()
            )));
        }
        let (slope, _, r2) = linear_regression(&pts);
        if !(slope < 0.0) {
            return Err(LabError::NonDecay(format!(
                "trial {trial}: distance grows with rate {slope}"
            )));
        }
        gammas.push(-slope);
        min_r2 = min_r2.min(r2);
    }
    let gamma_hat = gammas.iter().sum::<f64>() / gammas.len().max(1) as f64;
    Ok(AttractionFit {
        gamma_hat,
        gammas,
        min_r2,
        alpha: graph.frame.mu[du],
    })
}

/// Largest H¹ distance between forward flows of lifted grid points and the
/// trajectories launched from the base along ± the unstable eigenvector
/// (one-dimensional manifolds only).
pub fn trajectory_oracle_distance(
    graph: &ManifoldGraph,
    cfg: &IntegratorConfig,
    flow_time: f64,
) -> Result<f64> {
    if graph.unstable_dim() != 1 {
        return Err(LabError::InvalidArgument(
            "trajectory oracle needs a one-dimensional manifold".into(),
        ));
    }
    let op = &graph.op;
    let chol = op.gram_factor(crate::fem::NormTag::H1)?;
    let psi = graph.frame.psi.column(0).into_owned();
    let scale = 1e-6 / h1_norm(op, &psi)?;
    // oracle curves in Euclidean H¹ coordinates
    let mut curves: Vec<Vec<DVector<f64>>> = Vec::new();
    for sign in [-1.0, 1.0] {
        let u0 = &graph.frame.base + &psi * (sign * scale);
        let mut pts = vec![chol.apply_lt(&graph.frame.base)];
        evolve_observed(&u0, 50.0, op, &graph.nl, cfg, |_, u| {
            let y = chol.apply_lt(u);
            if (&y - pts.last().unwrap()).norm() >= 1e-4 {
                pts.push(y);
            }
            let (v, _) = graph.split_distance(u);
            v[0].abs() <= 1.5 * graph.box_radius
        })?;
        curves.push(pts);
    }
    let mut worst: f64 = 0.0;
    for node in graph.nodes() {
        if node[0].abs() > 0.8 * graph.box_radius {
            continue;
        }
        let u0 = graph.lift(&node);
        let mut probes = Vec::new();
        evolve_observed(&u0, flow_time, op, &graph.nl, cfg, |_, u| {
            probes.push(chol.apply_lt(u));
            true
        })?;
        for p in probes.iter().step_by((probes.len() / 10).max(1)) {
            let d = curves
                .iter()
                .map(|c| crate::manifolds::hausdorff::point_polyline_distance(p, c))
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(d);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_weights_match_quadrature() {
        for &(mu, tau) in &[(1e-6, 0.01), (2.0, 0.01), (500.0, 0.01), (3.0, 0.5)] {
            let (i0, i1) = exp_weights(mu, tau);
            let n = 20000;
            let (mut q0, mut q1) = (0.0, 0.0);
            for k in 0..n {
                let s = (k as f64 + 0.5) * tau / n as f64;
                q0 += (-mu * s).exp() * tau / n as f64;
                q1 += s * (-mu * s).exp() * tau / n as f64 / tau;
            }
            assert!((i0 - q0).abs() < 1e-8 * q0.max(1e-12), "I0 mu={mu}");
            assert!((i1 - q1).abs() < 1e-8 * q1.max(1e-12), "I1 mu={mu}");
        }
    }

    #[test]
    fn interpolation_is_exact_on_linear_data() {
        let n = 5;
        let r = 1.0;
        let axis = grid_axis(r, n);
        let grid: Vec<DVector<f64>> = axis
            .iter()
            .flat_map(|&a| axis.iter().map(move |&b| DVector::from_vec(vec![2.0 * a - b])))
            .collect();
        let val = interpolate(&grid, r, n, &[0.3, -0.45]);
        assert!((val[0] - (0.6 + 0.45)).abs() < 1e-14);
    }
}
