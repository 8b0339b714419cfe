//! Finite-window shadowing of pseudo-trajectories, the Lipschitz-shadowing
//! bound on attractor distances, and reduced attractor samples.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, LabError, Result};
use crate::manifolds::attractor::resample_arc_length;
use crate::manifolds::{curve_hausdorff_points, hausdorff_points, HausdorffResult, Provenance};
use crate::reduction::{DiscreteMap, ReducedSystem};

/// Constants of the Lipschitz shadowing property.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShadowingParams {
    /// Shadowing constant.
    pub l: f64,
    /// Pseudo-trajectory threshold.
    pub delta0: f64,
    /// Finite orbit length of the shadowing solve.
    pub window: usize,
}

impl ShadowingParams {
    pub fn new(l: f64, delta0: f64, window: usize) -> Result<Self> {
        if !(l >= 1.0) || !(delta0 > 0.0) || window < 2 {
            return Err(LabError::InvalidArgument(format!(
                "shadowing parameters need L ≥ 1, δ0 > 0, window ≥ 2 (got {l}, {delta0}, {window})"
            )));
        }
        Ok(Self { l, delta0, window })
    }
}

/// Result of a shadowing solve.
#[derive(Debug, Clone)]
pub struct ShadowOutcome {
    /// The exact orbit found.
    pub orbit: Vec<DVector<f64>>,
    /// `max_k |orbit_k − seq_k|`.
    pub distance: f64,
    /// Defect of the input sequence.
    pub defect: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShadowOptions {
    pub max_newton: usize,
    /// Converged when the orbit defect is below
    /// `abs_tol + rel_tol · (input defect)`.
    pub abs_tol: f64,
    pub rel_tol: f64,
}

impl Default for ShadowOptions {
    fn default() -> Self {
        Self {
            max_newton: 30,
            abs_tol: 1e-9,
            rel_tol: 1e-5,
        }
    }
}

fn orbit_residual(x: &[DVector<f64>], map: &DiscreteMap) -> Result<(Vec<DVector<f64>>, f64)> {
    let mut res = Vec::with_capacity(x.len() - 1);
    let mut worst: f64 = 0.0;
    for k in 0..x.len() - 1 {
        let r = &x[k + 1] - map.eval(&x[k])?;
        worst = worst.max(r.norm());
        res.push(r);
    }
    Ok((res, worst))
}

/// Minimum-norm Newton step `Δ = −Jᵀ (J Jᵀ)⁻¹ F` for the orbit equations
/// `F_k = x_{k+1} − T(x_k)`, whose Jacobian has blocks `−A_k` and `I`.
/// `J Jᵀ` is block tridiagonal with diagonal `A_k A_kᵀ + I` and
/// off-diagonal `−A_{k+1}ᵀ`.
fn min_norm_step(a: &[DMatrix<f64>], f: &[DVector<f64>]) -> Result<Vec<DVector<f64>>> {
    let rows = f.len();
    let m = f[0].len();
    let eye = DMatrix::<f64>::identity(m, m);
    let mut schur = Vec::with_capacity(rows);
    let mut z: Vec<DVector<f64>> = Vec::with_capacity(rows);
    for k in 0..rows {
        let mut d = &a[k] * a[k].transpose() + &eye;
        let mut rhs = f[k].clone();
        if k > 0 {
            // E_{k−1} = −A_kᵀ, so E_{k−1}ᵀ S⁻¹ E_{k−1} = A_k S⁻¹ A_kᵀ
            let prev: &nalgebra::Cholesky<f64, nalgebra::Dyn> = &schur[k - 1];
            d -= &a[k] * prev.solve(&a[k].transpose());
            rhs += &a[k] * prev.solve(&z[k - 1]);
        }
        let chol = d.cholesky().ok_or_else(|| LabError::NotPositiveDefinite("shadowing normal equations".into()))?;
        schur.push(chol);
        z.push(rhs);
    }
    let mut y = vec![DVector::zeros(m); rows];
    for k in (0..rows).rev() {
        let mut rhs = z[k].clone();
        if k + 1 < rows {
            rhs += a[k + 1].transpose() * &y[k + 1];
        }
        y[k] = schur[k].solve(&rhs);
    }
    let mut step = Vec::with_capacity(rows + 1);
    for j in 0..=rows {
        let mut jt = DVector::zeros(m);
        if j >= 1 {
            jt += &y[j - 1];
        }
        if j < rows {
            jt -= a[j].transpose() * &y[j];
        }
        step.push(-jt);
    }
    Ok(step)
}

/// Find an exact orbit of `map` near the pseudo-trajectory `seq` by
/// least-squares Newton on the window equations (free endpoints). Jacobians
/// are refreshed only when the defect stops halving.
pub fn shadow_solve(
    seq: &[DVector<f64>],
    map: &DiscreteMap,
    opts: &ShadowOptions,
) -> Result<ShadowOutcome> {
    if seq.len() < 2 {
        return Err(LabError::InvalidArgument(
            "a pseudo-trajectory needs at least two points".into(),
        ));
    }
    for x in seq {
        check_len(map.dim(), x.len())?;
    }
    let mut x = seq.to_vec();
    // values and Jacobians at the pseudo-trajectory in one pass
    let mut jac_init = Vec::with_capacity(x.len() - 1);
    let mut f = Vec::with_capacity(x.len() - 1);
    let mut defect: f64 = 0.0;
    for k in 0..x.len() - 1 {
        let (tx, a) = map.eval_with_jacobian(&x[k])?;
        let r = &x[k + 1] - tx;
        defect = defect.max(r.norm());
        f.push(r);
        jac_init.push(a);
    }
    let tol = opts.abs_tol + opts.rel_tol * defect;
    let mut current = defect;
    let mut jac: Option<Vec<DMatrix<f64>>> = Some(jac_init);
    let mut iterations = 0;
    while current > tol {
        if iterations >= opts.max_newton {
            return Err(LabError::ShadowingFailed(format!(
                "defect {current:e} after {iterations} Newton steps"
            )));
        }
        let a = match jac.take() {
            Some(a) => a,
            None => x[..x.len() - 1]
                .iter()
                .map(|p| map.eval_with_jacobian(p).map(|(_, j)| j))
                .collect::<Result<Vec<_>>>()?,
        };
        let step = min_norm_step(&a, &f)?;
        let trial: Vec<DVector<f64>> = x.iter().zip(&step).map(|(p, s)| p + s).collect();
        let (ft, rt) = orbit_residual(&trial, map)?;
        iterations += 1;
        if !rt.is_finite() {
            return Err(LabError::ShadowingFailed("non-finite orbit".into()));
        }
        let keep_jacobian = rt <= 0.5 * current;
        x = trial;
        f = ft;
        current = rt;
        if keep_jacobian {
            jac = Some(a);
        }
    }
    let distance = x
        .iter()
        .zip(seq)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    Ok(ShadowOutcome {
        orbit: x,
        distance,
        defect,
        iterations,
    })
}

/// An axis-aligned box in reduced coordinates with a sampling grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Neighborhood {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Grid nodes per dimension used to sample sup-norms.
    pub grid_n: usize,
}

impl Neighborhood {
    /// Bounding box of `points`, enlarged on each side by `rel` times the
    /// extent plus `abs`.
    pub fn around(points: &[DVector<f64>], rel: f64, abs: f64, grid_n: usize) -> Result<Self> {
        let first = points.first().ok_or(LabError::EmptySet)?;
        let m = first.len();
        let mut lower = first.as_slice().to_vec();
        let mut upper = lower.clone();
        for p in points {
            for i in 0..m {
                lower[i] = lower[i].min(p[i]);
                upper[i] = upper[i].max(p[i]);
            }
        }
        for i in 0..m {
            let pad = rel * (upper[i] - lower[i]) + abs;
            lower[i] -= pad;
            upper[i] += pad;
        }
        Ok(Self {
            lower,
            upper,
            grid_n: grid_n.max(2),
        })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, v: &DVector<f64>) -> bool {
        v.len() == self.dim()
            && v.iter()
                .enumerate()
                .all(|(i, x)| *x >= self.lower[i] && *x <= self.upper[i])
    }

    /// Tensor grid of `grid_n` nodes per dimension.
    pub fn samples(&self) -> Vec<DVector<f64>> {
        let m = self.dim();
        let n = self.grid_n;
        let total = n.pow(m as u32);
        (0..total)
            .map(|mut idx| {
                DVector::from_fn(m, |i, _| {
                    let k = idx % n;
                    idx /= n;
                    self.lower[i] + (self.upper[i] - self.lower[i]) * k as f64 / (n - 1) as f64
                })
            })
            .collect()
    }

    pub fn sample_uniform(&self, rng: &mut impl Rng) -> DVector<f64> {
        DVector::from_fn(self.dim(), |i, _| rng.gen_range(self.lower[i]..=self.upper[i]))
    }
}

/// `sup` over the neighbourhood grid of `|T_a(v) − T_b(v)|`.
pub fn map_gap(ta: &DiscreteMap, tb: &DiscreteMap, nbhd: &Neighborhood) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for v in nbhd.samples() {
        worst = worst.max((ta.eval(&v)? - tb.eval(&v)?).norm());
    }
    Ok(worst)
}

/// `L · sup_N |T_a − T_b|`, the Lipschitz-shadowing bound on the Hausdorff
/// distance between the attractors of the two maps. Every point of the
/// `enclosed` attractor samples must lie in the neighbourhood.
pub fn lpsp_attractor_bound(
    ta: &DiscreteMap,
    tb: &DiscreteMap,
    nbhd: &Neighborhood,
    l: f64,
    enclosed: &[&ReducedAttractor],
) -> Result<f64> {
    for att in enclosed {
        if let Some(p) = att.points.iter().find(|p| !nbhd.contains(p)) {
            return Err(LabError::OutsideNeighborhood(format!(
                "attractor sample point {:?} is outside the neighbourhood",
                p.as_slice()
            )));
        }
    }
    Ok(l * map_gap(ta, tb, nbhd)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShadowingConfig {
    pub window: usize,
    pub trials: usize,
    /// Size of the injected one-step errors.
    pub defect: f64,
    pub seed: u64,
    /// Trials re-run with a doubled window to certify window insensitivity.
    pub certify_trials: usize,
    pub options: ShadowOptions,
}

impl Default for ShadowingConfig {
    fn default() -> Self {
        Self {
            window: 200,
            trials: 100,
            defect: 1e-4,
            seed: 0x5eed_5ad0,
            certify_trials: 10,
            options: ShadowOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShadowingTrial {
    pub trial: usize,
    pub defect: f64,
    pub shadow_distance: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowCheck {
    pub l_window: f64,
    pub l_doubled: f64,
    pub relative_change: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShadowingReport {
    pub trials: Vec<ShadowingTrial>,
    /// Running maximum of distance/defect.
    pub l_hat: f64,
    pub ratio_min: f64,
    pub ratio_max: f64,
    /// `ratio_max / ratio_min`.
    pub spread: f64,
    pub params: ShadowingParams,
    pub window_check: Option<WindowCheck>,
}

/// A pseudo-trajectory of `len` points from `v0` with one-step errors of
/// exact size `defect` in random directions.
pub fn noisy_orbit(
    map: &DiscreteMap,
    v0: &DVector<f64>,
    len: usize,
    defect: f64,
    rng: &mut impl Rng,
) -> Result<Vec<DVector<f64>>> {
    let m = map.dim();
    let mut out = vec![v0.clone()];
    while out.len() < len {
        let next = map.eval(out.last().unwrap())?;
        let dir = loop {
            let d = DVector::from_fn(m, |_, _| rng.gen_range(-1.0..1.0));
            let n = d.norm();
            if n > 1e-3 && n <= 1.0 {
                break d / n;
            }
        };
        out.push(next + dir * defect);
    }
    Ok(out)
}

fn run_trials(
    map: &DiscreteMap,
    nbhd: &Neighborhood,
    cfg: &ShadowingConfig,
    count: usize,
    window: usize,
) -> Result<Vec<ShadowingTrial>> {
    let mut out = Vec::with_capacity(count);
    for trial in 0..count {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (trial as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let v0 = nbhd.sample_uniform(&mut rng);
        let seq = noisy_orbit(map, &v0, window, cfg.defect, &mut rng)?;
        let res = shadow_solve(&seq, map, &cfg.options)?;
        out.push(ShadowingTrial {
            trial,
            defect: res.defect,
            shadow_distance: res.distance,
            ratio: res.distance / res.defect,
        });
    }
    Ok(out)
}

/// Shadow `cfg.trials` random pseudo-trajectories started in the
/// neighbourhood and estimate the shadowing constant from the ratios
/// distance/defect; `L = max(1, L̂)`.
pub fn shadowing_trials(
    map: &DiscreteMap,
    nbhd: &Neighborhood,
    cfg: &ShadowingConfig,
) -> Result<ShadowingReport> {
    if cfg.trials == 0 {
        return Err(LabError::InvalidArgument("no shadowing trials".into()));
    }
    let trials = run_trials(map, nbhd, cfg, cfg.trials, cfg.window)?;
    let ratio_min = trials.iter().map(|t| t.ratio).fold(f64::INFINITY, f64::min);
    let ratio_max = trials.iter().map(|t| t.ratio).fold(0.0, f64::max);
    let window_check = if cfg.certify_trials > 0 {
        let count = cfg.certify_trials.min(cfg.trials);
        let base = trials[..count].iter().map(|t| t.ratio).fold(0.0, f64::max);
        let doubled = run_trials(map, nbhd, cfg, count, 2 * cfg.window)?
            .iter()
            .map(|t| t.ratio)
            .fold(0.0, f64::max);
        let relative_change = (doubled - base).abs() / base;
        Some(WindowCheck {
            l_window: base,
            l_doubled: doubled,
            relative_change,
            passed: relative_change < 0.1,
        })
    } else {
        None
    };
    Ok(ShadowingReport {
        l_hat: ratio_max,
        ratio_min,
        ratio_max,
        spread: ratio_max / ratio_min,
        params: ShadowingParams::new(ratio_max.max(1.0), cfg.defect, cfg.window)?,
        trials,
        window_check,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReducedAttractorConfig {
    pub launch: f64,
    pub arrival_tol: f64,
    pub t_max: f64,
    pub samples_per_connection: usize,
}

impl Default for ReducedAttractorConfig {
    fn default() -> Self {
        Self {
            launch: 1e-4,
            arrival_tol: 1e-6,
            t_max: 500.0,
            samples_per_connection: 200,
        }
    }
}

/// Attractor sample of a reduced system in its `R^M` coordinates.
#[derive(Debug, Clone)]
pub struct ReducedAttractor {
    pub points: Vec<DVector<f64>>,
    pub provenance: Vec<Provenance>,
    pub connections: Vec<Vec<usize>>,
    pub equilibria: Vec<DVector<f64>>,
    pub unstable_dims: Vec<usize>,
    pub resolution: f64,
}

impl ReducedAttractor {
    /// Exact point-set Hausdorff distances (Euclidean in `R^M`, which is the
    /// L² norm of the lifted head since the modes are `M`-orthonormal).
    pub fn hausdorff(&self, other: &Self) -> Result<HausdorffResult> {
        hausdorff_points(&self.points, &other.points)
    }

    pub fn curve_hausdorff(&self, other: &Self) -> Result<HausdorffResult> {
        curve_hausdorff_points(&self.points, &self.connections, &other.points, &other.connections)
    }
}

fn rk4_step(sys: &ReducedSystem, v: &DVector<f64>, h: f64, warm: Option<&DVector<f64>>) -> Result<(DVector<f64>, DVector<f64>)> {
    let (k1, w1) = sys.rhs(v, warm)?;
    let (k2, w2) = sys.rhs(&(v + &k1 * (0.5 * h)), Some(&w1))?;
    let (k3, w3) = sys.rhs(&(v + &k2 * (0.5 * h)), Some(&w2))?;
    let (k4, w4) = sys.rhs(&(v + &k3 * h), Some(&w3))?;
    Ok((v + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0), w4))
}

/// Equilibria of the reduced flow reached by Newton from `guesses`, plus
/// arc-length samples of the orbits leaving each equilibrium with a
/// one-dimensional unstable space.
pub fn reduced_attractor(
    sys: &ReducedSystem,
    guesses: &[DVector<f64>],
    cfg: &ReducedAttractorConfig,
) -> Result<ReducedAttractor> {
    let mut equilibria: Vec<DVector<f64>> = Vec::new();
    for g in guesses {
        if let Ok(v) = sys.equilibrium(g) {
            if equilibria.iter().all(|e| (e - &v).norm() > 1e-8) {
                equilibria.push(v);
            }
        }
    }
    if equilibria.is_empty() {
        return Err(LabError::NoEquilibria);
    }
    equilibria.sort_by(|a, b| a[0].total_cmp(&b[0]));
    let mut unstable_dims = Vec::new();
    let mut directions = Vec::new();
    for e in &equilibria {
        let (_, j, _) = sys.rhs_jacobian(e, None)?;
        let eig = j.complex_eigenvalues();
        if eig.iter().any(|z| z.re.abs() < 1e-8) {
            return Err(LabError::NonHyperbolic(
                eig.iter().map(|z| z.re.abs()).fold(f64::INFINITY, f64::min),
            ));
        }
        let unstable: Vec<f64> = eig.iter().filter(|z| z.re > 0.0).map(|z| z.re).collect();
        unstable_dims.push(unstable.len());
        directions.push(match unstable.len() {
            0 => None,
            1 => {
                let mu = unstable[0];
                let shifted = &j - DMatrix::identity(j.nrows(), j.ncols()) * mu;
                let svd = shifted.svd(false, true);
                let vt = svd.v_t.ok_or_else(|| LabError::Singular("SVD without right vectors".into()))?;
                let (imin, _) = svd
                    .singular_values
                    .iter()
                    .enumerate()
                    .fold((0, f64::INFINITY), |b, (i, &s)| if s < b.1 { (i, s) } else { b });
                Some(vt.row(imin).transpose().normalize())
            }
            d => {
                return Err(LabError::InvalidArgument(format!(
                    "reduced equilibrium with {d} unstable directions"
                )))
            }
        });
    }
    let mut points = equilibria.clone();
    let mut provenance = vec![Provenance::Equilibrium; points.len()];
    let mut connections = Vec::new();
    let mut resolution: f64 = 0.0;
    let h = sys.cfg.inner_dt;
    for (src, dir) in directions.iter().enumerate() {
        let Some(dir) = dir else { continue };
        for sign in [1.0, -1.0] {
            let mut v = &equilibria[src] + dir * (sign * cfg.launch);
            let mut kept = vec![equilibria[src].clone(), v.clone()];
            let mut warm = None;
            let mut t = 0.0;
            let target = loop {
                if let Some(j) = (0..equilibria.len())
                    .find(|&j| j != src && (&v - &equilibria[j]).norm() <= cfg.arrival_tol)
                {
                    break j;
                }
                if t > cfg.t_max {
                    return Err(LabError::NoConvergence {
                        method: "reduced connecting orbit",
                        iterations: (t / h) as usize,
                    });
                }
                let (next, w) = rk4_step(sys, &v, h, warm.as_ref())?;
                v = next;
                warm = Some(w);
                t += h;
                if (&v - kept.last().unwrap()).norm() >= 1e-5 {
                    kept.push(v.clone());
                }
            };
            kept.push(equilibria[target].clone());
            let samples = resample_arc_length(&kept, cfg.samples_per_connection, |d| Ok(d.norm()))?;
            for w in samples.windows(2) {
                resolution = resolution.max((&w[1] - &w[0]).norm());
            }
            let mut idx = vec![src];
            for s in &samples[1..samples.len() - 1] {
                idx.push(points.len());
                points.push(s.clone());
                provenance.push(Provenance::HeteroclinicSample);
            }
            idx.push(target);
            connections.push(idx);
        }
    }
    Ok(ReducedAttractor {
        points,
        provenance,
        connections,
        equilibria,
        unstable_dims,
        resolution,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn min_norm_step_solves_the_linearized_equations() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = 2;
        let rows = 6;
        let a: Vec<DMatrix<f64>> = (0..rows)
            .map(|_| DMatrix::from_fn(m, m, |_, _| rng.gen_range(-2.0..2.0)))
            .collect();
        let f: Vec<DVector<f64>> = (0..rows)
            .map(|_| DVector::from_fn(m, |_, _| rng.gen_range(-1.0..1.0)))
            .collect();
        let step = min_norm_step(&a, &f).unwrap();
        for k in 0..rows {
            let lin = -&a[k] * &step[k] + &step[k + 1];
            assert!((lin + &f[k]).amax() < 1e-10, "row {k}");
        }
        // dense minimum-norm oracle
        let n = (rows + 1) * m;
        let mut j = DMatrix::zeros(rows * m, n);
        let mut fv = DVector::zeros(rows * m);
        for k in 0..rows {
            j.view_mut((k * m, k * m), (m, m)).copy_from(&(-&a[k]));
            j.view_mut((k * m, (k + 1) * m), (m, m)).copy_from(&DMatrix::identity(m, m));
            fv.rows_mut(k * m, m).copy_from(&f[k]);
        }
        let dense = -j.pseudo_inverse(1e-14).unwrap() * fv;
        for k in 0..=rows {
            assert!((dense.rows(k * m, m) - &step[k]).amax() < 1e-9);
        }
    }

    #[test]
    fn neighbourhood_grid_covers_corners() {
        let pts = vec![
            DVector::from_vec(vec![0.0, 1.0]),
            DVector::from_vec(vec![2.0, -1.0]),
        ];
        let nb = Neighborhood::around(&pts, 0.0, 0.5, 3).unwrap();
        let s = nb.samples();
        assert_eq!(s.len(), 9);
        assert!(s.iter().all(|p| nb.contains(p)));
        assert!(s.iter().any(|p| p[0] == -0.5 && p[1] == 1.5));
        assert!(!nb.contains(&DVector::from_vec(vec![3.0, 0.0])));
    }
}
