//! Attractor samples: all equilibria plus arc-length samples of the
//! connecting orbits launched along the unstable eigendirections.

use std::io::Write;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::banded::TridiagCholesky;
use crate::dynamics::{
    evolve_observed, find_equilibria, EquilibriumOptions, EquilibriumSet, IntegratorConfig,
    NonlinearTerm,
};
use crate::error::{LabError, Result};
use crate::family::CoefficientFamily;
use crate::fem::{assemble_operator, norm, DiscreteState, NormTag};
use crate::manifolds::graph::ModalFrame;
use crate::manifolds::hausdorff::{curve_hausdorff_distance, hausdorff_distance};
use crate::mesh::Mesh1D;
use crate::rates::fit::{fit_rate, FitMode, RateFit, RateSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Equilibrium,
    HeteroclinicSample,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Equilibrium => "equilibrium",
            Provenance::HeteroclinicSample => "heteroclinic-sample",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AttractorConfig {
    /// Launch offset (in the comparison norm) along unstable directions.
    pub launch: f64,
    /// Arrival radius around the target equilibrium.
    pub arrival_tol: f64,
    /// Give up on a connection after this time.
    pub t_max: f64,
    /// Arc-length samples per connection, endpoints included.
    pub samples_per_connection: usize,
    pub integrator: IntegratorConfig,
    pub equilibria: EquilibriumOptions,
    /// Seed for launch directions of unstable dimensions above 2.
    pub seed: u64,
}

impl Default for AttractorConfig {
    fn default() -> Self {
        Self {
            launch: 1e-4,
            arrival_tol: 1e-6,
            t_max: 500.0,
            samples_per_connection: 200,
            integrator: IntegratorConfig::default(),
            equilibria: EquilibriumOptions::default(),
            seed: 0x5eed_0a77,
        }
    }
}

/// A finite sample of the global attractor at one ε.
#[derive(Debug, Clone)]
pub struct AttractorSample {
    pub points: Vec<DiscreteState>,
    pub provenance: Vec<Provenance>,
    pub norm_tag: NormTag,
    pub eps: f64,
    pub mesh: Mesh1D,
    /// Point indices of each connection, source and target equilibria
    /// included.
    connections: Vec<Vec<usize>>,
    /// `(source, target)` equilibrium indices of each connection.
    pub links: Vec<(usize, usize)>,
    /// Largest gap between consecutive samples of a connection.
    pub resolution: f64,
    pub equilibria: EquilibriumSet,
    gram: TridiagCholesky,
}

impl AttractorSample {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn curves(&self) -> &[Vec<usize>] {
        &self.connections
    }

    pub fn equilibrium_count(&self) -> usize {
        self.equilibria.len()
    }

    /// Points mapped by `Lᵀ` (Gram = L Lᵀ) so that Euclidean distances are
    /// distances in the comparison norm.
    pub fn euclidean_points(&self) -> Vec<DVector<f64>> {
        self.points.iter().map(|u| self.gram.apply_lt(u)).collect()
    }

    /// Distance in the comparison norm from `u` to the nearest sample point.
    pub fn nearest_distance(&self, u: &DiscreteState) -> f64 {
        let y = self.gram.apply_lt(u);
        self.euclidean_points()
            .iter()
            .map(|p| (p - &y).norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// Distance from `u` to the union of connection polylines and equilibria.
    pub fn curve_distance(&self, u: &DiscreteState) -> f64 {
        let y = self.gram.apply_lt(u);
        let pts = self.euclidean_points();
        let mut best = pts
            .iter()
            .map(|p| (p - &y).norm())
            .fold(f64::INFINITY, f64::min);
        for c in &self.connections {
            let curve: Vec<DVector<f64>> = c.iter().map(|&i| pts[i].clone()).collect();
            best = best.min(crate::manifolds::hausdorff::point_polyline_distance(&y, &curve));
        }
        best
    }
}

/// Unstable launch directions: ± the eigenvector for one dimension, 16
/// directions per dimension on the unit circle for two, and seeded random
/// directions on the sphere above that.
fn launch_directions(du: usize, rng: &mut ChaCha8Rng) -> Vec<DVector<f64>> {
    match du {
        0 => Vec::new(),
        1 => vec![DVector::from_element(1, 1.0), DVector::from_element(1, -1.0)],
        2 => (0..32)
            .map(|k| {
                let a = 2.0 * std::f64::consts::PI * k as f64 / 32.0;
                DVector::from_vec(vec![a.cos(), a.sin()])
            })
            .collect(),
        _ => (0..16 * du)
            .map(|_| {
                let v: DVector<f64> = DVector::from_fn(du, |_, _| StandardNormal.sample(rng));
                let n = v.norm();
                v / n
            })
            .collect(),
    }
}

/// Resample a polyline at `count` points uniformly spaced in arc length
/// measured by `dist`.
pub(crate) fn resample_arc_length(
    curve: &[DVector<f64>],
    count: usize,
    dist: impl Fn(&DVector<f64>) -> Result<f64>,
) -> Result<Vec<DVector<f64>>> {
    let mut cum = vec![0.0];
    for w in curve.windows(2) {
        let last = *cum.last().unwrap();
        cum.push(last + dist(&(&w[1] - &w[0]))?);
    }
    let total = *cum.last().unwrap();
    let mut out = Vec::with_capacity(count);
    let mut seg = 0usize;
    for j in 0..count {
        let s = total * j as f64 / (count - 1) as f64;
        while seg + 2 < cum.len() && cum[seg + 1] < s {
            seg += 1;
        }
        let len = cum[seg + 1] - cum[seg];
        let a = if len > 0.0 {
            ((s - cum[seg]) / len).clamp(0.0, 1.0)
        } else {
            0.0
        };
        out.push(&curve[seg] * (1.0 - a) + &curve[seg + 1] * a);
    }
    Ok(out)
}

/// Build the attractor sample of the family at `eps`: every equilibrium
/// plus arc-length samples of the orbits leaving each unstable one.
pub fn build_attractor(
    fam: &CoefficientFamily,
    mesh: &Mesh1D,
    eps: f64,
    cfg: &AttractorConfig,
) -> Result<AttractorSample> {
    let tag = NormTag::H1;
    if cfg.samples_per_connection < 2 {
        return Err(LabError::InvalidArgument(
            "a connection needs at least two samples".into(),
        ));
    }
    let op = assemble_operator(fam, mesh, eps)?;
    let nl = NonlinearTerm::new(fam, mesh, eps);
    let set = find_equilibria(fam, mesh, eps, None, &cfg.equilibria)?;
    if !set.all_hyperbolic() {
        return Err(LabError::NonHyperbolic(cfg.equilibria.hyperbolicity_margin));
    }
    let mut points: Vec<DiscreteState> = set.points.clone();
    let mut provenance = vec![Provenance::Equilibrium; points.len()];
    let mut connections = Vec::new();
    let mut links = Vec::new();
    let mut resolution: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for (src, base) in set.points.iter().enumerate() {
        if set.unstable_dims[src] == 0 {
            continue;
        }
        let frame = ModalFrame::new(&op, &nl, base, cfg.equilibria.hyperbolicity_margin)?;
        let du = frame.unstable_dim;
        for dir in launch_directions(du, &mut rng) {
            let mut w = DVector::zeros(op.dim());
            for i in 0..du {
                w += frame.psi.column(i) * dir[i];
            }
            let w = &w * (cfg.launch / norm(&op, tag, &w)?);
            let u0 = base + w;
            let mut kept = vec![base.clone(), u0.clone()];
            let mut target = None;
            let spacing = 1e-4;
            let mut failure = None;
            let reached = evolve_observed(&u0, cfg.t_max, &op, &nl, &cfg.integrator, |_, u| {
                for (j, e) in set.points.iter().enumerate() {
                    if j == src {
                        continue;
                    }
                    match norm(&op, tag, &(u - e)) {
                        Ok(d) if d <= cfg.arrival_tol => {
                            target = Some(j);
                            return false;
                        }
                        Ok(_) => {}
                        Err(err) => {
                            failure = Some(err);
                            return false;
                        }
                    }
                }
                if norm(&op, tag, &(u - kept.last().unwrap())).unwrap_or(f64::INFINITY) >= spacing {
                    kept.push(u.clone());
                }
                true
            })?;
            if let Some(err) = failure {
                return Err(err);
            }
            let Some(tgt) = target else {
                return Err(LabError::NoConvergence {
                    method: "connecting orbit",
                    iterations: (reached / cfg.integrator.dt) as usize,
                });
            };
            kept.push(set.points[tgt].clone());
            let samples = resample_arc_length(&kept, cfg.samples_per_connection, |d| norm(&op, tag, d))?;
            for w in samples.windows(2) {
                resolution = resolution.max(norm(&op, tag, &(&w[1] - &w[0]))?);
            }
            let mut idx = vec![src];
            for s in &samples[1..samples.len() - 1] {
                idx.push(points.len());
                points.push(s.clone());
                provenance.push(Provenance::HeteroclinicSample);
            }
            idx.push(tgt);
            connections.push(idx);
            links.push((src, tgt));
        }
    }
    Ok(AttractorSample {
        points,
        provenance,
        norm_tag: tag,
        eps,
        mesh: mesh.clone(),
        connections,
        links,
        resolution,
        equilibria: set,
        gram: op.gram_factor(tag)?.clone(),
    })
}

/// Sample file with rows `point_index, provenance, node values…`.
pub fn write_attractor_csv<W: Write>(mut out: W, sample: &AttractorSample) -> Result<()> {
    let n = sample.mesh.n_nodes();
    let mut header = vec!["point_index".to_string(), "provenance".to_string()];
    header.extend((0..n).map(|i| format!("node_{i}")));
    writeln!(out, "{}", header.join(","))?;
    for (i, (u, p)) in sample.points.iter().zip(&sample.provenance).enumerate() {
        let mut row = vec![i.to_string(), p.as_str().to_string()];
        row.extend(u.iter().map(|x| format!("{x:.16e}")));
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// One sweep point of the attractor-rate experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttractorRateRow {
    pub eps: f64,
    pub delta: f64,
    /// Exact point-set Hausdorff distance.
    pub d_h: f64,
    /// Curve-aware Hausdorff distance.
    pub d_h_curve: f64,
    /// Larger of the two samples' resolutions.
    pub resolution: f64,
    /// `d_h / (δ |log δ|)`.
    pub ratio_logcorrected: f64,
    /// The point-set and curve-aware distances disagree by more than 10%,
    /// so the sampling resolution dominates the measurement.
    pub resolution_dominated: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttractorRateReport {
    pub rows: Vec<AttractorRateRow>,
    pub series: RateSeries,
    /// Power and log-corrected fits over the rows not dominated by the
    /// sampling resolution.
    pub fit: Option<RateFit>,
    /// ε at which the equilibrium count changed, if the sweep was cut.
    pub truncated_at: Option<f64>,
    pub equilibrium_count: usize,
}

/// d_H(A_ε, A_0) in H¹ over the sweep, with fits of the resolved rows.
pub fn attractor_rate_experiment(
    fam: &CoefficientFamily,
    mesh: &Mesh1D,
    eps_sweep: &[f64],
    cfg: &AttractorConfig,
) -> Result<AttractorRateReport> {
    let a0 = build_attractor(fam, mesh, 0.0, cfg)?;
    let mut rows = Vec::new();
    let mut truncated_at = None;
    let mut eps_sorted = eps_sweep.to_vec();
    eps_sorted.sort_by(|a, b| a.total_cmp(b));
    // walk ε upward from 0 so that a bifurcation truncates the tail
    for &eps in &eps_sorted {
        let delta = fam.delta(eps);
        if eps == 0.0 {
            rows.push(AttractorRateRow {
                eps,
                delta,
                d_h: 0.0,
                d_h_curve: 0.0,
                resolution: a0.resolution,
                ratio_logcorrected: 0.0,
                resolution_dominated: false,
            });
            continue;
        }
        let ae = build_attractor(fam, mesh, eps, cfg)?;
        if ae.equilibrium_count() != a0.equilibrium_count() {
            truncated_at = Some(eps);
            break;
        }
        let d = hausdorff_distance(&ae, &a0)?.symmetric;
        let dc = curve_hausdorff_distance(&ae, &a0)?.symmetric;
        rows.push(AttractorRateRow {
            eps,
            delta,
            d_h: d,
            d_h_curve: dc,
            resolution: ae.resolution.max(a0.resolution),
            ratio_logcorrected: d / crate::rates::fit::log_corrected_scale(delta),
            resolution_dominated: (d - dc).abs() > 0.1 * dc,
        });
    }
    rows.sort_by(|a, b| b.eps.total_cmp(&a.eps));
    let mut series = RateSeries::default();
    let mut resolved = RateSeries::default();
    for r in &rows {
        series.push(r.eps, r.delta, r.d_h);
        if !r.resolution_dominated {
            resolved.push(r.eps, r.delta, r.d_h);
        }
    }
    let fit = fit_rate(&resolved, FitMode::Logcorrected).ok();
    Ok(AttractorRateReport {
        rows,
        series,
        fit,
        truncated_at,
        equilibrium_count: a0.equilibrium_count(),
    })
}
