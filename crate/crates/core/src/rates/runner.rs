//! Configuration-driven experiment runner.
//!
//! Every experiment produces an [`ExperimentOutcome`]: a numeric table, rate
//! fits, named checks (each tagged with the acceptance criterion it belongs
//! to, if any, and whether it is a hard invariant), and the mesh/dt
//! certification records it relied on. [`write_reports`] turns an outcome
//! into `series.csv`, `fit.json` and `meta.json`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::dynamics::{
    certify_dt, equilibrium_gap, evolve, find_equilibria, semigroup_difference_norm,
    EquilibriumOptions, LinearSemigroup, NonlinearTerm,
};
use crate::error::{LabError, Result};
use crate::family::CoefficientFamily;
use crate::fem::{assemble_operator, h1_norm, operator_gap_norm, DiscreteState, NormTag};
use crate::manifolds::{
    attractor_rate_experiment, exponential_attraction_check, manifold_gap,
    trajectory_oracle_distance, unstable_graph, AttractorConfig, GraphConfig, ManifoldGraph,
};
use crate::mesh::Mesh1D;
use crate::rates::bounds::{equi_attraction_bound, exponential_rate_bound, RateBoundParams};
use crate::rates::config::{ExperimentKind, LabConfig};
use crate::rates::fit::{fit_rate, log_corrected_scale, FitMode, RateFit, RateSeries};
use crate::rates::ode::{ode_attractor, ode_example_experiment, OdeExampleConfig, SingularOde};
use crate::reduction::{
    lpsp_attractor_bound, map_gap, reduce, reduced_attractor, reduced_map, shadowing_trials,
    DiscreteMap, Neighborhood, ReducedAttractor, ReducedAttractorConfig, ReducedSystem,
    ReductionConfig, ShadowingConfig, ShadowingReport,
};
use crate::spectral::{eigenpairs, eigenvalue_gap, projection_gap, spectral_projection};

/// Largest relative change of a certified quantity under mesh doubling.
pub const MESH_TOLERANCE: f64 = 0.02;
/// Random trials of the exponential-attraction fit.
const ATTRACTION_TRIALS: usize = 8;
/// Flow time of the trajectory oracle for unstable manifolds.
const ORACLE_FLOW_TIME: f64 = 0.1;

/// One named pass/fail check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// Acceptance criterion the check belongs to.
    pub criterion: Option<u8>,
    pub value: f64,
    pub threshold: String,
    pub passed: bool,
    /// A failing hard check makes the run exit with an error status.
    pub hard: bool,
}

impl Check {
    fn new(name: &str, criterion: Option<u8>, value: f64, threshold: &str, passed: bool) -> Self {
        Self {
            name: name.to_string(),
            criterion,
            value,
            threshold: threshold.to_string(),
            passed,
            hard: false,
        }
    }

    fn hard(mut self) -> Self {
        self.hard = true;
        self
    }
}

/// A mesh-doubling or dt-halving certification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certification {
    /// `mesh` or `dt`.
    pub kind: String,
    pub quantity: String,
    /// Elements (mesh) or step size (dt) of the production run.
    pub resolution: f64,
    /// The refined resolution (doubled mesh or halved step).
    pub refined: f64,
    pub value: f64,
    pub refined_value: f64,
    pub change: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// A labelled rate fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelledFit {
    pub label: String,
    pub fit: RateFit,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentOutcome {
    pub kind: ExperimentKind,
    /// Column names of `series.csv`.
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// The headline series (ε, δ, value).
    pub series: RateSeries,
    /// The headline fit, if the series supports one.
    pub fit: Option<RateFit>,
    pub fits: Vec<LabelledFit>,
    pub checks: Vec<Check>,
    pub certifications: Vec<Certification>,
    pub notes: Vec<String>,
    /// Experiment-specific structured details.
    pub extra: serde_json::Value,
}

impl ExperimentOutcome {
    fn new(kind: ExperimentKind) -> Self {
        Self {
            kind,
            columns: Vec::new(),
            rows: Vec::new(),
            series: RateSeries::default(),
            fit: None,
            fits: Vec::new(),
            checks: Vec::new(),
            certifications: Vec::new(),
            notes: Vec::new(),
            extra: json!({}),
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// A hard invariant or a certification failed.
    pub fn hard_failure(&self) -> bool {
        self.checks.iter().any(|c| c.hard && !c.passed)
            || self.certifications.iter().any(|c| !c.passed)
    }

    pub fn verdict(&self) -> &'static str {
        if self.passed() && !self.hard_failure() {
            "pass"
        } else {
            "fail"
        }
    }

    /// Checks tagged with one acceptance criterion.
    pub fn criterion_checks(&self, criterion: u8) -> Vec<&Check> {
        self.checks
            .iter()
            .filter(|c| c.criterion == Some(criterion))
            .collect()
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    fn push_fit(&mut self, label: &str, fit: RateFit) {
        self.fits.push(LabelledFit {
            label: label.to_string(),
            fit,
        });
    }

    fn note_excluded(&mut self, fit: &RateFit) {
        for e in &fit.excluded {
            self.notes.push(format!("ε = {e:e} excluded from the fit (zero gap or identity case)"));
        }
    }
}

/// Run the configured experiment.
pub fn run_experiment(cfg: &LabConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    match cfg.experiment.name {
        ExperimentKind::ResolventRate => resolvent_rate(cfg),
        ExperimentKind::EigenRate => eigen_rate(cfg),
        ExperimentKind::ProjectionRate => projection_rate(cfg),
        ExperimentKind::EquilibriaRate => equilibria_rate(cfg),
        ExperimentKind::LinearSemigroupRate => linear_semigroup_rate(cfg),
        ExperimentKind::SemigroupRate => semigroup_rate(cfg),
        ExperimentKind::ManifoldRate => manifold_rate(cfg),
        ExperimentKind::AttractorRate => attractor_rate(cfg),
        ExperimentKind::ReducedMapRate => reduced_map_rate(cfg),
        ExperimentKind::Shadowing => shadowing(cfg),
        ExperimentKind::OdeExample => ode_example(cfg),
        ExperimentKind::EquiAttractionTable => equi_attraction_table(cfg),
    }
}

/// Load a config file, run it and write the reports. Returns the outcome
/// and the directory written.
pub fn run_config_file(path: &Path) -> Result<(ExperimentOutcome, PathBuf)> {
    let cfg = LabConfig::load(path)?;
    let outcome = run_experiment(&cfg)?;
    let dir = write_reports(&outcome, &cfg)?;
    Ok((outcome, dir))
}

fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Write `series.csv`, `fit.json` and `meta.json` into
/// `<output dir>/<experiment name>/` and return that directory.
pub fn write_reports(outcome: &ExperimentOutcome, cfg: &LabConfig) -> Result<PathBuf> {
    let dir = cfg.output_dir().join(outcome.kind.name());
    fs::create_dir_all(&dir)?;
    let mut csv = Vec::new();
    writeln!(csv, "{}", outcome.columns.join(","))?;
    for row in &outcome.rows {
        let cells: Vec<String> = row.iter().map(|&x| fmt_num(x)).collect();
        writeln!(csv, "{}", cells.join(","))?;
    }
    fs::write(dir.join("series.csv"), csv)?;

    let s = &outcome.series;
    let fit = outcome.fit.as_ref();
    let summary = json!({
        "experiment": outcome.kind.name(),
        "eps": s.points.iter().map(|p| p.eps).collect::<Vec<_>>(),
        "delta": s.points.iter().map(|p| p.delta).collect::<Vec<_>>(),
        "value": s.points.iter().map(|p| p.value).collect::<Vec<_>>(),
        "exponent": fit.map(|f| f.exponent),
        "r2": fit.map(|f| f.r_squared),
        "ratio_min": fit.map(|f| f.ratio_min),
        "ratio_max": fit.map(|f| f.ratio_max),
        "verdict": outcome.verdict(),
        "checks": outcome.checks,
        "fits": outcome.fits,
        "notes": outcome.notes,
        "details": outcome.extra,
    });
    fs::write(dir.join("fit.json"), to_json(&summary)?)?;

    let meta = json!({
        "experiment": outcome.kind.name(),
        "seed": cfg.experiment.seed,
        "mesh": cfg.mesh,
        "integrator": cfg.integrator,
        "family": cfg.family,
        "sweep": cfg.sweep.values(),
        "certifications": outcome.certifications,
        "versions": {
            "robinlab": env!("CARGO_PKG_VERSION"),
            "report_format": 1,
        },
    });
    fs::write(dir.join("meta.json"), to_json(&meta)?)?;
    Ok(dir)
}

fn to_json(v: &serde_json::Value) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)
        .map_err(|e| LabError::InvalidArgument(format!("report serialization: {e}")))?;
    s.push('\n');
    Ok(s)
}

// ---------------------------------------------------------------- helpers

fn in_range(x: f64, lo: f64, hi: f64) -> bool {
    x >= lo && x <= hi
}

/// Compare `quantity` at `n` and `2n` elements.
fn mesh_certification(
    cfg: &LabConfig,
    quantity: &str,
    n: usize,
    value_at: impl Fn(&Mesh1D) -> Result<f64>,
    out: &mut ExperimentOutcome,
) -> Result<()> {
    if !cfg.mesh.certify {
        out.notes.push(format!("mesh certification of `{quantity}` skipped by configuration"));
        return Ok(());
    }
    let coarse = value_at(&Mesh1D::uniform(n)?)?;
    let fine = value_at(&Mesh1D::uniform(2 * n)?)?;
    let change = (coarse - fine).abs() / fine.abs().max(f64::MIN_POSITIVE);
    out.certifications.push(Certification {
        kind: "mesh".into(),
        quantity: quantity.into(),
        resolution: n as f64,
        refined: (2 * n) as f64,
        value: coarse,
        refined_value: fine,
        change,
        tolerance: MESH_TOLERANCE,
        passed: change < MESH_TOLERANCE,
    });
    Ok(())
}

/// dt-halving certification of `T(t)u0` at the largest ε.
fn dt_certification(
    cfg: &LabConfig,
    fam: &CoefficientFamily,
    mesh: &Mesh1D,
    eps: f64,
    u0: &DiscreteState,
    t: f64,
    out: &mut ExperimentOutcome,
) -> Result<()> {
    let op = assemble_operator(fam, mesh, eps)?;
    let nl = NonlinearTerm::new(fam, mesh, eps);
    let cert = certify_dt(u0, t, &op, &nl, &cfg.integrator)?;
    out.certifications.push(Certification {
        kind: "dt".into(),
        quantity: format!("H1 change of T({t})u0 at eps = {eps:e}"),
        resolution: cert.dt,
        refined: 0.5 * cert.dt,
        value: cert.difference,
        refined_value: 0.0,
        change: cert.difference,
        tolerance: cert.tolerance,
        passed: cert.passed,
    });
    Ok(())
}

fn largest_positive(sweep: &[f64]) -> Result<f64> {
    sweep
        .iter()
        .copied()
        .filter(|&e| e > 0.0)
        .fold(None, |m: Option<f64>, e| Some(m.map_or(e, |m| m.max(e))))
        .ok_or_else(|| LabError::InvalidArgument("the sweep has no positive ε".into()))
}

/// Fit the series, recording exclusions; `None` with a note when there are
/// too few usable points.
fn try_fit(series: &RateSeries, mode: FitMode, notes: &mut Vec<String>) -> Option<RateFit> {
    match fit_rate(series, mode) {
        Ok(f) => Some(f),
        Err(e) => {
            notes.push(format!("no {mode:?} fit: {e}"));
            None
        }
    }
}

fn exponent_check(
    name: &str,
    criterion: Option<u8>,
    fit: Option<&RateFit>,
    lo: f64,
    hi: f64,
) -> Check {
    let e = fit.map_or(f64::NAN, |f| f.exponent);
    Check::new(name, criterion, e, &format!("[{lo}, {hi}]"), in_range(e, lo, hi))
}

// ---------------------------------------------------------------- linear

fn resolvent_rate(cfg: &LabConfig) -> Result<ExperimentOutcome> {
    let mut out = ExperimentOutcome::new(ExperimentKind::ResolventRate);
    let fam = cfg.family.build();
    let mesh = Mesh1D::uniform(cfg.mesh.n)?;
    let sweep = cfg.sweep.values();
    let gap_at = |mesh: &Mesh1D, eps: f64| -> Result<f64> {
        let op0 = assemble_operator(&fam, mesh, 0.0)?;
        let ope = assemble_operator(&fam, mesh, eps)?;
        operator_gap_norm(&ope, &op0, NormTag::L2, NormTag::H1)
    };
    let mut pairs = Vec::new();
    for &eps in &sweep {
        pairs.push((eps, gap_at(&mesh, eps)?));
    }
    out.series = RateSeries::new(&pairs, |e| fam.delta(e));
    out.columns = vec!["eps".into(), "delta".into(), "gap".into()];
    out.rows = out.series.points.iter().map(|p| vec![p.eps, p.delta, p.value]).collect();
    out.fit = try_fit(&out.series, FitMode::Power, &mut out.notes);
    if let Some(f) = out.fit.clone() {
        out.note_excluded(&f);
    }
    let fit = out.fit.clone();
    out.checks.push(exponent_check("resolvent exponent", Some(1), fit.as_ref(), 0.9, 1.1));
    let r2 = fit.as_ref().map_or(f64::NAN, |f| f.r_squared);
    out.checks.push(Check::new("resolvent fit R2", Some(1), r2, "≥ 0.98", r2 >= 0.98));
    // halving ε should not increase the gap beyond 5%
    let pts = &out.series.points;
    let worst = pts
        .windows(2)
        .filter(|w| w[1].eps > 0.0)
        .map(|w| w[1].value / w[0].value)
        .fold(0.0, f64::max);
    out.checks.push(Check::new(
        "resolvent gap monotone in eps",
        None,
        worst,
        "≤ 1.05",
        worst <= 1.05,
    ));
    let top = largest_positive(&sweep)?;
    mesh_certification(cfg, "resolvent gap at the largest eps", cfg.mesh.n, |m| gap_at(m, top), &mut out)?;
    Ok(out)
}

fn eigen_rate(cfg: &LabConfig) -> Result<ExperimentOutcome> {
    let mut out = ExperimentOutcome::new(ExperimentKind::EigenRate);
    let fam = cfg.family.build();
    let mesh = Mesh1D::uniform(cfg.mesh.n)?;
    let sweep = cfg.sweep.values();
    let count = cfg.experiment.eigen_count;
    let gaps_at = |mesh: &Mesh1D, eps: f64| -> Result<Vec<f64>> {
        let s0 = eigenpairs(&assemble_operator(&fam, mesh, 0.0)?, count + 1)?;
        let se = eigenpairs(&assemble_operator(&fam, mesh, eps)?, count + 1)?;
        (0..count).map(|k| eigenvalue_gap(&se, &s0, k)).collect()
    };
    let mut table = Vec::new();
    for &eps in &sweep {
        table.push((eps, gaps_at(&mesh, eps)?));
    }
    out.columns = vec!["eps".into(), "delta".into()];
    out.columns.extend((0..count).map(|k| format!("gap_k{k}")));
    for (eps, gaps) in &table {
        let mut row = vec![*eps, fam.delta(*eps)];
        row.extend(gaps);
        out.rows.push(row);
    }
    for k in 0..count {
        let pairs: Vec<(f64, f64)> = table.iter().map(|(e, g)| (*e, g[k])).collect();
        let series = RateSeries::new(&pairs, |e| fam.delta(e));
        let fit = try_fit(&series, FitMode::Power, &mut out.notes);
        out.checks.push(exponent_check(
            &format!("eigenvalue {k} exponent"),
            Some(2),
            fit.as_ref(),
            0.9,
            1.1,
        ));
        if k == 0 {
            out.series = series;
            out.fit = fit.clone();
        }
        if let Some(f) = fit {
            out.push_fit(&format!("gap_k{k}"), f);
        }
    }
    let top = largest_positive(&sweep)?;
    mesh_certification(
        cfg,
        "largest eigenvalue gap at the largest eps",
        cfg.mesh.n,
        |m| Ok(gaps_at(m, top)?.into_iter().fold(0.0, f64::max)),
        &mut out,
    )?;
    Ok(out)
}

fn projection_rate(cfg: &LabConfig) -> Result<ExperimentOutcome> {
    let mut out = ExperimentOutcome::new(ExperimentKind::ProjectionRate);
    let fam = cfg.family.build();
    let mesh = Mesh1D::uniform(cfg.mesh.n)?;
    let sweep = cfg.sweep.values();
    let m = cfg.experiment.projection_rank;
    let gap_at = |mesh: &Mesh1D, eps: f64| -> Result<f64> {
        let s0 = eigenpairs(&assemble_operator(&fam, mesh, 0.0)?, m + 1)?;
        let se = eigenpairs(&assemble_operator(&fam, mesh, eps)?, m + 1)?;
        projection_gap(
            &spectral_projection(&se, m)?,
            &spectral_projection(&s0, m)?,
            NormTag::L2,
            NormTag::H1,
        )
    };
    let mut pairs = Vec::new();
    for &eps in &sweep {
        pairs.push((eps, gap_at(&mesh, eps)?));
    }
    out.series = RateSeries::new(&pairs, |e| fam.delta(e));
    out.columns = vec!["eps".into(), "delta".into(), "gap".into()];
    out.rows = out.series.points.iter().map(|p| vec![p.eps, p.delta, p.value]).collect();
    out.fit = try_fit(&out.series, FitMode::Power, &mut out.notes);
    out.checks.push(exponent_check(
        &format!("rank-{m} projection exponent"),
        Some(2),
        out.fit.as_ref(),
        0.9,
        1.1,
    ));
    let top = largest_positive(&sweep)?;
    mesh_certification(cfg, "projection gap at the largest eps", cfg.mesh.n, |mm| gap_at(mm, top), &mut out)?;
    Ok(out)
}

fn linear_semigroup_rate(cfg: &LabConfig) -> Result<ExperimentOutcome> {
    let mut out = ExperimentOutcome::new(ExperimentKind::LinearSemigroupRate);
    let fam = cfg.family.build();
    let mesh = Mesh1D::uniform(cfg.mesh.n)?;
    let sweep = cfg.sweep.values();
    let t = cfg.experiment.time;
    let gap_at = |mesh: &Mesh1D, eps: f64, times: &[f64]| -> Result<Vec<f64>> {
        let op0 = assemble_operator(&fam, mesh, 0.0)?;
        let s0 = LinearSemigroup::new(&op0)?;
        let se = LinearSemigroup::new(&assemble_operator(&fam, mesh, eps)?)?;
        times
            .iter()
            .map(|&t| semigroup_difference_norm(&se, &s0, &op0, t, NormTag::L2, NormTag::H1))
            .collect()
    };
    let mut pairs = Vec::new();
    for &eps in &sweep {
        pairs.push((eps, gap_at(&mesh, eps, &[t])?[0]));
    }
    out.series = RateSeries::new(&pairs, |e| fam.delta(e));
    out.columns = vec!["eps".into(), "delta".into(), "gap".into()];
    out.rows = out.series.points.iter().map(|p| vec![p.eps, p.delta, p.value]).collect();
    out.fit = try_fit(&out.series, FitMode::Power, &mut out.notes);
    out.checks.push(exponent_check(
        &format!("linear semigroup exponent at t = {t}"),
        Some(4),
        out.fit.as_ref(),
        0.9,
        1.1,
    ));

    // t-sweep envelope at the largest ε: calibrate C on 12 log-spaced times
    // in [0.01, 2], then verify gap ≤ 2·C·envelope on a 4× denser grid
    let top = largest_positive(&sweep)?;
    let delta = fam.delta(top);
    let beta = cfg.experiment.beta;
    let alpha = eigenpairs(&assemble_operator(&fam, &mesh, 0.0)?, 1)?.value(0);
    let envelope = |t: f64| (-alpha * t).exp() * (delta / t).min(t.powf(-(1.0 + beta) / 2.0));
    let grid = |count: usize| -> Vec<f64> {
        (0..count)
            .map(|i| 0.01 * 200f64.powf(i as f64 / (count - 1) as f64))
            .collect()
    };
    let coarse = grid(12);
    let dense = grid(48);
    let c_cal = coarse
        .iter()
        .zip(gap_at(&mesh, top, &coarse)?)
        .map(|(&t, g)| g / envelope(t))
        .fold(0.0, f64::max);
    let dense_gaps = gap_at(&mesh, top, &dense)?;
    let worst = dense
        .iter()
        .zip(&dense_gaps)
        .map(|(&t, g)| g / (c_cal * envelope(t)))
        .fold(0.0, f64::max);
    out.checks.push(Check::new(
        "t-sweep envelope violation factor",
        Some(4),
        worst,
        "≤ 2",
        worst <= 2.0,
    ));
    out.extra = json!({
        "envelope": {
            "eps": top,
            "delta": delta,
            "alpha": alpha,
            "beta": beta,
            "c_calibrated": c_cal,
            "t": dense,
            "gap": dense_gaps,
            "worst_ratio": worst,
        }
    });
    mesh_certification(
        cfg,
        "linear semigroup gap at the largest eps",
        cfg.mesh.n,
        |m| Ok(gap_at(m, top, &[t])?[0]),
        &mut out,
    )?;
    Ok(out)
}

// ---------------------------------------------------------------- nonlinear

fn equilibria_rate(cfg: &LabConfig) -> Result<ExperimentOutcome> {
    let mut out = ExperimentOutcome::new(ExperimentKind::EquilibriaRate);
    let fam = cfg.family.build();
    let mesh = Mesh1D::uniform(cfg.mesh.n)?;
    let sweep = cfg.sweep.values();
    let opts = EquilibriumOptions::default();
    let gap_at = |mesh: &Mesh1D, eps: f64| -> Result<(f64, usize, f64)> {
        let op0 = assemble_operator(&fam, mesh, 0.0)?;
        let e0 = find_equilibria(&fam, mesh, 0.0, None, &opts)?;
        let ee = find_equilibria(&fam, mesh, eps, None, &opts)?;
        let residual = ee.residuals.iter().copied().fold(0.0, f64::max);
        let gaps = equilibrium_gap(&ee, &e0, &op0)?;
        Ok((gaps.into_iter().fold(0.0, f64::max), ee.len(), residual))
    };
    let base = find_equilibria(&fam, &mesh, 0.0, None, &opts)?;
    let mut pairs = Vec::new();
    let mut counts = Vec::new();
    let mut worst_residual: f64 = base.residuals.iter().copied().fold(0.0, f64::max);
    out.columns = vec!["eps".into(), "delta".into(), "max_pair_distance".into(), "count".into()];
    for &eps in &sweep {
        match gap_at(&mesh, eps) {
            Ok((gap, count, res)) => {
                pairs.push((eps, gap));
                counts.push(count);
                worst_residual = worst_residual.max(res);
                out.rows.push(vec![eps, fam.delta(eps), gap, count as f64]);
            }
            Err(LabError::CardinalityMismatch { left, right }) => {
                counts.push(left);
                out.notes.push(format!(
                    "equilibrium count {left} at ε = {eps:e} differs from {right} at ε = 0"
                ));
            }
            Err(e) => return Err(e),
        }
    }
    let constant = counts.iter().all(|&c| c == base.len());
    out.checks.push(Check::new(
        "equilibrium count constant across the sweep",
        Some(3),
        base.len() as f64,
        "same count at every ε",
        constant,
    ));
    out.checks.push(
        Check::new(
            "largest Newton residual",
            None,
            worst_residual,
            "≤ 1e-10",
            worst_residual <= 1e-10,
        )
        .hard(),
    );
    out.series = RateSeries::new(&pairs, |e| fam.delta(e));
    out.fit = try_fit(&out.series, FitMode::Power, &mut out.notes);
    out.checks.push(exponent_check(
        "equilibrium distance exponent",
        Some(3),
        out.fit.as_ref(),
        0.9,
        1.1,
    ));
    out.extra = json!({
        "equilibrium_count": base.len(),
        "morse_indices": base.unstable_dims,
        "hyperbolic": base.hyperbolic,
    });
    let top = largest_positive(&sweep)?;
    mesh_certification(
        cfg,
        "largest equilibrium distance at the largest eps",
        cfg.mesh.n,
        |m| Ok(gap_at(m, top)?.0),
        &mut out,
    )?;
    Ok(out)
}

/// The initial state of the semigroup experiments, `0.5 cos(πx)`.
pub fn semigroup_initial_state(mesh: &Mesh1D) -> DiscreteState {
    mesh.interpolate(|x| 0.5 * (std::f64::consts::PI * x).cos())
}

fn semigroup_rate(cfg: &LabConfig) -> Result<ExperimentOutcome> {
    let mut out = ExperimentOutcome::new(ExperimentKind::SemigroupRate);
    let fam = cfg.family.build();
    let mesh = Mesh1D::uniform(cfg.mesh.n)?;
    let sweep = cfg.sweep.values();
    let t = cfg.experiment.time;
    let icfg = cfg.integrator;
    let gaps_at = |mesh: &Mesh1D, eps_list: &[f64]| -> Result<Vec<f64>> {
        let u0 = semigroup_initial_state(mesh);
        let op0 = assemble_operator(&fam, mesh, 0.0)?;
        let limit = evolve(&u0, t, &op0, &NonlinearTerm::new(&fam, mesh, 0.0), &icfg)?;
        eps_list
            .iter()
            .map(|&eps| {
                if eps == 0.0 {
                    return Ok(0.0);
                }
                let ope = assemble_operator(&fam, mesh, eps)?;
                let ue = evolve(&u0, t, &ope, &NonlinearTerm::new(&fam, mesh, eps), &icfg)?;
                h1_norm(&op0, &(ue - &limit))
            })
            .collect()
    };
    let gaps = gaps_at(&mesh, &sweep)?;
    let pairs: Vec<(f64, f64)> = sweep.iter().copied().zip(gaps).collect();
    out.series = RateSeries::new(&pairs, |e| fam.delta(e));
    out.columns = vec![
        "eps".into(),
        "delta".into(),
        "gap".into(),
        "ratio_logcorrected".into(),
    ];
    out.rows = out
        .series
        .points
        .iter()
        .map(|p| {
            let r = if p.eps > 0.0 { p.value / log_corrected_scale(p.delta) } else { 0.0 };
            vec![p.eps, p.delta, p.value, r]
        })
        .collect();
    let logc = try_fit(&out.series, FitMode::Logcorrected, &mut out.notes);
    let power = try_fit(&out.series, FitMode::Power, &mut out.notes);
    let spread = logc.as_ref().map_or(f64::NAN, |f| f.spread);
    out.checks.push(Check::new(
        "log-corrected ratio spread",
        Some(5),
        spread,
        "≤ 3",
        spread <= 3.0,
    ));
    out.checks.push(exponent_check(
        "nonlinear semigroup power exponent",
        None,
        power.as_ref(),
        0.85,
        1.0,
    ));
    if let Some(f) = &power {
        out.push_fit("power", f.clone());
    }
    out.fit = logc.clone();
    if let Some(f) = logc {
        out.push_fit("logcorrected", f);
    }
    let top = largest_positive(&sweep)?;
    dt_certification(cfg, &fam, &mesh, top, &semigroup_initial_state(&mesh), t, &mut out)?;
    mesh_certification(
        cfg,
        "semigroup gap at the largest eps",
        cfg.mesh.n,
        |m| Ok(gaps_at(m, &[top])?[0]),
        &mut out,
    )?;
    Ok(out)
}

// ---------------------------------------------------------------- manifolds

/// The equilibrium near `u ≡ 0` at `eps`.
fn zero_branch(fam: &CoefficientFamily, mesh: &Mesh1D, eps: f64) -> Result<DiscreteState> {
    let zero = DVector::zeros(mesh.n_nodes());
    let set = find_equilibria(fam, mesh, eps, Some(&[zero]), &EquilibriumOptions::default())?;
    Ok(set.points[0].clone())
}

fn manifold_rate(cfg: &LabConfig) -> Result<ExperimentOutcome> {
    let mut out = ExperimentOutcome::new(ExperimentKind::ManifoldRate);
    let fam = cfg.family.build();
    let n = cfg.mesh.manifold_n;
    let mesh = Mesh1D::uniform(n)?;
    let sweep = cfg.sweep.values();
    let gcfg = GraphConfig {
        box_radius: cfg.experiment.box_radius,
        grid_n: cfg.experiment.grid_n,
        ..GraphConfig::default()
    };
    let g0 = unstable_graph(&zero_branch(&fam, &mesh, 0.0)?, &fam, &mesh, 0.0, &gcfg)?;
    // every ε graph lives on the box the limit graph settled on
    let shared = GraphConfig {
        box_radius: g0.box_radius,
        max_halvings: 0,
        ..gcfg
    };
    let base_offset = g0.s(&vec![0.0; g0.unstable_dim()]).norm();
    out.checks.push(
        Check::new("graph passes through the equilibrium", None, base_offset, "≤ 1e-8", base_offset <= 1e-8)
            .hard(),
    );
    let mut thetas = vec![g0.theta_contraction];
    let mut pairs = Vec::new();
    out.columns = vec![
        "eps".into(),
        "delta".into(),
        "manifold_gap".into(),
        "theta".into(),
        "iterations".into(),
    ];
    let graph_at = |mesh: &Mesh1D, eps: f64, c: &GraphConfig| -> Result<ManifoldGraph> {
        unstable_graph(&zero_branch(&fam, mesh, eps)?, &fam, mesh, eps, c)
    };
    for &eps in &sweep {
        if eps == 0.0 {
            pairs.push((0.0, 0.0));
            out.rows.push(vec![0.0, 0.0, 0.0, g0.theta_contraction, g0.iterations as f64]);
            continue;
        }
        let ge = graph_at(&mesh, eps, &shared)?;
        let gap = manifold_gap(&ge, &g0)?;
        thetas.push(ge.theta_contraction);
        pairs.push((eps, gap));
        out.rows.push(vec![eps, fam.delta(eps), gap, ge.theta_contraction, ge.iterations as f64]);
    }
    let theta_max = thetas.iter().copied().fold(0.0, f64::max);
    out.checks.push(
        Check::new("graph transform contraction", Some(6), theta_max, "< 1", theta_max < 1.0).hard(),
    );
    let oracle = trajectory_oracle_distance(&g0, &cfg.integrator, ORACLE_FLOW_TIME)?;
    out.checks.push(Check::new(
        "trajectory oracle distance (H1)",
        Some(6),
        oracle,
        "≤ 1e-4",
        oracle <= 1e-4,
    ));
    let att = exponential_attraction_check(&g0, ATTRACTION_TRIALS, cfg.experiment.seed, &cfg.integrator)?;
    out.checks.push(Check::new(
        "exponential attraction fit R2",
        Some(6),
        att.min_r2,
        "≥ 0.99",
        att.min_r2 >= 0.99,
    ));
    let rel = (att.gamma_hat - att.alpha).abs() / att.alpha;
    out.checks.push(Check::new(
        "attraction rate vs linear gap (relative)",
        None,
        rel,
        "≤ 0.3",
        rel <= 0.3,
    ));
    out.series = RateSeries::new(&pairs, |e| fam.delta(e));
    let pts = &out.series.points;
    let decreasing = pts
        .windows(2)
        .filter(|w| w[1].eps > 0.0)
        .all(|w| w[1].value < w[0].value);
    out.checks.push(Check::new(
        "manifold gap strictly decreasing as eps decreases",
        Some(6),
        if decreasing { 1.0 } else { 0.0 },
        "strictly decreasing",
        decreasing,
    ));
    out.fit = try_fit(&out.series, FitMode::Power, &mut out.notes);
    let e = out.fit.as_ref().map_or(f64::NAN, |f| f.exponent);
    out.checks.push(Check::new("manifold gap exponent", Some(6), e, "> 0", e > 0.0));
    out.extra = json!({
        "box_radius": g0.box_radius,
        "halvings": g0.halvings,
        "sup_bound": g0.d_sup,
        "lipschitz_bound": g0.delta_lip,
        "sampled_lipschitz": g0.sampled_lipschitz(200, cfg.experiment.seed),
        "gamma_hat": att.gamma_hat,
        "gamma_trials": att.gammas,
        "alpha": att.alpha,
        "trajectory_oracle": oracle,
    });
    let top = largest_positive(&sweep)?;
    mesh_certification(
        cfg,
        "manifold gap at the largest eps",
        n,
        |m| {
            let a = graph_at(m, 0.0, &shared)?;
            let b = graph_at(m, top, &shared)?;
            manifold_gap(&b, &a)
        },
        &mut out,
    )?;
    Ok(out)
}

fn attractor_config(cfg: &LabConfig) -> AttractorConfig {
    AttractorConfig {
        integrator: cfg.integrator,
        seed: cfg.experiment.seed,
        ..AttractorConfig::default()
    }
}

fn attractor_rate(cfg: &LabConfig) -> Result<ExperimentOutcome> {
    let mut out = ExperimentOutcome::new(ExperimentKind::AttractorRate);
    let fam = cfg.family.build();
    let mesh = Mesh1D::uniform(cfg.mesh.n)?;
    let sweep = cfg.sweep.values();
    let acfg = attractor_config(cfg);
    let report = attractor_rate_experiment(&fam, &mesh, &sweep, &acfg)?;
    out.columns = [
        "eps",
        "delta",
        "d_h",
        "d_h_curve",
        "resolution",
        "ratio_logcorrected",
        "resolution_dominated",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let mut resolved = RateSeries::default();
    for r in &report.rows {
        out.rows.push(vec![
            r.eps,
            r.delta,
            r.d_h,
            r.d_h_curve,
            r.resolution,
            r.ratio_logcorrected,
            if r.resolution_dominated { 1.0 } else { 0.0 },
        ]);
        if r.resolution_dominated {
            out.notes.push(format!(
                "ε = {:e} is resolution-dominated (d_H = {:e}, curve-aware {:e}, resolution {:e}) and excluded from the fits",
                r.eps, r.d_h, r.d_h_curve, r.resolution
            ));
        } else {
            resolved.push(r.eps, r.delta, r.d_h);
        }
    }
    if let Some(eps) = report.truncated_at {
        out.notes.push(format!("equilibrium count changes at ε = {eps:e}; sweep truncated"));
    }
    out.checks.push(Check::new(
        "no structural change inside the sweep",
        Some(7),
        report.truncated_at.unwrap_or(0.0),
        "no truncation",
        report.truncated_at.is_none(),
    ));
    let power = try_fit(&resolved, FitMode::Power, &mut out.notes);
    out.checks.push(Check::new(
        "attractor distance power exponent",
        Some(7),
        power.as_ref().map_or(f64::NAN, |f| f.exponent),
        "≥ 0.85",
        power.as_ref().is_some_and(|f| f.exponent >= 0.85),
    ));
    let spread = report.fit.as_ref().map_or(f64::NAN, |f| f.spread);
    out.checks.push(Check::new(
        "attractor log-corrected ratio spread",
        Some(7),
        spread,
        "≤ 3",
        spread <= 3.0,
    ));
    if let Some(f) = power {
        out.push_fit("power", f);
    }
    if let Some(f) = report.fit.clone() {
        out.push_fit("logcorrected", f);
    }
    out.series = report.series.clone();
    out.fit = report.fit.clone();
    out.extra = json!({
        "equilibrium_count": report.equilibrium_count,
        "rows": report.rows,
    });
    let top = largest_positive(&sweep)?;
    mesh_certification(
        cfg,
        "attractor distance at the largest eps",
        cfg.mesh.n,
        |m| Ok(attractor_rate_experiment(&fam, m, &[top], &acfg)?.rows[0].d_h),
        &mut out,
    )?;
    Ok(out)
}

// ---------------------------------------------------------------- reduction

/// The ε = 0 reduced system with its map, attractor and neighbourhood.
struct ReducedSetup {
    sys0: ReducedSystem,
    map0: DiscreteMap,
    att0: ReducedAttractor,
    nbhd: Neighborhood,
}

fn reduced_setup(fam: &CoefficientFamily, mesh: &Mesh1D) -> Result<ReducedSetup> {
    let rcfg = ReductionConfig::default();
    let sys0 = reduce(fam, mesh, 0.0, None, &rcfg)?;
    let full = find_equilibria(fam, mesh, 0.0, None, &EquilibriumOptions::default())?;
    let guesses: Vec<DVector<f64>> = full.points.iter().map(|u| sys0.project(u)).collect();
    let att0 = reduced_attractor(&sys0, &guesses, &ReducedAttractorConfig::default())?;
    let nbhd = Neighborhood::around(&att0.points, 0.2, 0.05, 9)?;
    Ok(ReducedSetup {
        map0: reduced_map(&sys0),
        sys0,
        att0,
        nbhd,
    })
}

fn shadowing_config(cfg: &LabConfig) -> ShadowingConfig {
    ShadowingConfig {
        window: cfg.experiment.window,
        trials: cfg.experiment.trials,
        defect: cfg.experiment.defect,
        seed: cfg.experiment.seed,
        ..ShadowingConfig::default()
    }
}

fn shadowing_checks(rep: &ShadowingReport, out: &mut ExperimentOutcome) {
    out.checks.push(Check::new(
        "shadowing ratio spread over trials",
        Some(9),
        rep.spread,
        "≤ 2",
        rep.spread <= 2.0,
    ));
    if let Some(w) = rep.window_check {
        out.checks.push(Check::new(
            "window doubling changes the shadowing constant",
            Some(9),
            w.relative_change,
            "< 0.1",
            w.passed,
        ));
    }
    let worst = rep
        .trials
        .iter()
        .map(|t| t.shadow_distance - rep.l_hat * t.defect)
        .fold(f64::NEG_INFINITY, f64::max);
    out.checks.push(
        Check::new(
            "shadow distance within the estimated constant times the defect",
            None,
            worst,
            "≤ 0",
            worst <= 1e-15,
        )
        .hard(),
    );
}

fn reduced_map_rate(cfg: &LabConfig) -> Result<ExperimentOutcome> {
    let mut out = ExperimentOutcome::new(ExperimentKind::ReducedMapRate);
    let fam = cfg.family.build();
    let n = cfg.mesh.reduction_n;
    let mesh = Mesh1D::uniform(n)?;
    let sweep = cfg.sweep.values();
    let setup = reduced_setup(&fam, &mesh)?;
    let rank = setup.sys0.rank;
    let shadow = shadowing_trials(&setup.map0, &setup.nbhd, &shadowing_config(cfg))?;
    shadowing_checks(&shadow, &mut out);
    let l = shadow.params.l;
    out.columns = [
        "eps",
        "delta",
        "map_gap",
        "ratio_logcorrected",
        "d_h_reduced",
        "d_h_reduced_points",
        "lpsp_bound",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let rcfg = ReductionConfig::default();
    let mut pairs = Vec::new();
    let mut dominated = true;
    let mut worst_margin = f64::INFINITY;
    for &eps in &sweep {
        if eps == 0.0 {
            pairs.push((0.0, 0.0));
            out.rows.push(vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
            continue;
        }
        let sys = reduce(&fam, &mesh, eps, Some(rank), &rcfg)?;
        let map = reduced_map(&sys);
        let att = reduced_attractor(&sys, &setup.att0.equilibria, &ReducedAttractorConfig::default())?;
        let gap = map_gap(&map, &setup.map0, &setup.nbhd)?;
        let bound = lpsp_attractor_bound(&setup.map0, &map, &setup.nbhd, l, &[&setup.att0, &att])?;
        let d_curve = att.curve_hausdorff(&setup.att0)?.symmetric;
        let d_points = att.hausdorff(&setup.att0)?.symmetric;
        dominated &= bound >= d_curve;
        worst_margin = worst_margin.min(bound / d_curve);
        let delta = fam.delta(eps);
        pairs.push((eps, gap));
        out.rows.push(vec![
            eps,
            delta,
            gap,
            gap / log_corrected_scale(delta),
            d_curve,
            d_points,
            bound,
        ]);
    }
    out.checks.push(Check::new(
        "shadowing bound dominates the reduced attractor distance",
        Some(9),
        worst_margin,
        "bound / d_H ≥ 1 at every ε",
        dominated,
    ));
    out.series = RateSeries::new(&pairs, |e| fam.delta(e));
    let logc = try_fit(&out.series, FitMode::Logcorrected, &mut out.notes);
    let spread = logc.as_ref().map_or(f64::NAN, |f| f.spread);
    out.checks.push(Check::new(
        "reduced map gap log-corrected ratio spread",
        Some(9),
        spread,
        "≤ 3",
        spread <= 3.0,
    ));
    if let Some(f) = try_fit(&out.series, FitMode::Power, &mut out.notes) {
        out.push_fit("power", f);
    }
    out.fit = logc.clone();
    if let Some(f) = logc {
        out.push_fit("logcorrected", f);
    }
    out.extra = json!({
        "rank": rank,
        "lambda": setup.sys0.lambda.as_slice(),
        "l_hat": shadow.l_hat,
        "l": l,
        "shadow_ratio_min": shadow.ratio_min,
        "shadow_ratio_max": shadow.ratio_max,
        "window_check": shadow.window_check,
        "neighborhood": setup.nbhd,
        "reduced_equilibria": setup.att0.equilibria.iter().map(|e| e.as_slice().to_vec()).collect::<Vec<_>>(),
    });
    let top = largest_positive(&sweep)?;
    mesh_certification(
        cfg,
        "reduced map gap at the largest eps",
        n,
        |m| {
            let s = reduced_setup(&fam, m)?;
            let sys = reduce(&fam, m, top, Some(s.sys0.rank), &rcfg)?;
            map_gap(&reduced_map(&sys), &s.map0, &s.nbhd)
        },
        &mut out,
    )?;
    Ok(out)
}

fn shadowing(cfg: &LabConfig) -> Result<ExperimentOutcome> {
    let mut out = ExperimentOutcome::new(ExperimentKind::Shadowing);
    let fam = cfg.family.build();
    let n = cfg.mesh.reduction_n;
    let mesh = Mesh1D::uniform(n)?;
    let setup = reduced_setup(&fam, &mesh)?;
    let scfg = shadowing_config(cfg);
    let rep = shadowing_trials(&setup.map0, &setup.nbhd, &scfg)?;
    shadowing_checks(&rep, &mut out);
    out.columns = ["trial", "defect", "shadow_distance", "ratio"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    out.rows = rep
        .trials
        .iter()
        .map(|t| vec![t.trial as f64, t.defect, t.shadow_distance, t.ratio])
        .collect();
    out.extra = json!({
        "l_hat": rep.l_hat,
        "l": rep.params.l,
        "ratio_min": rep.ratio_min,
        "ratio_max": rep.ratio_max,
        "spread": rep.spread,
        "window": rep.params.window,
        "window_check": rep.window_check,
        "rank": setup.sys0.rank,
    });
    if cfg.mesh.certify {
        // the shadowing constant over a few trials on the doubled mesh
        let few = ShadowingConfig {
            trials: scfg.trials.min(5),
            certify_trials: 0,
            ..scfg
        };
        let coarse = shadowing_trials(&setup.map0, &setup.nbhd, &few)?.l_hat;
        let fine_setup = reduced_setup(&fam, &Mesh1D::uniform(2 * n)?)?;
        let fine = shadowing_trials(&fine_setup.map0, &fine_setup.nbhd, &few)?.l_hat;
        let change = (coarse - fine).abs() / fine;
        out.certifications.push(Certification {
            kind: "mesh".into(),
            quantity: "shadowing constant over the first trials".into(),
            resolution: n as f64,
            refined: (2 * n) as f64,
            value: coarse,
            refined_value: fine,
            change,
            tolerance: MESH_TOLERANCE,
            passed: change < MESH_TOLERANCE,
        });
    } else {
        out.notes.push("mesh certification skipped by configuration".into());
    }
    Ok(out)
}

// ---------------------------------------------------------------- equi-attraction

fn ode_example(cfg: &LabConfig) -> Result<ExperimentOutcome> {
    let mut out = ExperimentOutcome::new(ExperimentKind::OdeExample);
    let sweep = cfg.sweep.values();
    let ode = cfg.experiment.ode;
    let ocfg = OdeExampleConfig {
        dt: ode.dt,
        seed: cfg.experiment.seed,
        ..OdeExampleConfig::default()
    };
    let rep = ode_example_experiment(ode.mu, ode.f, &sweep, &ocfg)?;
    out.columns = ["eps", "d_h", "gamma_hat", "l_hat"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    out.rows = rep
        .rows
        .iter()
        .map(|r| vec![r.eps, r.d_h, r.gamma_hat, r.l_hat])
        .collect();
    out.series = rep.series.clone();
    out.fit = rep.fit.clone();
    match &rep.fit {
        Some(f) => {
            out.note_excluded(f);
            out.checks.push(Check::new(
                "fitted exponent minus predicted γ/(γ+L)",
                Some(8),
                f.exponent - rep.predicted_exponent,
                &format!("≥ 0; fitted {:.4}, predicted {:.4}", f.exponent, rep.predicted_exponent),
                f.exponent >= rep.predicted_exponent,
            ));
        }
        None => {
            out.notes.push("every attractor distance vanishes; no fit".into());
            let all_zero = rep.rows.iter().all(|r| r.d_h == 0.0);
            out.checks.push(Check::new(
                "attractor distance identically zero",
                None,
                0.0,
                "= 0",
                all_zero,
            ));
        }
    }
    out.extra = json!({
        "gamma_hat": rep.gamma_hat,
        "l_hat": rep.l_hat,
        "predicted_exponent": rep.predicted_exponent,
        "limit_equilibria": rep.limit_equilibria,
    });
    // dt-halving of the attractor distance at the largest ε
    let top = largest_positive(&sweep)?;
    let d_at = |dt: f64| -> Result<f64> {
        let c = OdeExampleConfig { dt, ..ocfg };
        let a0 = ode_attractor(&SingularOde::new(ode.mu, 0.0, ode.f)?, &c)?;
        let ae = ode_attractor(&SingularOde::new(ode.mu, top, ode.f)?, &c)?;
        Ok(crate::manifolds::curve_hausdorff_points(&ae.points, &ae.curves, &a0.points, &a0.curves)?
            .symmetric)
    };
    let coarse = d_at(ode.dt)?;
    let fine = d_at(0.5 * ode.dt)?;
    let change = if fine == 0.0 && coarse == 0.0 {
        0.0
    } else {
        (coarse - fine).abs() / fine.abs().max(f64::MIN_POSITIVE)
    };
    out.certifications.push(Certification {
        kind: "dt".into(),
        quantity: "ODE attractor distance at the largest eps".into(),
        resolution: ode.dt,
        refined: 0.5 * ode.dt,
        value: coarse,
        refined_value: fine,
        change,
        tolerance: MESH_TOLERANCE,
        passed: change < MESH_TOLERANCE,
    });
    Ok(out)
}

fn equi_attraction_table(cfg: &LabConfig) -> Result<ExperimentOutcome> {
    let mut out = ExperimentOutcome::new(ExperimentKind::EquiAttractionTable);
    let fam = cfg.family.build();
    let b = cfg.experiment.bound;
    let params = RateBoundParams {
        c_conv: b.c_conv,
        l: b.l,
        gamma: b.gamma,
        c: b.c,
        ..RateBoundParams::default()
    };
    let (l, prefactor) = exponential_rate_bound(&params)?;
    out.columns = ["eps", "delta", "numeric", "closed_form", "nu_star", "relative_difference"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut pairs = Vec::new();
    let mut worst: f64 = 0.0;
    for eps in cfg.sweep.values() {
        let delta = fam.delta(eps);
        let r = equi_attraction_bound(&params, params.exponential_theta_inverse(), params.exponential_range(), delta)?;
        let closed = prefactor * delta.powf(l);
        let rel = if closed == 0.0 { r.value.abs() } else { (r.value - closed).abs() / closed };
        worst = worst.max(rel);
        pairs.push((eps, r.value));
        out.rows.push(vec![eps, delta, r.value, closed, r.nu, rel]);
    }
    out.checks.push(Check::new(
        "numeric minimum vs closed form on the sweep",
        Some(8),
        worst,
        "≤ 1e-9",
        worst <= 1e-9,
    ));
    // random parameter tuples
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.experiment.seed);
    let mut tuples = Vec::new();
    let mut worst_random: f64 = 0.0;
    let mut worst_halving: f64 = 0.0;
    for _ in 0..b.random_tuples {
        let p = RateBoundParams {
            gamma: rng.gen_range(0.3..3.0),
            l: rng.gen_range(0.3..3.0),
            c: rng.gen_range(0.5..3.0),
            c_conv: rng.gen_range(0.5..3.0),
            ..RateBoundParams::default()
        };
        let delta = 10f64.powf(rng.gen_range(-6.0..-2.0));
        let (lp, cp) = exponential_rate_bound(&p)?;
        let num = equi_attraction_bound(&p, p.exponential_theta_inverse(), p.exponential_range(), delta)?;
        let half = equi_attraction_bound(&p, p.exponential_theta_inverse(), p.exponential_range(), 0.5 * delta)?;
        let closed = cp * delta.powf(lp);
        let rel = (num.value - closed).abs() / closed;
        let halving = (half.value / num.value - 0.5f64.powf(lp)).abs();
        worst_random = worst_random.max(rel);
        worst_halving = worst_halving.max(halving);
        tuples.push(json!({
            "gamma": p.gamma, "l": p.l, "c": p.c, "c_conv": p.c_conv, "delta": delta,
            "numeric": num.value, "closed_form": closed, "relative_difference": rel,
        }));
    }
    out.checks.push(Check::new(
        "numeric minimum vs closed form on random tuples",
        Some(8),
        worst_random,
        "≤ 1e-9",
        worst_random <= 1e-9,
    ));
    out.checks.push(Check::new(
        "bound ratio under δ halving vs 2^(-l)",
        None,
        worst_halving,
        "≤ 1e-8",
        worst_halving <= 1e-8,
    ));
    out.series = RateSeries::new(&pairs, |e| fam.delta(e));
    out.fit = try_fit(&out.series, FitMode::Power, &mut out.notes);
    out.extra = json!({
        "exponent_l": l,
        "prefactor": prefactor,
        "random_tuples": tuples,
    });
    Ok(out)
}

/// Name and description of every experiment.
pub fn list_experiments() -> Vec<(&'static str, &'static str)> {
    ExperimentKind::ALL
        .iter()
        .map(|k| (k.name(), k.description()))
        .collect()
}
