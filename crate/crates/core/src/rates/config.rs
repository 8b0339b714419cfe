//! Experiment configuration: one TOML file with the sections `family`,
//! `mesh`, `integrator`, `sweep`, `experiment` and `output`. Unknown keys are
//! rejected and reported with their full path.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dynamics::IntegratorConfig;
use crate::error::{LabError, Result};
use crate::family::{CoefficientFamily, StandardParams};
use crate::rates::ode::OdeNonlinearity;

/// Environment variable overriding `output.dir`.
pub const OUTPUT_DIR_ENV: &str = "LAB_OUTPUT_DIR";

/// The experiments the runner can dispatch to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    ResolventRate,
    EigenRate,
    ProjectionRate,
    EquilibriaRate,
    LinearSemigroupRate,
    SemigroupRate,
    ManifoldRate,
    AttractorRate,
    ReducedMapRate,
    Shadowing,
    OdeExample,
    EquiAttractionTable,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 12] = [
        Self::ResolventRate,
        Self::EigenRate,
        Self::ProjectionRate,
        Self::EquilibriaRate,
        Self::LinearSemigroupRate,
        Self::SemigroupRate,
        Self::ManifoldRate,
        Self::AttractorRate,
        Self::ReducedMapRate,
        Self::Shadowing,
        Self::OdeExample,
        Self::EquiAttractionTable,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::ResolventRate => "resolvent-rate",
            Self::EigenRate => "eigen-rate",
            Self::ProjectionRate => "projection-rate",
            Self::EquilibriaRate => "equilibria-rate",
            Self::LinearSemigroupRate => "linear-semigroup-rate",
            Self::SemigroupRate => "semigroup-rate",
            Self::ManifoldRate => "manifold-rate",
            Self::AttractorRate => "attractor-rate",
            Self::ReducedMapRate => "reduced-map-rate",
            Self::Shadowing => "shadowing",
            Self::OdeExample => "ode-example",
            Self::EquiAttractionTable => "equi-attraction-table",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Self::ResolventRate => "‖A_ε⁻¹ − A_0⁻¹‖ (L² → H¹) against δ(ε)",
            Self::EigenRate => "|λ_k^ε − λ_k^0| for the lowest eigenvalues",
            Self::ProjectionRate => "‖Q_ε − Q_0‖ (L² → H¹) for the rank-m spectral projection",
            Self::EquilibriaRate => "largest H¹ distance between paired equilibria",
            Self::LinearSemigroupRate => "‖e^{−A_ε t} − e^{−A_0 t}‖ at fixed t, plus a t-sweep envelope",
            Self::SemigroupRate => "‖T_ε(t)u0 − T_0(t)u0‖_{H¹} with log-corrected ratio",
            Self::ManifoldRate => "local unstable manifold graphs and their ε-gap",
            Self::AttractorRate => "Hausdorff distance between attractor samples",
            Self::ReducedMapRate => "reduced time-1 map gap, reduced attractors and the shadowing bound",
            Self::Shadowing => "shadowing constant from Newton-shadowed pseudo-trajectories",
            Self::OdeExample => "singularly perturbed ODE: attractor distance vs predicted exponent",
            Self::EquiAttractionTable => "equi-attraction bound: numeric minimum vs closed form",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| LabError::InvalidArgument(format!("unknown experiment `{s}`")))
    }
}

/// Parameters of the standard coefficient family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FamilyConfig {
    pub a: f64,
    pub lambda: f64,
    pub boundary_gain: f64,
    pub u_max: f64,
    pub cutoff_width: f64,
    pub m0: f64,
    pub eps_max: f64,
}

impl Default for FamilyConfig {
    fn default() -> Self {
        let p = StandardParams::default();
        Self {
            a: p.a,
            lambda: p.lambda,
            boundary_gain: p.boundary_gain,
            u_max: p.u_max,
            cutoff_width: p.cutoff_width,
            m0: p.m0,
            eps_max: p.eps_max,
        }
    }
}

impl FamilyConfig {
    pub fn params(&self) -> StandardParams {
        StandardParams {
            a: self.a,
            lambda: self.lambda,
            boundary_gain: self.boundary_gain,
            u_max: self.u_max,
            cutoff_width: self.cutoff_width,
            m0: self.m0,
            eps_max: self.eps_max,
        }
    }

    pub fn build(&self) -> CoefficientFamily {
        CoefficientFamily::standard(self.params())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeshConfig {
    /// Elements of the uniform mesh used by the PDE rate experiments.
    pub n: usize,
    /// Elements for the unstable-manifold graphs.
    pub manifold_n: usize,
    /// Elements for the reduced systems and shadowing.
    pub reduction_n: usize,
    /// Check that doubling the mesh moves the gap at the largest ε by < 2%.
    pub certify: bool,
}

impl Default for MeshConfig {
    fn default() -> Self {
        Self {
            n: 256,
            manifold_n: 64,
            reduction_n: 32,
            certify: true,
        }
    }
}

/// ε values: either an explicit list or `2^{−k}` for `k_min ≤ k ≤ k_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub eps: Option<Vec<f64>>,
    pub k_min: i32,
    pub k_max: i32,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            eps: None,
            k_min: 4,
            k_max: 10,
        }
    }
}

impl SweepConfig {
    /// The sweep, sorted by ε descending.
    pub fn values(&self) -> Vec<f64> {
        let mut v = match &self.eps {
            Some(list) => list.clone(),
            None => (self.k_min..=self.k_max).map(|k| 2f64.powi(-k)).collect(),
        };
        v.sort_by(|a, b| b.total_cmp(a));
        v
    }
}

/// Constants of the equi-attraction table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundTableConfig {
    pub c_conv: f64,
    pub l: f64,
    pub gamma: f64,
    pub c: f64,
    /// Random parameter tuples for the closed-form cross-check.
    pub random_tuples: usize,
}

impl Default for BoundTableConfig {
    fn default() -> Self {
        Self {
            c_conv: 1.0,
            l: 1.0,
            gamma: 1.0,
            c: 1.0,
            random_tuples: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OdeConfig {
    pub mu: f64,
    pub f: OdeNonlinearity,
    pub dt: f64,
}

impl Default for OdeConfig {
    fn default() -> Self {
        Self {
            mu: 1.0,
            f: OdeNonlinearity::Tanh2,
            dt: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: ExperimentKind,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Number of eigenvalues tracked by eigen-rate.
    #[serde(default = "default_eigen_count")]
    pub eigen_count: usize,
    /// Rank of the projection in projection-rate.
    #[serde(default = "default_projection_rank")]
    pub projection_rank: usize,
    /// Evaluation time of the semigroup experiments.
    #[serde(default = "default_time")]
    pub time: f64,
    /// Dual exponent β of the linear-semigroup envelope.
    #[serde(default = "default_beta")]
    pub beta: f64,
    /// Shadowing trials.
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Shadowing window length.
    #[serde(default = "default_window")]
    pub window: usize,
    /// Pseudo-trajectory defect.
    #[serde(default = "default_defect")]
    pub defect: f64,
    /// Unstable-manifold grid points per direction.
    #[serde(default = "default_grid_n")]
    pub grid_n: usize,
    /// Initial unstable-manifold box radius.
    #[serde(default = "default_box_radius")]
    pub box_radius: f64,
    #[serde(default)]
    pub ode: OdeConfig,
    #[serde(default)]
    pub bound: BoundTableConfig,
}

fn default_seed() -> u64 {
    42
}
fn default_eigen_count() -> usize {
    5
}
fn default_projection_rank() -> usize {
    3
}
fn default_time() -> f64 {
    1.0
}
fn default_beta() -> f64 {
    0.5
}
fn default_trials() -> usize {
    100
}
fn default_window() -> usize {
    200
}
fn default_defect() -> f64 {
    1e-4
}
fn default_grid_n() -> usize {
    81
}
fn default_box_radius() -> f64 {
    0.25
}

impl ExperimentConfig {
    pub fn new(name: ExperimentKind) -> Self {
        Self {
            name,
            seed: default_seed(),
            eigen_count: default_eigen_count(),
            projection_rank: default_projection_rank(),
            time: default_time(),
            beta: default_beta(),
            trials: default_trials(),
            window: default_window(),
            defect: default_defect(),
            grid_n: default_grid_n(),
            box_radius: default_box_radius(),
            ode: OdeConfig::default(),
            bound: BoundTableConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("lab-output"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabConfig {
    #[serde(default)]
    pub family: FamilyConfig,
    #[serde(default)]
    pub mesh: MeshConfig,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    pub experiment: ExperimentConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn invalid(path: &str, message: impl Into<String>) -> LabError {
    LabError::Config {
        path: path.to_string(),
        message: message.into(),
    }
}

impl LabConfig {
    /// Defaults for every section with the named experiment.
    pub fn for_experiment(name: ExperimentKind) -> Self {
        Self {
            family: FamilyConfig::default(),
            mesh: MeshConfig::default(),
            integrator: IntegratorConfig::default(),
            sweep: SweepConfig::default(),
            experiment: ExperimentConfig::new(name),
            output: OutputConfig::default(),
        }
    }

    /// Parse and validate a TOML document.
    pub fn parse(text: &str) -> Result<Self> {
        let de = toml::Deserializer::parse(text).map_err(|e| invalid("", e.to_string()))?;
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            invalid(&path, e.into_inner().message().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let f = &self.family;
        if !(f.m0 > 0.0) || !(f.eps_max > 0.0) || !(f.lambda > 0.0) {
            return Err(invalid("family", "m0, eps_max and lambda must be positive"));
        }
        if !(f.u_max > 0.0 && f.cutoff_width > 0.0) {
            return Err(invalid("family", "u_max and cutoff_width must be positive"));
        }
        self.family.build().check_invariants()?;
        for (key, n) in [
            ("mesh.n", self.mesh.n),
            ("mesh.manifold_n", self.mesh.manifold_n),
            ("mesh.reduction_n", self.mesh.reduction_n),
        ] {
            if n < 4 {
                return Err(invalid(key, format!("{n} elements is too coarse (need ≥ 4)")));
            }
        }
        self.integrator
            .validate()
            .map_err(|e| invalid("integrator", e.to_string()))?;
        if let Some(list) = &self.sweep.eps {
            if let Some(bad) = list.iter().find(|&&e| !(e >= 0.0 && e <= f.eps_max)) {
                return Err(invalid("sweep.eps", format!("ε = {bad} outside [0, {}]", f.eps_max)));
            }
            if list.is_empty() {
                return Err(invalid("sweep.eps", "empty sweep"));
            }
        } else if self.sweep.k_min > self.sweep.k_max {
            return Err(invalid("sweep.k_min", "k_min exceeds k_max"));
        } else if 2f64.powi(-self.sweep.k_min) > f.eps_max {
            return Err(invalid("sweep.k_min", format!("2^-{} exceeds eps_max", self.sweep.k_min)));
        }
        let e = &self.experiment;
        if e.eigen_count == 0 || e.eigen_count + 1 >= self.mesh.n {
            return Err(invalid("experiment.eigen_count", "must lie in 1..n−1"));
        }
        if e.projection_rank == 0 || e.projection_rank + 1 >= self.mesh.n {
            return Err(invalid("experiment.projection_rank", "must lie in 1..n−1"));
        }
        if !(e.time > 0.0) {
            return Err(invalid("experiment.time", "must be positive"));
        }
        if !(0.25..=0.5).contains(&e.beta) {
            return Err(invalid("experiment.beta", "must lie in [1/4, 1/2]"));
        }
        if e.trials == 0 || e.window < 2 || !(e.defect > 0.0) {
            return Err(invalid(
                "experiment.trials",
                "shadowing needs trials ≥ 1, window ≥ 2 and a positive defect",
            ));
        }
        if e.grid_n < 3 || !(e.box_radius > 0.0) {
            return Err(invalid("experiment.grid_n", "need grid_n ≥ 3 and box_radius > 0"));
        }
        if !(e.ode.mu > 0.0 && e.ode.dt > 0.0) {
            return Err(invalid("experiment.ode", "mu and dt must be positive"));
        }
        let b = &e.bound;
        if !(b.c_conv > 0.0 && b.l > 0.0 && b.gamma > 0.0 && b.c > 0.0) {
            return Err(invalid("experiment.bound", "C, L, gamma and c must be positive"));
        }
        if self.output.dir.as_os_str().is_empty() {
            return Err(invalid("output.dir", "empty output directory"));
        }
        Ok(())
    }

    /// Output directory after the environment override.
    pub fn output_dir(&self) -> PathBuf {
        match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir),
            _ => self.output.dir.clone(),
        }
    }
}
