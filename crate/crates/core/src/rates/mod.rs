//! Rate fitting, the abstract equi-attraction bounds, the singularly
//! perturbed ODE example, and the configuration-driven experiment runner.

pub mod bounds;
pub mod config;
pub mod fit;
pub mod ode;
pub mod runner;

pub use bounds::{equi_attraction_bound, exponential_rate_bound, BoundResult, RateBoundParams};
pub use fit::{fit_rate, linear_regression, log_corrected_scale, FitMode, RateFit, RatePoint, RateSeries};
pub use ode::{
    ode_attractor, ode_example_experiment, sdirk2_evolve, sdirk2_step, OdeAttractor,
    OdeExampleConfig, OdeExampleReport, OdeNonlinearity, OdeRow, SingularOde,
};
pub use config::{
    BoundTableConfig, ExperimentConfig, ExperimentKind, FamilyConfig, LabConfig, MeshConfig,
    OdeConfig, OutputConfig, SweepConfig,
};
pub use runner::{
    list_experiments, run_config_file, run_experiment, write_reports, Certification, Check,
    ExperimentOutcome, LabelledFit,
};
