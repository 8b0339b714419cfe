//! Galerkin reduction with slaved tails, time-1 reduced maps, and
//! finite-window shadowing.

mod map;
mod shadowing;
mod system;

pub use map::{pseudo_trajectory_defect, reduced_map, DiscreteMap};
pub use shadowing::{
    lpsp_attractor_bound, map_gap, noisy_orbit, reduced_attractor, shadow_solve, shadowing_trials,
    Neighborhood, ReducedAttractor, ReducedAttractorConfig, ShadowOptions, ShadowOutcome,
    ShadowingConfig, ShadowingParams, ShadowingReport, ShadowingTrial, WindowCheck,
};
pub use system::{reduce, ReducedSystem, ReductionConfig, Slaved};
