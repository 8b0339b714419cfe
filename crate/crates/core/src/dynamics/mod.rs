//! Time integration, equilibria and semigroup gaps of the semilinear
//! problem `M u′ + K u = h^ε(u)`.

mod equilibria;
mod gaps;
mod integrator;
mod nonlinear;

pub use equilibria::{
    default_guesses, equilibrium_gap, find_equilibria, linearization, morse_index, newton,
    residual, write_equilibrium_csv, EquilibriumOptions, EquilibriumSet,
};
pub use gaps::{
    linear_semigroup_gap, nonlinear_semigroup_gap, semigroup_difference_norm, LinearSemigroup,
};
pub use integrator::{
    certify_dt, evolve, evolve_observed, step, trajectory, write_trajectory_csv, DtCertificate,
    IntegratorConfig, Scheme, Stepper, DIVERGENCE_GUARD,
};
pub use nonlinear::NonlinearTerm;
