//! Numerical laboratory for convergence rates of 1D reaction–diffusion
//! problems with nonlinear Robin boundary conditions.
//!
//! A family of problems `u_t = (p_ε u_x)_x − (λ + V_ε) u + f^ε(u)` on (0, 1)
//! with boundary flux `−(λ + b_ε) u + g^ε(u)` is discretized by P1 finite
//! elements. The crate measures, as ε → 0, how fast resolvents, eigenpairs,
//! equilibria, semigroups, unstable manifolds, reduced maps and global
//! attractors of the perturbed problem approach those of the limit problem.

pub mod banded;
pub mod dynamics;
pub mod error;
pub mod family;
pub mod fem;
pub mod linalg;
pub mod manifolds;
pub mod matrix_io;
pub mod mesh;
pub mod rates;
pub mod reduction;
pub mod spectral;

pub use error::{LabError, Result};
pub use family::{CoefficientFamily, Endpoint, StandardParams};
pub use fem::{assemble_operator, DiscreteOperator, DiscreteState, NormTag};
pub use mesh::Mesh1D;
