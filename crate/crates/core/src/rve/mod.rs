//! The micro-scale boundary value problem attached to one macro point.
//!
//! The micro displacement is split as `u = H · X₀ + w` with a periodic
//! fluctuation `w`. Periodicity is enforced by elimination: the unknowns
//! `û` are the fluctuations at master nodes, with one anchor corner fixed.
//! With this split `⟨h⟩ = H` holds for any `û`, and `∂r̂/∂H` is the
//! reduced stiffness applied to the affine part.

mod periodic;
mod problem;

pub use periodic::{build_periodic_map, PeriodicMap, PeriodicPair};
pub use problem::{Assembly, HomogenizedOutput, RveProblem, RveTemplate, DEFAULT_TOL_GEOM};

use thiserror::Error;

use crate::linalg::LinalgError;
use crate::mesh::MeshError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RveError {
    #[error("boundary node {node} has no periodic partner (nearest candidate at distance {distance:e})")]
    Unmatched { node: usize, distance: f64 },

    #[error("RVE has no {corner} corner node")]
    MissingCorner { corner: &'static str },

    #[error("no valid material given for phase {phase}")]
    Material { phase: usize },

    #[error(
        "micro Newton did not converge in {iterations} iterations (residual {residual:e}, tolerance {tolerance:e})"
    )]
    Diverged {
        iterations: usize,
        residual: f64,
        tolerance: f64,
    },

    #[error(transparent)]
    Mesh(#[from] MeshError),

    #[error(transparent)]
    Linalg(#[from] LinalgError),
}
