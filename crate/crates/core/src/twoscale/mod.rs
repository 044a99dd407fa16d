//! Macroscopic Newton drivers and adaptive load stepping.
//!
//! A [`TwoScaleModel`] couples a macro mesh to one [`RveProblem`] per macro
//! integration point. [`run`] marches the load factor from 0 to `t_end` using
//! either the staggered (nested Newton) or monolithic (condensed coupled
//! Newton) scheme; both produce the same [`SolveReport`] layout.

mod driver;
mod stepping;

pub use driver::run;
pub use stepping::{adapt_step, StepDecision, StepOutcome};

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use crate::linalg::{compute_ordering, LinalgError, Permutation, SparsityPattern};
use crate::mesh::{build_integration_points, structure_of_stiffness, DofMap, IntegrationPoint, Mesh, MeshError};
use crate::rve::{RveError, RveProblem, RveTemplate};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TwoScaleError {
    #[error("invalid solver settings: {0}")]
    Settings(String),

    #[error("invalid model: {0}")]
    Model(String),

    #[error(transparent)]
    Mesh(#[from] MeshError),

    #[error(transparent)]
    Rve(#[from] RveError),

    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    Staggered,
    Monolithic,
    /// Monolithic, keeping each RVE factorization for the next micro update.
    MonolithicStored,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Staggered, Scheme::Monolithic, Scheme::MonolithicStored];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Staggered => "staggered",
            Scheme::Monolithic => "monolithic",
            Scheme::MonolithicStored => "monolithic-stored",
        }
    }

    pub fn is_monolithic(self) -> bool {
        !matches!(self, Scheme::Staggered)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "staggered" => Ok(Scheme::Staggered),
            "monolithic" => Ok(Scheme::Monolithic),
            "monolithic-stored" | "monolithic-stored-factorization" => Ok(Scheme::MonolithicStored),
            other => Err(format!(
                "unknown scheme `{other}` (expected staggered, monolithic or monolithic-stored)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings {
    pub tol_macro: f64,
    pub tol_micro: f64,
    pub max_macro_iter: usize,
    /// Micro Newton budget; also drives step growth for the staggered scheme.
    pub n_max: usize,
    pub t_end: f64,
    pub dt_initial: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub cut_factor: f64,
    pub growth_factor: f64,
    pub extrapolate: bool,
    pub parallel_workers: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tol_macro: 5e-3,
            tol_micro: 5e-3,
            max_macro_iter: 16,
            n_max: 12,
            t_end: 1.0,
            dt_initial: 0.1,
            dt_min: 1e-4,
            dt_max: 0.25,
            cut_factor: 0.5,
            growth_factor: 1.5,
            extrapolate: true,
            parallel_workers: 1,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<(), TwoScaleError> {
        let fail = |msg: &str| Err(TwoScaleError::Settings(msg.to_string()));
        let positive = [
            ("tol_macro", self.tol_macro),
            ("tol_micro", self.tol_micro),
            ("t_end", self.t_end),
            ("dt_min", self.dt_min),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(TwoScaleError::Settings(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.cut_factor > 0.0 && self.cut_factor < 1.0) {
            return fail("cut_factor must satisfy 0 < cut_factor < 1");
        }
        if !(self.growth_factor > 1.0 && self.growth_factor.is_finite()) {
            return fail("growth_factor must be greater than 1");
        }
        if !(self.dt_min <= self.dt_initial && self.dt_initial <= self.dt_max) {
            return fail("time steps must satisfy dt_min <= dt_initial <= dt_max");
        }
        if self.max_macro_iter == 0 {
            return fail("max_macro_iter must be at least 1");
        }
        if self.n_max == 0 {
            return fail("n_max must be at least 1");
        }
        if self.parallel_workers == 0 {
            return fail("parallel_workers must be at least 1");
        }
        Ok(())
    }
}

/// Load definition; every value is scaled by the load factor λ.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Loading {
    /// (macro DOF, prescribed displacement at λ = 1)
    pub prescribed: Vec<(usize, f64)>,
    /// (macro DOF, nodal force at λ = 1)
    pub forces: Vec<(usize, f64)>,
    /// DOF whose internal forces are summed into the reported reaction.
    pub reaction_dofs: Vec<usize>,
    /// DOF whose displacement is reported on the load curve.
    pub control_dof: usize,
}

/// Macro mesh, loading and one RVE per macro integration point.
#[derive(Debug, Clone)]
pub struct TwoScaleModel {
    mesh: Mesh,
    ips: Vec<IntegrationPoint>,
    loading: Loading,
    dofs: DofMap,
    pattern: SparsityPattern,
    ordering: Permutation,
    external: Vec<f64>,
    force_floor: f64,
    rves: Vec<RveProblem>,
    u: Vec<f64>,
    u_committed: Vec<f64>,
    u_older: Vec<f64>,
    commits: usize,
}

impl TwoScaleModel {
    /// Macro elements of phase `p` use microstructure `templates[p]`.
    pub fn new(mesh: Mesh, templates: Vec<Arc<RveTemplate>>, loading: Loading) -> Result<Self, TwoScaleError> {
        let n = mesh.n_dofs();
        let mut fixed: Vec<usize> = loading.prescribed.iter().map(|&(d, _)| d).collect();
        fixed.sort_unstable();
        if fixed.windows(2).any(|w| w[0] == w[1]) {
            return Err(TwoScaleError::Model("a DOF is prescribed twice".into()));
        }
        let all_dofs = fixed
            .iter()
            .chain(loading.forces.iter().map(|(d, _)| d))
            .chain(&loading.reaction_dofs)
            .chain(std::iter::once(&loading.control_dof));
        if let Some(d) = all_dofs.copied().find(|&d| d >= n) {
            return Err(TwoScaleError::Model(format!(
                "DOF {d} out of range (model has {n} DOF)"
            )));
        }
        if let Some(&(d, _)) = loading.forces.iter().find(|(d, _)| fixed.binary_search(d).is_ok()) {
            return Err(TwoScaleError::Model(format!(
                "DOF {d} carries both a force and a prescribed displacement"
            )));
        }

        let ips = build_integration_points(&mesh)?;
        let mut rves = Vec::with_capacity(ips.len());
        for ip in &ips {
            let template = templates
                .get(ip.phase)
                .ok_or_else(|| TwoScaleError::Model(format!("no microstructure for macro phase {}", ip.phase)))?;
            rves.push(RveProblem::new(template.clone()));
        }

        let dofs = DofMap::with_fixed(n, &fixed);
        if dofs.n_free() == 0 {
            return Err(TwoScaleError::Model("every macro DOF is prescribed".into()));
        }
        let pattern = structure_of_stiffness(&mesh, &dofs);
        let ordering = compute_ordering(&pattern)?;
        let mut external = vec![0.0; n];
        for &(d, f) in &loading.forces {
            external[d] += f;
        }
        let (lo, hi) = mesh.bounding_box();
        let length = (hi[0] - lo[0]).max(hi[1] - lo[1]);
        let young = templates
            .iter()
            .flat_map(|t| t.materials().iter().map(|m| m.elastic().young))
            .fold(0.0, f64::max);

        Ok(Self {
            mesh,
            ips,
            loading,
            dofs,
            pattern,
            ordering,
            external,
            force_floor: 1e-8 * young * length,
            rves,
            u: vec![0.0; n],
            u_committed: vec![0.0; n],
            u_older: vec![0.0; n],
            commits: 0,
        })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn loading(&self) -> &Loading {
        &self.loading
    }

    pub fn rves(&self) -> &[RveProblem] {
        &self.rves
    }

    pub fn n_rves(&self) -> usize {
        self.rves.len()
    }

    pub fn integration_points(&self) -> &[IntegrationPoint] {
        &self.ips
    }

    /// Macro nodal displacements Û at the last converged increment.
    pub fn displacement(&self) -> &[f64] {
        &self.u_committed
    }

    /// Accumulated plastic strain of every committed micro integration
    /// point, RVE by RVE.
    pub fn committed_alpha_bar(&self) -> Vec<Vec<f64>> {
        self.rves
            .iter()
            .map(|r| r.committed_states().iter().map(|s| s.alpha_bar).collect())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub load_factor: f64,
    pub control_value: f64,
    pub reaction: f64,
}

/// Work and convergence data of one accepted increment, including the work
/// of failed attempts at the same target.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IncrementRecord {
    pub index: usize,
    pub load_factor: f64,
    pub dt: f64,
    pub macro_iterations: usize,
    /// Summed over RVEs and macro iterations.
    pub micro_iterations: usize,
    /// Largest micro iteration count of any RVE in any macro iteration.
    pub max_micro_iterations: usize,
    /// Micro factorizations.
    pub factorizations: usize,
    pub macro_factorizations: usize,
    pub wall_ms: f64,
    pub cut_events: usize,
    pub grown: bool,
    /// Plastic flow at some micro point in the converged state.
    pub plastic: bool,
    /// ‖R̂‖∞ on free macro DOF, one entry per macro iteration.
    pub residual_history: Vec<f64>,
    pub reference_force: f64,
    /// Plastic micro points over all RVEs, per macro iteration.
    pub plastic_history: Vec<usize>,
    /// Micro factorizations per macro iteration.
    pub factorization_history: Vec<usize>,
    /// RVEs whose current or retained linearization is not purely elastic,
    /// per macro iteration.
    pub nonlinear_history: Vec<usize>,
    /// Per iteration, the largest micro residual relative to its RVE's
    /// reference force.
    pub micro_residual_history: Vec<f64>,
    /// Largest micro residual norm of the converged iteration.
    pub micro_residual_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub scheme: Scheme,
    pub increments: Vec<IncrementRecord>,
    pub curve: Vec<CurvePoint>,
    pub converged: bool,
    pub failure: Option<String>,
    pub wall_ms: f64,
}

impl SolveReport {
    pub fn total_macro_iterations(&self) -> usize {
        self.increments.iter().map(|r| r.macro_iterations).sum()
    }

    pub fn total_micro_iterations(&self) -> usize {
        self.increments.iter().map(|r| r.micro_iterations).sum()
    }

    pub fn total_factorizations(&self) -> usize {
        self.increments.iter().map(|r| r.factorizations).sum()
    }

    pub fn total_cut_events(&self) -> usize {
        self.increments.iter().map(|r| r.cut_events).sum()
    }

    /// Same numbers, timings excluded.
    pub fn same_numbers(&self, other: &SolveReport) -> bool {
        let strip = |r: &SolveReport| {
            let mut r = r.clone();
            r.wall_ms = 0.0;
            for inc in &mut r.increments {
                inc.wall_ms = 0.0;
            }
            r
        };
        strip(self) == strip(other)
    }
}
