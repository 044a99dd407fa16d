use std::ops::Range;
use std::sync::Arc;

use nalgebra::{DMatrix, Matrix4, Vector4};

use crate::linalg::{compute_ordering, factorize, norm_inf, Factorization, Permutation, SparseMatrix, SparsityPattern};
use crate::material::{Material, MaterialState};
use crate::mesh::{build_integration_points, structure_of_stiffness, DofMap, IntegrationPoint, Mesh};

use super::{build_periodic_map, PeriodicMap, RveError};

pub const DEFAULT_TOL_GEOM: f64 = 1e-9;

/// Absolute floor of the residual reference, relative to `E · L`.
const FORCE_FLOOR: f64 = 1e-8;

/// Immutable data shared by every RVE instance of one microstructure.
#[derive(Debug)]
pub struct RveTemplate {
    mesh: Mesh,
    materials: Vec<Material>,
    ips: Vec<IntegrationPoint>,
    element_ips: Vec<Range<usize>>,
    map: PeriodicMap,
    dofs: DofMap,
    pattern: SparsityPattern,
    ordering: Permutation,
    volume: f64,
    force_floor: f64,
    /// Reduced index of each element DOF.
    element_dofs: Vec<Vec<Option<usize>>>,
    /// CSR position of each element stiffness entry `(p, q)`, row-major.
    element_scatter: Vec<Vec<Option<usize>>>,
    /// Outer boundary edges: (node a, node b, outward normal, length).
    boundary_edges: Vec<(usize, usize, [f64; 2], f64)>,
}

impl RveTemplate {
    /// `materials[p]` is used for the elements of phase `p`.
    pub fn new(mesh: Mesh, materials: Vec<Material>, tol_geom: f64) -> Result<Self, RveError> {
        for block in mesh.blocks() {
            match materials.get(block.phase) {
                Some(m) if m.is_valid() => {}
                _ => return Err(RveError::Material { phase: block.phase }),
            }
        }
        let ips = build_integration_points(&mesh)?;
        let map = build_periodic_map(&mesh, tol_geom)?;
        let dofs = map.dof_map();
        let pattern = structure_of_stiffness(&mesh, &dofs);
        let ordering = if dofs.n_free() > 0 {
            compute_ordering(&pattern)?
        } else {
            Permutation::identity(0)
        };

        let mut element_ips = Vec::with_capacity(mesh.n_elements());
        let mut start = 0;
        while start < ips.len() {
            let e = ips[start].element;
            let end = start + ips[start..].iter().take_while(|ip| ip.element == e).count();
            element_ips.push(start..end);
            start = end;
        }

        let mut element_dofs = Vec::with_capacity(element_ips.len());
        let mut element_scatter = Vec::with_capacity(element_ips.len());
        let mut boundary_edges = Vec::new();
        for range in &element_ips {
            let nodes = &ips[range.start].nodes;
            let reduced: Vec<Option<usize>> = nodes
                .iter()
                .flat_map(|&n| [2 * n, 2 * n + 1])
                .map(|d| dofs.get(d))
                .collect();
            let scatter = reduced
                .iter()
                .flat_map(|&p| reduced.iter().map(move |&q| p.zip(q)).collect::<Vec<_>>())
                .map(|pq| pq.and_then(|(p, q)| pattern.position(p, q)))
                .collect();
            element_dofs.push(reduced);
            element_scatter.push(scatter);

            for k in 0..nodes.len() {
                let (a, b) = (nodes[k], nodes[(k + 1) % nodes.len()]);
                if let Some(normal) = map.common_side(a, b) {
                    let (xa, xb) = (mesh.nodes()[a], mesh.nodes()[b]);
                    let length = (xa[0] - xb[0]).hypot(xa[1] - xb[1]);
                    boundary_edges.push((a, b, normal, length));
                }
            }
        }

        let (lo, hi) = map.bounds();
        let volume = (hi[0] - lo[0]) * (hi[1] - lo[1]);
        let edge_length = (hi[0] - lo[0]).max(hi[1] - lo[1]);
        let young = materials.iter().map(|m| m.elastic().young).fold(0.0, f64::max);

        Ok(Self {
            mesh,
            materials,
            ips,
            element_ips,
            map,
            dofs,
            pattern,
            ordering,
            volume,
            force_floor: FORCE_FLOOR * young * edge_length,
            element_dofs,
            element_scatter,
            boundary_edges,
        })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn materials(&self) -> &[Material] {
        &self.materials
    }

    pub fn integration_points(&self) -> &[IntegrationPoint] {
        &self.ips
    }

    pub fn periodic_map(&self) -> &PeriodicMap {
        &self.map
    }

    pub fn dof_map(&self) -> &DofMap {
        &self.dofs
    }

    pub fn pattern(&self) -> &SparsityPattern {
        &self.pattern
    }

    pub fn ordering(&self) -> &Permutation {
        &self.ordering
    }

    /// Reduced unknown count (master DOF minus the two anchor DOF).
    pub fn n_unknowns(&self) -> usize {
        self.dofs.n_free()
    }

    /// Gross cell volume |V₀| (pores included).
    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn force_floor(&self) -> f64 {
        self.force_floor
    }

    /// Volume fraction of each phase.
    pub fn phase_fractions(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.materials.len()];
        for ip in &self.ips {
            out[ip.phase] += ip.weight / self.volume;
        }
        out
    }
}

/// Result of one residual/stiffness evaluation of an RVE.
#[derive(Debug, Clone)]
pub struct Assembly {
    /// Reduced residual r̂.
    pub residual: Vec<f64>,
    /// Reduced tangent stiffness k_t = ∂r̂/∂û.
    pub stiffness: SparseMatrix,
    /// ∂r̂/∂H, one column per gradient component.
    pub sensitivity: DMatrix<f64>,
    /// Σ from the boundary nodal forces.
    pub stress: Vector4<f64>,
    /// Σ from the volume average of σ.
    pub stress_volume: Vector4<f64>,
    /// ∂Σ/∂û (4 × unknowns), consistent with `stress`.
    pub stress_du: DMatrix<f64>,
    /// ∂Σ/∂H at fixed û.
    pub stress_dh: Matrix4<f64>,
    /// Unreduced internal force vector.
    pub internal_forces: Vec<f64>,
    pub plastic_points: usize,
    pub trial_states: Vec<MaterialState>,
}

impl Assembly {
    pub fn residual_norm(&self) -> f64 {
        norm_inf(&self.residual)
    }

    pub fn force_norm(&self) -> f64 {
        norm_inf(&self.internal_forces)
    }

    fn all_elastic(&self) -> bool {
        self.plastic_points == 0
    }
}

/// Homogenized response of one RVE for the macro assembly.
#[derive(Debug, Clone, PartialEq)]
pub struct HomogenizedOutput {
    pub sigma_bar: Vector4<f64>,
    /// Σ^alg = Σ − ∂Σ/∂û · k_t⁻¹ · r̂
    pub sigma_alg: Vector4<f64>,
    /// C_t = ∂Σ/∂H − ∂Σ/∂û · k_t⁻¹ · ∂r̂/∂H
    pub c_tangent: Matrix4<f64>,
    pub residual_norm: f64,
    /// Whether `residual_norm` meets the micro tolerance.
    pub converged: bool,
    pub micro_iterations: usize,
    pub factorizations: usize,
    /// Both the retained factorization and the final assembly were purely
    /// elastic, so the retained factorization and tangent were re-used.
    pub linear_step: bool,
    pub plastic_points: usize,
}

#[derive(Debug, Clone)]
struct FactorCache {
    factorization: Arc<Factorization>,
    /// The factorized matrix came from an assembly without plastic points.
    all_elastic: bool,
    /// (C_t, ∂û/∂H) computed with this factorization.
    tangent: Option<(Matrix4<f64>, DMatrix<f64>)>,
}

/// One RVE instance: history, current iterate and cached linearization.
#[derive(Debug, Clone)]
pub struct RveProblem {
    template: Arc<RveTemplate>,
    committed: Vec<MaterialState>,
    trial: Vec<MaterialState>,
    u: Vec<f64>,
    u_committed: Vec<f64>,
    u_older: Vec<f64>,
    commits: usize,
    h_applied: Vector4<f64>,
    h_committed: Vector4<f64>,
    linearization: Option<Assembly>,
    cache: Option<FactorCache>,
    committed_linearization: Option<(Assembly, Option<FactorCache>)>,
    ref_force: f64,
    plastic_in_trial: bool,
    committed_plastic: bool,
}

impl RveProblem {
    pub fn new(template: Arc<RveTemplate>) -> Self {
        let n_ip = template.ips.len();
        let n = template.n_unknowns();
        Self {
            template,
            committed: vec![MaterialState::default(); n_ip],
            trial: vec![MaterialState::default(); n_ip],
            u: vec![0.0; n],
            u_committed: vec![0.0; n],
            u_older: vec![0.0; n],
            commits: 0,
            h_applied: Vector4::zeros(),
            h_committed: Vector4::zeros(),
            linearization: None,
            cache: None,
            committed_linearization: None,
            ref_force: 0.0,
            plastic_in_trial: false,
            committed_plastic: false,
        }
    }

    pub fn template(&self) -> &Arc<RveTemplate> {
        &self.template
    }

    /// Current reduced fluctuation û.
    pub fn u_hat(&self) -> &[f64] {
        &self.u
    }

    pub fn set_u_hat(&mut self, u: &[f64]) {
        self.u.copy_from_slice(u);
    }

    pub fn h_applied(&self) -> Vector4<f64> {
        self.h_applied
    }

    pub fn set_h_applied(&mut self, h: Vector4<f64>) {
        self.h_applied = h;
    }

    pub fn committed_states(&self) -> &[MaterialState] {
        &self.committed
    }

    pub fn trial_states(&self) -> &[MaterialState] {
        &self.trial
    }

    /// Whether plastic flow occurred in the last committed increment.
    pub fn committed_plastic(&self) -> bool {
        self.committed_plastic
    }

    /// Whether the last assembly had plastic points.
    pub fn trial_plastic(&self) -> bool {
        self.plastic_in_trial
    }

    /// Residual tolerance scale: running max of ‖f_int‖∞ within the increment,
    /// bounded below by `1e-8 · E · L`.
    pub fn reference_force(&self) -> f64 {
        self.ref_force.max(self.template.force_floor)
    }

    /// Whether the next monolithic iteration can reuse the cached factorization.
    pub fn has_cached_factorization(&self) -> bool {
        self.cache.is_some()
    }

    /// Full node-major displacement `H · X₀ + w`.
    pub fn full_displacement(&self) -> Vec<f64> {
        let t = &*self.template;
        let h = &self.h_applied;
        let mut out = vec![0.0; t.mesh.n_dofs()];
        for (node, x) in t.mesh.nodes().iter().enumerate() {
            for c in 0..2 {
                let dof = 2 * node + c;
                let w = t.dofs.get(dof).map_or(0.0, |r| self.u[r]);
                out[dof] = h[2 * c] * x[0] + h[2 * c + 1] * x[1] + w;
            }
        }
        out
    }

    /// ⟨h⟩ from the outer-boundary integral of `u ⊗ n`.
    pub fn average_gradient(&self) -> Vector4<f64> {
        let u = self.full_displacement();
        let mut h = Vector4::zeros();
        for &(a, b, n, length) in &self.template.boundary_edges {
            for i in 0..2 {
                let mean = 0.5 * (u[2 * a + i] + u[2 * b + i]);
                for j in 0..2 {
                    h[2 * i + j] += length * mean * n[j];
                }
            }
        }
        h / self.template.volume
    }

    /// Volume average of `h` over the solid, divided by the gross volume.
    pub fn volume_average_gradient(&self) -> Vector4<f64> {
        let u = self.full_displacement();
        let sum: Vector4<f64> = self.template.ips.iter().map(|ip| ip.gradient(&u) * ip.weight).sum();
        sum / self.template.volume
    }

    /// Residual, stiffness and stress sensitivities at the current iterate,
    /// with every integration point returned-mapped from its committed state.
    pub fn assemble(&self) -> Assembly {
        let t = &*self.template;
        let n = t.n_unknowns();
        let inv_volume = 1.0 / t.volume;
        let u_full = self.full_displacement();

        let mut residual = vec![0.0; n];
        let mut stiffness = SparseMatrix::zeros(&t.pattern);
        let mut sensitivity = DMatrix::zeros(n, 4);
        let mut stress = Vector4::zeros();
        let mut stress_volume = Vector4::zeros();
        let mut stress_du = DMatrix::zeros(4, n);
        let mut stress_dh = Matrix4::zeros();
        let mut internal_forces = vec![0.0; t.mesh.n_dofs()];
        let mut trial_states = Vec::with_capacity(t.ips.len());
        let mut plastic_points = 0;

        for (e, range) in t.element_ips.iter().enumerate() {
            let nodes = &t.ips[range.start].nodes;
            let nd = 2 * nodes.len();
            let u_e: Vec<f64> = nodes.iter().flat_map(|&a| [u_full[2 * a], u_full[2 * a + 1]]).collect();

            let mut f_e = vec![0.0; nd];
            let mut k_e = DMatrix::zeros(nd, nd);
            for (i, ip) in t.ips[range.clone()].iter().enumerate() {
                let idx = range.start + i;
                let h = ip.gradient_local(&u_e);
                let res = t.materials[ip.phase].evaluate(&h, &self.committed[idx]);
                ip.add_bt_vec(ip.weight, &res.sigma, &mut f_e);
                let b = ip.b_matrix();
                k_e += (b.transpose() * (res.tangent * &b)) * ip.weight;
                stress_volume += res.sigma * ip.weight;
                plastic_points += usize::from(res.plastic_active);
                trial_states.push(res.new_state);
            }

            // affine part: d(u_e)/dH
            let mut affine = DMatrix::zeros(nd, 4);
            for (a, &node) in nodes.iter().enumerate() {
                let x = t.mesh.nodes()[node];
                affine[(2 * a, 0)] = x[0];
                affine[(2 * a, 1)] = x[1];
                affine[(2 * a + 1, 2)] = x[0];
                affine[(2 * a + 1, 3)] = x[1];
            }
            let k_affine = &k_e * &affine;

            let dofs = &t.element_dofs[e];
            let scatter = &t.element_scatter[e];
            let values = stiffness.values_mut();
            for p in 0..nd {
                internal_forces[2 * nodes[p / 2] + p % 2] += f_e[p];
                if let Some(r) = dofs[p] {
                    residual[r] += f_e[p];
                    for c in 0..4 {
                        sensitivity[(r, c)] += k_affine[(p, c)];
                    }
                }
                for q in 0..nd {
                    if let Some(pos) = scatter[p * nd + q] {
                        values[pos] += k_e[(p, q)];
                    }
                }
            }

            // boundary moment Σ_ij = 1/V Σ_a f_ai X_aj over outer-boundary nodes
            if nodes.iter().any(|&a| t.map.on_boundary(a)) {
                let mut moment = DMatrix::zeros(4, nd);
                for (a, &node) in nodes.iter().enumerate() {
                    if t.map.on_boundary(node) {
                        let x = t.mesh.nodes()[node];
                        for i in 0..2 {
                            for j in 0..2 {
                                moment[(2 * i + j, 2 * a + i)] = x[j] * inv_volume;
                            }
                        }
                    }
                }
                let mk = &moment * &k_e;
                let fe = DMatrix::from_column_slice(nd, 1, &f_e);
                let ds = &moment * fe;
                for r in 0..4 {
                    stress[r] += ds[(r, 0)];
                }
                let dh = &mk * &affine;
                for r in 0..4 {
                    for c in 0..4 {
                        stress_dh[(r, c)] += dh[(r, c)];
                    }
                }
                for q in 0..nd {
                    if let Some(col) = dofs[q] {
                        for r in 0..4 {
                            stress_du[(r, col)] += mk[(r, q)];
                        }
                    }
                }
            }
        }

        Assembly {
            residual,
            stiffness,
            sensitivity,
            stress,
            stress_volume: stress_volume * inv_volume,
            stress_du,
            stress_dh,
            internal_forces,
            plastic_points,
            trial_states,
        }
    }

    /// Σ by the boundary-force route at the current iterate.
    pub fn homogenize_stress(&self) -> Vector4<f64> {
        self.assemble().stress
    }

    fn record(&mut self, asm: &Assembly) {
        self.ref_force = self.ref_force.max(asm.force_norm());
    }

    fn tolerance(&self, tol: f64) -> f64 {
        tol * self.reference_force()
    }

    /// Factorization of `asm.stiffness`, reusing the cached one when both it
    /// and `asm` come from purely elastic assemblies (identical matrices).
    fn factor_for(&mut self, asm: &Assembly, count: &mut usize) -> Result<Arc<Factorization>, RveError> {
        if let Some(cache) = &self.cache {
            if cache.all_elastic && asm.all_elastic() {
                return Ok(cache.factorization.clone());
            }
        }
        let f = Arc::new(factorize(&asm.stiffness, &self.template.ordering)?);
        *count += 1;
        self.cache = Some(FactorCache {
            factorization: f.clone(),
            all_elastic: asm.all_elastic(),
            tangent: None,
        });
        Ok(f)
    }

    fn reuses_cache(&self, asm: &Assembly) -> bool {
        matches!(&self.cache, Some(c) if c.all_elastic && asm.all_elastic())
    }

    /// C_t from the cached factorization, solving k_t · ∂û/∂H = −∂r̂/∂H.
    fn tangent_from_cache(&mut self, asm: &Assembly) -> Result<Matrix4<f64>, RveError> {
        let cache = self.cache.as_mut().expect("factorization present");
        if let Some((c, _)) = &cache.tangent {
            return Ok(*c);
        }
        let du_dh = -cache.factorization.solve(&asm.sensitivity)?;
        let c = asm.stress_dh + &asm.stress_du * &du_dh;
        cache.tangent = Some((c, du_dh));
        Ok(c)
    }

    /// Staggered micro solve: Newton iterations at fixed `h_target` until
    /// `‖r̂‖∞ ≤ tol · reference_force()`, then Σ and C_t at the converged state.
    ///
    /// `micro_iterations` counts Newton corrections; an RVE that is already
    /// in equilibrium still costs one residual check and reports one.
    pub fn solve_micro_staggered(
        &mut self,
        h_target: Vector4<f64>,
        tol: f64,
        max_iter: usize,
    ) -> Result<HomogenizedOutput, RveError> {
        self.h_applied = h_target;
        let mut factorizations = 0;
        let mut solves = 0;
        let asm = loop {
            let asm = self.assemble();
            self.record(&asm);
            let rnorm = asm.residual_norm();
            if rnorm <= self.tolerance(tol) {
                break asm;
            }
            if solves >= max_iter {
                return Err(RveError::Diverged {
                    iterations: solves,
                    residual: rnorm,
                    tolerance: self.tolerance(tol),
                });
            }
            let f = self.factor_for(&asm, &mut factorizations)?;
            let du = f.solve_vec(&asm.residual)?;
            for (u, d) in self.u.iter_mut().zip(du) {
                *u -= d;
            }
            solves += 1;
        };

        let linear_step = self.reuses_cache(&asm);
        self.factor_for(&asm, &mut factorizations)?;
        let c_tangent = self.tangent_from_cache(&asm)?;

        let out = HomogenizedOutput {
            sigma_bar: asm.stress,
            sigma_alg: asm.stress,
            c_tangent,
            residual_norm: asm.residual_norm(),
            converged: true,
            micro_iterations: solves.max(1),
            factorizations,
            linear_step,
            plastic_points: asm.plastic_points,
        };
        self.store(asm);
        Ok(out)
    }

    fn store(&mut self, asm: Assembly) {
        self.plastic_in_trial = asm.plastic_points > 0;
        self.trial.clone_from(&asm.trial_states);
        self.linearization = Some(asm);
    }

    fn ensure_linearization(&mut self) {
        if self.linearization.is_none() {
            let asm = self.assemble();
            self.record(&asm);
            self.store(asm);
        }
    }

    /// Monolithic micro update Δû = −k_t⁻¹ · (r̂ + ∂r̂/∂H · ΔH), with k_t, r̂
    /// and ∂r̂/∂H from the previous assembly and `ΔH = h_target − H_prev`.
    ///
    /// With `keep_factorization` the factorization retained by the previous
    /// call to [`Self::homogenized_tangent_and_alg_stress`] is re-used;
    /// otherwise k_t is factorized again. Returns the number of
    /// factorizations performed (0 or 1).
    pub fn micro_update_monolithic(
        &mut self,
        h_target: Vector4<f64>,
        keep_factorization: bool,
    ) -> Result<usize, RveError> {
        self.ensure_linearization();
        let lin = self.linearization.as_ref().expect("linearization present");
        let dh = h_target - self.h_applied;
        let mut rhs = lin.residual.clone();
        if dh != Vector4::zeros() {
            let g_dh = &lin.sensitivity * dh;
            for (r, g) in rhs.iter_mut().zip(g_dh.iter()) {
                *r += g;
            }
        }
        let mut factorizations = 0;
        let factorization = match (&self.cache, keep_factorization) {
            (Some(cache), true) => cache.factorization.clone(),
            _ => {
                factorizations += 1;
                let f = Arc::new(factorize(&lin.stiffness, &self.template.ordering)?);
                if keep_factorization {
                    self.cache = Some(FactorCache {
                        factorization: f.clone(),
                        all_elastic: lin.all_elastic(),
                        tangent: None,
                    });
                }
                f
            }
        };
        let du = factorization.solve_vec(&rhs)?;
        for (u, d) in self.u.iter_mut().zip(du) {
            *u -= d;
        }
        self.h_applied = h_target;
        Ok(factorizations)
    }

    /// Assembles at the current iterate and returns Σ, C_t and Σ^alg.
    ///
    /// With `keep_factorization` the new factorization is retained for the
    /// next [`Self::micro_update_monolithic`]; if both the retained and the
    /// new assembly are purely elastic the matrix is unchanged and the
    /// retained factorization and tangent are re-used without refactorizing.
    pub fn homogenized_tangent_and_alg_stress(
        &mut self,
        tol: f64,
        keep_factorization: bool,
    ) -> Result<HomogenizedOutput, RveError> {
        let asm = self.assemble();
        self.record(&asm);
        let mut factorizations = 0;
        if !keep_factorization {
            self.cache = None;
        }
        let linear_step = self.reuses_cache(&asm);
        if !linear_step {
            self.cache = None;
        }
        self.factor_for(&asm, &mut factorizations)?;
        let c_tangent = self.tangent_from_cache(&asm)?;
        let cache = self.cache.as_ref().expect("factorization present");
        let y = cache.factorization.solve_vec(&asm.residual)?;
        let correction = &asm.stress_du * DMatrix::from_column_slice(y.len(), 1, &y);
        let sigma_alg = asm.stress - Vector4::from_column_slice(correction.as_slice());
        let residual_norm = asm.residual_norm();
        let out = HomogenizedOutput {
            sigma_bar: asm.stress,
            sigma_alg,
            c_tangent,
            residual_norm,
            converged: residual_norm <= self.tolerance(tol),
            micro_iterations: 1,
            factorizations,
            linear_step,
            plastic_points: asm.plastic_points,
        };
        if !keep_factorization {
            self.cache = None;
        }
        self.store(asm);
        Ok(out)
    }

    /// Starting fluctuation for the next increment,
    /// `û_n + ratio · (û_n − û_{n−1})` once two increments are committed.
    pub fn extrapolate(&mut self, ratio: f64) {
        if self.commits >= 2 {
            for ((u, uc), uo) in self.u.iter_mut().zip(&self.u_committed).zip(&self.u_older) {
                *u = uc + ratio * (uc - uo);
            }
        } else {
            self.u.clone_from(&self.u_committed);
        }
    }

    /// Accepts the current iterate and trial states as converged.
    pub fn commit(&mut self) {
        std::mem::swap(&mut self.u_older, &mut self.u_committed);
        self.u_committed.clone_from(&self.u);
        self.committed_plastic = self.plastic_in_trial;
        self.committed.clone_from(&self.trial);
        self.h_committed = self.h_applied;
        self.committed_linearization = self.linearization.clone().map(|lin| (lin, self.cache.clone()));
        self.commits += 1;
        self.ref_force = 0.0;
    }

    /// Restores the last committed state together with the linearization
    /// (and retained factorization) taken there.
    pub fn revert(&mut self) {
        self.u.clone_from(&self.u_committed);
        self.trial.clone_from(&self.committed);
        self.h_applied = self.h_committed;
        match self.committed_linearization.clone() {
            Some((lin, cache)) => {
                self.plastic_in_trial = lin.plastic_points > 0;
                self.linearization = Some(lin);
                self.cache = cache;
            }
            None => {
                self.linearization = None;
                self.cache = None;
                self.plastic_in_trial = false;
            }
        }
        self.ref_force = 0.0;
    }

    /// Resets the per-increment residual reference without touching the iterate.
    pub fn begin_increment(&mut self) {
        self.ref_force = 0.0;
    }
}
