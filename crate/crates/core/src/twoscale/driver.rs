use std::time::Instant;

use nalgebra::Vector4;
use rayon::prelude::*;
use rayon::ThreadPool;

use crate::linalg::{factorize, norm_inf, SparseMatrix};
use crate::rve::{HomogenizedOutput, RveError};

use super::{
    adapt_step, CurvePoint, IncrementRecord, Scheme, SolveReport, SolverSettings, StepDecision, StepOutcome,
    TwoScaleError, TwoScaleModel,
};

/// Relative distance to `t_end` below which the remaining load is merged
/// into the current increment.
const END_SNAP: f64 = 1e-9;

/// Marches the load factor from 0 to `settings.t_end` on a freshly built model.
///
/// Solver failures do not produce an `Err`: the report is returned with
/// `converged == false`, the curve up to the last accepted increment and
/// the reason in `failure`.
pub fn run(model: &mut TwoScaleModel, scheme: Scheme, settings: &SolverSettings) -> Result<SolveReport, TwoScaleError> {
    settings.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(settings.parallel_workers)
        .build()
        .map_err(|e| TwoScaleError::Settings(format!("cannot start worker pool: {e}")))?;

    let start = Instant::now();
    let mut report = SolveReport {
        scheme,
        increments: Vec::new(),
        curve: vec![model.curve_point(0.0, &vec![0.0; model.mesh.n_dofs()])],
        converged: true,
        failure: None,
        wall_ms: 0.0,
    };
    let t_end = settings.t_end;
    let mut t = 0.0;
    let mut dt = settings.dt_initial;
    let mut last_dt: Option<f64> = None;

    while t < t_end * (1.0 - END_SNAP) {
        let mut failed_work = IncrementRecord::default();
        loop {
            let mut step = dt.min(t_end - t);
            if t_end - (t + step) <= END_SNAP * t_end {
                step = t_end - t;
            }
            let lambda = t + step;
            let ratio = last_dt.map_or(0.0, |p| step / p);
            let attempt_start = Instant::now();
            match increment(model, scheme, settings, &pool, lambda, ratio) {
                Ok((mut rec, f_int)) => {
                    rec.index = report.increments.len() + 1;
                    rec.dt = step;
                    rec.macro_iterations += failed_work.macro_iterations;
                    rec.micro_iterations += failed_work.micro_iterations;
                    rec.max_micro_iterations = rec.max_micro_iterations.max(failed_work.max_micro_iterations);
                    rec.factorizations += failed_work.factorizations;
                    rec.macro_factorizations += failed_work.macro_factorizations;
                    rec.cut_events = failed_work.cut_events;
                    rec.wall_ms = failed_work.wall_ms + attempt_start.elapsed().as_secs_f64() * 1e3;

                    model.commit();
                    report.curve.push(model.curve_point(lambda, &f_int));
                    let decision = adapt_step(
                        StepOutcome::Converged {
                            scheme,
                            macro_iterations: rec.macro_iterations,
                            max_micro_iterations: rec.max_micro_iterations,
                        },
                        step,
                        settings,
                    );
                    rec.grown = matches!(decision, StepDecision::Grow { .. });
                    dt = decision.dt().unwrap_or(step);
                    t = lambda;
                    last_dt = Some(step);
                    report.increments.push(rec);
                    break;
                }
                Err(failure) => {
                    model.revert();
                    let work = failure.work;
                    failed_work.macro_iterations += work.macro_iterations;
                    failed_work.micro_iterations += work.micro_iterations;
                    failed_work.max_micro_iterations = failed_work.max_micro_iterations.max(work.max_micro_iterations);
                    failed_work.factorizations += work.factorizations;
                    failed_work.macro_factorizations += work.macro_factorizations;
                    failed_work.cut_events += 1;
                    failed_work.wall_ms += attempt_start.elapsed().as_secs_f64() * 1e3;
                    match adapt_step(StepOutcome::Cut, step, settings) {
                        StepDecision::Retry { dt: next } => dt = next,
                        _ => {
                            report.converged = false;
                            report.failure = Some(format!(
                                "increment to load factor {lambda} failed ({}); step {step} cannot be cut below dt_min {}",
                                failure.reason, settings.dt_min
                            ));
                            report.wall_ms = start.elapsed().as_secs_f64() * 1e3;
                            return Ok(report);
                        }
                    }
                }
            }
        }
    }
    report.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(report)
}

struct Failure {
    reason: String,
    work: Box<IncrementRecord>,
}

/// Per-RVE result of one macro iteration.
struct MicroResult {
    output: HomogenizedOutput,
    nonlinear: bool,
    relative_residual: f64,
}

fn micro_pass(
    model: &mut TwoScaleModel,
    scheme: Scheme,
    settings: &SolverSettings,
    pool: &ThreadPool,
    gradients: &[Vector4<f64>],
) -> Vec<Result<MicroResult, RveError>> {
    let tol = settings.tol_micro;
    let n_max = settings.n_max;
    pool.install(|| {
        model
            .rves
            .par_iter_mut()
            .zip(gradients.par_iter())
            .map(|(rve, &h)| match scheme {
                Scheme::Staggered => rve.solve_micro_staggered(h, tol, n_max).map(|output| MicroResult {
                    nonlinear: !output.linear_step,
                    relative_residual: output.residual_norm / rve.reference_force(),
                    output,
                }),
                Scheme::Monolithic | Scheme::MonolithicStored => {
                    let keep = scheme == Scheme::MonolithicStored;
                    let retained_elastic = rve.has_cached_factorization() && !rve.trial_plastic();
                    let update = rve.micro_update_monolithic(h, keep)?;
                    let mut output = rve.homogenized_tangent_and_alg_stress(tol, keep)?;
                    output.factorizations += update;
                    Ok(MicroResult {
                        nonlinear: !(retained_elastic && output.plastic_points == 0),
                        relative_residual: output.residual_norm / rve.reference_force(),
                        output,
                    })
                }
            })
            .collect()
    })
}

/// One load increment to `lambda`. Returns the record and the final
/// internal force vector.
fn increment(
    model: &mut TwoScaleModel,
    scheme: Scheme,
    settings: &SolverSettings,
    pool: &ThreadPool,
    lambda: f64,
    ratio: f64,
) -> Result<(IncrementRecord, Vec<f64>), Failure> {
    let extrapolate = settings.extrapolate && model.commits >= 2;
    for ((u, uc), uo) in model.u.iter_mut().zip(&model.u_committed).zip(&model.u_older) {
        *u = if extrapolate { uc + ratio * (uc - uo) } else { *uc };
    }
    for &(d, v) in &model.loading.prescribed {
        model.u[d] = lambda * v;
    }
    if extrapolate && scheme == Scheme::Staggered {
        for rve in &mut model.rves {
            rve.extrapolate(ratio);
        }
    }

    let mut rec = IncrementRecord {
        load_factor: lambda,
        ..Default::default()
    };
    let external_norm = lambda * norm_inf(&model.external);
    let mut reference = external_norm;

    for _ in 0..settings.max_macro_iter {
        let gradients: Vec<Vector4<f64>> = model.ips.iter().map(|ip| ip.gradient(&model.u)).collect();
        let results = micro_pass(model, scheme, settings, pool, &gradients);
        rec.macro_iterations += 1;

        let mut outputs = Vec::with_capacity(results.len());
        let mut micro_error = None;
        for r in results {
            match r {
                Ok(m) => outputs.push(m),
                Err(e) => micro_error = micro_error.or(Some(e)),
            }
        }
        let factorizations: usize = outputs.iter().map(|m| m.output.factorizations).sum();
        rec.factorizations += factorizations;
        rec.micro_iterations += outputs.iter().map(|m| m.output.micro_iterations).sum::<usize>();
        rec.max_micro_iterations = outputs
            .iter()
            .map(|m| m.output.micro_iterations)
            .fold(rec.max_micro_iterations, usize::max);
        if let Some(e) = micro_error {
            return Err(Failure {
                reason: e.to_string(),
                work: Box::new(rec),
            });
        }
        let plastic: usize = outputs.iter().map(|m| m.output.plastic_points).sum();
        rec.factorization_history.push(factorizations);
        rec.plastic_history.push(plastic);
        rec.nonlinear_history
            .push(outputs.iter().filter(|m| m.nonlinear).count());
        rec.micro_residual_history
            .push(outputs.iter().map(|m| m.relative_residual).fold(0.0, f64::max));

        let (f_int, stiffness) = model.assemble(&outputs);
        let mut residual = vec![0.0; model.dofs.n_free()];
        for (d, f) in f_int.iter().enumerate() {
            if let Some(r) = model.dofs.get(d) {
                residual[r] += f - lambda * model.external[d];
            }
        }
        reference = reference.max(norm_inf(&f_int));
        let scale = reference.max(model.force_floor);
        let rnorm = norm_inf(&residual);
        rec.residual_history.push(rnorm);
        rec.reference_force = scale;
        if !rnorm.is_finite() {
            return Err(Failure {
                reason: "macro residual is not finite".into(),
                work: Box::new(rec),
            });
        }

        let micro_ok = outputs.iter().all(|m| m.output.converged);
        if rnorm <= settings.tol_macro * scale && micro_ok {
            rec.plastic = plastic > 0;
            rec.micro_residual_max = outputs.iter().map(|m| m.output.residual_norm).fold(0.0, f64::max);
            return Ok((rec, f_int));
        }

        rec.macro_factorizations += 1;
        let du = factorize(&stiffness, &model.ordering)
            .and_then(|f| f.solve_vec(&residual))
            .map_err(|e| Failure {
                reason: format!("macro solve: {e}"),
                work: Box::new(rec.clone()),
            })?;
        for d in 0..model.u.len() {
            if let Some(r) = model.dofs.get(d) {
                model.u[d] -= du[r];
            }
        }
    }
    let last = rec.residual_history.last().copied().unwrap_or(f64::NAN);
    Err(Failure {
        reason: format!(
            "macro Newton did not converge in {} iterations (residual {last:e})",
            settings.max_macro_iter
        ),
        work: Box::new(rec),
    })
}

impl TwoScaleModel {
    /// Internal forces (from Σ^alg) and reduced tangent stiffness.
    fn assemble(&self, outputs: &[MicroResult]) -> (Vec<f64>, SparseMatrix) {
        let mut f_int = vec![0.0; self.mesh.n_dofs()];
        let mut stiffness = SparseMatrix::zeros(&self.pattern);
        for (ip, m) in self.ips.iter().zip(outputs) {
            let dofs: Vec<usize> = ip.dofs().collect();
            let mut f_e = vec![0.0; dofs.len()];
            ip.add_bt_vec(ip.weight, &m.output.sigma_alg, &mut f_e);
            let b = ip.b_matrix();
            let k_e = b.transpose() * (m.output.c_tangent * &b) * ip.weight;
            for (p, &dp) in dofs.iter().enumerate() {
                f_int[dp] += f_e[p];
                let Some(rp) = self.dofs.get(dp) else { continue };
                for (q, &dq) in dofs.iter().enumerate() {
                    if let Some(rq) = self.dofs.get(dq) {
                        stiffness.add(rp, rq, k_e[(p, q)]);
                    }
                }
            }
        }
        (f_int, stiffness)
    }

    fn curve_point(&self, lambda: f64, f_int: &[f64]) -> CurvePoint {
        CurvePoint {
            load_factor: lambda,
            control_value: self.u_committed[self.loading.control_dof],
            reaction: self.loading.reaction_dofs.iter().map(|&d| f_int[d]).sum(),
        }
    }

    fn commit(&mut self) {
        std::mem::swap(&mut self.u_older, &mut self.u_committed);
        self.u_committed.clone_from(&self.u);
        self.commits += 1;
        for rve in &mut self.rves {
            rve.commit();
        }
    }

    fn revert(&mut self) {
        self.u.clone_from(&self.u_committed);
        for rve in &mut self.rves {
            rve.revert();
        }
    }
}
