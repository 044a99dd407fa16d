//! Quick invariant checks behind `fescale check`.

use std::sync::Arc;

use nalgebra::{Matrix4, Vector4};

use fescale_core::material::{ElasticParams, Material, PlasticParams};
use fescale_core::mesh::grid::{rectangle, GridSpec};
use fescale_core::mesh::ElementKind;
use fescale_core::rve::{RveProblem, RveTemplate, DEFAULT_TOL_GEOM};
use fescale_core::twoscale::{adapt_step, Scheme, SolverSettings, StepDecision, StepOutcome};

use crate::benchmarks::Benchmark;
use crate::config::RunConfig;
use crate::suite::{curve_distance, solve};

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, value: f64, limit: f64) -> Check {
    Check {
        name,
        passed: value <= limit,
        detail: format!("{value:.3e} (limit {limit:.0e})"),
    }
}

fn failed(name: &'static str, detail: impl ToString) -> Check {
    Check {
        name,
        passed: false,
        detail: detail.to_string(),
    }
}

fn plastic() -> Material {
    Material::Plastic(PlasticParams {
        elastic: ElasticParams::new(100.0, 0.3),
        yield_stress: 1.0,
        hardening: 2.0,
    })
}

fn porous(n: usize, m: Material) -> Arc<RveTemplate> {
    let mesh = rectangle(&GridSpec::unit_square(n, ElementKind::Quad4), |c| {
        ((c[0] - 0.5).hypot(c[1] - 0.5) >= 0.25).then_some(0)
    });
    Arc::new(RveTemplate::new(mesh, vec![m], DEFAULT_TOL_GEOM).expect("valid template"))
}

fn h0() -> Vector4<f64> {
    Vector4::new(0.006, 0.004, -0.002, -0.003)
}

/// Plastically loaded porous cell, committed after `steps` increments.
fn loaded_rve(steps: usize) -> Result<RveProblem, String> {
    let mut rve = RveProblem::new(porous(6, plastic()));
    for k in 1..=steps {
        rve.solve_micro_staggered(h0() * k as f64, 1e-13, 30)
            .map_err(|e| e.to_string())?;
        rve.commit();
    }
    Ok(rve)
}

fn homogeneous() -> Check {
    let m = Material::Elastic(ElasticParams::new(70.0, 0.33));
    let c = m.elastic().plane_strain_tangent();
    let mut worst = 0.0f64;
    for kind in [ElementKind::Tri3, ElementKind::Quad4] {
        let mesh = rectangle(&GridSpec::unit_square(3, kind), |_| Some(0));
        let t = Arc::new(RveTemplate::new(mesh, vec![m], DEFAULT_TOL_GEOM).expect("valid template"));
        match RveProblem::new(t).solve_micro_staggered(h0(), 1e-12, 5) {
            Ok(out) => worst = worst.max((out.c_tangent - c).amax() / c.amax()),
            Err(e) => return failed("homogeneous cell reproduces the material tangent", e),
        }
    }
    check("homogeneous cell reproduces the material tangent", worst, 1e-9)
}

fn average_gradient_and_stress() -> Vec<Check> {
    match loaded_rve(3) {
        Ok(rve) => {
            let asm = rve.assemble();
            vec![
                check(
                    "average micro gradient equals the imposed gradient",
                    (rve.average_gradient() - rve.h_applied()).amax() / rve.h_applied().amax(),
                    1e-10,
                ),
                check(
                    "boundary and volume stress averages agree",
                    (asm.stress - asm.stress_volume).amax() / asm.stress.amax(),
                    1e-10,
                ),
            ]
        }
        Err(e) => vec![failed("average micro gradient equals the imposed gradient", e)],
    }
}

fn tangent() -> Check {
    const NAME: &str = "homogenized tangent matches finite differences";
    let rve = match loaded_rve(3) {
        Ok(r) => r,
        Err(e) => return failed(NAME, e),
    };
    let h = h0() * 3.5;
    let solve = |h: Vector4<f64>| rve.clone().solve_micro_staggered(h, 1e-13, 30);
    let out = match solve(h) {
        Ok(o) => o,
        Err(e) => return failed(NAME, e),
    };
    let step = 1e-6;
    let mut fd = Matrix4::zeros();
    for c in 0..4 {
        let mut dh = Vector4::zeros();
        dh[c] = step;
        match (solve(h + dh), solve(h - dh)) {
            (Ok(p), Ok(m)) => fd.set_column(c, &((p.sigma_bar - m.sigma_bar) / (2.0 * step))),
            (Err(e), _) | (_, Err(e)) => return failed(NAME, e),
        }
    }
    check(NAME, (fd - out.c_tangent).amax() / out.c_tangent.amax(), 1e-4)
}

fn schemes_agree() -> Check {
    const NAME: &str = "schemes give the same load-displacement curve";
    let mut config = RunConfig::for_benchmark(Benchmark::NotchedShear);
    config.macro_model = crate::config::MacroSpec::Builtin {
        benchmark: Benchmark::NotchedShear,
        cells: 4,
    };
    config.rve = crate::config::RveSpec::Builtin {
        kind: crate::benchmarks::RveKind::PorousSquare,
        cells: 4,
    };
    config.settings.t_end = 0.3;
    let runs = match solve(&config) {
        Ok(r) => r,
        Err(e) => return failed(NAME, e),
    };
    if let Some(r) = runs.iter().find(|r| !r.report.converged) {
        return failed(NAME, format!("{} did not converge", r.report.scheme));
    }
    let mut worst = 0.0f64;
    for r in &runs[1..] {
        match curve_distance(&runs[0].report, &r.report) {
            Some(d) => worst = worst.max(d),
            None => return failed(NAME, format!("{} took different steps", r.report.scheme)),
        }
    }
    check(NAME, worst, 1e-6)
}

fn step_control() -> Check {
    let s = SolverSettings::default();
    let easy = StepOutcome::Converged {
        scheme: Scheme::Staggered,
        macro_iterations: 3,
        max_micro_iterations: 2,
    };
    let hard = StepOutcome::Converged {
        scheme: Scheme::Staggered,
        macro_iterations: 3,
        max_micro_iterations: s.n_max,
    };
    let ok = adapt_step(StepOutcome::Cut, 0.1, &s) == StepDecision::Retry { dt: 0.05 }
        && matches!(adapt_step(easy, 0.1, &s), StepDecision::Grow { .. })
        && adapt_step(hard, 0.1, &s) == StepDecision::Hold { dt: 0.1 };
    Check {
        name: "step control cuts, grows and holds",
        passed: ok,
        detail: String::new(),
    }
}

/// Runs every check; takes a few seconds.
pub fn run_checks() -> Vec<Check> {
    let mut out = vec![homogeneous()];
    out.extend(average_gradient_and_stress());
    out.push(tangent());
    out.push(schemes_agree());
    out.push(step_control());
    out
}
