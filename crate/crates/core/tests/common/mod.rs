#![allow(dead_code)]

use std::sync::Arc;

use fescale_core::material::{ElasticParams, Material, PlasticParams};
use fescale_core::mesh::grid::{rectangle, GridSpec};
use fescale_core::mesh::{ElementKind, Mesh};
use fescale_core::rve::{RveTemplate, DEFAULT_TOL_GEOM};
use fescale_core::twoscale::{Loading, SolverSettings, TwoScaleModel};

pub fn elastic(e: f64, nu: f64) -> Material {
    Material::Elastic(ElasticParams::new(e, nu))
}

pub fn plastic(e: f64, nu: f64, sigma0: f64, h: f64) -> Material {
    Material::Plastic(PlasticParams {
        elastic: ElasticParams::new(e, nu),
        yield_stress: sigma0,
        hardening: h,
    })
}

pub fn porous_rve(n: usize, material: Material) -> Arc<RveTemplate> {
    let mesh = rectangle(&GridSpec::unit_square(n, ElementKind::Quad4), |c| {
        ((c[0] - 0.5).hypot(c[1] - 0.5) >= 0.25).then_some(0)
    });
    Arc::new(RveTemplate::new(mesh, vec![material], DEFAULT_TOL_GEOM).unwrap())
}

pub fn laminate_rve(n: usize, a: Material, b: Material) -> Arc<RveTemplate> {
    let mesh = rectangle(&GridSpec::unit_square(n, ElementKind::Quad4), |c| {
        Some(usize::from(c[0] > 0.5))
    });
    Arc::new(RveTemplate::new(mesh, vec![a, b], DEFAULT_TOL_GEOM).unwrap())
}

pub fn single_element_rve(material: Material) -> Arc<RveTemplate> {
    let mesh = rectangle(&GridSpec::unit_square(1, ElementKind::Quad4), |_| Some(0));
    Arc::new(RveTemplate::new(mesh, vec![material], DEFAULT_TOL_GEOM).unwrap())
}

pub fn nodes_where(mesh: &Mesh, f: impl Fn([f64; 2]) -> bool) -> Vec<usize> {
    (0..mesh.n_nodes()).filter(|&n| f(mesh.nodes()[n])).collect()
}

/// Square block, bottom clamped, top sheared by `ux = λ · shear` with `uy = 0`.
pub fn shear_block(cells: usize, kind: ElementKind, rve: Arc<RveTemplate>, shear: f64) -> TwoScaleModel {
    let mesh = rectangle(&GridSpec::unit_square(cells, kind), |_| Some(0));
    let bottom = nodes_where(&mesh, |x| x[1] < 1e-12);
    let top = nodes_where(&mesh, |x| x[1] > 1.0 - 1e-12);
    let mut prescribed = Vec::new();
    for &n in &bottom {
        prescribed.push((2 * n, 0.0));
        prescribed.push((2 * n + 1, 0.0));
    }
    for &n in &top {
        prescribed.push((2 * n, shear));
        prescribed.push((2 * n + 1, 0.0));
    }
    let loading = Loading {
        prescribed,
        forces: Vec::new(),
        reaction_dofs: top.iter().map(|&n| 2 * n).collect(),
        control_dof: 2 * top[0],
    };
    TwoScaleModel::new(mesh, vec![rve], loading).unwrap()
}

pub fn fixed_steps(dt: f64, tol: f64) -> SolverSettings {
    SolverSettings {
        tol_macro: tol,
        tol_micro: tol,
        dt_initial: dt,
        dt_max: dt,
        dt_min: dt * 1e-3,
        ..Default::default()
    }
}
