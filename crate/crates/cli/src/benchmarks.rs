//! Built-in microstructures and desk-scale macro benchmarks.
//!
//! The macro geometries follow the classes of the classic two-scale
//! benchmarks (notched plate in shear, notched beam in bending, plate with a
//! hole in tension) on structured grids coarse enough to run in seconds.
//! Curved boundaries are approximated by removing grid cells.

use std::fmt;
use std::str::FromStr;

use fescale_core::material::{ElasticParams, Material, PlasticParams};
use fescale_core::mesh::grid::{rectangle, GridSpec};
use fescale_core::mesh::{ElementKind, Mesh};
use fescale_core::twoscale::{Loading, SolverSettings};

/// Built-in RVE geometries on the unit square.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RveKind {
    /// One quad4 element, one phase.
    SingleElement,
    /// Matrix with a centred circular pore, hole diameter / cell size = 0.5.
    PorousSquare,
    /// Two layers of equal thickness, interface normal to x.
    Laminate,
    /// Plastic matrix, centred pore and two stiff elastic inclusions.
    Composite,
}

impl RveKind {
    pub const ALL: [RveKind; 4] = [
        RveKind::SingleElement,
        RveKind::PorousSquare,
        RveKind::Laminate,
        RveKind::Composite,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RveKind::SingleElement => "single-element",
            RveKind::PorousSquare => "porous-square",
            RveKind::Laminate => "laminate",
            RveKind::Composite => "composite",
        }
    }

    pub fn n_phases(self) -> usize {
        match self {
            RveKind::SingleElement | RveKind::PorousSquare => 1,
            RveKind::Laminate | RveKind::Composite => 2,
        }
    }

    pub fn default_cells(self) -> usize {
        match self {
            RveKind::SingleElement => 1,
            _ => 8,
        }
    }

    /// Quad4 grid with `cells × cells` cells (ignored for `SingleElement`).
    pub fn mesh(self, cells: usize) -> Mesh {
        let cells = if self == RveKind::SingleElement { 1 } else { cells };
        let spec = GridSpec::unit_square(cells, ElementKind::Quad4);
        let dist = |c: [f64; 2], x: f64, y: f64| (c[0] - x).hypot(c[1] - y);
        match self {
            RveKind::SingleElement => rectangle(&spec, |_| Some(0)),
            RveKind::PorousSquare => rectangle(&spec, |c| (dist(c, 0.5, 0.5) >= 0.25).then_some(0)),
            RveKind::Laminate => rectangle(&spec, |c| Some(usize::from(c[0] > 0.5))),
            RveKind::Composite => rectangle(&spec, |c| {
                if dist(c, 0.5, 0.5) < 0.15 {
                    None
                } else if dist(c, 0.25, 0.75) < 0.15 || dist(c, 0.75, 0.25) < 0.15 {
                    Some(1)
                } else {
                    Some(0)
                }
            }),
        }
    }

    /// Phase materials given the matrix material.
    pub fn default_materials(self, matrix: Material) -> Vec<Material> {
        let e = matrix.elastic().young;
        match self {
            RveKind::SingleElement | RveKind::PorousSquare => vec![matrix],
            RveKind::Laminate => vec![matrix, Material::Elastic(ElasticParams::new(0.1 * e, 0.2))],
            RveKind::Composite => vec![matrix, Material::Elastic(ElasticParams::new(10.0 * e, 0.2))],
        }
    }
}

impl fmt::Display for RveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RveKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RveKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown RVE `{s}` (expected single-element, porous-square, laminate or composite)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Benchmark {
    /// Plate with an edge slot; bottom clamped, top sheared.
    NotchedShear,
    /// Simply supported beam with a bottom notch under a mid-span point load.
    NotchedBending2d,
    /// Quarter of a plate with a central hole, stretched vertically.
    PlateHoleTension,
}

/// Macro mesh and loading of a benchmark.
#[derive(Debug, Clone)]
pub struct MacroModel {
    pub mesh: Mesh,
    pub loading: Loading,
}

impl Benchmark {
    pub const ALL: [Benchmark; 3] = [
        Benchmark::NotchedShear,
        Benchmark::NotchedBending2d,
        Benchmark::PlateHoleTension,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Benchmark::NotchedShear => "notched-shear",
            Benchmark::NotchedBending2d => "notched-bending-2d",
            Benchmark::PlateHoleTension => "plate-hole-tension",
        }
    }

    pub fn default_rve(self) -> RveKind {
        match self {
            Benchmark::NotchedShear | Benchmark::PlateHoleTension => RveKind::PorousSquare,
            Benchmark::NotchedBending2d => RveKind::Composite,
        }
    }

    /// Plastic matrix material of the benchmark.
    pub fn matrix_material(self) -> Material {
        let (young, yield_stress, hardening) = match self {
            Benchmark::NotchedShear | Benchmark::NotchedBending2d => (100.0, 1.0, 2.0),
            Benchmark::PlateHoleTension => (200.0, 1.2, 1.3),
        };
        Material::Plastic(PlasticParams {
            elastic: ElasticParams::new(young, 0.3),
            yield_stress,
            hardening,
        })
    }

    pub fn default_cells(self) -> usize {
        match self {
            Benchmark::NotchedShear => 8,
            Benchmark::NotchedBending2d => 4,
            Benchmark::PlateHoleTension => 6,
        }
    }

    /// Fixed load steps with tight tolerances, so that every scheme visits
    /// the same load levels and converged states can be compared pointwise.
    pub fn default_settings(self) -> SolverSettings {
        // 0.05 already fails the first increment out of the virgin state
        let dt = 0.025;
        SolverSettings {
            tol_macro: 1e-9,
            tol_micro: 1e-9,
            dt_initial: dt,
            dt_max: dt,
            dt_min: dt * 1e-3,
            ..SolverSettings::default()
        }
    }

    /// Macro model; `cells` is the number of grid cells across the
    /// shortest side.
    pub fn build(self, cells: usize) -> MacroModel {
        let cells = cells.max(2);
        match self {
            Benchmark::NotchedShear => notched_shear(cells),
            Benchmark::NotchedBending2d => notched_bending(cells),
            Benchmark::PlateHoleTension => plate_hole(cells),
        }
    }
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Benchmark {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Benchmark::ALL.into_iter().find(|b| b.name() == s).ok_or_else(|| {
            format!("unknown benchmark `{s}` (expected notched-shear, notched-bending-2d or plate-hole-tension)")
        })
    }
}

fn nodes_where(mesh: &Mesh, f: impl Fn([f64; 2]) -> bool) -> Vec<usize> {
    (0..mesh.n_nodes()).filter(|&n| f(mesh.nodes()[n])).collect()
}

fn node_at(mesh: &Mesh, p: [f64; 2]) -> usize {
    mesh.nodes()
        .iter()
        .position(|x| (x[0] - p[0]).abs() < 1e-9 && (x[1] - p[1]).abs() < 1e-9)
        .expect("grid node exists")
}

const EPS: f64 = 1e-9;

/// Unit plate, slot from the left edge to 40 % of the width, one cell high,
/// just above mid-height. Top edge displaced by `(0.04 λ, 0)`.
fn notched_shear(cells: usize) -> MacroModel {
    let n = cells + cells % 2;
    let h = 1.0 / n as f64;
    let mesh = rectangle(&GridSpec::unit_square(n, ElementKind::Tri3), |c| {
        let in_slot = c[0] < 0.4 && c[1] > 0.5 && c[1] < 0.5 + h;
        (!in_slot).then_some(0)
    });
    let bottom = nodes_where(&mesh, |x| x[1] < EPS);
    let top = nodes_where(&mesh, |x| x[1] > 1.0 - EPS);
    let mut prescribed = Vec::new();
    for &k in &bottom {
        prescribed.extend([(2 * k, 0.0), (2 * k + 1, 0.0)]);
    }
    for &k in &top {
        prescribed.extend([(2 * k, 0.04), (2 * k + 1, 0.0)]);
    }
    let control = node_at(&mesh, [1.0, 1.0]);
    MacroModel {
        loading: Loading {
            prescribed,
            forces: Vec::new(),
            reaction_dofs: top.iter().map(|&k| 2 * k).collect(),
            control_dof: 2 * control,
        },
        mesh,
    }
}

/// 4 × 1 beam, notch of half a unit width and a quarter depth under the
/// load. Pinned at the bottom-left corner, roller at the bottom-right,
/// downward force `0.15 λ` at top mid-span.
fn notched_bending(cells: usize) -> MacroModel {
    let spec = GridSpec {
        origin: [0.0, 0.0],
        size: [4.0, 1.0],
        cells: [4 * cells, cells],
        kind: ElementKind::Tri3,
    };
    let mesh = rectangle(&spec, |c| {
        let in_notch = (c[0] - 2.0).abs() < 0.25 && c[1] < 0.25;
        (!in_notch).then_some(0)
    });
    let left = node_at(&mesh, [0.0, 0.0]);
    let right = node_at(&mesh, [4.0, 0.0]);
    let load = node_at(&mesh, [2.0, 1.0]);
    MacroModel {
        loading: Loading {
            prescribed: vec![(2 * left, 0.0), (2 * left + 1, 0.0), (2 * right + 1, 0.0)],
            forces: vec![(2 * load + 1, -0.15)],
            reaction_dofs: vec![2 * left + 1, 2 * right + 1],
            control_dof: 2 * load + 1,
        },
        mesh,
    }
}

/// Quarter of a unit plate with a hole of radius 0.3 at the origin;
/// symmetry on x = 0 and y = 0, top edge displaced by `0.02 λ` upwards.
fn plate_hole(cells: usize) -> MacroModel {
    let mesh = rectangle(&GridSpec::unit_square(cells, ElementKind::Quad4), |c| {
        (c[0].hypot(c[1]) >= 0.3).then_some(0)
    });
    let mut prescribed = Vec::new();
    for k in nodes_where(&mesh, |x| x[0] < EPS) {
        prescribed.push((2 * k, 0.0));
    }
    for k in nodes_where(&mesh, |x| x[1] < EPS) {
        prescribed.push((2 * k + 1, 0.0));
    }
    let top = nodes_where(&mesh, |x| x[1] > 1.0 - EPS);
    for &k in &top {
        prescribed.push((2 * k + 1, 0.02));
    }
    let control = node_at(&mesh, [1.0, 1.0]);
    MacroModel {
        loading: Loading {
            prescribed,
            forces: Vec::new(),
            reaction_dofs: top.iter().map(|&k| 2 * k + 1).collect(),
            control_dof: 2 * control + 1,
        },
        mesh,
    }
}
