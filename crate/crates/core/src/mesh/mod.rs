//! Two-dimensional meshes, quadrature and discrete gradient operators.
//!
//! DOFs are numbered node-major (`2 * node + component`). Displacement
//! gradients use the 4-component layout `(H11, H12, H21, H22)` with
//! `Hij = du_i / dX_j`.

pub mod grid;

use nalgebra::{DMatrix, Vector4};
use thiserror::Error;

use crate::linalg::SparsityPattern;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeshError {
    #[error("element {element} has non-positive Jacobian determinant {det:e}")]
    NonPositiveJacobian { element: usize, det: f64 },

    #[error("element {element} references node {node}, but the mesh has {n_nodes} nodes")]
    NodeOutOfRange {
        element: usize,
        node: usize,
        n_nodes: usize,
    },

    #[error("block {block}: connectivity length {len} is not a multiple of {per_element}")]
    RaggedConnectivity {
        block: usize,
        len: usize,
        per_element: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElementKind {
    /// Linear triangle, one quadrature point.
    Tri3,
    /// Bilinear quadrilateral, 2×2 Gauss quadrature.
    Quad4,
}

impl ElementKind {
    pub fn nodes_per_element(self) -> usize {
        match self {
            ElementKind::Tri3 => 3,
            ElementKind::Quad4 => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ElementKind::Tri3 => "tri3",
            ElementKind::Quad4 => "quad4",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "tri3" => Some(ElementKind::Tri3),
            "quad4" => Some(ElementKind::Quad4),
            _ => None,
        }
    }

    /// Reference-element quadrature: (natural coordinates, weight).
    fn quadrature(self) -> &'static [([f64; 2], f64)] {
        const G: f64 = 0.577_350_269_189_625_8;
        match self {
            ElementKind::Tri3 => &[([1.0 / 3.0, 1.0 / 3.0], 0.5)],
            ElementKind::Quad4 => &[([-G, -G], 1.0), ([G, -G], 1.0), ([G, G], 1.0), ([-G, G], 1.0)],
        }
    }

    /// Shape functions and their natural derivatives at `xi`.
    fn shape(self, xi: [f64; 2]) -> (Vec<f64>, Vec<[f64; 2]>) {
        match self {
            ElementKind::Tri3 => (
                vec![1.0 - xi[0] - xi[1], xi[0], xi[1]],
                vec![[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]],
            ),
            ElementKind::Quad4 => {
                const CORNERS: [[f64; 2]; 4] = [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];
                let n = CORNERS
                    .iter()
                    .map(|c| 0.25 * (1.0 + c[0] * xi[0]) * (1.0 + c[1] * xi[1]))
                    .collect();
                let dn = CORNERS
                    .iter()
                    .map(|c| [0.25 * c[0] * (1.0 + c[1] * xi[1]), 0.25 * c[1] * (1.0 + c[0] * xi[0])])
                    .collect();
                (n, dn)
            }
        }
    }
}

/// Elements of one kind sharing one material phase.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementBlock {
    pub kind: ElementKind,
    pub phase: usize,
    connectivity: Vec<usize>,
}

impl ElementBlock {
    pub fn new(kind: ElementKind, phase: usize, connectivity: Vec<usize>) -> Self {
        Self {
            kind,
            phase,
            connectivity,
        }
    }

    pub fn len(&self) -> usize {
        self.connectivity.len() / self.kind.nodes_per_element()
    }

    pub fn is_empty(&self) -> bool {
        self.connectivity.is_empty()
    }

    pub fn element(&self, e: usize) -> &[usize] {
        let k = self.kind.nodes_per_element();
        &self.connectivity[e * k..(e + 1) * k]
    }

    pub fn elements(&self) -> impl Iterator<Item = &[usize]> {
        self.connectivity.chunks(self.kind.nodes_per_element())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    nodes: Vec<[f64; 2]>,
    blocks: Vec<ElementBlock>,
}

/// One element as seen by loops over the whole mesh.
#[derive(Debug, Clone, Copy)]
pub struct ElementRef<'a> {
    pub id: usize,
    pub block: usize,
    pub kind: ElementKind,
    pub phase: usize,
    pub nodes: &'a [usize],
}

impl Mesh {
    pub fn new(nodes: Vec<[f64; 2]>, blocks: Vec<ElementBlock>) -> Result<Self, MeshError> {
        let n_nodes = nodes.len();
        let mut id = 0;
        for (b, block) in blocks.iter().enumerate() {
            let per = block.kind.nodes_per_element();
            if block.connectivity.len() % per != 0 {
                return Err(MeshError::RaggedConnectivity {
                    block: b,
                    len: block.connectivity.len(),
                    per_element: per,
                });
            }
            for conn in block.elements() {
                if let Some(&node) = conn.iter().find(|&&n| n >= n_nodes) {
                    return Err(MeshError::NodeOutOfRange {
                        element: id,
                        node,
                        n_nodes,
                    });
                }
                id += 1;
            }
        }
        Ok(Self { nodes, blocks })
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn blocks(&self) -> &[ElementBlock] {
        &self.blocks
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_dofs(&self) -> usize {
        2 * self.nodes.len()
    }

    pub fn n_elements(&self) -> usize {
        self.blocks.iter().map(ElementBlock::len).sum()
    }

    pub fn elements(&self) -> impl Iterator<Item = ElementRef<'_>> {
        self.blocks
            .iter()
            .enumerate()
            .flat_map(|(b, block)| block.elements().map(move |nodes| (b, block, nodes)))
            .enumerate()
            .map(|(id, (b, block, nodes))| ElementRef {
                id,
                block: b,
                kind: block.kind,
                phase: block.phase,
                nodes,
            })
    }

    pub fn bounding_box(&self) -> ([f64; 2], [f64; 2]) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &self.nodes {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        (lo, hi)
    }

    /// Reference area of all elements (one-point rule is exact for Tri3,
    /// 2×2 Gauss is exact for the bilinear Jacobian of Quad4).
    pub fn area(&self) -> Result<f64, MeshError> {
        Ok(build_integration_points(self)?.iter().map(|ip| ip.weight).sum())
    }
}

/// Quadrature point with its discrete gradient operator `B`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegrationPoint {
    pub element: usize,
    pub local: usize,
    pub phase: usize,
    /// Quadrature weight times Jacobian determinant.
    pub weight: f64,
    pub coords: [f64; 2],
    pub nodes: Vec<usize>,
    /// Spatial shape-function derivatives `dN_a/dX` per element node.
    pub grads: Vec<[f64; 2]>,
}

impl IntegrationPoint {
    /// Global DOF indices of the element, node-major.
    pub fn dofs(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes.iter().flat_map(|&n| [2 * n, 2 * n + 1])
    }

    /// `H = B · u_e` with `u_e` the element displacement vector (node-major).
    pub fn gradient_local(&self, u_e: &[f64]) -> Vector4<f64> {
        let mut h = Vector4::zeros();
        for (a, g) in self.grads.iter().enumerate() {
            let (ux, uy) = (u_e[2 * a], u_e[2 * a + 1]);
            h[0] += ux * g[0];
            h[1] += ux * g[1];
            h[2] += uy * g[0];
            h[3] += uy * g[1];
        }
        h
    }

    /// `H = B · û` gathered from a global node-major displacement vector.
    pub fn gradient(&self, u: &[f64]) -> Vector4<f64> {
        let mut h = Vector4::zeros();
        for (&n, g) in self.nodes.iter().zip(&self.grads) {
            let (ux, uy) = (u[2 * n], u[2 * n + 1]);
            h[0] += ux * g[0];
            h[1] += ux * g[1];
            h[2] += uy * g[0];
            h[3] += uy * g[1];
        }
        h
    }

    /// Dense `4 × 2n` operator, rows `(H11, H12, H21, H22)`.
    pub fn b_matrix(&self) -> DMatrix<f64> {
        let mut b = DMatrix::zeros(4, 2 * self.nodes.len());
        for (a, g) in self.grads.iter().enumerate() {
            b[(0, 2 * a)] = g[0];
            b[(1, 2 * a)] = g[1];
            b[(2, 2 * a + 1)] = g[0];
            b[(3, 2 * a + 1)] = g[1];
        }
        b
    }

    /// Accumulates `scale · Bᵀ s` into the element vector `f_e`.
    pub fn add_bt_vec(&self, scale: f64, s: &Vector4<f64>, f_e: &mut [f64]) {
        for (a, g) in self.grads.iter().enumerate() {
            f_e[2 * a] += scale * (s[0] * g[0] + s[1] * g[1]);
            f_e[2 * a + 1] += scale * (s[2] * g[0] + s[3] * g[1]);
        }
    }
}

/// One entry per (element, quadrature point), in element order.
pub fn build_integration_points(mesh: &Mesh) -> Result<Vec<IntegrationPoint>, MeshError> {
    let mut out = Vec::new();
    for el in mesh.elements() {
        for (local, &(xi, w)) in el.kind.quadrature().iter().enumerate() {
            let (n, dn) = el.kind.shape(xi);
            let mut jac = [[0.0; 2]; 2]; // jac[i][j] = dX_i / dxi_j
            let mut coords = [0.0; 2];
            for (a, &node) in el.nodes.iter().enumerate() {
                let x = mesh.nodes[node];
                for i in 0..2 {
                    coords[i] += n[a] * x[i];
                    for j in 0..2 {
                        jac[i][j] += x[i] * dn[a][j];
                    }
                }
            }
            let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
            if det.is_nan() || det <= 0.0 {
                return Err(MeshError::NonPositiveJacobian { element: el.id, det });
            }
            // dxi_j / dX_i = inverse Jacobian
            let inv = [[jac[1][1] / det, -jac[0][1] / det], [-jac[1][0] / det, jac[0][0] / det]];
            let grads = dn
                .iter()
                .map(|d| [d[0] * inv[0][0] + d[1] * inv[1][0], d[0] * inv[0][1] + d[1] * inv[1][1]])
                .collect();
            out.push(IntegrationPoint {
                element: el.id,
                local,
                phase: el.phase,
                weight: w * det,
                coords,
                nodes: el.nodes.to_vec(),
                grads,
            });
        }
    }
    Ok(out)
}

/// Maps global DOFs to reduced unknowns; `None` marks eliminated DOFs.
///
/// Several global DOFs may share one reduced index (periodic slaves).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DofMap {
    map: Vec<Option<usize>>,
    n_free: usize,
}

impl DofMap {
    pub fn new(map: Vec<Option<usize>>) -> Self {
        let n_free = map.iter().flatten().map(|&r| r + 1).max().unwrap_or(0);
        Self { map, n_free }
    }

    pub fn identity(n: usize) -> Self {
        Self::new((0..n).map(Some).collect())
    }

    /// Free DOFs numbered consecutively, skipping the `fixed` ones.
    pub fn with_fixed(n: usize, fixed: &[usize]) -> Self {
        let mut is_fixed = vec![false; n];
        for &d in fixed {
            is_fixed[d] = true;
        }
        let mut next = 0;
        let map = is_fixed
            .iter()
            .map(|&f| {
                (!f).then(|| {
                    next += 1;
                    next - 1
                })
            })
            .collect();
        Self::new(map)
    }

    pub fn get(&self, dof: usize) -> Option<usize> {
        self.map[dof]
    }

    pub fn n_free(&self) -> usize {
        self.n_free
    }

    pub fn n_dofs(&self) -> usize {
        self.map.len()
    }
}

/// Pattern with `(i, j)` whenever reduced DOFs `i`, `j` share an element.
/// Every reduced DOF keeps its diagonal.
pub fn structure_of_stiffness(mesh: &Mesh, dof_map: &DofMap) -> SparsityPattern {
    let mut entries: Vec<(usize, usize)> = (0..dof_map.n_free()).map(|i| (i, i)).collect();
    let mut local = Vec::new();
    for el in mesh.elements() {
        local.clear();
        local.extend(
            el.nodes
                .iter()
                .flat_map(|&n| [2 * n, 2 * n + 1])
                .filter_map(|d| dof_map.get(d)),
        );
        for &i in &local {
            for &j in &local {
                entries.push((i, j));
            }
        }
    }
    SparsityPattern::from_entries(dof_map.n_free(), entries)
}
