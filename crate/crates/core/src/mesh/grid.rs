//! Structured rectangular grids with per-element phase selection.
//!
//! Used by the built-in benchmarks and in tests. Holes and inclusions are
//! carved out by the `phase` callback, which sees each element centroid and
//! returns the phase index or `None` to drop the element. Nodes left without
//! elements are removed.

use std::collections::BTreeMap;

use super::{ElementBlock, ElementKind, Mesh};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub origin: [f64; 2],
    pub size: [f64; 2],
    pub cells: [usize; 2],
    pub kind: ElementKind,
}

impl GridSpec {
    pub fn unit_square(n: usize, kind: ElementKind) -> Self {
        Self {
            origin: [0.0, 0.0],
            size: [1.0, 1.0],
            cells: [n, n],
            kind,
        }
    }
}

/// Builds the grid. Triangles split every cell along its rising diagonal.
pub fn rectangle<F>(spec: &GridSpec, mut phase: F) -> Mesh
where
    F: FnMut([f64; 2]) -> Option<usize>,
{
    let [nx, ny] = spec.cells;
    let hx = spec.size[0] / nx as f64;
    let hy = spec.size[1] / ny as f64;
    let node_id = |i: usize, j: usize| j * (nx + 1) + i;
    let coords = |id: usize| {
        let (i, j) = (id % (nx + 1), id / (nx + 1));
        [spec.origin[0] + i as f64 * hx, spec.origin[1] + j as f64 * hy]
    };

    let mut elements: Vec<(usize, Vec<usize>)> = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (
                node_id(i, j),
                node_id(i + 1, j),
                node_id(i + 1, j + 1),
                node_id(i, j + 1),
            );
            let cells: Vec<Vec<usize>> = match spec.kind {
                ElementKind::Quad4 => vec![vec![a, b, c, d]],
                ElementKind::Tri3 => vec![vec![a, b, c], vec![a, c, d]],
            };
            for conn in cells {
                let mut centroid = [0.0; 2];
                for &n in &conn {
                    let x = coords(n);
                    centroid[0] += x[0] / conn.len() as f64;
                    centroid[1] += x[1] / conn.len() as f64;
                }
                if let Some(p) = phase(centroid) {
                    elements.push((p, conn));
                }
            }
        }
    }

    let mut renumber = vec![usize::MAX; (nx + 1) * (ny + 1)];
    let mut nodes = Vec::new();
    for (_, conn) in &elements {
        for &n in conn {
            if renumber[n] == usize::MAX {
                renumber[n] = 0;
            }
        }
    }
    for (old, slot) in renumber.iter_mut().enumerate() {
        if *slot != usize::MAX {
            *slot = nodes.len();
            nodes.push(coords(old));
        }
    }

    let mut by_phase: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (p, conn) in elements {
        by_phase.entry(p).or_default().extend(conn.iter().map(|&n| renumber[n]));
    }
    let blocks = by_phase
        .into_iter()
        .map(|(p, conn)| ElementBlock::new(spec.kind, p, conn))
        .collect();
    Mesh::new(nodes, blocks).expect("grid connectivity is valid by construction")
}
