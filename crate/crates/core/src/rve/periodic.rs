use crate::mesh::{DofMap, Mesh};

use super::RveError;

const LEFT: u8 = 1;
const RIGHT: u8 = 2;
const BOTTOM: u8 = 4;
const TOP: u8 = 8;

/// One periodicity constraint `u(plus) = u(minus) + H · offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicPair {
    pub plus: usize,
    pub minus: usize,
    /// `x₀⁺ − x₀⁻`
    pub offset: [f64; 2],
    /// Corner constraints chain directly to the anchor corner.
    pub corner: bool,
}

/// Master-slave elimination of the periodic boundary conditions on a
/// rectangular RVE.
///
/// Right-edge nodes are slaves of left-edge nodes, top of bottom, and the
/// three remaining corners of the bottom-left anchor corner, whose
/// fluctuation is fixed to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicMap {
    pairs: Vec<PeriodicPair>,
    anchor: usize,
    representative: Vec<usize>,
    sides: Vec<u8>,
    bounds: ([f64; 2], [f64; 2]),
}

impl PeriodicMap {
    pub fn pairs(&self) -> &[PeriodicPair] {
        &self.pairs
    }

    pub fn edge_pairs(&self) -> impl Iterator<Item = &PeriodicPair> {
        self.pairs.iter().filter(|p| !p.corner)
    }

    pub fn corner_pairs(&self) -> impl Iterator<Item = &PeriodicPair> {
        self.pairs.iter().filter(|p| p.corner)
    }

    pub fn anchor(&self) -> usize {
        self.anchor
    }

    pub fn bounds(&self) -> ([f64; 2], [f64; 2]) {
        self.bounds
    }

    /// Master node carrying the fluctuation of `node`.
    pub fn representative(&self, node: usize) -> usize {
        self.representative[node]
    }

    pub fn is_master(&self, node: usize) -> bool {
        self.representative[node] == node
    }

    /// Whether `node` lies on the outer boundary of the cell.
    pub fn on_boundary(&self, node: usize) -> bool {
        self.sides[node] != 0
    }

    /// Whether both nodes lie on a common side of the cell; returns the
    /// outward normal of that side.
    pub fn common_side(&self, a: usize, b: usize) -> Option<[f64; 2]> {
        let common = self.sides[a] & self.sides[b];
        [
            (LEFT, [-1.0, 0.0]),
            (RIGHT, [1.0, 0.0]),
            (BOTTOM, [0.0, -1.0]),
            (TOP, [0.0, 1.0]),
        ]
        .into_iter()
        .find(|(bit, _)| common & bit != 0)
        .map(|(_, n)| n)
    }

    pub fn slave_dofs(&self) -> Vec<usize> {
        self.pairs.iter().flat_map(|p| [2 * p.plus, 2 * p.plus + 1]).collect()
    }

    pub fn master_dofs(&self) -> Vec<usize> {
        (0..self.representative.len())
            .filter(|&n| self.is_master(n))
            .flat_map(|n| [2 * n, 2 * n + 1])
            .collect()
    }

    /// Reduced numbering: every master node except the anchor gets two
    /// consecutive unknowns, in node order. Slaves share their master's.
    pub fn dof_map(&self) -> DofMap {
        let n_nodes = self.representative.len();
        let mut index = vec![None; n_nodes];
        let mut next = 0;
        for (node, slot) in index.iter_mut().enumerate() {
            if self.is_master(node) && node != self.anchor {
                *slot = Some(next);
                next += 1;
            }
        }
        let map = (0..2 * n_nodes)
            .map(|dof| index[self.representative[dof / 2]].map(|m: usize| 2 * m + dof % 2))
            .collect();
        DofMap::new(map)
    }
}

/// Pairs opposite boundary nodes of a rectangle-bounded mesh.
pub fn build_periodic_map(mesh: &Mesh, tol_geom: f64) -> Result<PeriodicMap, RveError> {
    let nodes = mesh.nodes();
    let (lo, hi) = mesh.bounding_box();
    let sides: Vec<u8> = nodes
        .iter()
        .map(|x| {
            let mut s = 0;
            if (x[0] - lo[0]).abs() <= tol_geom {
                s |= LEFT;
            }
            if (x[0] - hi[0]).abs() <= tol_geom {
                s |= RIGHT;
            }
            if (x[1] - lo[1]).abs() <= tol_geom {
                s |= BOTTOM;
            }
            if (x[1] - hi[1]).abs() <= tol_geom {
                s |= TOP;
            }
            s
        })
        .collect();

    let corner = |mask: u8, name: &'static str| {
        (0..nodes.len())
            .find(|&n| sides[n] & mask == mask)
            .ok_or(RveError::MissingCorner { corner: name })
    };
    let anchor = corner(LEFT | BOTTOM, "bottom-left")?;
    let bottom_right = corner(RIGHT | BOTTOM, "bottom-right")?;
    let top_right = corner(RIGHT | TOP, "top-right")?;
    let top_left = corner(LEFT | TOP, "top-left")?;
    let is_corner = |n: usize| sides[n].count_ones() >= 2;

    let offset = |plus: usize, minus: usize| [nodes[plus][0] - nodes[minus][0], nodes[plus][1] - nodes[minus][1]];
    let mut pairs = Vec::new();
    let mut representative: Vec<usize> = (0..nodes.len()).collect();
    for c in [bottom_right, top_right, top_left] {
        pairs.push(PeriodicPair {
            plus: c,
            minus: anchor,
            offset: offset(c, anchor),
            corner: true,
        });
        representative[c] = anchor;
    }

    // (plus side, minus side, coordinate that must match)
    for (plus_side, minus_side, axis) in [(RIGHT, LEFT, 1), (TOP, BOTTOM, 0)] {
        let plus: Vec<usize> = (0..nodes.len())
            .filter(|&n| sides[n] & plus_side != 0 && !is_corner(n))
            .collect();
        let minus: Vec<usize> = (0..nodes.len())
            .filter(|&n| sides[n] & minus_side != 0 && !is_corner(n))
            .collect();
        let mut used = vec![false; minus.len()];
        let nearest = |n: usize, candidates: &[usize]| {
            candidates
                .iter()
                .enumerate()
                .map(|(k, &m)| (k, (nodes[n][axis] - nodes[m][axis]).abs()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
        };
        for &p in &plus {
            match nearest(p, &minus) {
                Some((k, d)) if d <= tol_geom && !used[k] => {
                    used[k] = true;
                    let m = minus[k];
                    pairs.push(PeriodicPair {
                        plus: p,
                        minus: m,
                        offset: offset(p, m),
                        corner: false,
                    });
                    representative[p] = m;
                }
                found => {
                    return Err(RveError::Unmatched {
                        node: p,
                        distance: found.map_or(f64::INFINITY, |(_, d)| d),
                    })
                }
            }
        }
        if let Some(k) = used.iter().position(|&u| !u) {
            let m = minus[k];
            return Err(RveError::Unmatched {
                node: m,
                distance: nearest(m, &plus).map_or(f64::INFINITY, |(_, d)| d),
            });
        }
    }

    Ok(PeriodicMap {
        pairs,
        anchor,
        representative,
        sides,
        bounds: (lo, hi),
    })
}
