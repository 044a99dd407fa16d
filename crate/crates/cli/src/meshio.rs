//! Plain-text mesh exchange format.
//!
//! ```text
//! fescale-mesh 1
//! nodes 4
//! 0 0.0 0.0
//! 1 1.0 0.0
//! 2 1.0 1.0
//! 3 0.0 1.0
//! elements 1
//! 0 quad4 0 0 1 2 3
//! ```
//!
//! Element rows are `id kind phase nodes...`. Ids are zero-based and must
//! be consecutive. Text after `#` is ignored, as are blank lines.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use fescale_core::mesh::{ElementBlock, ElementKind, Mesh};

use crate::ConfigError;

const HEADER: &str = "fescale-mesh 1";

pub fn read_mesh(path: &Path) -> Result<Mesh, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_mesh(&text).map_err(|(line, message)| ConfigError::Mesh {
        path: path.to_path_buf(),
        line,
        message,
    })
}

/// Parses mesh text; errors carry the 1-based line number.
pub fn parse_mesh(text: &str) -> Result<Mesh, (usize, String)> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let last_line = text.lines().count().max(1);
    let mut next = |what: &str| {
        lines
            .next()
            .ok_or((last_line, format!("unexpected end of file, expected {what}")))
    };

    let (line, header) = next("header")?;
    if header.split_whitespace().collect::<Vec<_>>().join(" ") != HEADER {
        return Err((line, format!("expected header `{HEADER}`")));
    }

    let count = |line: usize, row: &str, key: &str| -> Result<usize, (usize, String)> {
        let mut it = row.split_whitespace();
        match (it.next(), it.next().map(str::parse::<usize>), it.next()) {
            (Some(k), Some(Ok(n)), None) if k == key => Ok(n),
            _ => Err((line, format!("expected `{key} <count>`"))),
        }
    };

    let (line, row) = next("node count")?;
    let n_nodes = count(line, row, "nodes")?;
    let mut nodes = Vec::with_capacity(n_nodes);
    for k in 0..n_nodes {
        let (line, row) = next("node row")?;
        let fields: Vec<&str> = row.split_whitespace().collect();
        if fields.len() != 3 {
            return Err((line, "node rows are `id x y`".into()));
        }
        check_id(line, fields[0], k)?;
        let coord = |s: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or((line, format!("invalid coordinate `{s}`")))
        };
        nodes.push([coord(fields[1])?, coord(fields[2])?]);
    }

    let (line, row) = next("element count")?;
    let n_elements = count(line, row, "elements")?;
    let mut blocks: BTreeMap<(usize, usize), (ElementKind, Vec<usize>)> = BTreeMap::new();
    for k in 0..n_elements {
        let (line, row) = next("element row")?;
        let fields: Vec<&str> = row.split_whitespace().collect();
        if fields.len() < 3 {
            return Err((line, "element rows are `id kind phase nodes...`".into()));
        }
        check_id(line, fields[0], k)?;
        let kind = ElementKind::from_name(fields[1]).ok_or((
            line,
            format!("unknown element kind `{}` (expected tri3 or quad4)", fields[1]),
        ))?;
        let phase: usize = fields[2]
            .parse()
            .map_err(|_| (line, format!("invalid phase `{}`", fields[2])))?;
        let conn = &fields[3..];
        if conn.len() != kind.nodes_per_element() {
            return Err((
                line,
                format!(
                    "{} needs {} nodes, found {}",
                    kind.name(),
                    kind.nodes_per_element(),
                    conn.len()
                ),
            ));
        }
        let key = (kind as usize, phase);
        let entry = blocks.entry(key).or_insert_with(|| (kind, Vec::new()));
        for s in conn {
            let n: usize = s.parse().map_err(|_| (line, format!("invalid node id `{s}`")))?;
            if n >= n_nodes {
                return Err((line, format!("node {n} does not exist ({n_nodes} nodes)")));
            }
            entry.1.push(n);
        }
    }
    if let Some((line, _)) = lines.next() {
        return Err((line, "trailing content after the element block".into()));
    }

    let blocks = blocks
        .into_iter()
        .map(|((_, phase), (kind, conn))| ElementBlock::new(kind, phase, conn))
        .collect();
    Mesh::new(nodes, blocks).map_err(|e| (last_line, e.to_string()))
}

fn check_id(line: usize, field: &str, expected: usize) -> Result<(), (usize, String)> {
    match field.parse::<usize>() {
        Ok(id) if id == expected => Ok(()),
        _ => Err((line, format!("expected id {expected}, found `{field}`"))),
    }
}

/// Writes `mesh` in the exchange format. Elements are numbered block by block.
pub fn write_mesh(mesh: &Mesh) -> String {
    let mut out = format!("{HEADER}\nnodes {}\n", mesh.n_nodes());
    for (i, x) in mesh.nodes().iter().enumerate() {
        let _ = writeln!(out, "{i} {:?} {:?}", x[0], x[1]);
    }
    let _ = writeln!(out, "elements {}", mesh.n_elements());
    for e in mesh.elements() {
        let nodes: Vec<String> = e.nodes.iter().map(usize::to_string).collect();
        let _ = writeln!(out, "{} {} {} {}", e.id, e.kind.name(), e.phase, nodes.join(" "));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use fescale_core::mesh::grid::{rectangle, GridSpec};

    #[test]
    fn round_trip() {
        let mesh = rectangle(&GridSpec::unit_square(3, ElementKind::Tri3), |c| {
            Some(usize::from(c[0] > 0.5))
        });
        let text = write_mesh(&mesh);
        let back = parse_mesh(&text).unwrap();
        assert_eq!(back.nodes(), mesh.nodes());
        assert_eq!(back.n_elements(), mesh.n_elements());
        assert_eq!(write_mesh(&back), text);
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = "# unit square\nfescale-mesh 1\n\nnodes 4\n0 0 0\n1 1 0\n2 1 1 # corner\n3 0 1\nelements 1\n0 quad4 0 0 1 2 3\n";
        let mesh = parse_mesh(text).unwrap();
        assert_eq!(mesh.n_elements(), 1);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let cases = [
            ("fescale-mesh 2\n", 1),
            ("fescale-mesh 1\nnodes 1\n0 0.0\n", 3),
            ("fescale-mesh 1\nnodes 1\n1 0 0\n", 3),
            (
                "fescale-mesh 1\nnodes 3\n0 0 0\n1 1 0\n2 0 1\nelements 1\n0 hex8 0 0 1 2\n",
                7,
            ),
            (
                "fescale-mesh 1\nnodes 3\n0 0 0\n1 1 0\n2 0 1\nelements 1\n0 tri3 0 0 1 5\n",
                7,
            ),
            (
                "fescale-mesh 1\nnodes 3\n0 0 0\n1 1 0\n2 0 1\nelements 2\n0 tri3 0 0 1 2\n",
                7,
            ),
        ];
        for (text, line) in cases {
            let (got, msg) = parse_mesh(text).unwrap_err();
            assert_eq!(got, line, "{msg}");
        }
    }
}
