//! Interior lattice meshes over a boundary polygon.
//!
//! Square domains use the axis grid anchored at the origin; triadic domains
//! use the triangular lattice with one row along the base of the initial
//! triangle. Both lattices contain every polygon vertex as a site, so grid
//! points either sit strictly inside, on the boundary, or outside with no
//! near misses.

use std::collections::{HashMap, VecDeque};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{classify_against, BoundaryPolygon, Containment, DomainKind, Point};

/// Cap on lattice sites scanned inside the polygon's bounding box.
pub const DEFAULT_MAX_LATTICE_POINTS: u128 = 20_000_000;

const ROW_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: usize,
    pub x: f64,
    pub y: f64,
}

impl Node {
    pub fn position(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    pub domain_kind: DomainKind,
    #[serde(rename = "L")]
    pub level: u32,
    #[serde(rename = "R")]
    pub refine: u32,
    pub spacing: f64,
    pub nodes: Vec<Node>,
    /// Sorted neighbor ids per node.
    pub adjacency: Vec<Vec<usize>>,
}

/// Lattice spacing H for a domain at fractal level `level` and refinement `refine`.
pub fn grid_spacing(kind: DomainKind, level: u32, refine: u32) -> f64 {
    match kind {
        DomainKind::Square => 0.5f64.powi((2 * level + refine) as i32),
        DomainKind::Triadic => 3f64.powi((level + refine) as i32).recip(),
    }
}

struct LatticeFrame {
    kind: DomainKind,
    h: f64,
    row: f64,
}

impl LatticeFrame {
    fn new(kind: DomainKind, h: f64) -> Self {
        let row = match kind {
            DomainKind::Square => h,
            DomainKind::Triadic => 3f64.sqrt() / 2.0 * h,
        };
        Self { kind, h, row }
    }

    /// Lattice coordinates (i, j) -> plane. Triadic sites use the basis
    /// (H, 0), (H/2, row).
    fn position(&self, i: i64, j: i64) -> Point {
        match self.kind {
            DomainKind::Square => Point::new(i as f64 * self.h, j as f64 * self.h),
            DomainKind::Triadic => {
                Point::new((i as f64 + 0.5 * j as f64) * self.h, j as f64 * self.row)
            }
        }
    }

    fn column_offset(&self, j: i64) -> f64 {
        match self.kind {
            DomainKind::Square => 0.0,
            DomainKind::Triadic => 0.5 * j as f64,
        }
    }

    fn neighbor_offsets(&self) -> &'static [(i64, i64)] {
        match self.kind {
            DomainKind::Square => &[(1, 0), (-1, 0), (0, 1), (0, -1)],
            DomainKind::Triadic => &[(1, 0), (-1, 0), (0, 1), (0, -1), (1, -1), (-1, 1)],
        }
    }
}

pub fn build_mesh(poly: &BoundaryPolygon, refine: u32) -> Result<Mesh> {
    build_mesh_with(poly, refine, DEFAULT_MAX_LATTICE_POINTS)
}

pub fn build_mesh_with(poly: &BoundaryPolygon, refine: u32, max_points: u128) -> Result<Mesh> {
    let kind = poly.domain_kind;
    let h = grid_spacing(kind, poly.fractal_level, refine);
    let frame = LatticeFrame::new(kind, h);
    let (lo, hi) = poly.bounding_box();

    let j_min = (lo.y / frame.row).floor() as i64;
    let j_max = (hi.y / frame.row).ceil() as i64;
    let cols = ((hi.x - lo.x) / h).ceil() as u128 + 3;
    let requested = cols * (j_max - j_min + 1) as u128;
    if requested > max_points {
        return Err(Error::ResourceLimit {
            what: "lattice sites",
            requested,
            cap: max_points,
        });
    }

    let edges: Vec<(Point, Point)> = poly.edges().collect();
    let mut sites: Vec<(i64, i64)> = Vec::new();
    for j in j_min..=j_max {
        let y = j as f64 * frame.row;
        let row_edges: Vec<(Point, Point)> = edges
            .iter()
            .copied()
            .filter(|(a, b)| a.y.min(b.y) - ROW_SLACK <= y && y <= a.y.max(b.y) + ROW_SLACK)
            .collect();
        if row_edges.is_empty() {
            continue;
        }
        let off = frame.column_offset(j);
        let i_min = (lo.x / h - off).floor() as i64 - 1;
        let i_max = (hi.x / h - off).ceil() as i64 + 1;
        for i in i_min..=i_max {
            let p = frame.position(i, j);
            if classify_against(row_edges.iter().copied(), p) == Containment::Interior {
                sites.push((i, j));
            }
        }
    }
    if sites.is_empty() {
        return Err(Error::DegenerateMesh(format!(
            "no lattice point strictly inside {kind} L={} at R={refine} (H={h})",
            poly.fractal_level
        )));
    }

    // Row-major: scanline by y, then x. `sites` is generated in that order.
    let index: HashMap<(i64, i64), usize> =
        sites.iter().enumerate().map(|(k, &s)| (s, k)).collect();
    let adjacency: Vec<Vec<usize>> = sites
        .iter()
        .map(|&(i, j)| {
            let mut nb: Vec<usize> = frame
                .neighbor_offsets()
                .iter()
                .filter_map(|&(di, dj)| index.get(&(i + di, j + dj)).copied())
                .collect();
            nb.sort_unstable();
            nb
        })
        .collect();

    let keep = largest_component(&adjacency);
    let dropped = sites.len() - keep.len();
    if dropped > 0 {
        log::warn!(
            "{kind} L={} R={refine}: dropped {dropped} interior sites outside the largest component",
            poly.fractal_level
        );
    }
    let mut remap = vec![usize::MAX; sites.len()];
    for (new, &old) in keep.iter().enumerate() {
        remap[old] = new;
    }
    let nodes = keep
        .iter()
        .enumerate()
        .map(|(id, &old)| {
            let (i, j) = sites[old];
            let p = frame.position(i, j);
            Node { id, x: p.x, y: p.y }
        })
        .collect();
    let adjacency = keep
        .iter()
        .map(|&old| adjacency[old].iter().map(|&n| remap[n]).collect())
        .collect();

    Ok(Mesh {
        domain_kind: kind,
        level: poly.fractal_level,
        refine,
        spacing: h,
        nodes,
        adjacency,
    })
}

/// Indices of the largest connected component, ascending. Ties go to the
/// component containing the smallest index.
fn largest_component(adjacency: &[Vec<usize>]) -> Vec<usize> {
    let n = adjacency.len();
    let mut comp = vec![usize::MAX; n];
    let mut best: Option<(usize, usize)> = None;
    let mut sizes = Vec::new();
    for seed in 0..n {
        if comp[seed] != usize::MAX {
            continue;
        }
        let c = sizes.len();
        let mut size = 0;
        let mut queue = VecDeque::from([seed]);
        comp[seed] = c;
        while let Some(u) = queue.pop_front() {
            size += 1;
            for &v in &adjacency[u] {
                if comp[v] == usize::MAX {
                    comp[v] = c;
                    queue.push_back(v);
                }
            }
        }
        sizes.push(size);
        if best.is_none_or(|(_, s)| size > s) {
            best = Some((c, size));
        }
    }
    let (c, _) = best.expect("non-empty adjacency");
    (0..n).filter(|&k| comp[k] == c).collect()
}

impl Mesh {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn max_degree(&self) -> usize {
        match self.domain_kind {
            DomainKind::Square => 4,
            DomainKind::Triadic => 6,
        }
    }

    pub fn position(&self, id: usize) -> Result<Point> {
        self.nodes.get(id).map(Node::position).ok_or(Error::Lookup {
            id,
            len: self.len(),
        })
    }

    pub fn euclidean_distance(&self, i: usize, j: usize) -> Result<f64> {
        Ok(self.position(i)?.distance(self.position(j)?))
    }

    /// Two-coloring by BFS; `None` if an odd cycle exists.
    pub fn two_coloring(&self) -> Option<Vec<u8>> {
        let mut color = vec![u8::MAX; self.len()];
        for seed in 0..self.len() {
            if color[seed] != u8::MAX {
                continue;
            }
            color[seed] = 0;
            let mut queue = VecDeque::from([seed]);
            while let Some(u) = queue.pop_front() {
                for &v in &self.adjacency[u] {
                    if color[v] == u8::MAX {
                        color[v] = 1 - color[u];
                        queue.push_back(v);
                    } else if color[v] == color[u] {
                        return None;
                    }
                }
            }
        }
        Some(color)
    }

    pub fn is_bipartite(&self) -> bool {
        self.two_coloring().is_some()
    }

    pub fn is_connected(&self) -> bool {
        !self.is_empty() && largest_component(&self.adjacency).len() == self.len()
    }

    /// Structural checks applied to meshes read from disk.
    pub fn validate(&self) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::DegenerateMesh("mesh has no nodes".into()));
        }
        if self.adjacency.len() != self.nodes.len() {
            return Err(Error::Domain(format!(
                "adjacency has {} rows for {} nodes",
                self.adjacency.len(),
                self.nodes.len()
            )));
        }
        for (k, node) in self.nodes.iter().enumerate() {
            if node.id != k {
                return Err(Error::Domain(format!(
                    "node at position {k} has id {}",
                    node.id
                )));
            }
        }
        for (i, nb) in self.adjacency.iter().enumerate() {
            for &j in nb {
                if j >= self.len() || j == i || self.adjacency[j].binary_search(&i).is_err() {
                    return Err(Error::Domain(format!(
                        "adjacency entry {i} -> {j} is invalid"
                    )));
                }
            }
            if nb.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Domain(format!(
                    "adjacency of node {i} is not sorted"
                )));
            }
        }
        Ok(())
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("mesh serializes")
    }

    pub fn from_json_str(s: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json_string()).map_err(|e| Error::io(path, e))
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mesh = Self::from_json_str(&text).map_err(|e| Error::parse(path, e))?;
        mesh.validate()?;
        Ok(mesh)
    }
}
