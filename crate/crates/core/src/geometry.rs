//! Prefractal boundary polygons and the point/ray queries run against them.
//!
//! Both snowflakes are produced by a turtle rewrite on a lattice of unit
//! directions: the square domain walks the 4-direction grid, the triadic one
//! the 6-direction triangular lattice. Directions are kept as integers until
//! the very end, so vertex coordinates are exact sums of lattice steps scaled
//! by `scale^-L`.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Distance below which a point is reported as lying on the boundary.
pub const BOUNDARY_TOLERANCE: f64 = 1e-12;

/// Default cap on the number of polygon vertices a generator may produce.
pub const DEFAULT_MAX_VERTICES: u128 = 500_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl From<[f64; 2]> for Point {
    fn from([x, y]: [f64; 2]) -> Self {
        Self { x, y }
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainKind {
    Square,
    Triadic,
}

impl fmt::Display for DomainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DomainKind::Square => f.write_str("square"),
            DomainKind::Triadic => f.write_str("triadic"),
        }
    }
}

impl std::str::FromStr for DomainKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "square" => Ok(DomainKind::Square),
            "triadic" => Ok(DomainKind::Triadic),
            other => Err(format!(
                "unknown domain kind {other:?} (expected square|triadic)"
            )),
        }
    }
}

/// Segment rewrite in turtle form.
///
/// `offsets[k]` is the heading of the k-th sub-segment relative to the
/// heading of the segment being replaced, in units of `2π / directions`.
/// Every sub-segment is `1 / scale` of the original length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RewriteRule {
    pub directions: u32,
    pub scale: u32,
    pub offsets: Vec<i32>,
}

impl RewriteRule {
    /// Quadratic Koch ("Minkowski sausage") generator: F L F R F R F F L F L F R F.
    pub fn minkowski() -> Self {
        Self {
            directions: 4,
            scale: 4,
            offsets: vec![0, 1, 0, -1, -1, 0, 1, 0],
        }
    }

    /// Triadic Koch generator with the bump pointing to the right of travel,
    /// which is outward for a counter-clockwise polygon.
    pub fn koch_outward() -> Self {
        Self {
            directions: 6,
            scale: 3,
            offsets: vec![0, -1, 1, 0],
        }
    }

    fn apply(&self, program: &[u32]) -> Vec<u32> {
        let n = self.directions as i32;
        program
            .iter()
            .flat_map(|&heading| {
                self.offsets
                    .iter()
                    .map(move |&off| (heading as i32 + off).rem_euclid(n) as u32)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPolygon {
    pub domain_kind: DomainKind,
    pub fractal_level: u32,
    /// Counter-clockwise, closing edge implicit.
    pub vertices: Vec<Point>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Containment {
    Interior,
    Boundary,
    Exterior,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Right,
    Left,
    Up,
    Down,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::Right,
        Direction::Left,
        Direction::Up,
        Direction::Down,
    ];

    /// Maps a point into a frame where the ray runs along +u; returns (u, v).
    fn to_frame(self, p: Point) -> (f64, f64) {
        match self {
            Direction::Right => (p.x, p.y),
            Direction::Left => (-p.x, p.y),
            Direction::Up => (p.y, p.x),
            Direction::Down => (-p.y, p.x),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisRay {
    pub origin: Point,
    pub direction: Direction,
}

impl AxisRay {
    pub fn new(origin: Point, direction: Direction) -> Self {
        Self { origin, direction }
    }
}

fn check_vertex_cap(initial: usize, rule: &RewriteRule, level: u32, cap: u128) -> Result<()> {
    let per_level = rule.offsets.len() as u128;
    let requested = per_level
        .checked_pow(level)
        .and_then(|p| p.checked_mul(initial as u128))
        .unwrap_or(u128::MAX);
    if requested > cap {
        return Err(Error::ResourceLimit {
            what: "boundary vertices",
            requested,
            cap,
        });
    }
    Ok(())
}

fn turtle_program(initial: &[u32], rule: &RewriteRule, level: u32) -> Vec<u32> {
    (0..level).fold(initial.to_vec(), |program, _| rule.apply(&program))
}

/// Integer lattice walk starting at the origin. Returns the vertices in
/// lattice units (the closing vertex is dropped).
fn walk_lattice(program: &[u32], steps: &[(i64, i64)]) -> Vec<(i64, i64)> {
    let mut pos = (0i64, 0i64);
    let mut out = Vec::with_capacity(program.len());
    for &heading in program {
        out.push(pos);
        let (dx, dy) = steps[heading as usize];
        pos = (pos.0 + dx, pos.1 + dy);
    }
    debug_assert_eq!(pos, (0, 0), "turtle walk did not close");
    out
}

pub fn generate_square_boundary(level: u32) -> Result<BoundaryPolygon> {
    generate_square_boundary_with(level, &RewriteRule::minkowski(), DEFAULT_MAX_VERTICES)
}

pub fn generate_square_boundary_with(
    level: u32,
    rule: &RewriteRule,
    max_vertices: u128,
) -> Result<BoundaryPolygon> {
    const STEPS: [(i64, i64); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];
    if rule.directions != 4 {
        return Err(Error::Precondition(format!(
            "square generator needs a 4-direction rule, got {}",
            rule.directions
        )));
    }
    let initial = [0u32, 1, 2, 3];
    check_vertex_cap(initial.len(), rule, level, max_vertices)?;
    let program = turtle_program(&initial, rule, level);
    let unit = (rule.scale as f64).powi(level as i32).recip();
    let vertices = walk_lattice(&program, &STEPS)
        .into_iter()
        .map(|(i, j)| Point::new(i as f64 * unit, j as f64 * unit))
        .collect();
    Ok(BoundaryPolygon {
        domain_kind: DomainKind::Square,
        fractal_level: level,
        vertices,
    })
}

pub fn generate_triadic_boundary(level: u32) -> Result<BoundaryPolygon> {
    generate_triadic_boundary_with(level, &RewriteRule::koch_outward(), DEFAULT_MAX_VERTICES)
}

pub fn generate_triadic_boundary_with(
    level: u32,
    rule: &RewriteRule,
    max_vertices: u128,
) -> Result<BoundaryPolygon> {
    // Basis e1 = (1, 0), e2 = (1/2, √3/2).
    const STEPS: [(i64, i64); 6] = [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)];
    if rule.directions != 6 {
        return Err(Error::Precondition(format!(
            "triadic generator needs a 6-direction rule, got {}",
            rule.directions
        )));
    }
    let initial = [0u32, 2, 4];
    check_vertex_cap(initial.len(), rule, level, max_vertices)?;
    let program = turtle_program(&initial, rule, level);
    let unit = (rule.scale as f64).powi(level as i32).recip();
    let row = 3f64.sqrt() / 2.0;
    let vertices = walk_lattice(&program, &STEPS)
        .into_iter()
        .map(|(a, b)| Point::new((a as f64 + 0.5 * b as f64) * unit, b as f64 * row * unit))
        .collect();
    Ok(BoundaryPolygon {
        domain_kind: DomainKind::Triadic,
        fractal_level: level,
        vertices,
    })
}

pub fn generate_boundary(kind: DomainKind, level: u32) -> Result<BoundaryPolygon> {
    match kind {
        DomainKind::Square => generate_square_boundary(level),
        DomainKind::Triadic => generate_triadic_boundary(level),
    }
}

fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0);
    p.distance(Point::new(a.x + t * dx, a.y + t * dy))
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn on_segment(p: Point, a: Point, b: Point) -> bool {
    point_segment_distance(p, a, b) <= BOUNDARY_TOLERANCE
}

/// Closed-segment intersection test, touching counts.
fn segments_touch(a: Point, b: Point, c: Point, d: Point) -> bool {
    let (o1, o2) = (orient(a, b, c), orient(a, b, d));
    let (o3, o4) = (orient(c, d, a), orient(c, d, b));
    let eps = BOUNDARY_TOLERANCE;
    if ((o1 > eps && o2 < -eps) || (o1 < -eps && o2 > eps))
        && ((o3 > eps && o4 < -eps) || (o3 < -eps && o4 > eps))
    {
        return true;
    }
    on_segment(c, a, b) || on_segment(d, a, b) || on_segment(a, c, d) || on_segment(b, c, d)
}

impl BoundaryPolygon {
    pub fn edge_count(&self) -> usize {
        self.vertices.len()
    }

    /// Edges as (start, end) pairs, including the closing edge.
    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn perimeter(&self) -> f64 {
        self.edges().map(|(a, b)| a.distance(b)).sum()
    }

    pub fn signed_area(&self) -> f64 {
        0.5 * self
            .edges()
            .map(|(a, b)| a.x * b.y - b.x * a.y)
            .sum::<f64>()
    }

    /// (min, max) corners of the bounding box.
    pub fn bounding_box(&self) -> (Point, Point) {
        self.vertices.iter().fold(
            (
                Point::new(f64::INFINITY, f64::INFINITY),
                Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
            ),
            |(lo, hi), p| {
                (
                    Point::new(lo.x.min(p.x), lo.y.min(p.y)),
                    Point::new(hi.x.max(p.x), hi.y.max(p.y)),
                )
            },
        )
    }

    pub fn contains_point(&self, p: Point) -> Containment {
        classify_against(self.edges(), p)
    }

    /// True when no two non-adjacent edges meet and no adjacent pair folds back
    /// onto itself.
    pub fn is_simple(&self) -> bool {
        let edges: Vec<_> = self.edges().collect();
        let n = edges.len();
        if n < 3 {
            return false;
        }
        for i in 0..n {
            let (a, b) = edges[i];
            // A reversal shows up as the next edge starting back along this one.
            let (_, c) = edges[(i + 1) % n];
            if orient(a, b, c).abs() <= BOUNDARY_TOLERANCE
                && (c.x - b.x) * (b.x - a.x) + (c.y - b.y) * (b.y - a.y) < 0.0
            {
                return false;
            }
            for j in (i + 2)..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (c, d) = edges[j];
                if segments_touch(a, b, c, d) {
                    return false;
                }
            }
        }
        true
    }

    /// Distance from an interior origin to the first boundary hit along an
    /// axis-aligned ray.
    pub fn ray_boundary_distance(&self, ray: AxisRay) -> Result<f64> {
        match self.contains_point(ray.origin) {
            Containment::Interior => {}
            other => {
                return Err(Error::Precondition(format!(
                    "ray origin ({}, {}) is {:?}, not interior",
                    ray.origin.x, ray.origin.y, other
                )))
            }
        }
        let best = axis_ray_hit(self.edges(), ray);
        if best.is_finite() && best > 0.0 {
            Ok(best)
        } else {
            Err(Error::Numerical(format!(
                "ray from ({}, {}) found no boundary crossing",
                ray.origin.x, ray.origin.y
            )))
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("polygon serializes")
    }

    pub fn from_json_str(s: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json_string()).map_err(|e| Error::io(path, e))
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text).map_err(|e| Error::parse(path, e))
    }
}

/// Even-odd classification with half-open edges (each edge owns its start
/// vertex in y), after a boundary proximity check.
pub(crate) fn classify_against(
    edges: impl IntoIterator<Item = (Point, Point)>,
    p: Point,
) -> Containment {
    let mut inside = false;
    for (a, b) in edges {
        if on_segment(p, a, b) {
            return Containment::Boundary;
        }
        if (a.y > p.y) != (b.y > p.y) {
            let x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x_cross {
                inside = !inside;
            }
        }
    }
    if inside {
        Containment::Interior
    } else {
        Containment::Exterior
    }
}

/// Nearest positive hit of an axis ray against closed segments; `INFINITY`
/// when nothing is hit. Segments collinear with the ray contribute their
/// nearest point.
pub(crate) fn axis_ray_hit(edges: impl IntoIterator<Item = (Point, Point)>, ray: AxisRay) -> f64 {
    let dir = ray.direction;
    let (ou, ov) = dir.to_frame(ray.origin);
    let mut best = f64::INFINITY;
    for (a, b) in edges {
        let (au, av) = dir.to_frame(a);
        let (bu, bv) = dir.to_frame(b);
        let (vlo, vhi) = if av <= bv { (av, bv) } else { (bv, av) };
        if ov < vlo - BOUNDARY_TOLERANCE || ov > vhi + BOUNDARY_TOLERANCE {
            continue;
        }
        let hit = if (bv - av).abs() <= BOUNDARY_TOLERANCE {
            au.min(bu)
        } else {
            au + (ov - av) * (bu - au) / (bv - av)
        };
        let t = hit - ou;
        if t > 0.0 && t < best {
            best = t;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> BoundaryPolygon {
        generate_square_boundary(0).unwrap()
    }

    #[test]
    fn level_zero_square_is_unit_square() {
        let p = unit_square();
        assert_eq!(
            p.vertices,
            vec![
                Point::new(0.0, 0.0),
                Point::new(1.0, 0.0),
                Point::new(1.0, 1.0),
                Point::new(0.0, 1.0)
            ]
        );
        assert_eq!(p.perimeter(), 4.0);
    }

    #[test]
    fn level_zero_triangle_has_horizontal_base() {
        let p = generate_triadic_boundary(0).unwrap();
        assert_eq!(p.edge_count(), 3);
        assert_eq!(p.vertices[0], Point::new(0.0, 0.0));
        assert_eq!(p.vertices[1], Point::new(1.0, 0.0));
        assert!((p.perimeter() - 3.0).abs() < 1e-15);
        assert!(p.signed_area() > 0.0);
    }

    #[test]
    fn first_rewrite_counts() {
        let sq = generate_square_boundary(1).unwrap();
        assert_eq!(sq.edge_count(), 32);
        assert!(sq.edges().all(|(a, b)| a.distance(b) == 0.25));
        assert_eq!(sq.perimeter(), 8.0);

        let tri = generate_triadic_boundary(1).unwrap();
        assert_eq!(tri.edge_count(), 12);
        assert!(tri
            .edges()
            .all(|(a, b)| (a.distance(b) - 1.0 / 3.0).abs() < 1e-14));
        assert!((tri.perimeter() - 4.0).abs() < 1e-13);
    }

    #[test]
    fn generators_preserve_orientation_and_area() {
        // The Minkowski rewrite is area balanced; the Koch bump adds area.
        for level in 0..=3 {
            let sq = generate_square_boundary(level).unwrap();
            assert!((sq.signed_area() - 1.0).abs() < 1e-12);
        }
        let tri = generate_triadic_boundary(1).unwrap();
        let base = 3f64.sqrt() / 4.0;
        assert!((tri.signed_area() - base * (1.0 + 1.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn vertex_cap_is_enforced() {
        let err = generate_square_boundary(9).unwrap_err();
        assert!(matches!(err, Error::ResourceLimit { .. }));
        let err = generate_triadic_boundary(9).unwrap_err();
        assert!(matches!(err, Error::ResourceLimit { .. }));
        assert!(generate_square_boundary_with(2, &RewriteRule::minkowski(), 255).is_err());
        assert!(generate_square_boundary_with(2, &RewriteRule::minkowski(), 256).is_ok());
    }

    #[test]
    fn rule_direction_mismatch_is_rejected() {
        assert!(generate_square_boundary_with(1, &RewriteRule::koch_outward(), 1000).is_err());
        assert!(generate_triadic_boundary_with(1, &RewriteRule::minkowski(), 1000).is_err());
    }

    #[test]
    fn unit_square_containment() {
        let p = unit_square();
        assert_eq!(
            p.contains_point(Point::new(0.5, 0.5)),
            Containment::Interior
        );
        assert_eq!(
            p.contains_point(Point::new(1.0, 0.5)),
            Containment::Boundary
        );
        assert_eq!(
            p.contains_point(Point::new(1.5, 0.5)),
            Containment::Exterior
        );
        assert_eq!(
            p.contains_point(Point::new(0.0, 0.0)),
            Containment::Boundary
        );
        assert_eq!(
            p.contains_point(Point::new(0.5, 1.0 + 5e-13)),
            Containment::Boundary
        );
    }

    #[test]
    fn unit_square_rays() {
        let p = unit_square();
        let r = |x, y, d| {
            p.ray_boundary_distance(AxisRay::new(Point::new(x, y), d))
                .unwrap()
        };
        assert_eq!(r(0.5, 0.5, Direction::Right), 0.5);
        assert_eq!(r(0.25, 0.5, Direction::Left), 0.25);
        assert_eq!(r(0.25, 0.5, Direction::Right), 0.75);
        assert_eq!(r(0.25, 0.75, Direction::Up), 0.25);
        assert_eq!(r(0.25, 0.75, Direction::Down), 0.75);
    }

    #[test]
    fn ray_from_non_interior_origin_fails() {
        let p = unit_square();
        let err = p
            .ray_boundary_distance(AxisRay::new(Point::new(1.0, 0.5), Direction::Left))
            .unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
        assert!(p
            .ray_boundary_distance(AxisRay::new(Point::new(2.0, 0.5), Direction::Left))
            .is_err());
    }

    #[test]
    fn collinear_edge_reports_nearest_point() {
        // Level 1: from the center the downward ray runs into the vertex
        // (0.5, 0.25) and then along the vertical edge x = 0.5.
        let p = generate_square_boundary(1).unwrap();
        let d = p
            .ray_boundary_distance(AxisRay::new(Point::new(0.5, 0.5), Direction::Down))
            .unwrap();
        assert_eq!(d, 0.25);
    }

    #[test]
    fn generated_polygons_are_simple() {
        for level in 0..=3 {
            assert!(
                generate_square_boundary(level).unwrap().is_simple(),
                "square L={level}"
            );
            assert!(
                generate_triadic_boundary(level).unwrap().is_simple(),
                "triadic L={level}"
            );
        }
    }

    #[test]
    fn self_touching_polygon_is_not_simple() {
        let bowtie = BoundaryPolygon {
            domain_kind: DomainKind::Square,
            fractal_level: 0,
            vertices: vec![
                Point::new(0.0, 0.0),
                Point::new(1.0, 1.0),
                Point::new(1.0, 0.0),
                Point::new(0.0, 1.0),
            ],
        };
        assert!(!bowtie.is_simple());
    }

    #[test]
    fn json_round_trip() {
        let p = generate_triadic_boundary(1).unwrap();
        let text = p.to_json_string();
        assert!(text.contains("\"domain_kind\": \"triadic\""));
        assert_eq!(BoundaryPolygon::from_json_str(&text).unwrap(), p);
    }
}
