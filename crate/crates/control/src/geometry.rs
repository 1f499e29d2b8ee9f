//! Planar points and polygonal crossing zones.
//!
//! A zone is a simple polygon over ground-plane (or image-plane)
//! coordinates. Construction validates the polygon once so containment
//! queries in the controller's hot path can stay branch-light: at least
//! three vertices, no repeated adjacent vertices, no self-intersection,
//! and non-zero area. Containment is boundary-inclusive, so an anchor
//! sitting exactly on the zone edge counts as inside.

use serde::{Deserialize, Serialize};

use crate::{ControlError, Result};

/// A finite 2D point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    x: f64,
    y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Result<Point> {
        if !x.is_finite() || !y.is_finite() {
            return Err(ControlError::Domain(format!(
                "point coordinates must be finite, got ({x}, {y})"
            )));
        }
        Ok(Point { x, y })
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }
}

/// Twice the signed area of triangle (a, b, c). Positive when c lies to the
/// left of the directed line a -> b.
fn cross(a: Point, b: Point, c: Point) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

/// True when q lies on the closed segment [a, b], assuming collinearity.
fn on_segment(a: Point, b: Point, q: Point) -> bool {
    q.x >= a.x.min(b.x) && q.x <= a.x.max(b.x) && q.y >= a.y.min(b.y) && q.y <= a.y.max(b.y)
}

/// True when closed segments [p1, p2] and [q1, q2] share any point.
fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

/// A validated simple polygon used as a crossing zone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct PolygonZone {
    vertices: Vec<Point>,
}

impl PolygonZone {
    pub fn new(vertices: Vec<Point>) -> Result<PolygonZone> {
        let n = vertices.len();
        if n < 3 {
            return Err(ControlError::InvalidPolygon(format!(
                "need at least 3 vertices, got {n}"
            )));
        }
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            if a == b {
                return Err(ControlError::InvalidPolygon(format!(
                    "adjacent vertices {i} and {} coincide",
                    (i + 1) % n
                )));
            }
        }
        // Simplicity: no two non-adjacent edges may touch. Adjacent edges
        // share exactly their common vertex, which segments_intersect would
        // flag, so they are skipped here and their collinear-overlap case is
        // caught by the zero-area and coincident-vertex checks instead.
        for i in 0..n {
            let (p1, p2) = (vertices[i], vertices[(i + 1) % n]);
            for j in (i + 1)..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    continue;
                }
                let (q1, q2) = (vertices[j], vertices[(j + 1) % n]);
                if segments_intersect(p1, p2, q1, q2) {
                    return Err(ControlError::InvalidPolygon(format!(
                        "edges {i} and {j} intersect"
                    )));
                }
            }
        }
        let area2: f64 = (0..n)
            .map(|i| {
                let a = vertices[i];
                let b = vertices[(i + 1) % n];
                a.x * b.y - b.x * a.y
            })
            .sum();
        if area2 == 0.0 {
            return Err(ControlError::InvalidPolygon(
                "polygon has zero area".to_string(),
            ));
        }
        Ok(PolygonZone { vertices })
    }

    pub fn from_coords(coords: &[(f64, f64)]) -> Result<PolygonZone> {
        let vertices = coords
            .iter()
            .map(|&(x, y)| Point::new(x, y))
            .collect::<Result<Vec<_>>>()?;
        PolygonZone::new(vertices)
    }

    /// Axis-aligned rectangle helper for the common zone shape.
    pub fn rectangle(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<PolygonZone> {
        PolygonZone::from_coords(&[(x_min, y_min), (x_max, y_min), (x_max, y_max), (x_min, y_max)])
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    /// Boundary-inclusive containment by ray casting. A horizontal ray is
    /// shot to the right of `p`; edge endpoints exactly at ray height are
    /// handled by the half-open rule, and points on the boundary itself are
    /// accepted before any crossings are counted.
    pub fn contains(&self, p: Point) -> bool {
        let n = self.vertices.len();
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            if cross(a, b, p) == 0.0 && on_segment(a, b, p) {
                return true;
            }
        }
        let mut inside = false;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let straddles = (a.y > p.y) != (b.y > p.y);
            if straddles {
                let x_at_y = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if x_at_y > p.x {
                    inside = !inside;
                }
            }
        }
        inside
    }
}

impl TryFrom<Vec<(f64, f64)>> for PolygonZone {
    type Error = ControlError;

    fn try_from(coords: Vec<(f64, f64)>) -> Result<PolygonZone> {
        PolygonZone::from_coords(&coords)
    }
}

impl From<PolygonZone> for Vec<(f64, f64)> {
    fn from(zone: PolygonZone) -> Vec<(f64, f64)> {
        zone.vertices.iter().map(|p| (p.x, p.y)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(x: f64, y: f64) -> Point {
        Point::new(x, y).unwrap()
    }

    fn unit_square() -> PolygonZone {
        PolygonZone::rectangle(0.0, 0.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn rejects_fewer_than_three_vertices() {
        assert!(PolygonZone::from_coords(&[(0.0, 0.0), (1.0, 0.0)]).is_err());
    }

    #[test]
    fn rejects_duplicate_adjacent_vertices() {
        let r = PolygonZone::from_coords(&[(0.0, 0.0), (0.0, 0.0), (1.0, 1.0), (0.0, 1.0)]);
        assert!(r.is_err());
    }

    #[test]
    fn rejects_bow_tie() {
        let r = PolygonZone::from_coords(&[(0.0, 0.0), (1.0, 1.0), (1.0, 0.0), (0.0, 1.0)]);
        assert!(r.is_err());
    }

    #[test]
    fn rejects_collinear_zero_area() {
        let r = PolygonZone::from_coords(&[(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)]);
        assert!(r.is_err());
    }

    #[test]
    fn rejects_non_finite_vertex() {
        let r = PolygonZone::from_coords(&[(0.0, 0.0), (f64::INFINITY, 0.0), (1.0, 1.0)]);
        assert!(r.is_err());
    }

    #[test]
    fn accepts_both_winding_orders() {
        assert!(PolygonZone::from_coords(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0)]).is_ok());
        assert!(PolygonZone::from_coords(&[(0.0, 0.0), (1.0, 1.0), (1.0, 0.0)]).is_ok());
    }

    #[test]
    fn square_contains_interior_and_boundary() {
        let z = unit_square();
        assert!(z.contains(pt(0.5, 0.5)));
        assert!(z.contains(pt(0.0, 0.5)), "edge point");
        assert!(z.contains(pt(1.0, 1.0)), "corner point");
        assert!(z.contains(pt(0.5, 0.0)), "bottom edge");
        assert!(!z.contains(pt(1.5, 0.5)));
        assert!(!z.contains(pt(0.5, -0.1)));
        assert!(!z.contains(pt(-1e-9, 0.5)));
    }

    #[test]
    fn ray_through_vertex_counts_once() {
        // Diamond whose left and right corners sit exactly at query height.
        let z =
            PolygonZone::from_coords(&[(0.0, 1.0), (1.0, 0.0), (2.0, 1.0), (1.0, 2.0)]).unwrap();
        assert!(z.contains(pt(1.0, 1.0)));
        assert!(!z.contains(pt(-0.5, 1.0)));
        assert!(!z.contains(pt(2.5, 1.0)));
    }

    #[test]
    fn concave_polygon_containment() {
        // An L shape; (1.5, 1.5) lies in the notch, outside the polygon.
        let z = PolygonZone::from_coords(&[
            (0.0, 0.0),
            (2.0, 0.0),
            (2.0, 1.0),
            (1.0, 1.0),
            (1.0, 2.0),
            (0.0, 2.0),
        ])
        .unwrap();
        assert!(z.contains(pt(0.5, 0.5)));
        assert!(z.contains(pt(0.5, 1.5)));
        assert!(!z.contains(pt(1.5, 1.5)));
        assert!(z.contains(pt(1.0, 1.5)), "notch edge is boundary");
    }

    /// Independent oracle for convex polygons: a point is inside iff it
    /// lies on the inner side of every edge's half-plane.
    fn convex_contains(vertices: &[Point], p: Point) -> bool {
        let n = vertices.len();
        let mut sign = 0.0f64;
        for i in 0..n {
            let c = cross(vertices[i], vertices[(i + 1) % n], p);
            if c == 0.0 {
                if on_segment(vertices[i], vertices[(i + 1) % n], p) {
                    return true;
                }
                // Collinear with the edge line but outside the segment span.
                continue;
            }
            if sign == 0.0 {
                sign = c.signum();
            } else if c.signum() != sign {
                return false;
            }
        }
        true
    }

    #[test]
    fn matches_half_plane_oracle_on_convex_pentagon() {
        let coords = [(0.0, 0.0), (4.0, 0.0), (5.0, 3.0), (2.0, 5.0), (-1.0, 3.0)];
        let z = PolygonZone::from_coords(&coords).unwrap();
        let verts: Vec<Point> = coords.iter().map(|&(x, y)| pt(x, y)).collect();
        let mut checked = 0usize;
        for ix in -10..=20 {
            for iy in -10..=20 {
                let p = pt(ix as f64 * 0.37, iy as f64 * 0.29);
                assert_eq!(
                    z.contains(p),
                    convex_contains(&verts, p),
                    "disagreement at ({}, {})",
                    p.x(),
                    p.y()
                );
                checked += 1;
            }
        }
        assert!(checked > 900);
    }

    #[test]
    fn serde_round_trip_preserves_vertices() {
        let z = unit_square();
        let json = serde_json::to_string(&z).unwrap();
        let back: PolygonZone = serde_json::from_str(&json).unwrap();
        assert_eq!(z, back);
        // Deserializing an invalid polygon fails outright.
        let bad: std::result::Result<PolygonZone, _> =
            serde_json::from_str("[[0.0,0.0],[1.0,1.0]]");
        assert!(bad.is_err());
    }
}
