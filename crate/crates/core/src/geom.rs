//! Planar geometry over calibrated world coordinates.
//!
//! World coordinates are kilometres, `x` east and `y` north. Polygons are
//! stored open: the first vertex is never repeated at the end.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Two points closer than this (in km) are treated as the same point.
pub const DUPLICATE_TOLERANCE_KM: f64 = 1e-12;

/// A point in the calibrated planar workspace, in kilometres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct WorldPoint {
    pub x: f64,
    pub y: f64,
}

impl WorldPoint {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance(&self, other: &WorldPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    fn coincides(&self, other: &WorldPoint) -> bool {
        self.distance(other) <= DUPLICATE_TOLERANCE_KM
    }
}

impl From<[f64; 2]> for WorldPoint {
    fn from([x, y]: [f64; 2]) -> Self {
        Self { x, y }
    }
}

impl From<WorldPoint> for [f64; 2] {
    fn from(p: WorldPoint) -> Self {
        [p.x, p.y]
    }
}

fn check_finite(points: &[WorldPoint]) -> Result<()> {
    match points.iter().position(|p| !p.is_finite()) {
        Some(i) => Err(Error::InvalidInput(format!("point {i} is not finite"))),
        None => Ok(()),
    }
}

/// Open polyline of at least one point, without consecutive duplicates.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline(Vec<WorldPoint>);

impl Polyline {
    pub fn new(points: Vec<WorldPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidInput("polyline has no points".into()));
        }
        check_finite(&points)?;
        if let Some(i) = points.windows(2).position(|w| w[0].coincides(&w[1])) {
            return Err(Error::DuplicatePoint(format!(
                "points {i} and {} coincide",
                i + 1
            )));
        }
        Ok(Self(points))
    }

    pub fn points(&self) -> &[WorldPoint] {
        &self.0
    }

    pub fn length(&self) -> f64 {
        self.0.windows(2).map(|w| w[0].distance(&w[1])).sum()
    }

    /// True when no two non-adjacent segments touch and no segment folds
    /// back over its predecessor.
    pub fn is_simple(&self) -> bool {
        let segs: Vec<_> = self.0.windows(2).map(|w| (w[0], w[1])).collect();
        for i in 0..segs.len() {
            if i + 1 < segs.len() && folds_back(segs[i].0, segs[i].1, segs[i + 1].1) {
                return false;
            }
            for j in i + 2..segs.len() {
                if segments_intersect(segs[i], segs[j]) {
                    return false;
                }
            }
        }
        true
    }
}

/// Closed polygon with at least three vertices; the closing edge is implicit.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon(Vec<WorldPoint>);

impl Polygon {
    /// Builds a polygon, rejecting consecutive duplicates (cyclically, so a
    /// repeated closing vertex is an error here; see [`Polygon::from_ring`]).
    pub fn new(vertices: Vec<WorldPoint>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidInput(format!(
                "polygon needs at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        check_finite(&vertices)?;
        let n = vertices.len();
        for i in 0..n {
            if vertices[i].coincides(&vertices[(i + 1) % n]) {
                return Err(Error::DuplicatePoint(format!(
                    "vertices {i} and {} coincide",
                    (i + 1) % n
                )));
            }
        }
        Ok(Self(vertices))
    }

    /// Like [`Polygon::new`] but strips a closing vertex that repeats the first.
    pub fn from_ring(mut vertices: Vec<WorldPoint>) -> Result<Self> {
        if vertices.len() > 1 && vertices[0].coincides(vertices.last().unwrap()) {
            vertices.pop();
        }
        Self::new(vertices)
    }

    pub fn vertices(&self) -> &[WorldPoint] {
        &self.0
    }

    /// Shoelace sum; positive for counter-clockwise vertex order.
    pub fn signed_area(&self) -> f64 {
        signed_area(&self.0)
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    pub fn perimeter(&self) -> f64 {
        let n = self.0.len();
        (0..n).map(|i| self.0[i].distance(&self.0[(i + 1) % n])).sum()
    }

    pub fn bounding_box(&self) -> BoundingBox {
        BoundingBox::around(&self.0)
    }

    /// O(n²) pairwise edge test.
    pub fn is_simple(&self) -> bool {
        let v = &self.0;
        let n = v.len();
        let edge = |i: usize| (v[i], v[(i + 1) % n]);
        for i in 0..n {
            if folds_back(v[i], v[(i + 1) % n], v[(i + 2) % n]) {
                return false;
            }
            for j in i + 2..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                if segments_intersect(edge(i), edge(j)) {
                    return false;
                }
            }
        }
        true
    }
}

fn signed_area(v: &[WorldPoint]) -> f64 {
    let n = v.len();
    // Centre on the first vertex to keep the cross products small.
    let o = v[0];
    let twice: f64 = (0..n)
        .map(|i| {
            let (p, q) = (v[i], v[(i + 1) % n]);
            (p.x - o.x) * (q.y - o.y) - (q.x - o.x) * (p.y - o.y)
        })
        .sum();
    0.5 * twice
}

/// Axis-aligned extents of a point set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min_x: f64,
    pub min_y: f64,
    pub width: f64,
    pub height: f64,
    pub area: f64,
}

impl BoundingBox {
    fn around(points: &[WorldPoint]) -> Self {
        let (mut min_x, mut min_y) = (f64::INFINITY, f64::INFINITY);
        let (mut max_x, mut max_y) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in points {
            min_x = min_x.min(p.x);
            min_y = min_y.min(p.y);
            max_x = max_x.max(p.x);
            max_y = max_y.max(p.y);
        }
        let (width, height) = (max_x - min_x, max_y - min_y);
        Self {
            min_x,
            min_y,
            width,
            height,
            area: width * height,
        }
    }
}

/// Total Euclidean length of an open polyline. A single point has length 0.
pub fn polyline_length(points: &[WorldPoint]) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::InvalidInput("polyline has no points".into()));
    }
    check_finite(points)?;
    Ok(points.windows(2).map(|w| w[0].distance(&w[1])).sum())
}

/// Unsigned shoelace area with cyclic indexing. Accepts self-intersecting
/// input and returns the absolute signed area; use [`is_simple`] to flag it.
pub fn polygon_area(vertices: &[WorldPoint]) -> Result<f64> {
    if vertices.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "polygon needs at least 3 vertices, got {}",
            vertices.len()
        )));
    }
    check_finite(vertices)?;
    Ok(signed_area(vertices).abs())
}

pub fn bounding_box(points: &[WorldPoint]) -> Result<BoundingBox> {
    if points.is_empty() {
        return Err(Error::InvalidInput("bounding box of an empty point set".into()));
    }
    check_finite(points)?;
    Ok(BoundingBox::around(points))
}

pub fn is_simple(poly: &Polygon) -> bool {
    poly.is_simple()
}

fn cross(o: WorldPoint, a: WorldPoint, b: WorldPoint) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

fn orientation(o: WorldPoint, a: WorldPoint, b: WorldPoint) -> i8 {
    let c = cross(o, a, b);
    if c > 0.0 {
        1
    } else if c < 0.0 {
        -1
    } else {
        0
    }
}

/// `p` lies within the bounding rectangle of segment `a`-`b` (used for
/// collinear cases only).
fn within(a: WorldPoint, b: WorldPoint, p: WorldPoint) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Closed-segment intersection, touching endpoints included.
fn segments_intersect((p1, p2): (WorldPoint, WorldPoint), (q1, q2): (WorldPoint, WorldPoint)) -> bool {
    let d1 = orientation(q1, q2, p1);
    let d2 = orientation(q1, q2, p2);
    let d3 = orientation(p1, p2, q1);
    let d4 = orientation(p1, p2, q2);
    if d1 * d2 < 0 && d3 * d4 < 0 {
        return true;
    }
    (d1 == 0 && within(q1, q2, p1))
        || (d2 == 0 && within(q1, q2, p2))
        || (d3 == 0 && within(p1, p2, q1))
        || (d4 == 0 && within(p1, p2, q2))
}

/// Consecutive edges `a`-`b` and `b`-`c` overlap along a shared line.
fn folds_back(a: WorldPoint, b: WorldPoint, c: WorldPoint) -> bool {
    cross(b, a, c) == 0.0 && (a.x - b.x) * (c.x - b.x) + (a.y - b.y) * (c.y - b.y) > 0.0
}
