//! Planar collision geometry and scene descriptions.
//!
//! Obstacles and the slider footprint are simple polygons. The planner
//! needs one scalar per (footprint, obstacle) pair: a signed distance,
//! positive gap when disjoint and negative penetration depth when
//! overlapping, continuous across contact. Distances are exact for convex
//! shapes; nonconvex obstacles are decomposed into triangles once and the
//! signed distance is aggregated over the pieces.

use crate::model::SliderParams;
use crate::model::SliderState;
use crate::Vec2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("a polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon vertices must be finite")]
    NonFiniteVertex,
    #[error("polygon area is degenerate")]
    DegenerateArea,
    #[error("polygon edges self-intersect")]
    SelfIntersecting,
    #[error("triangulation failed; the polygon is numerically degenerate")]
    Triangulation,
    #[error("invalid scene: {0}")]
    InvalidScene(String),
}

fn cross(a: Vec2, b: Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Simple planar polygon, stored counterclockwise.
///
/// Construction validates the outline (finite, non-self-intersecting,
/// positive area), drops duplicate and collinear vertices, and flips
/// clockwise input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct Polygon {
    vertices: Vec<Vec2>,
}

impl TryFrom<Vec<[f64; 2]>> for Polygon {
    type Error = GeometryError;

    fn try_from(raw: Vec<[f64; 2]>) -> Result<Self, GeometryError> {
        Polygon::new(raw.into_iter().map(|[x, y]| Vec2::new(x, y)).collect())
    }
}

impl From<Polygon> for Vec<[f64; 2]> {
    fn from(poly: Polygon) -> Self {
        poly.vertices.iter().map(|v| [v.x, v.y]).collect()
    }
}

impl Polygon {
    pub fn new(mut vertices: Vec<Vec2>) -> Result<Self, GeometryError> {
        if vertices.iter().any(|v| !(v.x.is_finite() && v.y.is_finite())) {
            return Err(GeometryError::NonFiniteVertex);
        }
        if vertices.len() < 3 {
            return Err(GeometryError::TooFewVertices(vertices.len()));
        }
        let scale = vertices
            .iter()
            .map(|v| v.x.abs().max(v.y.abs()))
            .fold(1.0, f64::max);
        let area2 = signed_area2(&vertices);
        if area2.abs() < 1e-12 * scale * scale {
            return Err(GeometryError::DegenerateArea);
        }
        if area2 < 0.0 {
            vertices.reverse();
        }
        // Drop repeated and collinear vertices; they carry no geometry and
        // would starve the ear search during triangulation.
        let eps = 1e-12 * scale * scale;
        let mut clean: Vec<Vec2> = Vec::with_capacity(vertices.len());
        for &v in &vertices {
            while clean.len() >= 2 {
                let a = clean[clean.len() - 2];
                let b = clean[clean.len() - 1];
                if cross(b - a, v - b).abs() < eps {
                    clean.pop();
                } else {
                    break;
                }
            }
            if clean.last().map_or(true, |&b| (v - b).norm_squared() > eps) {
                clean.push(v);
            }
        }
        // Wrap-around cleanup for collinearity across the closing edge.
        loop {
            let n = clean.len();
            if n < 3 {
                return Err(GeometryError::DegenerateArea);
            }
            if cross(clean[n - 1] - clean[n - 2], clean[0] - clean[n - 1]).abs() < eps {
                clean.pop();
                continue;
            }
            if cross(clean[0] - clean[n - 1], clean[1] - clean[0]).abs() < eps {
                clean.remove(0);
                continue;
            }
            break;
        }
        let poly = Self { vertices: clean };
        if poly.self_intersects() {
            return Err(GeometryError::SelfIntersecting);
        }
        Ok(poly)
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn area(&self) -> f64 {
        0.5 * signed_area2(&self.vertices)
    }

    pub fn centroid(&self) -> Vec2 {
        let mut acc = Vec2::zeros();
        let mut area2 = 0.0;
        let v = &self.vertices;
        for i in 0..v.len() {
            let j = (i + 1) % v.len();
            let c = cross(v[i], v[j]);
            acc += (v[i] + v[j]) * c;
            area2 += c;
        }
        acc / (3.0 * area2)
    }

    pub fn is_convex(&self) -> bool {
        let v = &self.vertices;
        let n = v.len();
        (0..n).all(|i| cross(v[(i + 1) % n] - v[i], v[(i + 2) % n] - v[(i + 1) % n]) > 0.0)
    }

    /// Point containment, boundary inclusive.
    pub fn contains(&self, p: Vec2) -> bool {
        let v = &self.vertices;
        let n = v.len();
        let mut inside = false;
        for i in 0..n {
            let (a, b) = (v[i], v[(i + 1) % n]);
            if point_segment_distance(p, a, b) < 1e-12 {
                return true;
            }
            if (a.y > p.y) != (b.y > p.y) {
                let x_cross = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if p.x < x_cross {
                    inside = !inside;
                }
            }
        }
        inside
    }

    fn self_intersects(&self) -> bool {
        let v = &self.vertices;
        let n = v.len();
        for i in 0..n {
            for j in i + 1..n {
                // Adjacent edges share an endpoint by construction.
                if j == i || (j + 1) % n == i || (i + 1) % n == j {
                    continue;
                }
                if segments_intersect(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]) {
                    return true;
                }
            }
        }
        false
    }

    /// Convex cover: the polygon itself when convex, otherwise an
    /// ear-clipping triangulation.
    pub fn convex_pieces(&self) -> Result<Vec<Polygon>, GeometryError> {
        if self.is_convex() {
            return Ok(vec![self.clone()]);
        }
        let mut idx: Vec<usize> = (0..self.vertices.len()).collect();
        let v = &self.vertices;
        let mut pieces = Vec::with_capacity(idx.len() - 2);
        let mut guard = 0;
        while idx.len() > 3 {
            guard += 1;
            if guard > self.vertices.len() * self.vertices.len() + 16 {
                return Err(GeometryError::Triangulation);
            }
            let n = idx.len();
            let mut clipped = false;
            for k in 0..n {
                let (ip, ic, inx) = (idx[(k + n - 1) % n], idx[k], idx[(k + 1) % n]);
                let (a, b, c) = (v[ip], v[ic], v[inx]);
                if cross(b - a, c - b) <= 0.0 {
                    continue;
                }
                let blocked = idx.iter().any(|&m| {
                    m != ip
                        && m != ic
                        && m != inx
                        && point_in_triangle_inclusive(v[m], a, b, c)
                });
                if !blocked {
                    pieces.push(Polygon { vertices: vec![a, b, c] });
                    idx.remove(k);
                    clipped = true;
                    break;
                }
            }
            if !clipped {
                return Err(GeometryError::Triangulation);
            }
        }
        pieces.push(Polygon { vertices: idx.iter().map(|&i| v[i]).collect() });
        Ok(pieces)
    }
}

fn signed_area2(v: &[Vec2]) -> f64 {
    let n = v.len();
    (0..n).map(|i| cross(v[i], v[(i + 1) % n])).sum()
}

fn point_in_triangle_inclusive(p: Vec2, a: Vec2, b: Vec2, c: Vec2) -> bool {
    let tol = -1e-12;
    cross(b - a, p - a) >= tol && cross(c - b, p - b) >= tol && cross(a - c, p - c) >= tol
}

fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// Proper or improper crossing of two segments (shared endpoints count).
fn segments_intersect(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> bool {
    let orient = |p: Vec2, q: Vec2, r: Vec2| cross(q - p, r - p);
    let (o1, o2) = (orient(a, b, c), orient(a, b, d));
    let (o3, o4) = (orient(c, d, a), orient(c, d, b));
    if ((o1 > 0.0) != (o2 > 0.0)) && ((o3 > 0.0) != (o4 > 0.0)) && o1 != 0.0 && o2 != 0.0 {
        return true;
    }
    let on = |p: Vec2, q: Vec2, r: Vec2| {
        orient(p, q, r) == 0.0
            && r.x >= p.x.min(q.x)
            && r.x <= p.x.max(q.x)
            && r.y >= p.y.min(q.y)
            && r.y <= p.y.max(q.y)
    };
    on(a, b, c) || on(a, b, d) || on(c, d, a) || on(c, d, b)
}

/// Slider footprint at a given pose.
pub fn slider_polygon(state: &SliderState, params: &SliderParams) -> Polygon {
    let (s, c) = state.theta.sin_cos();
    let center = Vec2::new(state.x, state.y);
    let corner = |u: f64, v: f64| {
        let x = u * 0.5 * params.a;
        let y = v * 0.5 * params.b;
        center + Vec2::new(c * x - s * y, s * x + c * y)
    };
    Polygon { vertices: vec![corner(1.0, -1.0), corner(1.0, 1.0), corner(-1.0, 1.0), corner(-1.0, -1.0)] }
}

/// Signed distance between convex polygons: the gap when disjoint, minus
/// the penetration depth when overlapping. Exact in both regimes.
///
/// Separation is decided by the separating-axis test over both edge-normal
/// sets; the positive branch takes the minimum vertex-to-edge distance,
/// which attains the true gap for convex shapes.
pub fn convex_distance(a: &Polygon, b: &Polygon) -> f64 {
    debug_assert!(a.is_convex() && b.is_convex());
    let mut depth = f64::INFINITY;
    for first in [a, b] {
        let v = first.vertices();
        let n = v.len();
        for i in 0..n {
            let edge = v[(i + 1) % n] - v[i];
            let axis = Vec2::new(edge.y, -edge.x).normalize();
            let (min_a, max_a) = project(a, axis);
            let (min_b, max_b) = project(b, axis);
            // Smaller of the two one-sided escape translations along the
            // axis; unlike the intersection width this stays correct when
            // one projection contains the other.
            let escape = (max_a - min_b).min(max_b - min_a);
            if escape < 0.0 {
                return gap(a, b);
            }
            depth = depth.min(escape);
        }
    }
    -depth
}

fn project(poly: &Polygon, axis: Vec2) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in poly.vertices() {
        let d = v.dot(&axis);
        lo = lo.min(d);
        hi = hi.max(d);
    }
    (lo, hi)
}

fn gap(a: &Polygon, b: &Polygon) -> f64 {
    let mut best = f64::INFINITY;
    for (pts, poly) in [(a, b), (b, a)] {
        let v = poly.vertices();
        let n = v.len();
        for p in pts.vertices() {
            for i in 0..n {
                best = best.min(point_segment_distance(*p, v[i], v[(i + 1) % n]));
            }
        }
    }
    best
}

/// Signed distance between simple polygons, decomposing nonconvex inputs.
///
/// Disjoint shapes report the exact gap. For overlaps the value is minus
/// the deepest piecewise penetration, a lower bound on the true depth of
/// the union; the sign and continuity are what constraint solvers need.
pub fn poly_distance(a: &Polygon, b: &Polygon) -> Result<f64, GeometryError> {
    let pa = a.convex_pieces()?;
    let pb = b.convex_pieces()?;
    let mut best = f64::INFINITY;
    for x in &pa {
        for y in &pb {
            best = best.min(convex_distance(x, y));
        }
    }
    Ok(best)
}

/// Input magnitude limits for the pusher.
///
/// `v_p` and `omega_p` bound the car drive symmetrically; `v_n_min`, when
/// set, keeps the contact normal speed at or above the given floor
/// (typically zero: the pusher may not pull).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputBounds {
    #[serde(default = "unbounded")]
    pub v_p: f64,
    #[serde(default = "unbounded")]
    pub omega_p: f64,
    #[serde(default)]
    pub v_n_min: Option<f64>,
}

fn unbounded() -> f64 {
    f64::INFINITY
}

impl Default for InputBounds {
    fn default() -> Self {
        Self { v_p: f64::INFINITY, omega_p: f64::INFINITY, v_n_min: None }
    }
}

/// Planning problem: slider geometry, endpoint positions for the slider
/// center, obstacle set with a clearance margin, and input limits.
#[derive(Debug, Clone, Deserialize)]
#[serde(try_from = "RawScene")]
pub struct Scene {
    pub slider: SliderParams,
    pub start: Vec2,
    pub goal: Vec2,
    pub clearance: f64,
    pub obstacles: Vec<Polygon>,
    pub bounds: InputBounds,
    convex_pieces: Vec<Polygon>,
}

#[derive(Deserialize)]
struct RawScene {
    slider: SliderParams,
    start: [f64; 2],
    goal: [f64; 2],
    #[serde(default)]
    clearance: f64,
    #[serde(default)]
    obstacles: Vec<Polygon>,
    #[serde(default)]
    bounds: InputBounds,
}

impl TryFrom<RawScene> for Scene {
    type Error = GeometryError;

    fn try_from(raw: RawScene) -> Result<Self, GeometryError> {
        Scene::new(
            raw.slider,
            Vec2::new(raw.start[0], raw.start[1]),
            Vec2::new(raw.goal[0], raw.goal[1]),
            raw.clearance,
            raw.obstacles,
            raw.bounds,
        )
    }
}

impl Scene {
    pub fn new(
        slider: SliderParams,
        start: Vec2,
        goal: Vec2,
        clearance: f64,
        obstacles: Vec<Polygon>,
        bounds: InputBounds,
    ) -> Result<Self, GeometryError> {
        if !(start.x.is_finite() && start.y.is_finite() && goal.x.is_finite() && goal.y.is_finite())
        {
            return Err(GeometryError::InvalidScene("start and goal must be finite".into()));
        }
        if !(clearance.is_finite() && clearance >= 0.0) {
            return Err(GeometryError::InvalidScene(format!(
                "clearance must be non-negative, got {clearance}"
            )));
        }
        if (goal - start).norm() < 1e-9 {
            return Err(GeometryError::InvalidScene("start and goal coincide".into()));
        }
        let mut convex_pieces = Vec::new();
        for obs in &obstacles {
            convex_pieces.extend(obs.convex_pieces()?);
        }
        Ok(Self { slider, start, goal, clearance, obstacles, bounds, convex_pieces })
    }

    /// Convex decomposition of every obstacle, flattened.
    pub fn convex_obstacles(&self) -> &[Polygon] {
        &self.convex_pieces
    }

    /// Signed distance from a convex footprint to the nearest obstacle;
    /// infinite in an empty scene.
    pub fn obstacle_distance(&self, footprint: &Polygon) -> f64 {
        self.convex_pieces
            .iter()
            .map(|piece| convex_distance(footprint, piece))
            .fold(f64::INFINITY, f64::min)
    }
}
