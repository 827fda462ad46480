//! Closed polygonal curves and the discrete geometric quantities built on them.
//!
//! Vertices are indexed `0..n` with periodic wraparound. Edge `j` is the edge
//! *entering* vertex `j`, i.e. it runs from vertex `j - 1` to vertex `j`, so
//! `edge_lengths()[j] = |γ_j − γ_{j−1}|`.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("a closed curve needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("edge entering vertex {index} has zero length")]
    DegenerateEdge { index: usize },
    #[error("vertex {index} has a non-finite coordinate")]
    NonFinite { index: usize },
    #[error("curve is not counter-clockwise (signed area {area:e})")]
    NotCounterClockwise { area: f64 },
}

/// A point or displacement in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlaneVector {
    pub x: f64,
    pub y: f64,
}

impl PlaneVector {
    pub const ZERO: PlaneVector = PlaneVector { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product.
    #[inline]
    pub fn cross(self, other: Self) -> f64 {
        self.x * other.y - self.y * other.x
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for PlaneVector {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl AddAssign for PlaneVector {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl Sub for PlaneVector {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl SubAssign for PlaneVector {
    #[inline]
    fn sub_assign(&mut self, rhs: Self) {
        self.x -= rhs.x;
        self.y -= rhs.y;
    }
}

impl Mul<f64> for PlaneVector {
    type Output = Self;
    #[inline]
    fn mul(self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s)
    }
}

impl Mul<PlaneVector> for f64 {
    type Output = PlaneVector;
    #[inline]
    fn mul(self, v: PlaneVector) -> PlaneVector {
        v * self
    }
}

impl Div<f64> for PlaneVector {
    type Output = Self;
    #[inline]
    fn div(self, s: f64) -> Self {
        Self::new(self.x / s, self.y / s)
    }
}

impl Neg for PlaneVector {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

/// Clockwise quarter turn, the matrix `((0, 1), (−1, 0))`.
///
/// Maps a counter-clockwise tangent onto the outward normal.
#[inline]
pub fn rotate_quarter(v: PlaneVector) -> PlaneVector {
    PlaneVector::new(v.y, -v.x)
}

/// Signed shoelace area of a closed vertex loop; positive for counter-clockwise order.
pub fn signed_area(vertices: &[PlaneVector]) -> f64 {
    let n = vertices.len();
    if n < 3 {
        return 0.0;
    }
    // Anchor at the first vertex so large translations do not cost precision.
    let origin = vertices[0];
    let mut twice = 0.0;
    for j in 1..n - 1 {
        twice += (vertices[j] - origin).cross(vertices[j + 1] - origin);
    }
    0.5 * twice
}

/// Unit edge normals `R(γ_j − γ_{j−1}) / r_j` of an arbitrary vertex loop.
///
/// For counter-clockwise input these point out of the enclosed region; for
/// clockwise input they point inward.
pub fn edge_normals_of(vertices: &[PlaneVector]) -> Result<Vec<PlaneVector>, GeometryError> {
    let n = vertices.len();
    (0..n)
        .map(|j| {
            let edge = vertices[j] - vertices[(j + n - 1) % n];
            let len = edge.norm();
            if len == 0.0 {
                Err(GeometryError::DegenerateEdge { index: j })
            } else {
                Ok(rotate_quarter(edge) / len)
            }
        })
        .collect()
}

/// Parameter nodes `x_j = (j − 1/2)/n` (1-based `j`) on the unit circle `ℝ/ℤ`.
pub fn midpoint_nodes(n: usize) -> Vec<f64> {
    (0..n).map(|j| (j as f64 + 0.5) / n as f64).collect()
}

/// A closed, counter-clockwise polygon with at least three vertices and no
/// zero-length edges.
#[derive(Debug, Clone, PartialEq)]
pub struct PolygonalCurve {
    vertices: Vec<PlaneVector>,
}

impl PolygonalCurve {
    pub fn new(vertices: Vec<PlaneVector>) -> Result<Self, GeometryError> {
        let n = vertices.len();
        if n < 3 {
            return Err(GeometryError::TooFewVertices(n));
        }
        if let Some(index) = vertices.iter().position(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite { index });
        }
        for j in 0..n {
            if vertices[j] == vertices[(j + n - 1) % n] {
                return Err(GeometryError::DegenerateEdge { index: j });
            }
        }
        let area = signed_area(&vertices);
        if !(area > 0.0) {
            return Err(GeometryError::NotCounterClockwise { area });
        }
        Ok(Self { vertices })
    }

    /// Regular `n`-gon inscribed in the circle of the given radius, vertices at
    /// the angles `2π(j + 1/2)/n`.
    pub fn regular(n: usize, radius: f64) -> Result<Self, GeometryError> {
        let vertices = midpoint_nodes(n)
            .into_iter()
            .map(|u| {
                let (s, c) = (std::f64::consts::TAU * u).sin_cos();
                PlaneVector::new(radius * c, radius * s)
            })
            .collect();
        Self::new(vertices)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    #[inline]
    pub fn vertices(&self) -> &[PlaneVector] {
        &self.vertices
    }

    pub fn into_vertices(self) -> Vec<PlaneVector> {
        self.vertices
    }

    /// Vertex with periodic indexing; `vertex(-1)` is the last vertex.
    #[inline]
    pub fn vertex(&self, j: isize) -> PlaneVector {
        let n = self.vertices.len() as isize;
        self.vertices[j.rem_euclid(n) as usize]
    }

    #[inline]
    fn prev(&self, j: usize) -> usize {
        (j + self.len() - 1) % self.len()
    }

    #[inline]
    fn next(&self, j: usize) -> usize {
        (j + 1) % self.len()
    }

    /// `r_j = |γ_j − γ_{j−1}|`; the edge after vertex `j` is `r_{j+1}`.
    pub fn edge_lengths(&self) -> Vec<f64> {
        (0..self.len())
            .map(|j| (self.vertices[j] - self.vertices[self.prev(j)]).norm())
            .collect()
    }

    pub fn edge_normals(&self) -> Vec<PlaneVector> {
        edge_normals_of(&self.vertices).expect("validated curve has no degenerate edges")
    }

    /// `R((γ_{j+1} − γ_{j−1}) / 2)`: outward normal scaled by the lumped vertex weight.
    pub fn vertex_weighted_normal(&self, j: usize) -> PlaneVector {
        let chord = self.vertices[self.next(j)] - self.vertices[self.prev(j)];
        rotate_quarter(chord * 0.5)
    }

    pub fn vertex_weighted_normals(&self) -> Vec<PlaneVector> {
        (0..self.len()).map(|j| self.vertex_weighted_normal(j)).collect()
    }

    pub fn total_length(&self) -> f64 {
        self.edge_lengths().iter().sum()
    }

    pub fn enclosed_area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn min_edge(&self) -> f64 {
        self.edge_lengths().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn mean_edge(&self) -> f64 {
        self.total_length() / self.len() as f64
    }

    pub fn translated(&self, shift: PlaneVector) -> Self {
        Self {
            vertices: self.vertices.iter().map(|&v| v + shift).collect(),
        }
    }

    pub fn rotated(&self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self {
            vertices: self
                .vertices
                .iter()
                .map(|v| PlaneVector::new(c * v.x - s * v.y, s * v.x + c * v.y))
                .collect(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Result<Self, GeometryError> {
        Self::new(self.vertices.iter().map(|&v| v * factor).collect())
    }
}

/// Distance on `ℝ/ℤ`.
#[inline]
pub fn circle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

/// Smallest ratio `|γ_i − γ_j| / d_{S¹}(x_i, x_j)` over all vertex pairs.
///
/// Zero exactly when two vertices with distinct parameters coincide.
pub fn chord_arc_constant(curve: &PolygonalCurve, nodes: &[f64]) -> f64 {
    assert_eq!(curve.len(), nodes.len(), "one parameter node per vertex");
    let v = curve.vertices();
    let mut best = f64::INFINITY;
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            let arc = circle_distance(nodes[i], nodes[j]);
            let ratio = (v[i] - v[j]).norm() / arc;
            if ratio < best {
                best = ratio;
            }
        }
    }
    best
}
