use std::f64::consts::PI;

use thiserror::Error;

pub type Point = [f64; 2];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("corner index {0} out of range")]
    BadCornerIndex(usize),
    #[error("corner vertex ({0}, {1}) is not at the origin")]
    CornerNotAtOrigin(f64, f64),
    #[error("interior angle {angle} at corner is not re-entrant")]
    NotReentrant { angle: f64 },
    #[error("vertices {0:?} are re-entrant besides the corner")]
    MultipleReentrant(Vec<usize>),
    #[error("edge {0} has zero length")]
    DegenerateEdge(usize),
}

/// Polar frame of the re-entrant corner: the domain near the origin is the
/// sector omega1 < theta < omega2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CornerFrame {
    pub omega1: f64,
    pub omega2: f64,
}

impl CornerFrame {
    pub fn new(omega1: f64, omega2: f64) -> Self {
        Self { omega1, omega2 }
    }

    /// Frame with omega1 = -omega/2, symmetric about the x axis.
    pub fn symmetric(omega: f64) -> Self {
        Self::new(-omega / 2.0, omega / 2.0)
    }

    pub fn omega(&self) -> f64 {
        self.omega2 - self.omega1
    }

    pub fn omega_bar(&self) -> f64 {
        0.5 * (self.omega1 + self.omega2)
    }

    /// Angle of `p` on the branch continuous across the sector; the cut sits
    /// at omega_bar + pi, outside the domain.
    pub fn theta(&self, p: Point) -> f64 {
        let wb = self.omega_bar();
        let d = (p[1].atan2(p[0]) - wb + PI).rem_euclid(2.0 * PI) - PI;
        wb + d
    }

    pub fn polar(&self, p: Point) -> (f64, f64) {
        (p[0].hypot(p[1]), self.theta(p))
    }
}

pub fn e_r(theta: f64) -> Point {
    [theta.cos(), theta.sin()]
}

pub fn e_theta(theta: f64) -> Point {
    [-theta.sin(), theta.cos()]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub start: Point,
    pub end: Point,
    pub normal: Point,
    pub length: f64,
}

impl Edge {
    pub fn point_at(&self, s: f64) -> Point {
        [
            self.start[0] + s * (self.end[0] - self.start[0]),
            self.start[1] + s * (self.end[1] - self.start[1]),
        ]
    }

    /// Distance from `p` to the segment.
    pub fn distance(&self, p: Point) -> f64 {
        let d = [self.end[0] - self.start[0], self.end[1] - self.start[1]];
        let l2 = d[0] * d[0] + d[1] * d[1];
        let t = (((p[0] - self.start[0]) * d[0] + (p[1] - self.start[1]) * d[1]) / l2).clamp(0.0, 1.0);
        let q = self.point_at(t);
        (p[0] - q[0]).hypot(p[1] - q[1])
    }
}

/// Polygon with exactly one re-entrant vertex S_1 at the origin. Vertices are
/// stored counterclockwise starting at the corner; edge j runs S_j -> S_{j+1}
/// (0-based here, so edge 0 is Gamma_1 and edge J-1 is Gamma_J).
#[derive(Debug, Clone, PartialEq)]
pub struct CornerPolygon {
    vertices: Vec<Point>,
    edges: Vec<Edge>,
    frame: CornerFrame,
}

fn signed_area(v: &[Point]) -> f64 {
    let n = v.len();
    (0..n)
        .map(|i| {
            let a = v[i];
            let b = v[(i + 1) % n];
            a[0] * b[1] - a[1] * b[0]
        })
        .sum::<f64>()
        * 0.5
}

fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn interior_angle(prev: Point, v: Point, next: Point) -> f64 {
    let a = [prev[0] - v[0], prev[1] - v[1]];
    let b = [next[0] - v[0], next[1] - v[1]];
    // CCW polygon: interior angle measured from the outgoing edge to the incoming one
    let ang = cross(b, a).atan2(b[0] * a[0] + b[1] * a[1]);
    if ang < 0.0 {
        ang + 2.0 * PI
    } else {
        ang
    }
}

pub fn build_polygon(vertices: &[Point], corner_index: usize) -> Result<CornerPolygon, GeometryError> {
    let n = vertices.len();
    if n < 3 {
        return Err(GeometryError::TooFewVertices(n));
    }
    if corner_index >= n {
        return Err(GeometryError::BadCornerIndex(corner_index));
    }
    let c = vertices[corner_index];
    if c[0] != 0.0 || c[1] != 0.0 {
        return Err(GeometryError::CornerNotAtOrigin(c[0], c[1]));
    }
    let mut v: Vec<Point> = (0..n).map(|k| vertices[(corner_index + k) % n]).collect();
    if signed_area(&v) < 0.0 {
        v[1..].reverse();
    }
    for j in 0..n {
        let a = v[j];
        let b = v[(j + 1) % n];
        if a == b {
            return Err(GeometryError::DegenerateEdge(j));
        }
    }
    let angle = interior_angle(v[n - 1], v[0], v[1]);
    if angle <= PI {
        return Err(GeometryError::NotReentrant { angle });
    }
    let others: Vec<usize> = (1..n)
        .filter(|&j| interior_angle(v[j - 1], v[j], v[(j + 1) % n]) > PI + 1e-12)
        .collect();
    if !others.is_empty() {
        return Err(GeometryError::MultipleReentrant(others));
    }
    let mut omega1 = v[1][1].atan2(v[1][0]);
    if omega1 <= -PI {
        omega1 += 2.0 * PI;
    }
    let frame = CornerFrame::new(omega1, omega1 + angle);
    let edges = (0..n)
        .map(|j| {
            let a = v[j];
            let b = v[(j + 1) % n];
            let d = [b[0] - a[0], b[1] - a[1]];
            let length = d[0].hypot(d[1]);
            Edge { start: a, end: b, normal: [d[1] / length, -d[0] / length], length }
        })
        .collect();
    Ok(CornerPolygon { vertices: v, edges, frame })
}

impl CornerPolygon {
    /// Benchmark L-shape on [-1,1]^2 without the fourth quadrant, with
    /// omega1 = -pi/2 and omega2 = pi.
    pub fn lshape() -> Self {
        build_polygon(
            &[[0.0, 0.0], [0.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0], [-1.0, 0.0]],
            0,
        )
        .expect("built-in L-shape is valid")
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, j: usize) -> &Edge {
        &self.edges[j]
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// True for the two edges meeting at the corner.
    pub fn is_corner_edge(&self, j: usize) -> bool {
        j == 0 || j + 1 == self.edges.len()
    }

    pub fn frame(&self) -> CornerFrame {
        self.frame
    }

    pub fn omega1(&self) -> f64 {
        self.frame.omega1
    }

    pub fn omega2(&self) -> f64 {
        self.frame.omega2
    }

    pub fn omega(&self) -> f64 {
        self.frame.omega()
    }

    pub fn omega_bar(&self) -> f64 {
        self.frame.omega_bar()
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn perimeter(&self) -> f64 {
        self.edges.iter().map(|e| e.length).sum()
    }

    pub fn is_axis_aligned(&self) -> bool {
        self.edges.iter().all(|e| e.start[0] == e.end[0] || e.start[1] == e.end[1])
    }

    /// Closed-polygon containment by crossing number (boundary points may go either way).
    pub fn contains(&self, p: Point) -> bool {
        let mut inside = false;
        let v = &self.vertices;
        let n = v.len();
        let mut j = n - 1;
        for i in 0..n {
            let (a, b) = (v[i], v[j]);
            if (a[1] > p[1]) != (b[1] > p[1]) {
                let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
                if p[0] < x {
                    inside = !inside;
                }
            }
            j = i;
        }
        inside
    }

    /// Index of an edge containing `p` within `tol`, if any.
    pub fn edge_containing(&self, p: Point, tol: f64) -> Option<usize> {
        self.edges.iter().position(|e| e.distance(p) <= tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_is_continuous_inside_lshape() {
        let f = CornerPolygon::lshape().frame();
        assert!((f.theta([-1.0, -1e-9]) - (PI + 1e-9)).abs() < 1e-12);
        assert!((f.theta([0.0, -1.0]) + PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn clockwise_input_is_reversed() {
        let p = build_polygon(&[[0.0, 0.0], [-1.0, 0.0], [-1.0, 1.0], [1.0, 1.0], [1.0, -1.0], [0.0, -1.0]], 0).unwrap();
        assert_eq!(p, CornerPolygon::lshape());
    }
}
