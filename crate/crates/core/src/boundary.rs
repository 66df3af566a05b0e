use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::field::{combine_vector, zero_vector, VField, VectorField};
use crate::geometry::{CornerPolygon, Point};
use crate::quadrature::composite;

/// Dirichlet data g_j, one vector field per polygon edge.
#[derive(Clone)]
pub struct BoundaryData {
    pub edges: Vec<VField>,
}

impl std::fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BoundaryData({} edges)", self.edges.len())
    }
}

impl BoundaryData {
    pub fn zero(polygon: &CornerPolygon) -> Self {
        BoundaryData { edges: vec![zero_vector(); polygon.num_edges()] }
    }

    /// Trace of one global field on every edge.
    pub fn trace_of(polygon: &CornerPolygon, field: VField) -> Self {
        BoundaryData { edges: vec![field; polygon.num_edges()] }
    }

    pub fn eval(&self, edge: usize, p: Point) -> Point {
        self.edges[edge].eval(p)
    }

    pub fn scaled_sum(&self, a: f64, other: &BoundaryData, b: f64) -> BoundaryData {
        BoundaryData {
            edges: self.edges.iter().zip(&other.edges).map(|(f, g)| combine_vector(a, f, b, g)).collect(),
        }
    }

    pub fn single_edge(polygon: &CornerPolygon, edge: usize, field: Arc<dyn VectorField>) -> Self {
        let mut d = Self::zero(polygon);
        d.edges[edge] = field;
        d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryReport {
    /// |sum_j int g_j . n_j|
    pub flux_defect: f64,
    /// max |g_j(S_{j+1}) - g_{j+1}(S_{j+1})|
    pub max_vertex_mismatch: f64,
    /// max(|g_1(S_1)|, |g_J(S_1)|)
    pub corner_value: f64,
    pub corner_vanishes: bool,
}

pub const CORNER_TOL: f64 = 1e-10;

pub fn validate_boundary_data(polygon: &CornerPolygon, data: &BoundaryData) -> BoundaryReport {
    let n = polygon.num_edges();
    let mut flux = 0.0;
    for (j, e) in polygon.edges().iter().enumerate() {
        flux += composite(
            |s| {
                let g = data.eval(j, e.point_at(s));
                g[0] * e.normal[0] + g[1] * e.normal[1]
            },
            0.0,
            1.0,
            16,
            64,
        ) * e.length;
    }
    let mut mismatch: f64 = 0.0;
    for j in 0..n {
        let v = polygon.edge(j).end;
        let (a, b) = (data.eval(j, v), data.eval((j + 1) % n, v));
        mismatch = mismatch.max((a[0] - b[0]).hypot(a[1] - b[1]));
    }
    let o = [0.0, 0.0];
    let (g1, gj) = (data.eval(0, o), data.eval(n - 1, o));
    let corner_value = g1[0].hypot(g1[1]).max(gj[0].hypot(gj[1]));
    BoundaryReport {
        flux_defect: flux.abs(),
        max_vertex_mismatch: mismatch,
        corner_value,
        corner_vanishes: corner_value <= CORNER_TOL,
    }
}
