//! Taylor-Hood (P2 velocity / P1 pressure) discretization of
//! -mu Lap u + grad p = f, div u + eps p = zeta with Dirichlet data.

mod space;
mod system;

use std::sync::Arc;

use thiserror::Error;

use crate::geometry::Point;
use crate::mesh::MeshError;
use crate::quadrature::TriRule;
use crate::spectral::MaterialParams;

pub use space::{ElemGeom, FemSpace, LOCAL_EDGES};
pub use system::{
    apply_dirichlet, assemble, solve, solve_problem, solve_psi, ConstrainedSystem, DirichletData, SparseSystem,
    SOLVER_TOL,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FemError {
    #[error("mesh has no triangles")]
    EmptyMesh,
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("no Dirichlet data for polygon edge {0}")]
    MissingEdgeData(usize),
    #[error("Dirichlet data disagree at node {node} between edges {edges:?} (jump {jump})")]
    InconsistentEdgeData { node: usize, edges: Vec<usize>, jump: f64 },
    #[error("linear solver stalled at relative residual {0}")]
    SolverBreakdown(f64),
    #[error("singular system: {0}")]
    SingularSystem(String),
    #[error("fields live on different meshes")]
    MeshMismatch,
}

/// Discrete velocity (per P2 node) and pressure (per vertex).
#[derive(Debug, Clone)]
pub struct MixedField {
    pub space: Arc<FemSpace>,
    pub material: MaterialParams,
    pub velocity: Vec<Point>,
    pub pressure: Vec<f64>,
    /// Constant subtracted from the pressure to reach zero mean (eps = 0 solves).
    pub gauge_shift: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Norms {
    pub l2_velocity: f64,
    pub h1_semi: f64,
    pub h1: f64,
    pub l2_pressure: f64,
}

impl MixedField {
    pub fn zeros(space: Arc<FemSpace>, material: MaterialParams) -> Self {
        let (n, v) = (space.num_nodes(), space.num_vertices());
        MixedField { space, material, velocity: vec![[0.0; 2]; n], pressure: vec![0.0; v], gauge_shift: None }
    }

    /// Nodal interpolant of a velocity field and a pressure field.
    pub fn interpolate(
        space: Arc<FemSpace>,
        material: MaterialParams,
        u: impl Fn(Point) -> Point,
        p: impl Fn(Point) -> f64,
    ) -> Self {
        let velocity = space.nodes.iter().map(|&x| u(x)).collect();
        let pressure = space.mesh.nodes.iter().map(|&x| p(x)).collect();
        MixedField { space, material, velocity, pressure, gauge_shift: None }
    }

    pub fn same_space(&self, other: &MixedField) -> bool {
        Arc::ptr_eq(&self.space, &other.space)
    }

    pub fn value(&self, t: usize, l: [f64; 3]) -> Point {
        let phi = self.space.geom[t].p2_values(l);
        let en = &self.space.elem_nodes[t];
        let mut v = [0.0; 2];
        for k in 0..6 {
            let u = self.velocity[en[k]];
            v[0] += phi[k] * u[0];
            v[1] += phi[k] * u[1];
        }
        v
    }

    /// grad[k][l] = d u_l / d x_k
    pub fn grad(&self, t: usize, l: [f64; 3]) -> [[f64; 2]; 2] {
        let g = self.space.geom[t].p2_grads(l);
        let en = &self.space.elem_nodes[t];
        let mut out = [[0.0; 2]; 2];
        for k in 0..6 {
            let u = self.velocity[en[k]];
            for a in 0..2 {
                for b in 0..2 {
                    out[a][b] += g[k][a] * u[b];
                }
            }
        }
        out
    }

    pub fn pressure_at(&self, t: usize, l: [f64; 3]) -> f64 {
        let tri = &self.space.mesh.tris[t];
        l[0] * self.pressure[tri[0]] + l[1] * self.pressure[tri[1]] + l[2] * self.pressure[tri[2]]
    }

    /// Constant second derivatives of the velocity on element t: hess[c][a][b] = d^2 u_c / dx_a dx_b.
    pub fn hessian(&self, t: usize) -> [[[f64; 2]; 2]; 2] {
        let g = &self.space.geom[t];
        let en = &self.space.elem_nodes[t];
        // second derivatives of P2 basis functions are constant
        let d = &g.dl;
        let mut h = [[[0.0; 2]; 2]; 2];
        for k in 0..6 {
            let m: [[f64; 2]; 2] = if k < 3 {
                [[4.0 * d[k][0] * d[k][0], 4.0 * d[k][0] * d[k][1]], [4.0 * d[k][1] * d[k][0], 4.0 * d[k][1] * d[k][1]]]
            } else {
                let (i, j) = LOCAL_EDGES[k - 3];
                let f = |a: usize, b: usize| 4.0 * (d[i][a] * d[j][b] + d[j][a] * d[i][b]);
                [[f(0, 0), f(0, 1)], [f(1, 0), f(1, 1)]]
            };
            let u = self.velocity[en[k]];
            for c in 0..2 {
                for a in 0..2 {
                    for b in 0..2 {
                        h[c][a][b] += m[a][b] * u[c];
                    }
                }
            }
        }
        h
    }

    pub fn eval_point(&self, x: Point) -> Option<(Point, f64)> {
        let (t, l) = self.space.locate(x)?;
        Some((self.value(t, l), self.pressure_at(t, l)))
    }

    pub fn difference(&self, other: &MixedField) -> Result<MixedField, FemError> {
        if !self.same_space(other) {
            return Err(FemError::MeshMismatch);
        }
        Ok(self.combine(1.0, other, -1.0))
    }

    /// a self + b other (same space assumed).
    pub fn combine(&self, a: f64, other: &MixedField, b: f64) -> MixedField {
        MixedField {
            space: self.space.clone(),
            material: self.material,
            velocity: self
                .velocity
                .iter()
                .zip(&other.velocity)
                .map(|(u, v)| [a * u[0] + b * v[0], a * u[1] + b * v[1]])
                .collect(),
            pressure: self.pressure.iter().zip(&other.pressure).map(|(p, q)| a * p + b * q).collect(),
            gauge_shift: None,
        }
    }

    pub fn pressure_mean(&self) -> f64 {
        let rule = TriRule::of_degree(1);
        let mut s = 0.0;
        for t in 0..self.space.num_elems() {
            for (l, _, w) in rule.map(&self.space.geom[t].p) {
                s += w * self.pressure_at(t, l);
            }
        }
        s / self.space.mesh.area()
    }
}

pub fn norms(field: &MixedField) -> Norms {
    norms_with(field, 4)
}

pub fn norms_with(field: &MixedField, degree: usize) -> Norms {
    let rule = TriRule::of_degree(degree);
    let (mut l2u, mut h1s, mut l2p) = (0.0, 0.0, 0.0);
    for t in 0..field.space.num_elems() {
        for (l, _, w) in rule.map(&field.space.geom[t].p) {
            let v = field.value(t, l);
            let g = field.grad(t, l);
            let p = field.pressure_at(t, l);
            l2u += w * (v[0] * v[0] + v[1] * v[1]);
            h1s += w * (g[0][0] * g[0][0] + g[0][1] * g[0][1] + g[1][0] * g[1][0] + g[1][1] * g[1][1]);
            l2p += w * p * p;
        }
    }
    Norms { l2_velocity: l2u.sqrt(), h1_semi: h1s.sqrt(), h1: (l2u + h1s).sqrt(), l2_pressure: l2p.sqrt() }
}

/// Norms of the difference of two fields.
pub fn difference_norms(a: &MixedField, b: &MixedField) -> Result<Norms, FemError> {
    Ok(norms(&a.difference(b)?))
}

/// Exact solution sample: velocity, velocity gradient (grad[k][l] = d u_l/dx_k), pressure.
pub type ExactSample = (Point, [[f64; 2]; 2], f64);

/// Error norms of a discrete field against an exact solution; the pressure
/// error is measured after removing the mean difference when `mean_free` is set.
pub fn error_norms(field: &MixedField, exact: &dyn Fn(Point) -> ExactSample, degree: usize, mean_free: bool) -> Norms {
    let rule = TriRule::of_degree(degree);
    let sp = &field.space;
    let mut shift = 0.0;
    if mean_free {
        let mut s = 0.0;
        for t in 0..sp.num_elems() {
            for (l, x, w) in rule.map(&sp.geom[t].p) {
                s += w * (field.pressure_at(t, l) - exact(x).2);
            }
        }
        shift = s / sp.mesh.area();
    }
    let (mut l2u, mut h1s, mut l2p) = (0.0, 0.0, 0.0);
    for t in 0..sp.num_elems() {
        for (l, x, w) in rule.map(&sp.geom[t].p) {
            let (ue, ge, pe) = exact(x);
            let v = field.value(t, l);
            let g = field.grad(t, l);
            let p = field.pressure_at(t, l) - shift;
            l2u += w * ((v[0] - ue[0]).powi(2) + (v[1] - ue[1]).powi(2));
            for a in 0..2 {
                for b in 0..2 {
                    h1s += w * (g[a][b] - ge[a][b]).powi(2);
                }
            }
            l2p += w * (p - pe).powi(2);
        }
    }
    Norms { l2_velocity: l2u.sqrt(), h1_semi: h1s.sqrt(), h1: (l2u + h1s).sqrt(), l2_pressure: l2p.sqrt() }
}
