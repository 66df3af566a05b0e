use std::sync::Arc;

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use crate::geometry::Point;
use crate::modes::{Kind, SingularMode};
use crate::quadrature::TriRule;
use crate::spectral::{Family, MaterialParams};

use super::{FemError, FemSpace, MixedField};

pub const SOLVER_TOL: f64 = 1e-10;

/// Dirichlet data: value on polygon edge `tag` at a point, or None if the edge has no data.
pub type DirichletData<'a> = dyn Fn(usize, Point) -> Option<Point> + 'a;

/// Block system [A B^t; B -eps M] in triplet form. Velocity unknown (node n,
/// component c) is 2n + c; pressure unknown at vertex v is n_u + v.
#[derive(Debug, Clone)]
pub struct SparseSystem {
    pub space: Arc<FemSpace>,
    pub material: MaterialParams,
    pub n_u: usize,
    pub n_p: usize,
    pub entries: Vec<(usize, usize, f64)>,
    pub rhs: Vec<f64>,
}

impl SparseSystem {
    pub fn size(&self) -> usize {
        self.n_u + self.n_p
    }

    /// Max |K_ij - K_ji| after summing duplicates.
    pub fn asymmetry(&self) -> f64 {
        let mut m = std::collections::HashMap::<(usize, usize), f64>::new();
        for &(i, j, v) in &self.entries {
            *m.entry((i, j)).or_default() += v;
        }
        m.iter().map(|(&(i, j), &v)| (v - m.get(&(j, i)).copied().unwrap_or(0.0)).abs()).fold(0.0, f64::max)
    }

    /// y = K x
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.size()];
        for &(i, j, v) in &self.entries {
            y[i] += v * x[j];
        }
        y
    }
}

pub fn assemble(
    space: &Arc<FemSpace>,
    material: MaterialParams,
    f: Option<&(dyn Fn(Point) -> Point + Sync)>,
    zeta: Option<&(dyn Fn(Point) -> f64 + Sync)>,
) -> Result<SparseSystem, FemError> {
    if space.num_elems() == 0 {
        return Err(FemError::EmptyMesh);
    }
    let n_u = 2 * space.num_nodes();
    let n_p = space.num_vertices();
    let mu = material.mu;
    let eps = material.eps;
    let low = TriRule::of_degree(2);
    let load = TriRule::of_degree(4);
    let mut entries = Vec::with_capacity(space.num_elems() * 160);
    let mut rhs = vec![0.0; n_u + n_p];
    for t in 0..space.num_elems() {
        let g = &space.geom[t];
        let en = space.elem_nodes[t];
        let vt = space.mesh.tris[t];
        let mut a = [[0.0; 6]; 6];
        // b[k][i][c] = -int lambda_k d_c phi_i
        let mut b = [[[0.0; 2]; 6]; 3];
        for (l, _, w) in low.map(&g.p) {
            let gr = g.p2_grads(l);
            for i in 0..6 {
                for j in 0..6 {
                    a[i][j] += w * mu * (gr[i][0] * gr[j][0] + gr[i][1] * gr[j][1]);
                }
                for k in 0..3 {
                    for c in 0..2 {
                        b[k][i][c] -= w * l[k] * gr[i][c];
                    }
                }
            }
        }
        for i in 0..6 {
            for j in 0..6 {
                for c in 0..2 {
                    entries.push((2 * en[i] + c, 2 * en[j] + c, a[i][j]));
                }
            }
            for k in 0..3 {
                for c in 0..2 {
                    let (r, col) = (n_u + vt[k], 2 * en[i] + c);
                    entries.push((r, col, b[k][i][c]));
                    entries.push((col, r, b[k][i][c]));
                }
            }
        }
        if eps > 0.0 {
            for k in 0..3 {
                for m in 0..3 {
                    let mass = g.area / 12.0 * if k == m { 2.0 } else { 1.0 };
                    entries.push((n_u + vt[k], n_u + vt[m], -eps * mass));
                }
            }
        }
        if f.is_some() || zeta.is_some() {
            for (l, x, w) in load.map(&g.p) {
                if let Some(f) = f {
                    let fv = f(x);
                    let phi = g.p2_values(l);
                    for i in 0..6 {
                        rhs[2 * en[i]] += w * fv[0] * phi[i];
                        rhs[2 * en[i] + 1] += w * fv[1] * phi[i];
                    }
                }
                if let Some(z) = zeta {
                    let zv = z(x);
                    for k in 0..3 {
                        rhs[n_u + vt[k]] -= w * zv * l[k];
                    }
                }
            }
        }
    }
    Ok(SparseSystem { space: space.clone(), material, n_u, n_p, entries, rhs })
}

/// System with Dirichlet unknowns eliminated (and optionally a mean-zero
/// pressure constraint through one Lagrange multiplier).
#[derive(Debug, Clone)]
pub struct ConstrainedSystem {
    pub space: Arc<FemSpace>,
    pub material: MaterialParams,
    pub n_u: usize,
    pub n_p: usize,
    /// Full-length vector holding prescribed values (zero at free unknowns).
    pub fixed_values: Vec<f64>,
    /// Reduced index of each unknown, usize::MAX if prescribed.
    pub free_map: Vec<usize>,
    pub n_free: usize,
    pub entries: Vec<(usize, usize, f64)>,
    pub rhs: Vec<f64>,
    pub gauge: bool,
}

pub fn apply_dirichlet(system: &SparseSystem, g: &DirichletData) -> Result<ConstrainedSystem, FemError> {
    let n = system.size();
    let mut fixed_values = vec![0.0; n];
    let mut fixed = vec![false; n];
    let mut bnodes: Vec<(&usize, &Vec<usize>)> = system.space.boundary_tags.iter().collect();
    bnodes.sort_unstable();
    for (&node, tags) in bnodes {
        let x = system.space.nodes[node];
        let mut val: Option<Point> = None;
        for &tag in tags {
            let v = g(tag, x).ok_or(FemError::MissingEdgeData(tag))?;
            if let Some(u) = val {
                let jump = (u[0] - v[0]).abs().max((u[1] - v[1]).abs());
                if jump > 1e-10 * (1.0 + u[0].abs().max(u[1].abs())) {
                    return Err(FemError::InconsistentEdgeData { node, edges: tags.clone(), jump });
                }
            } else {
                val = Some(v);
            }
        }
        let v = val.unwrap_or([0.0, 0.0]);
        for c in 0..2 {
            fixed[2 * node + c] = true;
            fixed_values[2 * node + c] = v[c];
        }
    }
    let mut free_map = vec![usize::MAX; n];
    let mut n_free = 0;
    for i in 0..n {
        if !fixed[i] {
            free_map[i] = n_free;
            n_free += 1;
        }
    }
    let mut rhs = vec![0.0; n_free];
    for i in 0..n {
        if !fixed[i] {
            rhs[free_map[i]] = system.rhs[i];
        }
    }
    let mut entries = Vec::with_capacity(system.entries.len());
    for &(i, j, v) in &system.entries {
        if fixed[i] {
            continue;
        }
        if fixed[j] {
            rhs[free_map[i]] -= v * fixed_values[j];
        } else {
            entries.push((free_map[i], free_map[j], v));
        }
    }
    Ok(ConstrainedSystem {
        space: system.space.clone(),
        material: system.material,
        n_u: system.n_u,
        n_p: system.n_p,
        fixed_values,
        free_map,
        n_free,
        entries,
        rhs,
        gauge: false,
    })
}

impl ConstrainedSystem {
    /// Adds the constraint int p = 0 via a Lagrange multiplier.
    pub fn with_pressure_gauge(mut self) -> Self {
        if self.gauge {
            return self;
        }
        let mut m = vec![0.0; self.n_p];
        for (t, tri) in self.space.mesh.tris.iter().enumerate() {
            let a = self.space.geom[t].area / 3.0;
            for &v in tri {
                m[v] += a;
            }
        }
        let lm = self.n_free;
        for (v, mv) in m.iter().enumerate() {
            let r = self.free_map[self.n_u + v];
            self.entries.push((r, lm, *mv));
            self.entries.push((lm, r, *mv));
        }
        self.rhs.push(0.0);
        self.gauge = true;
        self
    }

    fn dim(&self) -> usize {
        self.n_free + usize::from(self.gauge)
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        for &(i, j, v) in &self.entries {
            y[i] += v * x[j];
        }
        y
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Direct sparse LU solve with residual check and iterative refinement.
pub fn solve(system: &ConstrainedSystem) -> Result<MixedField, FemError> {
    if system.material.eps == 0.0 && !system.gauge {
        return Err(FemError::SingularSystem("eps = 0 requires a pressure gauge".into()));
    }
    faer::set_global_parallelism(faer::Par::Seq);
    let n = system.dim();
    let bnorm = norm(&system.rhs);
    let mut x = vec![0.0; n];
    if bnorm > 0.0 {
        let trips: Vec<Triplet<usize, usize, f64>> =
            system.entries.iter().map(|&(i, j, v)| Triplet::new(i, j, v)).collect();
        let a = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &trips)
            .map_err(|e| FemError::SingularSystem(format!("{e:?}")))?;
        let lu = a.sp_lu().map_err(|e| FemError::SingularSystem(format!("{e:?}")))?;
        let mut r = system.rhs.clone();
        let mut rel = 1.0;
        for _ in 0..4 {
            let b = Mat::<f64>::from_fn(n, 1, |i, _| r[i]);
            let dx = lu.solve(&b);
            for i in 0..n {
                x[i] += dx[(i, 0)];
            }
            let ax = system.apply(&x);
            r = system.rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
            rel = norm(&r) / bnorm;
            if !rel.is_finite() {
                return Err(FemError::SingularSystem("non-finite solution".into()));
            }
            if rel <= SOLVER_TOL * 1e-2 {
                break;
            }
        }
        if rel > SOLVER_TOL {
            return Err(FemError::SolverBreakdown(rel));
        }
    }
    let mut full = system.fixed_values.clone();
    for i in 0..full.len() {
        let k = system.free_map[i];
        if k != usize::MAX {
            full[i] = x[k];
        }
    }
    let velocity = (0..system.n_u / 2).map(|k| [full[2 * k], full[2 * k + 1]]).collect();
    let pressure = full[system.n_u..].to_vec();
    let mut field = MixedField { space: system.space.clone(), material: system.material, velocity, pressure, gauge_shift: None };
    if system.material.eps == 0.0 {
        let mean = field.pressure_mean();
        for p in &mut field.pressure {
            *p -= mean;
        }
        field.gauge_shift = Some(mean);
    }
    Ok(field)
}

/// Assemble, constrain, gauge (eps = 0) and solve.
pub fn solve_problem(
    space: &Arc<FemSpace>,
    material: MaterialParams,
    f: Option<&(dyn Fn(Point) -> Point + Sync)>,
    zeta: Option<&(dyn Fn(Point) -> f64 + Sync)>,
    g: &DirichletData,
) -> Result<MixedField, FemError> {
    let sys = assemble(space, material, f, zeta)?;
    let mut cs = apply_dirichlet(&sys, g)?;
    if material.eps == 0.0 {
        cs = cs.with_pressure_gauge();
    }
    solve(&cs)
}

/// Weight correction Psi for a dual mode: zero volume data, zero on the corner
/// edges, -s Phi~ on the far edges (s = 1 for Lame, mu for Stokes).
pub fn solve_psi(dual: &SingularMode, material: MaterialParams, space: &Arc<FemSpace>) -> Result<MixedField, FemError> {
    if dual.kind != Kind::Dual {
        return Err(FemError::SingularSystem("Psi problems take a dual mode".into()));
    }
    let s = match dual.family {
        Family::Lame => 1.0,
        Family::Stokes => material.mu,
    };
    let poly = &space.polygon;
    let g = |tag: usize, x: Point| {
        if poly.is_corner_edge(tag) {
            Some([0.0, 0.0])
        } else {
            let v = dual.value_at(x);
            Some([-s * v[0], -s * v[1]])
        }
    };
    solve_problem(space, material, None, None, &g)
}
