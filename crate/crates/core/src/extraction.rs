use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::angular::{gamma_lame, gamma_stokes, mode_pair, AngularError};
use crate::boundary::{validate_boundary_data, BoundaryData, CORNER_TOL};
use crate::fem::{solve_psi, ElemGeom, FemError, FemSpace, MixedField};
use crate::field::{SField, VField};
use crate::geometry::{CornerPolygon, Point};
use crate::modes::SingularMode;
use crate::quadrature::{composite, gauss_legendre, graded_toward_zero, TriRule};
use crate::spectral::{Family, MaterialParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExtractionError {
    #[error("boundary data do not vanish at the corner (|g| = {0})")]
    CornerDataNonzero(f64),
    #[error("zeta does not vanish at the corner (|zeta| = {0})")]
    ZetaCornerNonzero(f64),
    #[error("penalized extraction needs eps > 0")]
    NeedPositiveEps,
    #[error("Stokes extraction needs eps = 0")]
    NeedZeroEps,
    #[error("normalizer {0} is too close to zero")]
    GammaNearZero(f64),
    #[error("fields live on different meshes")]
    MeshMismatch,
    #[error(transparent)]
    Angular(#[from] AngularError),
    #[error(transparent)]
    Fem(#[from] FemError),
}

/// Volume source f, divergence source zeta (Stokes only) and Dirichlet data g.
#[derive(Clone)]
pub struct ProblemData {
    pub f: VField,
    pub zeta: Option<SField>,
    pub g: BoundaryData,
}

impl ProblemData {
    pub fn new(f: VField, zeta: Option<SField>, g: BoundaryData) -> Self {
        ProblemData { f, zeta, g }
    }

    /// a self + b other
    pub fn scaled_sum(&self, a: f64, other: &ProblemData, b: f64) -> ProblemData {
        let zeta = match (&self.zeta, &other.zeta) {
            (None, None) => None,
            (x, y) => {
                let zero: SField = Arc::new(|_: Point| 0.0);
                let x = x.clone().unwrap_or_else(|| zero.clone());
                let y = y.clone().unwrap_or(zero);
                Some(crate::field::combine_scalar(a, &x, b, &y))
            }
        };
        ProblemData { f: crate::field::combine_vector(a, &self.f, b, &other.f), zeta, g: self.g.scaled_sum(a, &other.g, b) }
    }
}

/// Per-term breakdown of one C_i functional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CiTerms {
    /// int f . (s Phi~)
    pub volume_mode: f64,
    /// int f . Psi
    pub volume_psi: f64,
    /// -int zeta (s phi~ + psi)
    pub zeta: f64,
    /// int_{Gamma_j} [mu g . d_n v - (g . n) pi_v] for each edge (enters with a minus sign)
    pub boundary: Vec<f64>,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Terms {
    pub ci: Vec<CiTerms>,
    /// Per far-edge contributions to C*.
    pub cstar_edges: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SifReport {
    pub schema: String,
    pub family: Family,
    pub eps: Option<f64>,
    pub mu: f64,
    pub exponents: Vec<f64>,
    pub gamma1: f64,
    pub gamma2: Option<f64>,
    #[serde(rename = "C1")]
    pub big_c1: f64,
    #[serde(rename = "C2")]
    pub big_c2: Option<f64>,
    #[serde(rename = "Cstar")]
    pub cstar: Option<f64>,
    pub c1: f64,
    pub c2: Option<f64>,
    pub terms: Terms,
    pub mesh_id: String,
}

impl SifReport {
    pub fn coefficients(&self) -> Vec<f64> {
        let mut v = vec![self.c1];
        v.extend(self.c2);
        v
    }

    /// c2 recomputed from stored parts with c1 replaced by `c1`.
    pub fn c2_given(&self, c1: f64) -> Option<f64> {
        Some((self.big_c2? + c1 * self.cstar?) / self.gamma2?)
    }
}

/// Weight function v = s Phi~ + Psi with pressure companion pi_v = s pi(Phi~) + psi.
struct Weight<'a> {
    dual: SingularMode,
    s: f64,
    psi: &'a MixedField,
}

impl Weight<'_> {
    fn mode_parts(&self, x: Point) -> (Point, [[f64; 2]; 2], f64) {
        let (r, th) = self.dual.frame.polar(x);
        let m = self.dual.at(x);
        let s = self.s;
        (
            [s * m.value[0], s * m.value[1]],
            [[s * m.grad[0][0], s * m.grad[0][1]], [s * m.grad[1][0], s * m.grad[1][1]]],
            s * self.dual.pressure_like(r, th),
        )
    }
}

const VOLUME_DEGREE: usize = 8;
const PSI_DEGREE: usize = 6;
const EDGE_POINTS: usize = 8;
const FAR_PANELS: usize = 32;
const GRADED_LEVELS: usize = 30;

/// Duffy-type rule on a triangle whose vertex `apex` carries an integrable singularity.
fn apex_rule(g: &ElemGeom, apex: usize, n: usize) -> Vec<(Point, f64)> {
    let (x, w) = gauss_legendre(n);
    let a = g.p[apex];
    let b = g.p[(apex + 1) % 3];
    let c = g.p[(apex + 2) % 3];
    let area2 = 2.0 * g.area;
    let mut out = Vec::with_capacity(n * n);
    for (u, wu) in x.iter().zip(&w) {
        let u = 0.5 * (u + 1.0); // distance fraction from the apex
        for (v, wv) in x.iter().zip(&w) {
            let v = 0.5 * (v + 1.0);
            let p = [
                a[0] + u * ((1.0 - v) * (b[0] - a[0]) + v * (c[0] - a[0])),
                a[1] + u * ((1.0 - v) * (b[1] - a[1]) + v * (c[1] - a[1])),
            ];
            out.push((p, 0.25 * wu * wv * u * area2));
        }
    }
    out
}

/// Integration points for analytic integrands with a corner singularity:
/// corner elements are split into 4; the child at the corner uses the apex rule.
fn singular_points(space: &FemSpace, t: usize, rule: &TriRule, out: &mut Vec<(Point, f64)>) {
    let g = &space.geom[t];
    let apex = g.p.iter().position(|p| *p == [0.0, 0.0]);
    match apex {
        None => out.extend(rule.map(&g.p).map(|(_, x, w)| (x, w))),
        Some(k) => {
            let m = |i: usize, j: usize| [0.5 * (g.p[i][0] + g.p[j][0]), 0.5 * (g.p[i][1] + g.p[j][1])];
            let (i, j, l) = (k, (k + 1) % 3, (k + 2) % 3);
            let (mij, mjl, mli) = (m(i, j), m(j, l), m(l, i));
            out.extend(apex_rule(&ElemGeom::new([g.p[i], mij, mli]), 0, VOLUME_DEGREE + 4));
            for child in [[mij, g.p[j], mjl], [mli, mjl, g.p[l]], [mij, mjl, mli]] {
                out.extend(rule.map(&child).map(|(_, x, w)| (x, w)));
            }
        }
    }
}

fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// n . G, the normal derivative of a vector field with gradient G[k][l] = d v_l/dx_k.
fn dn(n: Point, g: &[[f64; 2]; 2]) -> Point {
    [n[0] * g[0][0] + n[1] * g[1][0], n[0] * g[0][1] + n[1] * g[1][1]]
}

/// int over edge j of mu g . d_n v - (g . n) pi_v, split into the analytic and discrete parts.
fn edge_functional(
    w: &Weight,
    polygon: &CornerPolygon,
    j: usize,
    mu: f64,
    g: &dyn Fn(Point) -> Point,
) -> f64 {
    let e = polygon.edge(j);
    let n = e.normal;
    let analytic = |x: Point| {
        let gv = g(x);
        let (_, grad, pi) = w.mode_parts(x);
        mu * dot(gv, dn(n, &grad)) - dot(gv, n) * pi
    };
    let mode_part = if polygon.is_corner_edge(j) {
        // parametrize by distance from the corner
        let (far, len) = if j == 0 { (e.end, e.length) } else { (e.start, e.length) };
        let dir = [far[0] / len, far[1] / len];
        graded_toward_zero(|s| analytic([s * dir[0], s * dir[1]]), len, 0.5, GRADED_LEVELS, EDGE_POINTS)
    } else {
        composite(|s| analytic(e.point_at(s)), 0.0, 1.0, EDGE_POINTS, FAR_PANELS) * e.length
    };
    // discrete part over mesh boundary edges of this polygon edge
    let space = &w.psi.space;
    let (gx, gw) = gauss_legendre(EDGE_POINTS);
    let mut psi_part = 0.0;
    for (be, &(t, k, _)) in space.mesh.bedges.iter().zip(&space.bedge_elems) {
        if be.tag != j {
            continue;
        }
        let (pa, pb) = (space.mesh.nodes[be.a], space.mesh.nodes[be.b]);
        let len = (pb[0] - pa[0]).hypot(pb[1] - pa[1]);
        let geom = &space.geom[t];
        for (s, ws) in gx.iter().zip(&gw) {
            let s = 0.5 * (s + 1.0);
            let x = [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
            let mut l = geom.bary(x);
            // the point lies on local edge k; drop round-off in the opposite coordinate
            l[(k + 2) % 3] = 0.0;
            let gv = g(x);
            let grad = w.psi.grad(t, l);
            let psi = w.psi.pressure_at(t, l);
            psi_part += 0.5 * ws * len * (mu * dot(gv, dn(n, &grad)) - dot(gv, n) * psi);
        }
    }
    mode_part + psi_part
}

fn ci_functional(w: &Weight, data: &ProblemData, mu: f64) -> CiTerms {
    let space = &w.psi.space;
    let rule = TriRule::of_degree(VOLUME_DEGREE);
    let prule = TriRule::of_degree(PSI_DEGREE);
    let mut t_out = CiTerms::default();
    let mut pts = Vec::new();
    for t in 0..space.num_elems() {
        pts.clear();
        singular_points(space, t, &rule, &mut pts);
        for &(x, wt) in &pts {
            let (v, _, pi) = w.mode_parts(x);
            t_out.volume_mode += wt * dot(data.f.eval(x), v);
            if let Some(z) = &data.zeta {
                t_out.zeta -= wt * z.eval(x) * pi;
            }
        }
        for (l, x, wt) in prule.map(&space.geom[t].p) {
            t_out.volume_psi += wt * dot(data.f.eval(x), w.psi.value(t, l));
            if let Some(z) = &data.zeta {
                t_out.zeta -= wt * z.eval(x) * w.psi.pressure_at(t, l);
            }
        }
    }
    let polygon = &space.polygon;
    t_out.boundary = (0..polygon.num_edges())
        .map(|j| edge_functional(w, polygon, j, mu, &|x| data.g.eval(j, x)))
        .collect();
    t_out.total = t_out.volume_mode + t_out.volume_psi + t_out.zeta - t_out.boundary.iter().sum::<f64>();
    t_out
}

/// C* = sum over far edges of int mu Phi_1 . d_n v_2 - (Phi_1 . n) pi_{v_2}.
fn cstar_functional(primal1: &SingularMode, w2: &Weight, mu: f64) -> Vec<f64> {
    let polygon = &w2.psi.space.polygon;
    (0..polygon.num_edges())
        .filter(|&j| !polygon.is_corner_edge(j))
        .map(|j| edge_functional(w2, polygon, j, mu, &|x| primal1.value_at(x)))
        .collect()
}

/// Everything data-independent for one (mesh, material, family): modes,
/// normalizers and the Psi corrections.
#[derive(Debug, Clone)]
pub struct Extractor {
    pub family: Family,
    pub material: MaterialParams,
    pub space: Arc<FemSpace>,
    pub primal: Vec<SingularMode>,
    pub dual: Vec<SingularMode>,
    pub gamma: Vec<f64>,
    pub psi: Vec<MixedField>,
}

impl Extractor {
    pub fn new(family: Family, space: Arc<FemSpace>, material: MaterialParams) -> Result<Self, ExtractionError> {
        match family {
            Family::Lame if material.eps <= 0.0 => return Err(ExtractionError::NeedPositiveEps),
            Family::Stokes if material.eps != 0.0 => return Err(ExtractionError::NeedZeroEps),
            _ => {}
        }
        let frame = space.polygon.frame();
        let count = match family {
            Family::Lame => 2,
            Family::Stokes => crate::spectral::stokes_exponents(frame.omega()).map_err(AngularError::from)?.count,
        };
        let (mut primal, mut dual, mut gamma, mut psi) = (vec![], vec![], vec![], vec![]);
        for i in 1..=count {
            let (p, d) = mode_pair(family, frame, &material, i)?;
            let g = match family {
                Family::Lame => gamma_lame(&material, &p, &d),
                Family::Stokes => gamma_stokes(&p, &d),
            }
            .map_err(|e| match e {
                AngularError::GammaNearZero(v) => ExtractionError::GammaNearZero(v),
                e => e.into(),
            })?;
            primal.push(p);
            dual.push(d);
            gamma.push(g.gamma);
        }
        let solved: Vec<Result<MixedField, FemError>> = std::thread::scope(|sc| {
            let hs: Vec<_> = dual.iter().map(|d| sc.spawn(|| solve_psi(d, material, &space))).collect();
            hs.into_iter().map(|h| h.join().expect("Psi solve panicked")).collect()
        });
        for r in solved {
            psi.push(r?);
        }
        Ok(Extractor { family, material, space, primal, dual, gamma, psi })
    }

    fn weight(&self, i: usize) -> Weight<'_> {
        let s = match self.family {
            Family::Lame => 1.0,
            Family::Stokes => self.material.mu,
        };
        Weight { dual: self.dual[i], s, psi: &self.psi[i] }
    }

    pub fn check_data(&self, data: &ProblemData) -> Result<(), ExtractionError> {
        let rep = validate_boundary_data(&self.space.polygon, &data.g);
        if !rep.corner_vanishes {
            return Err(ExtractionError::CornerDataNonzero(rep.corner_value));
        }
        if let Some(z) = &data.zeta {
            let z0 = z.eval([0.0, 0.0]);
            if !(z0.abs() <= CORNER_TOL) {
                return Err(ExtractionError::ZetaCornerNonzero(z0.abs()));
            }
        }
        Ok(())
    }

    pub fn ci(&self, data: &ProblemData, i: usize) -> CiTerms {
        ci_functional(&self.weight(i - 1), data, self.material.mu)
    }

    pub fn cstar(&self) -> Option<Vec<f64>> {
        (self.primal.len() > 1).then(|| cstar_functional(&self.primal[0], &self.weight(1), self.material.mu))
    }

    pub fn extract(&self, data: &ProblemData) -> Result<SifReport, ExtractionError> {
        self.check_data(data)?;
        let t1 = self.ci(data, 1);
        let c1 = t1.total / self.gamma[0];
        let mut terms = Terms { ci: vec![t1.clone()], cstar_edges: vec![] };
        let (mut big_c2, mut cstar, mut c2, mut gamma2) = (None, None, None, None);
        if self.primal.len() > 1 {
            let t2 = self.ci(data, 2);
            let cs_edges = self.cstar().unwrap_or_default();
            let cs: f64 = cs_edges.iter().sum();
            c2 = Some((t2.total + c1 * cs) / self.gamma[1]);
            big_c2 = Some(t2.total);
            cstar = Some(cs);
            gamma2 = Some(self.gamma[1]);
            terms.ci.push(t2);
            terms.cstar_edges = cs_edges;
        }
        Ok(SifReport {
            schema: crate::harness::SCHEMA.to_string(),
            family: self.family,
            eps: (self.family == Family::Lame).then_some(self.material.eps),
            mu: self.material.mu,
            exponents: self.primal.iter().map(|m| m.lambda()).collect(),
            gamma1: self.gamma[0],
            gamma2,
            big_c1: t1.total,
            big_c2,
            cstar,
            c1,
            c2,
            terms,
            mesh_id: self.space.mesh.id(),
        })
    }
}

pub fn extract_sifs_penalized(space: Arc<FemSpace>, material: MaterialParams, data: &ProblemData) -> Result<SifReport, ExtractionError> {
    Extractor::new(Family::Lame, space, material)?.extract(data)
}

pub fn extract_sifs_stokes(space: Arc<FemSpace>, mu: f64, data: &ProblemData) -> Result<SifReport, ExtractionError> {
    let material = MaterialParams::new(mu, 0.0).map_err(AngularError::from)?;
    Extractor::new(Family::Stokes, space, material)?.extract(data)
}

/// Regular part w = u - sum c_i Phi_i (P2 interpolant of the modes) and
/// sigma = p - sum c_i pi(Phi_i), where pi is -eps^-1 div (Lame) or the
/// Stokes pressure.
#[derive(Debug, Clone)]
pub struct RegularPart {
    pub w: MixedField,
    pub singular: Vec<(f64, SingularMode)>,
}

pub fn regular_part(u: &MixedField, report: &SifReport, primal: &[SingularMode]) -> Result<RegularPart, ExtractionError> {
    if report.mesh_id != u.space.mesh.id() {
        return Err(ExtractionError::MeshMismatch);
    }
    let coeffs = report.coefficients();
    let singular: Vec<(f64, SingularMode)> = coeffs.iter().copied().zip(primal.iter().copied()).collect();
    let mut w = u.clone();
    for (node, x) in u.space.nodes.iter().enumerate() {
        if *x == [0.0, 0.0] {
            continue;
        }
        for (c, m) in &singular {
            let v = m.value_at(*x);
            w.velocity[node][0] -= c * v[0];
            w.velocity[node][1] -= c * v[1];
        }
    }
    Ok(RegularPart { w, singular })
}

impl RegularPart {
    pub fn sigma(&self, t: usize, l: [f64; 3], x: Point) -> f64 {
        let mut s = self.w.pressure_at(t, l);
        if x != [0.0, 0.0] {
            for (c, m) in &self.singular {
                let (r, th) = m.frame.polar(x);
                s -= c * m.pressure_like(r, th);
            }
        }
        s
    }
}

/// (||w_a - w_b||_1, ||sigma_a - sigma_b||_0) with corner-aware quadrature for sigma.
pub fn regular_difference(a: &RegularPart, b: &RegularPart) -> Result<(f64, f64), ExtractionError> {
    if !a.w.same_space(&b.w) {
        return Err(ExtractionError::MeshMismatch);
    }
    let dw = crate::fem::norms(&a.w.difference(&b.w)?).h1;
    let space = &a.w.space;
    let rule = TriRule::of_degree(VOLUME_DEGREE);
    let mut pts = Vec::new();
    let mut s2 = 0.0;
    for t in 0..space.num_elems() {
        pts.clear();
        singular_points(space, t, &rule, &mut pts);
        let g = &space.geom[t];
        for &(x, wt) in &pts {
            let l = g.bary(x);
            let d = a.sigma(t, l, x) - b.sigma(t, l, x);
            s2 += wt * d * d;
        }
    }
    Ok((dw, s2.sqrt()))
}
