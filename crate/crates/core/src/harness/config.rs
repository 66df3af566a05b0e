use std::collections::BTreeMap;
use std::sync::Arc;

use ini::Ini;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::boundary::BoundaryData;
use crate::expr::{check_derivative, parse, ExprScalar, ExprVector, FieldExpr};
use crate::extraction::ProblemData;
use crate::fem::FemSpace;
use crate::field::{SField, VField};
use crate::geometry::{build_polygon, CornerPolygon, Point};
use crate::mesh::{generate_lshape_mesh, load_mesh};
use crate::spectral::Family;

pub const DEFAULT_EPS_FLOOR: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DomainSpec {
    LShape,
    Polygon { vertices: Vec<Point>, corner: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshSpec {
    pub h: f64,
    pub grading_ratio: f64,
    pub grading_levels: u32,
    /// Mesh file to load instead of generating one.
    pub file: Option<String>,
}

impl Default for MeshSpec {
    fn default() -> Self {
        MeshSpec { h: 0.05, grading_ratio: 0.5, grading_levels: 6, file: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsGrid {
    pub hi: f64,
    pub lo: f64,
    pub n: usize,
}

impl EpsGrid {
    /// Log-spaced values from hi down to lo.
    pub fn values(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.hi];
        }
        let (a, b) = (self.hi.log10(), self.lo.log10());
        (0..self.n).map(|k| 10f64.powf(a + (b - a) * k as f64 / (self.n - 1) as f64)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialSpec {
    pub mu: f64,
    pub eps: Option<f64>,
    pub eps_grid: Option<EpsGrid>,
    pub eps_floor: f64,
}

/// Analytic data as expression text; g is either one global field or one per edge.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DataSpec {
    pub f: [String; 2],
    pub g: Option<[String; 2]>,
    pub g_edges: BTreeMap<usize, [String; 2]>,
    pub zeta: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSpec {
    pub tol: f64,
    pub max_iter: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self, HarnessError> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(HarnessError::Config(format!("unknown format `{s}` (csv|json)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSpec {
    pub path: Option<String>,
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManufacturedSpec {
    pub family: Family,
    pub c_true: [f64; 2],
    pub h_levels: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub domain: DomainSpec,
    pub mesh: MeshSpec,
    pub material: MaterialSpec,
    pub data: DataSpec,
    pub solver: SolverSpec,
    pub output: OutputSpec,
    pub manufactured: Option<ManufacturedSpec>,
    /// (function, d/dx, d/dy) expression triples checked by finite differences.
    pub derivatives: Vec<(String, String, String)>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            domain: DomainSpec::LShape,
            mesh: MeshSpec::default(),
            material: MaterialSpec { mu: 1.0, eps: None, eps_grid: None, eps_floor: DEFAULT_EPS_FLOOR },
            data: DataSpec { f: ["0".into(), "0".into()], ..Default::default() },
            solver: SolverSpec { tol: crate::fem::SOLVER_TOL, max_iter: 4 },
            output: OutputSpec { path: None, format: Format::Csv },
            manufactured: None,
            derivatives: vec![],
        }
    }
}

fn unquote(s: &str) -> &str {
    let s = s.trim();
    for q in ['"', '\''] {
        if s.len() >= 2 && s.starts_with(q) && s.ends_with(q) {
            return &s[1..s.len() - 1];
        }
    }
    s
}

fn num<T: std::str::FromStr>(sec: &str, key: &str, v: &str) -> Result<T, HarnessError> {
    unquote(v).parse().map_err(|_| HarnessError::Config(format!("[{sec}] {key}: cannot parse `{v}`")))
}

fn list(sec: &str, key: &str, v: &str) -> Result<Vec<f64>, HarnessError> {
    unquote(v).split(',').map(|s| num(sec, key, s)).collect()
}

fn check_expr(sec: &str, key: &str, text: &str) -> Result<FieldExpr, HarnessError> {
    parse(text).map_err(|e| HarnessError::Config(format!("[{sec}] {key}: {e}")))
}

const SECTIONS: [&str; 8] = ["domain", "mesh", "material", "data", "solver", "output", "manufactured", "derivatives"];

impl RunConfig {
    pub fn from_ini(text: &str) -> Result<Self, HarnessError> {
        let ini = Ini::load_from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        let mut cfg = RunConfig::default();
        let mut seen_domain = false;
        let mut seen_material = false;
        for (sec, props) in ini.iter() {
            let Some(sec) = sec else {
                if props.iter().next().is_some() {
                    return Err(HarnessError::Config("keys outside of a section".into()));
                }
                continue;
            };
            if !SECTIONS.contains(&sec) {
                return Err(HarnessError::Config(format!("unknown section [{sec}]")));
            }
            let mut vertices = None;
            let mut corner = 0usize;
            let mut shape = None;
            let mut fam = None;
            let (mut c1, mut c2) = (None, None);
            let mut h_levels = vec![0.1, 0.05, 0.025];
            for (key, val) in props.iter() {
                let v = unquote(val);
                match (sec, key) {
                    ("domain", "shape") => shape = Some(v.to_string()),
                    ("domain", "vertices") => {
                        let pts: Result<Vec<Point>, HarnessError> = v
                            .split(';')
                            .filter(|s| !s.trim().is_empty())
                            .map(|p| {
                                let c = list(sec, key, p)?;
                                if c.len() != 2 {
                                    return Err(HarnessError::Config(format!("[domain] vertices: bad point `{p}`")));
                                }
                                Ok([c[0], c[1]])
                            })
                            .collect();
                        vertices = Some(pts?);
                    }
                    ("domain", "corner") => corner = num(sec, key, v)?,
                    ("mesh", "h") => cfg.mesh.h = num(sec, key, v)?,
                    ("mesh", "grading_ratio") => cfg.mesh.grading_ratio = num(sec, key, v)?,
                    ("mesh", "grading_levels") => cfg.mesh.grading_levels = num(sec, key, v)?,
                    ("mesh", "file") => cfg.mesh.file = Some(v.to_string()),
                    ("material", "mu") => cfg.material.mu = num(sec, key, v)?,
                    ("material", "eps") => cfg.material.eps = Some(num(sec, key, v)?),
                    ("material", "eps_floor") => cfg.material.eps_floor = num(sec, key, v)?,
                    ("material", "eps_grid") => {
                        let p = list(sec, key, v)?;
                        if p.len() != 3 || p[2].fract() != 0.0 || p[2] < 1.0 {
                            return Err(HarnessError::Config("[material] eps_grid must be `hi,lo,n`".into()));
                        }
                        let (a, b) = (p[0].max(p[1]), p[0].min(p[1]));
                        cfg.material.eps_grid = Some(EpsGrid { hi: a, lo: b, n: p[2] as usize });
                    }
                    ("data", "f_x") => cfg.data.f[0] = v.to_string(),
                    ("data", "f_y") => cfg.data.f[1] = v.to_string(),
                    ("data", "zeta") => cfg.data.zeta = Some(v.to_string()),
                    ("data", k) if k == "g_x" || k == "g_y" => {
                        let g = cfg.data.g.get_or_insert_with(|| ["0".into(), "0".into()]);
                        g[(k == "g_y") as usize] = v.to_string();
                    }
                    ("data", k) if k.starts_with('g') && (k.ends_with("_x") || k.ends_with("_y")) => {
                        let j: usize = num(sec, key, &k[1..k.len() - 2])?;
                        if j == 0 {
                            return Err(HarnessError::Config("[data] edge numbers start at 1".into()));
                        }
                        let g = cfg.data.g_edges.entry(j).or_insert_with(|| ["0".into(), "0".into()]);
                        g[k.ends_with("_y") as usize] = v.to_string();
                    }
                    ("solver", "tol") => cfg.solver.tol = num(sec, key, v)?,
                    ("solver", "max_iter") => cfg.solver.max_iter = num(sec, key, v)?,
                    ("output", "path") => cfg.output.path = Some(v.to_string()),
                    ("output", "format") => cfg.output.format = v.parse()?,
                    ("manufactured", "family") => {
                        fam = Some(v.parse::<Family>().map_err(|e| HarnessError::Config(format!("[manufactured] family: {e}")))?)
                    }
                    ("manufactured", "c1") => c1 = Some(num(sec, key, v)?),
                    ("manufactured", "c2") => c2 = Some(num(sec, key, v)?),
                    ("manufactured", "h_levels") => h_levels = list(sec, key, v)?,
                    ("derivatives", name) => {
                        let parts: Vec<&str> = v.split(';').map(str::trim).collect();
                        if parts.len() != 3 {
                            return Err(HarnessError::Config(format!("[derivatives] {name}: expected `f; df/dx; df/dy`")));
                        }
                        cfg.derivatives.push((parts[0].into(), parts[1].into(), parts[2].into()));
                    }
                    _ => return Err(HarnessError::Config(format!("unknown key `{key}` in [{sec}]"))),
                }
            }
            match sec {
                "domain" => {
                    seen_domain = true;
                    cfg.domain = match (shape.as_deref(), vertices) {
                        (Some("lshape") | None, None) => DomainSpec::LShape,
                        (Some("polygon") | None, Some(v)) => DomainSpec::Polygon { vertices: v, corner },
                        (Some(s), _) => return Err(HarnessError::Config(format!("[domain] bad shape `{s}`"))),
                    }
                }
                "material" => seen_material = true,
                "manufactured" => {
                    let family = fam.ok_or_else(|| HarnessError::Config("[manufactured] family missing".into()))?;
                    let c = [c1.unwrap_or(0.0), c2.unwrap_or(0.0)];
                    cfg.manufactured = Some(ManufacturedSpec { family, c_true: c, h_levels });
                }
                _ => {}
            }
        }
        if !seen_domain || !seen_material {
            return Err(HarnessError::Config("sections [domain] and [material] are required".into()));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parse all expressions and run the derivative cross-checks.
    pub fn validate(&self) -> Result<(), HarnessError> {
        if !(self.material.mu > 0.0) {
            return Err(HarnessError::Config("[material] mu must be positive".into()));
        }
        if let Some(e) = self.material.eps {
            if !(e >= 0.0) {
                return Err(HarnessError::Config("[material] eps must be >= 0".into()));
            }
        }
        if let Some(g) = self.material.eps_grid {
            if g.n < 4 {
                return Err(HarnessError::Config(format!("[material] eps_grid needs at least 4 points, got {}", g.n)));
            }
            if !(g.lo > 0.0) || g.lo == g.hi {
                return Err(HarnessError::Config("[material] eps_grid bounds must be positive and distinct".into()));
            }
            if g.lo < self.material.eps_floor {
                return Err(HarnessError::Config(format!(
                    "[material] eps_grid goes below eps_floor = {:e}",
                    self.material.eps_floor
                )));
            }
        }
        check_expr("data", "f_x", &self.data.f[0])?;
        check_expr("data", "f_y", &self.data.f[1])?;
        if let Some(g) = &self.data.g {
            check_expr("data", "g_x", &g[0])?;
            check_expr("data", "g_y", &g[1])?;
        }
        for (j, g) in &self.data.g_edges {
            check_expr("data", &format!("g{j}_x"), &g[0])?;
            check_expr("data", &format!("g{j}_y"), &g[1])?;
        }
        if let Some(z) = &self.data.zeta {
            check_expr("data", "zeta", z)?;
        }
        let polygon = self.polygon()?;
        if let Some(j) = self.data.g_edges.keys().find(|&&j| j > polygon.num_edges()) {
            return Err(HarnessError::Config(format!("[data] g{j}: polygon has {} edges", polygon.num_edges())));
        }
        self.check_derivatives(&polygon)
    }

    fn check_derivatives(&self, polygon: &CornerPolygon) -> Result<(), HarnessError> {
        use rand::{Rng, SeedableRng};
        if self.derivatives.is_empty() {
            return Ok(());
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(20);
        let (mut lo, mut hi) = ([f64::MAX; 2], [f64::MIN; 2]);
        for v in polygon.vertices() {
            for k in 0..2 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        let mut pts = Vec::new();
        while pts.len() < 20 {
            let p = [rng.gen_range(lo[0]..hi[0]), rng.gen_range(lo[1]..hi[1])];
            if polygon.contains(p) && p[0].hypot(p[1]) > 1e-3 {
                pts.push(p);
            }
        }
        let frame = polygon.frame();
        for (f, dx, dy) in &self.derivatives {
            let (fe, dxe, dye) = (check_expr("derivatives", f, f)?, check_expr("derivatives", dx, dx)?, check_expr("derivatives", dy, dy)?);
            for (d, wrt_x) in [(&dxe, true), (&dye, false)] {
                let m = check_derivative(&fe, d, wrt_x, &pts, &frame)
                    .map_err(|e| HarnessError::Config(format!("[derivatives] {f}: {e}")))?;
                if m > 1e-6 {
                    return Err(HarnessError::Config(format!(
                        "[derivatives] d({f})/d{} disagrees with finite differences (mismatch {m:e})",
                        if wrt_x { "x" } else { "y" }
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn polygon(&self) -> Result<CornerPolygon, HarnessError> {
        match &self.domain {
            DomainSpec::LShape => Ok(CornerPolygon::lshape()),
            DomainSpec::Polygon { vertices, corner } => {
                build_polygon(vertices, *corner).map_err(|e| HarnessError::Config(format!("[domain] {e}")))
            }
        }
    }

    pub fn space(&self) -> Result<Arc<FemSpace>, HarnessError> {
        self.space_with_h(self.mesh.h)
    }

    pub fn space_with_h(&self, h: f64) -> Result<Arc<FemSpace>, HarnessError> {
        let polygon = self.polygon()?;
        let mesh = match &self.mesh.file {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("{path}: {e}")))?;
                load_mesh(&text, &polygon)?
            }
            None => generate_lshape_mesh(&polygon, h, self.mesh.grading_ratio, self.mesh.grading_levels)?,
        };
        Ok(Arc::new(FemSpace::new(mesh, polygon).map_err(crate::extraction::ExtractionError::from)?))
    }

    /// Expression-backed f, zeta and g.
    pub fn problem_data(&self) -> Result<ProblemData, HarnessError> {
        let polygon = self.polygon()?;
        let frame = polygon.frame();
        let vec = |s: &[String; 2], name: &str| -> Result<VField, HarnessError> {
            Ok(Arc::new(ExprVector { x: check_expr("data", name, &s[0])?, y: check_expr("data", name, &s[1])?, frame }))
        };
        let f = vec(&self.data.f, "f")?;
        let zeta: Option<SField> = match &self.data.zeta {
            Some(z) => Some(Arc::new(ExprScalar { expr: check_expr("data", "zeta", z)?, frame })),
            None => None,
        };
        let mut g = match &self.data.g {
            Some(gs) => BoundaryData::trace_of(&polygon, vec(gs, "g")?),
            None => BoundaryData::zero(&polygon),
        };
        for (j, gs) in &self.data.g_edges {
            g.edges[j - 1] = vec(gs, &format!("g{j}"))?;
        }
        Ok(ProblemData::new(f, zeta, g))
    }
}
