use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::HarnessError;
use crate::angular::mode_pair;
use crate::boundary::BoundaryData;
use crate::extraction::{Extractor, ProblemData};
use crate::fem::FemSpace;
use crate::field::VField;
use crate::geometry::Point;
use crate::modes::SingularMode;
use crate::spectral::{Family, MaterialParams};

/// Smooth divergence-free field vanishing at the corner (curl of
/// x^2 y + 0.5 x y^3 + 0.3 x^3 y), plus a smooth pressure x + y^2.
pub fn w_poly(p: Point) -> Point {
    let [x, y] = p;
    [x * x + 1.5 * x * y * y + 0.3 * x * x * x, -(2.0 * x * y + 0.5 * y * y * y + 0.9 * x * x * y)]
}

pub fn w_poly_grad(p: Point) -> [[f64; 2]; 2] {
    let [x, y] = p;
    // g[k][l] = d w_l / d x_k
    [[2.0 * x + 1.5 * y * y + 0.9 * x * x, -(2.0 * y + 1.8 * x * y)], [3.0 * x * y, -(2.0 * x + 1.5 * y * y + 0.9 * x * x)]]
}

pub fn p_poly(p: Point) -> f64 {
    p[0] + p[1] * p[1]
}

/// -mu Lap w_poly (+ grad p_poly for Stokes); grad div w_poly = 0.
pub fn poly_source(family: Family, mu: f64) -> VField {
    Arc::new(move |p: Point| {
        let [x, y] = p;
        let lap = [2.0 + 4.8 * x, -4.8 * y];
        let gp = match family {
            Family::Lame => [0.0, 0.0],
            Family::Stokes => [1.0, 2.0 * y],
        };
        [-mu * lap[0] + gp[0], -mu * lap[1] + gp[1]]
    })
}

/// u = w_poly + sum c_i Phi_i with f from w_poly alone (the modes are
/// homogeneous solutions) and g the trace of u.
#[derive(Debug, Clone)]
pub struct ManufacturedCase {
    pub family: Family,
    pub material: MaterialParams,
    pub c_true: Vec<f64>,
    pub modes: Vec<SingularMode>,
}

impl ManufacturedCase {
    pub fn new(family: Family, material: MaterialParams, frame: crate::geometry::CornerFrame, c: [f64; 2]) -> Result<Self, HarnessError> {
        let count = match family {
            Family::Lame => 2,
            Family::Stokes => crate::spectral::stokes_exponents(frame.omega())?.count,
        };
        let modes = (1..=count)
            .map(|i| mode_pair(family, frame, &material, i).map(|(p, _)| p))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ManufacturedCase { family, material, c_true: c[..count].to_vec(), modes })
    }

    pub fn velocity(&self) -> VField {
        let (c, m) = (self.c_true.clone(), self.modes.clone());
        Arc::new(move |p: Point| {
            let mut u = w_poly(p);
            if p != [0.0, 0.0] {
                for (ci, mi) in c.iter().zip(&m) {
                    let v = mi.value_at(p);
                    u[0] += ci * v[0];
                    u[1] += ci * v[1];
                }
            }
            u
        })
    }

    pub fn data(&self, polygon: &crate::geometry::CornerPolygon) -> ProblemData {
        ProblemData::new(poly_source(self.family, self.material.mu), None, BoundaryData::trace_of(polygon, self.velocity()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryRow {
    pub h: f64,
    pub elements: usize,
    pub c: Vec<f64>,
    pub abs_err: Vec<f64>,
    /// |c - c_true| / |c_true|, or the absolute error when c_true = 0.
    pub rel_err: Vec<f64>,
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub schema: String,
    pub family: Family,
    pub mu: f64,
    pub eps: Option<f64>,
    pub c_true: Vec<f64>,
    pub rows: Vec<RecoveryRow>,
    /// Observed convergence rates of max_i rel_err between consecutive levels.
    pub rates: Vec<f64>,
}

impl RecoveryReport {
    pub fn max_rel(&self, row: usize) -> f64 {
        self.rows[row].rel_err.iter().fold(0.0, |a: f64, &b| a.max(b))
    }
}

pub fn recover_on(case: &ManufacturedCase, space: Arc<FemSpace>) -> Result<RecoveryRow, HarnessError> {
    let t0 = Instant::now();
    let data = case.data(&space.polygon);
    let h = space.mesh.grading.map(|g| g.h).unwrap_or(f64::NAN);
    let elements = space.num_elems();
    let rep = Extractor::new(case.family, space, case.material)?.extract(&data)?;
    let c = rep.coefficients();
    let abs_err: Vec<f64> = c.iter().zip(&case.c_true).map(|(a, b)| (a - b).abs()).collect();
    let rel_err = abs_err.iter().zip(&case.c_true).map(|(e, t)| if *t == 0.0 { *e } else { e / t.abs() }).collect();
    Ok(RecoveryRow { h, elements, c, abs_err, rel_err, wall_time: t0.elapsed().as_secs_f64() })
}

/// Built-in manufactured case from the [manufactured] section, run on every mesh level.
pub fn run_manufactured(cfg: &RunConfig) -> Result<RecoveryReport, HarnessError> {
    let spec = cfg.manufactured.as_ref().ok_or_else(|| HarnessError::Config("missing [manufactured] section".into()))?;
    let polygon = cfg.polygon()?;
    let eps = match spec.family {
        Family::Lame => cfg.material.eps.ok_or_else(|| HarnessError::Config("[material] eps required".into()))?,
        Family::Stokes => 0.0,
    };
    if spec.family == Family::Lame && !(eps > 0.0) {
        return Err(HarnessError::Config("penalized case needs eps > 0".into()));
    }
    let material = MaterialParams::new(cfg.material.mu, eps)?;
    let case = ManufacturedCase::new(spec.family, material, polygon.frame(), spec.c_true)?;
    let mut rows = Vec::new();
    for &h in &spec.h_levels {
        rows.push(recover_on(&case, cfg.space_with_h(h)?)?);
    }
    let mut report = RecoveryReport {
        schema: super::SCHEMA.into(),
        family: spec.family,
        mu: material.mu,
        eps: (spec.family == Family::Lame).then_some(eps),
        c_true: case.c_true.clone(),
        rows,
        rates: vec![],
    };
    report.rates = (1..report.rows.len())
        .map(|k| {
            let (a, b) = (report.max_rel(k - 1), report.max_rel(k));
            (a / b).ln() / (report.rows[k - 1].h / report.rows[k].h).ln()
        })
        .collect();
    Ok(report)
}
