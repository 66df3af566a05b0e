use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::HarnessError;
use crate::angular::loglog_slope;
use crate::extraction::{regular_difference, regular_part, Extractor, ProblemData, RegularPart, SifReport};
use crate::fem::{solve_problem, FemSpace, MixedField};
use crate::geometry::Point;
use crate::spectral::{Family, MaterialParams};

/// One row of the incompressible-limit study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub eps: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub c1: f64,
    pub c2: f64,
    pub c1_ref: f64,
    pub c2_ref: f64,
    /// |c1 - c1_ref / mu|
    pub dc1: f64,
    pub dc2: f64,
    pub w_h1_diff: f64,
    pub sigma_l2_diff: f64,
    pub wall_time: f64,
}

pub const SWEEP_COLUMNS: [&str; 14] = [
    "eps", "lambda1", "lambda2", "gamma1", "gamma2", "c1", "c2", "c1_ref", "c2_ref", "dc1", "dc2", "w_h1_diff",
    "sigma_l2_diff", "wall_time",
];

impl SweepRecord {
    pub fn values(&self) -> [f64; 14] {
        [
            self.eps, self.lambda1, self.lambda2, self.gamma1, self.gamma2, self.c1, self.c2, self.c1_ref, self.c2_ref,
            self.dc1, self.dc2, self.w_h1_diff, self.sigma_l2_diff, self.wall_time,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub schema: String,
    pub mu: f64,
    pub mesh_id: String,
    pub elements: usize,
    pub reference: SifReport,
    pub rows: Vec<SweepRecord>,
    /// Fitted log-log slopes of dc1, dc2 and of w_h1_diff + sigma_l2_diff against eps.
    pub slopes: [f64; 3],
}

impl SweepTable {
    pub fn combined_regular(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.w_h1_diff + r.sigma_l2_diff).collect()
    }
}

fn solve_for(space: &Arc<FemSpace>, material: MaterialParams, data: &ProblemData) -> Result<MixedField, HarnessError> {
    let f = |x: Point| data.f.eval(x);
    let zeta = data.zeta.clone();
    let z = move |x: Point| zeta.as_ref().map_or(0.0, |z| z.eval(x));
    let g = |tag: usize, x: Point| Some(data.g.eval(tag, x));
    Ok(solve_problem(space, material, Some(&f), data.zeta.is_some().then_some(&z as &(dyn Fn(Point) -> f64 + Sync)), &g)?)
}

/// Solve, extract and split off the regular part.
pub fn solve_and_extract(
    family: Family,
    space: &Arc<FemSpace>,
    material: MaterialParams,
    data: &ProblemData,
) -> Result<(SifReport, RegularPart), HarnessError> {
    let ex = Extractor::new(family, space.clone(), material)?;
    let rep = ex.extract(data)?;
    let u = solve_for(space, material, data)?;
    let reg = regular_part(&u, &rep, &ex.primal)?;
    Ok((rep, reg))
}

pub fn run_eps_sweep(cfg: &RunConfig) -> Result<SweepTable, HarnessError> {
    let grid = cfg.material.eps_grid.ok_or_else(|| HarnessError::Config("[material] eps_grid required for a sweep".into()))?;
    cfg.validate()?;
    let eps_values = grid.values();
    let mu = cfg.material.mu;
    let space = cfg.space()?;
    let data = cfg.problem_data()?;
    let (reference, ref_reg) = solve_and_extract(Family::Stokes, &space, MaterialParams::new(mu, 0.0)?, &data)?;
    let c_ref = reference.coefficients();
    let c_ref2 = c_ref.get(1).copied().unwrap_or(f64::NAN);
    let mut rows = Vec::with_capacity(eps_values.len());
    for &eps in &eps_values {
        let t0 = Instant::now();
        let (rep, reg) = solve_and_extract(Family::Lame, &space, MaterialParams::new(mu, eps)?, &data)?;
        let (dw, ds) = regular_difference(&reg, &ref_reg)?;
        let c2 = rep.c2.unwrap_or(f64::NAN);
        rows.push(SweepRecord {
            eps,
            lambda1: rep.exponents[0],
            lambda2: rep.exponents[1],
            gamma1: rep.gamma1,
            gamma2: rep.gamma2.unwrap_or(f64::NAN),
            c1: rep.c1,
            c2,
            c1_ref: c_ref[0],
            c2_ref: c_ref2,
            dc1: (rep.c1 - c_ref[0] / mu).abs(),
            dc2: (c2 - c_ref2 / mu).abs(),
            w_h1_diff: dw,
            sigma_l2_diff: ds,
            wall_time: t0.elapsed().as_secs_f64(),
        });
    }
    let x: Vec<f64> = rows.iter().map(|r| r.eps).collect();
    let col = |f: &dyn Fn(&SweepRecord) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
    let slopes = [
        loglog_slope(&x, &col(&|r| r.dc1)),
        loglog_slope(&x, &col(&|r| r.dc2)),
        loglog_slope(&x, &col(&|r| r.w_h1_diff + r.sigma_l2_diff)),
    ];
    Ok(SweepTable {
        schema: super::SCHEMA.into(),
        mu,
        mesh_id: space.mesh.id(),
        elements: space.num_elems(),
        reference,
        rows,
        slopes,
    })
}
