use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::CornerFrame;
use crate::modes::{make_mode, Kind, ModeError, SingularMode};
use crate::quadrature::gauss_nodes;
use crate::spectral::{lame_exponents, stokes_exponents, Family, MaterialParams, SpectralError};

pub const DEFAULT_ORDER: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AngularError {
    #[error("quadrature not converged: estimate {estimate} for value {value}")]
    QuadratureNotConverged { value: f64, estimate: f64 },
    #[error("normalizer {0} is too close to zero")]
    GammaNearZero(f64),
    #[error("epsilon grid must be strictly decreasing with at least 4 points, got {0:?}")]
    BadGrid(Vec<f64>),
    #[error("penalty eps must be positive for the Lame normalizer")]
    NeedPositiveEps,
    #[error("primal and dual modes do not form a pair")]
    NotAPair,
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Mode(#[from] ModeError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngularIntegrals {
    pub family: Family,
    pub index: usize,
    pub eps: Option<f64>,
    pub gamma: f64,
    /// Lame: [int 2 mu lambda T.T~, int K]; Stokes: [int 2 kappa T.T~, -int xi A~, int A xi~].
    pub terms: Vec<f64>,
    pub order: usize,
    pub error_estimate: f64,
}

/// Primal and dual mode of one index for the given family and material.
pub fn mode_pair(
    family: Family,
    frame: CornerFrame,
    material: &MaterialParams,
    index: usize,
) -> Result<(SingularMode, SingularMode), AngularError> {
    let table = match family {
        Family::Lame => lame_exponents(frame.omega(), material.c())?,
        Family::Stokes => stokes_exponents(frame.omega())?,
    };
    let p = make_mode(family, Kind::Primal, index, frame, material, &table)?;
    let d = make_mode(family, Kind::Dual, index, frame, material, &table)?;
    Ok((p, d))
}

fn check_pair(p: &SingularMode, d: &SingularMode) -> Result<(), AngularError> {
    if p.kind != Kind::Primal || d.kind != Kind::Dual || p.index != d.index || p.a != -d.a || p.family != d.family {
        return Err(AngularError::NotAPair);
    }
    Ok(())
}

/// Closed form of eps^-1 (I_i + J_i) at t = theta - omega_bar.
pub fn k_closed(mode: &SingularMode, t: f64) -> f64 {
    let (l, c, w, mu) = (mode.lambda(), mode.c, mode.frame.omega(), mode.mu);
    let cm = c * (l * w).cos() - l * w.cos();
    let cp = c * (l * w).cos() + l * w.cos();
    let (s1, c1) = ((1.0 - l) * t).sin_cos();
    let (s2, c2) = ((1.0 + l) * t).sin_cos();
    let inner = if mode.index == 1 {
        2.0 * c * s1 * s2 - cm * s1 * s1 - cp * s2 * s2
    } else {
        2.0 * c * c1 * c2 - cm * c2 * c2 - cp * c1 * c1
    };
    4.0 * mu * l * inner
}

/// Raw I_i + J_i from the angular functions (suffers cancellation as eps -> 0).
pub fn ij_raw(primal: &SingularMode, dual: &SingularMode, t: f64) -> (f64, f64) {
    let g = primal.angular(t);
    let gd = dual.angular(t);
    let l = primal.lambda();
    let i = 2.0 * l * g.a * gd.a;
    let j = (g.db + g.a) * gd.a - g.a * (gd.db + gd.a);
    (i, j)
}

fn integrate<F: Fn(f64) -> [f64; 3]>(f: F, frame: &CornerFrame, order: usize) -> ([f64; 3], f64) {
    let run = |n: usize| {
        let (x, w) = gauss_nodes(n, frame.omega1, frame.omega2);
        let mut acc = [0.0; 3];
        for (th, wt) in x.iter().zip(&w) {
            let v = f(*th);
            for k in 0..3 {
                acc[k] += wt * v[k];
            }
        }
        acc
    };
    let a = run(order);
    let b = run(2 * order);
    let est = ((a[0] + a[1] + a[2]) - (b[0] + b[1] + b[2])).abs();
    (b, est)
}

fn finish(family: Family, index: usize, eps: Option<f64>, terms: Vec<f64>, order: usize, est: f64) -> Result<AngularIntegrals, AngularError> {
    let gamma: f64 = terms.iter().sum();
    if !(gamma.abs() > 1e-8) {
        return Err(AngularError::GammaNearZero(gamma));
    }
    if !(est < 1e-11 * gamma.abs()) {
        return Err(AngularError::QuadratureNotConverged { value: gamma, estimate: est });
    }
    Ok(AngularIntegrals { family, index, eps, gamma, terms, order: 2 * order, error_estimate: est })
}

/// gamma_i^eps = int (2 mu lambda T.T~ + K_i) dtheta with K from its closed form.
pub fn gamma_lame(material: &MaterialParams, primal: &SingularMode, dual: &SingularMode) -> Result<AngularIntegrals, AngularError> {
    check_pair(primal, dual)?;
    if material.eps <= 0.0 {
        return Err(AngularError::NeedPositiveEps);
    }
    let frame = primal.frame;
    let wb = frame.omega_bar();
    let l = primal.lambda();
    let mu = material.mu;
    let (v, est) = integrate(
        |th| {
            let t = th - wb;
            let (g, gd) = (primal.angular(t), dual.angular(t));
            [2.0 * mu * l * (g.a * gd.a + g.b * gd.b), k_closed(primal, t), 0.0]
        },
        &frame,
        DEFAULT_ORDER,
    );
    finish(Family::Lame, primal.index, Some(material.eps), vec![v[0], v[1]], DEFAULT_ORDER, est)
}

/// gamma_i^s = int (2 kappa T.T~ - xi A~ + A xi~) dtheta.
pub fn gamma_stokes(primal: &SingularMode, dual: &SingularMode) -> Result<AngularIntegrals, AngularError> {
    check_pair(primal, dual)?;
    let frame = primal.frame;
    let wb = frame.omega_bar();
    let k = primal.lambda();
    let (v, est) = integrate(
        |th| {
            let t = th - wb;
            let (g, gd) = (primal.angular(t), dual.angular(t));
            // r-free parts of the pressures: xi = 4a S_i((1-a)t)
            let xi = primal.pressure_like(1.0, th);
            let xid = dual.pressure_like(1.0, th);
            [2.0 * k * (g.a * gd.a + g.b * gd.b), -xi * gd.a, g.a * xid]
        },
        &frame,
        DEFAULT_ORDER,
    );
    finish(Family::Stokes, primal.index, None, v.to_vec(), DEFAULT_ORDER, est)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub index: usize,
    pub eps: f64,
    /// max over the grid of |(I + J) - eps K|
    pub max_deviation: f64,
    /// max over the grid of |I| + |J|, the size of the cancelling terms
    pub scale: f64,
    pub sup_k: f64,
}

/// Compares raw I_i + J_i against eps K_i on an n-point uniform theta grid.
pub fn check_ij_identity(index: usize, material: &MaterialParams, frame: CornerFrame, n: usize) -> Result<IdentityReport, AngularError> {
    if material.eps <= 0.0 {
        return Err(AngularError::NeedPositiveEps);
    }
    let (p, d) = mode_pair(Family::Lame, frame, material, index)?;
    let mut rep = IdentityReport { index, eps: material.eps, max_deviation: 0.0, scale: 0.0, sup_k: 0.0 };
    for k in 0..n {
        let th = frame.omega1 + frame.omega() * k as f64 / (n - 1).max(1) as f64;
        let t = th - frame.omega_bar();
        let (i, j) = ij_raw(&p, &d, t);
        let kc = k_closed(&p, t);
        rep.max_deviation = rep.max_deviation.max(((i + j) - material.eps * kc).abs());
        rep.scale = rep.scale.max(i.abs() + j.abs());
        rep.sup_k = rep.sup_k.max(kc.abs());
    }
    Ok(rep)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaRow {
    pub eps: f64,
    pub gamma_eps: f64,
    pub diff: f64,
    /// log-log slope against the previous row
    pub slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaStudy {
    pub index: usize,
    pub mu: f64,
    pub gamma_stokes: f64,
    pub rows: Vec<GammaRow>,
    pub final_slope: f64,
    /// least-squares slope of log(diff) against log(eps)
    pub fitted_slope: f64,
}

/// Least-squares slope of log y against log x.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// |gamma_i^eps - mu gamma_i^s| over a decreasing eps grid.
pub fn gamma_limit_study(index: usize, mu: f64, frame: CornerFrame, eps_grid: &[f64]) -> Result<GammaStudy, AngularError> {
    if eps_grid.len() < 4 || eps_grid.windows(2).any(|w| !(w[1] < w[0])) || eps_grid.iter().any(|&e| !(e > 0.0)) {
        return Err(AngularError::BadGrid(eps_grid.to_vec()));
    }
    let stokes_mat = MaterialParams::new(mu, 0.0)?;
    let (sp, sd) = mode_pair(Family::Stokes, frame, &stokes_mat, index)?;
    let gs = gamma_stokes(&sp, &sd)?.gamma;
    let mut rows: Vec<GammaRow> = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        let m = MaterialParams::new(mu, eps)?;
        let (p, d) = mode_pair(Family::Lame, frame, &m, index)?;
        let g = gamma_lame(&m, &p, &d)?.gamma;
        let diff = (g - mu * gs).abs();
        let slope = rows.last().map(|r| (r.diff.ln() - diff.ln()) / (r.eps.ln() - eps.ln()));
        rows.push(GammaRow { eps, gamma_eps: g, diff, slope });
    }
    let final_slope = rows.last().and_then(|r| r.slope).unwrap_or(f64::NAN);
    let xs: Vec<f64> = rows.iter().map(|r| r.eps).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.diff).collect();
    Ok(GammaStudy { index, mu, gamma_stokes: gs, rows, final_slope, fitted_slope: loglog_slope(&xs, &ys) })
}
