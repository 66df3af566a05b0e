use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Lame,
    Stokes,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Lame => "lame",
            Family::Stokes => "stokes",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "lame" | "penalized" => Ok(Family::Lame),
            "stokes" => Ok(Family::Stokes),
            _ => Err(format!("unknown family `{s}`")),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("corner angle {0} outside (pi, 2pi)")]
    BadAngle(f64),
    #[error("Lame constant C={0} must be >= 1")]
    BadC(f64),
    #[error("invalid material: mu={mu}, eps={eps}")]
    BadMaterial { mu: f64, eps: f64 },
    #[error("no root in bracket ({lo}, {hi}); sign pattern {pattern}")]
    NoRootInBracket { lo: f64, hi: f64, pattern: String },
    #[error("{count} sign changes in bracket ({lo}, {hi}); sign pattern {pattern}")]
    MultipleRootsInBracket { lo: f64, hi: f64, count: usize, pattern: String },
}

/// Viscosity mu and penalty eps; eps = 0 is the Stokes limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams {
    pub mu: f64,
    pub eps: f64,
}

impl MaterialParams {
    pub fn new(mu: f64, eps: f64) -> Result<Self, SpectralError> {
        if !(mu > 0.0 && mu.is_finite() && eps >= 0.0 && eps.is_finite()) {
            return Err(SpectralError::BadMaterial { mu, eps });
        }
        Ok(Self { mu, eps })
    }

    /// Second Lame constant of the reduced system, nu = 1/eps - mu.
    pub fn nu(&self) -> Option<f64> {
        (self.eps > 0.0).then(|| 1.0 / self.eps - self.mu)
    }

    /// C = 1 + 2 mu eps, which equals (3mu+nu)/(mu+nu).
    pub fn c(&self) -> f64 {
        1.0 + 2.0 * self.mu * self.eps
    }
}

/// (3mu + nu)/(mu + nu) for generic Lame constants.
pub fn lame_c(mu: f64, nu: f64) -> f64 {
    (3.0 * mu + nu) / (mu + nu)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentTable {
    pub family: Family,
    pub omega: f64,
    /// Lame constant C; 1 for Stokes.
    pub c: f64,
    pub exponents: [f64; 3],
    /// Number of singular modes used (N = 2 for Lame, M in {1, 2} for Stokes).
    pub count: usize,
    pub brackets: [(f64, f64); 3],
    pub residuals: [f64; 3],
}

/// C^2 sin^2(l w) - l^2 sin^2 w.
pub fn eigen_residual(l: f64, omega: f64, c: f64) -> f64 {
    let a = c * (l * omega).sin();
    let b = l * omega.sin();
    (a - b) * (a + b)
}

/// sin^2(l w) - l^2 sin^2 w divided by (l - 1), finite at l = 1.
fn deflated(l: f64, omega: f64) -> f64 {
    let (s, c) = (omega.sin(), omega.cos());
    let plus = (l * omega).sin() + l * s;
    let d = l - 1.0;
    let minus = if d.abs() < 1e-4 {
        // Taylor expansion of (sin(l w) - l sin w)/(l - 1) about l = 1
        (omega * c - s) - 0.5 * omega * omega * s * d - omega.powi(3) * c * d * d / 6.0
    } else {
        ((l * omega).sin() - l * s) / d
    };
    plus * minus
}

const SCAN: usize = 2048;

fn find_root<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> Result<f64, SpectralError> {
    let mut samples = Vec::with_capacity(SCAN + 1);
    for k in 0..=SCAN {
        let x = if k == SCAN { hi } else { lo + (hi - lo) * k as f64 / SCAN as f64 };
        samples.push((x, f(x)));
    }
    let pattern = || {
        let mut p = String::new();
        for &(_, v) in &samples {
            let c = if v > 0.0 { '+' } else if v < 0.0 { '-' } else { '0' };
            if !p.ends_with(c) {
                p.push(c);
            }
        }
        p
    };
    let nz: Vec<(f64, f64)> = samples.iter().copied().filter(|s| s.1 != 0.0 && s.1.is_finite()).collect();
    let changes: Vec<usize> = (1..nz.len()).filter(|&k| nz[k - 1].1.signum() != nz[k].1.signum()).collect();
    match changes.len() {
        0 => Err(SpectralError::NoRootInBracket { lo, hi, pattern: pattern() }),
        1 => {
            let k = changes[0];
            let (mut a, mut fa) = nz[k - 1];
            let (mut b, _) = nz[k];
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if m <= a || m >= b {
                    break;
                }
                let fm = f(m);
                if fm == 0.0 {
                    return Ok(m);
                }
                if fm.signum() == fa.signum() {
                    a = m;
                    fa = fm;
                } else {
                    b = m;
                }
            }
            Ok(0.5 * (a + b))
        }
        count => Err(SpectralError::MultipleRootsInBracket { lo, hi, count, pattern: pattern() }),
    }
}

fn check_angle(omega: f64) -> Result<(), SpectralError> {
    if omega > PI && omega < 2.0 * PI {
        Ok(())
    } else {
        Err(SpectralError::BadAngle(omega))
    }
}

/// Root of tan w = w in (pi, 3pi/2).
pub fn critical_angle() -> f64 {
    static W: OnceLock<f64> = OnceLock::new();
    *W.get_or_init(|| {
        let g = |w: f64| w.sin() - w * w.cos();
        let (mut a, mut b) = (PI + 0.1, 1.5 * PI - 1e-3);
        let ga = g(a);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if g(m).signum() == ga.signum() {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    })
}

/// Three smallest roots of the unit-C equation (shared by Stokes and the
/// C = 1 Lame case); the unit root is exact.
fn unit_c_roots(omega: f64) -> Result<([f64; 3], [(f64, f64); 3], usize), SpectralError> {
    let f = |l: f64| deflated(l, omega);
    let b1 = (0.5, PI / omega);
    let k1 = find_root(f, b1.0, b1.1)?;
    if omega <= critical_angle() {
        let b3 = (1.0, 2.0 * PI / omega);
        let k3 = find_root(f, b3.0, b3.1)?;
        Ok(([k1, 1.0, k3], [b1, (1.0, 1.0), b3], 1))
    } else {
        let b2 = (PI / omega, 1.0);
        let k2 = find_root(f, b2.0, b2.1)?;
        Ok(([k1, k2, 1.0], [b1, b2, (1.0, 1.0)], 2))
    }
}

fn residuals(ex: &[f64; 3], omega: f64, c: f64) -> [f64; 3] {
    ex.map(|l| eigen_residual(l, omega, c).abs())
}

pub fn lame_exponents(omega: f64, c: f64) -> Result<ExponentTable, SpectralError> {
    check_angle(omega)?;
    if !(c >= 1.0) || !c.is_finite() {
        return Err(SpectralError::BadC(c));
    }
    let (exponents, brackets) = if c == 1.0 {
        let (ex, br, _) = unit_c_roots(omega)?;
        (ex, br)
    } else {
        let f = |l: f64| eigen_residual(l, omega, c);
        let br = [(0.5, PI / omega), (PI / omega, 1.0), (1.0, 2.0 * PI / omega)];
        let mut ex = [0.0; 3];
        for (k, b) in br.iter().enumerate() {
            ex[k] = find_root(f, b.0, b.1)?;
        }
        (ex, br)
    };
    Ok(ExponentTable {
        family: Family::Lame,
        omega,
        c,
        residuals: residuals(&exponents, omega, c),
        exponents,
        count: 2,
        brackets,
    })
}

pub fn stokes_exponents(omega: f64) -> Result<ExponentTable, SpectralError> {
    check_angle(omega)?;
    let (exponents, brackets, count) = unit_c_roots(omega)?;
    Ok(ExponentTable {
        family: Family::Stokes,
        omega,
        c: 1.0,
        residuals: residuals(&exponents, omega, 1.0),
        exponents,
        count,
        brackets,
    })
}

/// Exponent table for the family implied by the material: Stokes if eps = 0.
pub fn exponents_for(family: Family, omega: f64, material: &MaterialParams) -> Result<ExponentTable, SpectralError> {
    match family {
        Family::Lame => lame_exponents(omega, material.c()),
        Family::Stokes => stokes_exponents(omega),
    }
}
