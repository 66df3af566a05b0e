use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{e_r, e_theta, CornerFrame, CornerPolygon, Point};
use crate::spectral::{ExponentTable, Family, MaterialParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModeError {
    #[error("mode index {index} out of range (available: {count})")]
    IndexOutOfRange { index: usize, count: usize },
    #[error("exponent table does not match the requested family/material: {0}")]
    FamilyMismatch(String),
    #[error("radius {0} must be positive")]
    NonpositiveRadius(f64),
    #[error("divergence closed form is only defined for the Lame family")]
    NotLame,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Primal,
    Dual,
}

/// Angular coefficients at t = theta - omega_bar with their t-derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Angular {
    pub a: f64,
    pub b: f64,
    pub da: f64,
    pub db: f64,
}

/// Everything a consumer needs at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSample {
    pub value: Point,
    /// grad[k][l] = d value_l / d x_k
    pub grad: [[f64; 2]; 2],
    /// Lame: eps^-1 div; Stokes: the pressure.
    pub scalar: f64,
}

/// Singular (primal) or dual singular function r^a T(theta) of the Lame or
/// Stokes family, with a = +lambda_i or -lambda_i.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularMode {
    pub family: Family,
    pub kind: Kind,
    pub index: usize,
    /// Signed exponent.
    pub a: f64,
    pub frame: CornerFrame,
    pub mu: f64,
    /// Lame constant (1 for Stokes).
    pub c: f64,
    /// Velocity prefactor: 1 for Lame, 1/mu for Stokes.
    pub prefactor: f64,
}

pub fn make_mode(
    family: Family,
    kind: Kind,
    index: usize,
    frame: CornerFrame,
    material: &MaterialParams,
    table: &ExponentTable,
) -> Result<SingularMode, ModeError> {
    if table.family != family {
        return Err(ModeError::FamilyMismatch(format!("table is {:?}, requested {:?}", table.family, family)));
    }
    if (table.omega - frame.omega()).abs() > 1e-12 {
        return Err(ModeError::FamilyMismatch(format!("table omega {} vs frame omega {}", table.omega, frame.omega())));
    }
    if family == Family::Lame && table.c != material.c() {
        return Err(ModeError::FamilyMismatch(format!("table C {} vs material C {}", table.c, material.c())));
    }
    if index == 0 || index > table.count {
        return Err(ModeError::IndexOutOfRange { index, count: table.count });
    }
    let l = table.exponents[index - 1];
    let a = match kind {
        Kind::Primal => l,
        Kind::Dual => -l,
    };
    let prefactor = match family {
        Family::Lame => 1.0,
        Family::Stokes => 1.0 / material.mu,
    };
    Ok(SingularMode { family, kind, index, a, frame, mu: material.mu, c: table.c, prefactor })
}

impl SingularMode {
    /// The exponent lambda_i (positive).
    pub fn lambda(&self) -> f64 {
        self.a.abs()
    }

    pub fn angular(&self, t: f64) -> Angular {
        let (a, c, w) = (self.a, self.c, self.frame.omega());
        let (s1, c1) = ((1.0 - a) * t).sin_cos();
        let (s2, c2) = ((1.0 + a) * t).sin_cos();
        if self.index == 1 {
            let k = c * (a * w).cos() + a * w.cos();
            Angular {
                a: -(c - a) * s1 + k * s2,
                b: -(c + a) * c1 + k * c2,
                da: -(c - a) * (1.0 - a) * c1 + k * (1.0 + a) * c2,
                db: (c + a) * (1.0 - a) * s1 - k * (1.0 + a) * s2,
            }
        } else {
            let k = c * (a * w).cos() - a * w.cos();
            Angular {
                a: -(c - a) * c1 + k * c2,
                b: (c + a) * s1 - k * s2,
                da: (c - a) * (1.0 - a) * s1 - k * (1.0 + a) * s2,
                db: (c + a) * (1.0 - a) * c1 - k * (1.0 + a) * c2,
            }
        }
    }

    /// S_i((1-a)t): sin for i = 1, cos for i = 2.
    fn s_i(&self, t: f64) -> f64 {
        let x = (1.0 - self.a) * t;
        if self.index == 1 {
            x.sin()
        } else {
            x.cos()
        }
    }

    /// T(theta) in Cartesian components (no prefactor, no radial power).
    pub fn t_vec(&self, theta: f64) -> Point {
        let g = self.angular(theta - self.frame.omega_bar());
        let (er, et) = (e_r(theta), e_theta(theta));
        [g.a * er[0] + g.b * et[0], g.a * er[1] + g.b * et[1]]
    }

    fn check_r(r: f64) -> Result<(), ModeError> {
        if r > 0.0 {
            Ok(())
        } else {
            Err(ModeError::NonpositiveRadius(r))
        }
    }

    pub fn eval(&self, r: f64, theta: f64) -> Result<Point, ModeError> {
        Self::check_r(r)?;
        Ok(self.value_polar(r, theta))
    }

    pub fn eval_grad(&self, r: f64, theta: f64) -> Result<[[f64; 2]; 2], ModeError> {
        Self::check_r(r)?;
        Ok(self.grad_polar(r, theta))
    }

    /// eps^-1 div of a Lame mode from its closed form, with no division by eps.
    pub fn eval_div_scaled(&self, r: f64, theta: f64) -> Result<f64, ModeError> {
        Self::check_r(r)?;
        if self.family != Family::Lame {
            return Err(ModeError::NotLame);
        }
        Ok(self.scalar_polar(r, theta))
    }

    /// Stokes pressure r^(a-1) C^s(theta - omega_bar).
    pub fn eval_pressure(&self, r: f64, theta: f64) -> Result<f64, ModeError> {
        Self::check_r(r)?;
        if self.family != Family::Stokes {
            return Err(ModeError::FamilyMismatch("pressure is only defined for Stokes modes".into()));
        }
        Ok(self.scalar_polar(r, theta))
    }

    fn value_polar(&self, r: f64, theta: f64) -> Point {
        let s = self.prefactor * r.powf(self.a);
        let t = self.t_vec(theta);
        [s * t[0], s * t[1]]
    }

    fn grad_polar(&self, r: f64, theta: f64) -> [[f64; 2]; 2] {
        let g = self.angular(theta - self.frame.omega_bar());
        let (er, et) = (e_r(theta), e_theta(theta));
        let tv = [g.a * er[0] + g.b * et[0], g.a * er[1] + g.b * et[1]];
        let (p, q) = (g.da - g.b, g.db + g.a);
        let dt = [p * er[0] + q * et[0], p * er[1] + q * et[1]];
        let s = self.prefactor * r.powf(self.a - 1.0);
        let mut out = [[0.0; 2]; 2];
        for k in 0..2 {
            for l in 0..2 {
                out[k][l] = s * (self.a * er[k] * tv[l] + et[k] * dt[l]);
            }
        }
        out
    }

    /// Lame: eps^-1 div = -4 mu a r^(a-1) S_i; Stokes: pressure 4 a r^(a-1) S_i.
    fn scalar_polar(&self, r: f64, theta: f64) -> f64 {
        let base = 4.0 * self.a * r.powf(self.a - 1.0) * self.s_i(theta - self.frame.omega_bar());
        match self.family {
            Family::Lame => -self.mu * base,
            Family::Stokes => base,
        }
    }

    /// Pressure-like companion used by the extraction formulas: -eps^-1 div for
    /// Lame modes, the pressure for Stokes modes.
    pub fn pressure_like(&self, r: f64, theta: f64) -> f64 {
        match self.family {
            Family::Lame => -self.scalar_polar(r, theta),
            Family::Stokes => self.scalar_polar(r, theta),
        }
    }

    /// Value, gradient and scalar companion at a Cartesian point (must not be the corner).
    pub fn at(&self, p: Point) -> ModeSample {
        let (r, theta) = self.frame.polar(p);
        ModeSample { value: self.value_polar(r, theta), grad: self.grad_polar(r, theta), scalar: self.scalar_polar(r, theta) }
    }

    pub fn value_at(&self, p: Point) -> Point {
        let (r, theta) = self.frame.polar(p);
        self.value_polar(r, theta)
    }

    /// Values on `edge` of `polygon` at parameters s in [0,1]; exact zeros on the corner edges.
    pub fn trace_on_edge(&self, polygon: &CornerPolygon, edge: usize, params: &[f64]) -> Vec<Point> {
        if polygon.is_corner_edge(edge) {
            return vec![[0.0, 0.0]; params.len()];
        }
        let e = polygon.edge(edge);
        params.iter().map(|&s| self.value_at(e.point_at(s))).collect()
    }
}
