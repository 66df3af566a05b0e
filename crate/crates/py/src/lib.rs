//! Python bindings. Reports come back as plain dicts (decoded from the JSON
//! the harness emits), so the schema matches the CLI output.

use std::f64::consts::PI;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;
use sif_core::angular::{check_ij_identity, gamma_lame, gamma_limit_study, gamma_stokes, mode_pair};
use sif_core::expr::{self, FieldExpr};
use sif_core::geometry::CornerFrame;
use sif_core::harness::{run_eps_sweep, run_manufactured, solve_and_extract, to_csv, to_json, CsvTable, RunConfig};
use sif_core::spectral::{self, Family, MaterialParams};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<T: Serialize>(py: Python<'_>, v: &T) -> PyResult<Py<PyAny>> {
    let text = to_json(v).map_err(value_err)?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn family(name: &str) -> PyResult<Family> {
    name.parse().map_err(PyValueError::new_err)
}

fn material(fam: Family, mu: f64, eps: f64) -> PyResult<MaterialParams> {
    let eps = if fam == Family::Stokes { 0.0 } else { eps };
    MaterialParams::new(mu, eps).map_err(value_err)
}

/// Critical opening angle above which the Stokes corner has two singular modes.
#[pyfunction]
fn critical_angle() -> f64 {
    spectral::critical_angle()
}

#[pyfunction]
#[pyo3(signature = (family_name, omega = 1.5 * PI, mu = 1.0, eps = 1e-2))]
fn exponents(py: Python<'_>, family_name: &str, omega: f64, mu: f64, eps: f64) -> PyResult<Py<PyAny>> {
    let f = family(family_name)?;
    let t = spectral::exponents_for(f, omega, &material(f, mu, eps)?).map_err(value_err)?;
    to_py(py, &t)
}

/// Values of the primal (or dual) mode at a point: (ux, uy, scalar).
#[pyfunction]
#[pyo3(signature = (family_name, x, y, index = 1, omega = 1.5 * PI, mu = 1.0, eps = 1e-2, dual = false))]
#[allow(clippy::too_many_arguments)]
fn mode_value(family_name: &str, x: f64, y: f64, index: usize, omega: f64, mu: f64, eps: f64, dual: bool) -> PyResult<(f64, f64, f64)> {
    let f = family(family_name)?;
    let (p, d) = mode_pair(f, CornerFrame::symmetric(omega), &material(f, mu, eps)?, index).map_err(value_err)?;
    let s = if dual { d.at([x, y]) } else { p.at([x, y]) };
    Ok((s.value[0], s.value[1], s.scalar))
}

#[pyfunction]
#[pyo3(signature = (family_name, index = 1, omega = 1.5 * PI, mu = 1.0, eps = 1e-2))]
fn gamma(py: Python<'_>, family_name: &str, index: usize, omega: f64, mu: f64, eps: f64) -> PyResult<Py<PyAny>> {
    let f = family(family_name)?;
    let m = material(f, mu, eps)?;
    let (p, d) = mode_pair(f, CornerFrame::symmetric(omega), &m, index).map_err(value_err)?;
    let g = match f {
        Family::Lame => gamma_lame(&m, &p, &d),
        Family::Stokes => gamma_stokes(&p, &d),
    }
    .map_err(value_err)?;
    to_py(py, &g)
}

#[pyfunction]
#[pyo3(signature = (eps_grid, index = 1, omega = 1.5 * PI, mu = 1.0))]
fn gamma_study(py: Python<'_>, eps_grid: Vec<f64>, index: usize, omega: f64, mu: f64) -> PyResult<Py<PyAny>> {
    let s = gamma_limit_study(index, mu, CornerFrame::symmetric(omega), &eps_grid).map_err(value_err)?;
    to_py(py, &s)
}

#[pyfunction]
#[pyo3(signature = (eps, index = 1, omega = 1.5 * PI, mu = 1.0, n = 720))]
fn identity_check(py: Python<'_>, eps: f64, index: usize, omega: f64, mu: f64, n: usize) -> PyResult<Py<PyAny>> {
    let m = MaterialParams::new(mu, eps).map_err(value_err)?;
    to_py(py, &check_ij_identity(index, &m, CornerFrame::symmetric(omega), n).map_err(value_err)?)
}

/// Parsed field expression in x, y, r, theta.
#[pyclass(frozen, name = "Expr")]
struct PyExpr {
    inner: FieldExpr,
}

#[pymethods]
impl PyExpr {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        Ok(PyExpr { inner: expr::parse(text).map_err(value_err)? })
    }

    #[pyo3(signature = (x, y, omega = 1.5 * PI))]
    fn eval(&self, x: f64, y: f64, omega: f64) -> PyResult<f64> {
        self.inner.eval(x, y, &CornerFrame::symmetric(omega)).map_err(value_err)
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Expr({:?})", self.inner.to_string())
    }
}

/// Validated INI run configuration.
#[pyclass(frozen, name = "Config")]
struct PyConfig {
    inner: RunConfig,
}

fn report<T: Serialize + CsvTable>(py: Python<'_>, r: &T, csv: bool) -> PyResult<Py<PyAny>> {
    if csv {
        Ok(to_csv(r).into_pyobject(py)?.into_any().unbind())
    } else {
        to_py(py, r)
    }
}

#[pymethods]
impl PyConfig {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        let inner = RunConfig::from_ini(text).map_err(value_err)?;
        inner.validate().map_err(value_err)?;
        Ok(PyConfig { inner })
    }

    #[staticmethod]
    fn from_file(path: &str) -> PyResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| PyIOError::new_err(e.to_string()))?;
        Self::new(&text)
    }

    /// Solve once and extract the coefficients (penalized if eps > 0, else Stokes).
    #[pyo3(signature = (csv = false))]
    fn extract(&self, py: Python<'_>, csv: bool) -> PyResult<Py<PyAny>> {
        let c = &self.inner;
        let eps = c.material.eps.unwrap_or(0.0);
        let fam = if eps > 0.0 { Family::Lame } else { Family::Stokes };
        let m = MaterialParams::new(c.material.mu, eps).map_err(value_err)?;
        let space = c.space().map_err(value_err)?;
        let data = c.problem_data().map_err(value_err)?;
        let (rep, _) = py.detach(|| solve_and_extract(fam, &space, m, &data)).map_err(value_err)?;
        report(py, &rep, csv)
    }

    #[pyo3(signature = (csv = false))]
    fn sweep(&self, py: Python<'_>, csv: bool) -> PyResult<Py<PyAny>> {
        let t = py.detach(|| run_eps_sweep(&self.inner)).map_err(value_err)?;
        report(py, &t, csv)
    }

    #[pyo3(signature = (csv = false))]
    fn manufactured(&self, py: Python<'_>, csv: bool) -> PyResult<Py<PyAny>> {
        let r = py.detach(|| run_manufactured(&self.inner)).map_err(value_err)?;
        report(py, &r, csv)
    }
}

#[pymodule]
fn sif_lab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(critical_angle, m)?)?;
    m.add_function(wrap_pyfunction!(exponents, m)?)?;
    m.add_function(wrap_pyfunction!(mode_value, m)?)?;
    m.add_function(wrap_pyfunction!(gamma, m)?)?;
    m.add_function(wrap_pyfunction!(gamma_study, m)?)?;
    m.add_function(wrap_pyfunction!(identity_check, m)?)?;
    m.add_class::<PyExpr>()?;
    m.add_class::<PyConfig>()?;
    Ok(())
}
