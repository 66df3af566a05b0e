use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::config::Format;
use super::manufactured::RecoveryReport;
use super::sweep::{SweepRecord, SweepTable, SWEEP_COLUMNS};
use super::HarnessError;
use crate::angular::{AngularIntegrals, GammaStudy, IdentityReport};
use crate::extraction::SifReport;
use crate::spectral::ExponentTable;

/// Anything that can be written as a CSV table with a fixed header.
pub trait CsvTable {
    fn header(&self) -> Vec<String>;
    fn rows(&self) -> Vec<Vec<String>>;
}

fn fmt(v: f64) -> String {
    format!("{v:?}")
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt).unwrap_or_default()
}

impl CsvTable for [SweepRecord] {
    fn header(&self) -> Vec<String> {
        SWEEP_COLUMNS.iter().map(|s| s.to_string()).collect()
    }
    fn rows(&self) -> Vec<Vec<String>> {
        self.iter().map(|r| r.values().iter().map(|&v| fmt(v)).collect()).collect()
    }
}

impl CsvTable for SweepTable {
    fn header(&self) -> Vec<String> {
        self.rows.header()
    }
    fn rows(&self) -> Vec<Vec<String>> {
        self.rows.as_slice().rows()
    }
}

impl CsvTable for SifReport {
    fn header(&self) -> Vec<String> {
        ["family", "eps", "mu", "gamma1", "gamma2", "C1", "C2", "Cstar", "c1", "c2"].map(String::from).to_vec()
    }
    fn rows(&self) -> Vec<Vec<String>> {
        vec![vec![
            self.family.name().to_string(),
            opt(self.eps),
            fmt(self.mu),
            fmt(self.gamma1),
            opt(self.gamma2),
            fmt(self.big_c1),
            opt(self.big_c2),
            opt(self.cstar),
            fmt(self.c1),
            opt(self.c2),
        ]]
    }
}

impl CsvTable for RecoveryReport {
    fn header(&self) -> Vec<String> {
        ["h", "elements", "c1", "c2", "err1", "err2", "rel1", "rel2", "wall_time"].map(String::from).to_vec()
    }
    fn rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                let g = |v: &Vec<f64>, i: usize| opt(v.get(i).copied());
                vec![
                    fmt(r.h),
                    r.elements.to_string(),
                    g(&r.c, 0),
                    g(&r.c, 1),
                    g(&r.abs_err, 0),
                    g(&r.abs_err, 1),
                    g(&r.rel_err, 0),
                    g(&r.rel_err, 1),
                    fmt(r.wall_time),
                ]
            })
            .collect()
    }
}

impl CsvTable for ExponentTable {
    fn header(&self) -> Vec<String> {
        ["family", "omega", "c", "k", "exponent", "bracket_lo", "bracket_hi", "residual", "singular"].map(String::from).to_vec()
    }
    fn rows(&self) -> Vec<Vec<String>> {
        (0..3)
            .map(|k| {
                vec![
                    self.family.name().to_string(),
                    fmt(self.omega),
                    fmt(self.c),
                    (k + 1).to_string(),
                    fmt(self.exponents[k]),
                    fmt(self.brackets[k].0),
                    fmt(self.brackets[k].1),
                    fmt(self.residuals[k]),
                    (k < self.count).to_string(),
                ]
            })
            .collect()
    }
}

impl CsvTable for AngularIntegrals {
    fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = ["family", "index", "eps", "gamma", "order", "error_estimate"].map(String::from).to_vec();
        h.extend((1..=self.terms.len()).map(|k| format!("term{k}")));
        h
    }
    fn rows(&self) -> Vec<Vec<String>> {
        let mut r = vec![
            self.family.name().to_string(),
            self.index.to_string(),
            opt(self.eps),
            fmt(self.gamma),
            self.order.to_string(),
            fmt(self.error_estimate),
        ];
        r.extend(self.terms.iter().map(|&t| fmt(t)));
        vec![r]
    }
}

impl CsvTable for IdentityReport {
    fn header(&self) -> Vec<String> {
        ["index", "eps", "max_deviation", "scale", "sup_k"].map(String::from).to_vec()
    }
    fn rows(&self) -> Vec<Vec<String>> {
        vec![vec![self.index.to_string(), fmt(self.eps), fmt(self.max_deviation), fmt(self.scale), fmt(self.sup_k)]]
    }
}

impl CsvTable for GammaStudy {
    fn header(&self) -> Vec<String> {
        ["index", "mu", "eps", "gamma_eps", "mu_gamma_s", "diff", "slope"].map(String::from).to_vec()
    }
    fn rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                vec![
                    self.index.to_string(),
                    fmt(self.mu),
                    fmt(r.eps),
                    fmt(r.gamma_eps),
                    fmt(self.mu * self.gamma_stokes),
                    fmt(r.diff),
                    opt(r.slope),
                ]
            })
            .collect()
    }
}

pub fn to_csv<T: CsvTable + ?Sized>(t: &T) -> String {
    let mut s = t.header().join(",");
    s.push('\n');
    for row in t.rows() {
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

pub fn to_json<T: Serialize + ?Sized>(t: &T) -> Result<String, HarnessError> {
    Ok(serde_json::to_string_pretty(t)?)
}

/// Write a report to `path`, or stdout when `path` is None.
pub fn emit<T: CsvTable + Serialize + ?Sized>(report: &T, format: Format, path: Option<&Path>) -> Result<(), HarnessError> {
    let text = match format {
        Format::Csv => to_csv(report),
        Format::Json => to_json(report)? + "\n",
    };
    let io = |e: std::io::Error| HarnessError::Io(e.to_string());
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| HarnessError::Io(format!("{}: {e}", p.display()))),
        None => std::io::stdout().lock().write_all(text.as_bytes()).map_err(io),
    }
}
