use std::f64::consts::PI;

use sif_core::harness::*;
use sif_core::spectral::Family;

const SWEEP: &str = "
# small sweep
[domain]
shape = lshape
[mesh]
h = 0.25
grading_levels = 4
[material]
mu = 1.0
eps_grid = \"1e-1, 1e-4, 4\"
[data]
f_x = \"1 + y^2\"
f_y = \"x*y\"
";

fn strip_wall_time(csv: &str) -> String {
    csv.lines().map(|l| l.rsplit_once(',').unwrap().0.to_string() + "\n").collect()
}

#[test]
fn config_parsing() {
    let c = RunConfig::from_ini(SWEEP).unwrap();
    assert_eq!(c.domain, DomainSpec::LShape);
    assert_eq!(c.mesh.grading_levels, 4);
    assert_eq!(c.mesh.grading_ratio, 0.5);
    assert_eq!(c.material.eps_grid.unwrap().values().len(), 4);
    let v = c.material.eps_grid.unwrap().values();
    assert!((v[0] - 1e-1).abs() < 1e-16 && (v[3] - 1e-4).abs() < 1e-19);
    assert!((v[1] - 1e-2).abs() < 1e-17);
    c.validate().unwrap();
    let d = RunConfig::from_ini("[domain]\nshape = lshape\n[material]\nmu = 2\neps = 1e-3\n").unwrap();
    assert_eq!(d.mesh, MeshSpec { h: 0.05, grading_ratio: 0.5, grading_levels: 6, file: None });
    assert_eq!(d.material.eps_floor, DEFAULT_EPS_FLOOR);
}

#[test]
fn config_errors() {
    let bad = |text: &str| match RunConfig::from_ini(text).and_then(|c| c.validate().map(|_| c)) {
        Err(HarnessError::Config(msg)) => msg,
        other => panic!("expected a config error for {text:?}, got {other:?}"),
    };
    let base = "[domain]\nshape = lshape\n";
    bad(&format!("{base}[material]\nmu = 1\neps_grid = \"1e-1, 1e-2, 2\"\n"));
    bad(&format!("{base}[material]\nmu = 1\neps_grid = \"1e-1, 1e-7, 5\"\n"));
    bad(&format!("{base}[material]\nmu = -1\n"));
    bad("[material]\nmu = 1\n");
    bad(&format!("{base}[material]\nmu = 1\n[bogus]\nx = 1\n"));
    bad(&format!("{base}[material]\nmu = 1\nnu = 0.3\n"));
    bad(&format!("{base}[material]\nmu = 1\n[data]\nf_x = \"x +\"\n"));
    bad(&format!("{base}[material]\nmu = 1\n[data]\ng9_x = \"0\"\n"));
    bad(&format!("{base}[material]\nmu = 1\n[output]\nformat = xml\n"));
    let msg = bad(&format!("{base}[material]\nmu = 1\n[derivatives]\nq = \"x^2*y; x*y; x^2\"\n"));
    assert!(msg.contains("derivatives"), "{msg}");
    // a correct derivative triple passes
    let ok = RunConfig::from_ini(&format!("{base}[material]\nmu = 1\n[derivatives]\nq = \"x^2*y; 2*x*y; x^2\"\n")).unwrap();
    ok.validate().unwrap();
}

#[test]
fn polygon_domain_from_config() {
    let c = RunConfig::from_ini(
        "[domain]\nshape = polygon\nvertices = \"0,0; 0,-1; 1,-1; 1,1; -1,1; -1,0\"\ncorner = 0\n[material]\nmu = 1\neps = 0.01\n",
    )
    .unwrap();
    let p = c.polygon().unwrap();
    assert!((p.omega() - 1.5 * PI).abs() < 1e-14);
}

#[test]
fn sweep_table_output() {
    let cfg = RunConfig::from_ini(SWEEP).unwrap();
    let t = run_eps_sweep(&cfg).unwrap();
    assert_eq!(t.rows.len(), 4);
    assert!(t.rows.windows(2).all(|w| w[1].eps < w[0].eps));
    assert!(t.rows.iter().all(|r| r.c1_ref == t.rows[0].c1_ref && r.c2_ref == t.rows[0].c2_ref));
    assert_eq!(t.schema, "sif-lab/1");
    let csv = to_csv(&t);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 5);
    assert!(lines.iter().all(|l| l.split(',').count() == 14));
    assert_eq!(lines[0], SWEEP_COLUMNS.join(","));

    let json = to_json(&t).unwrap();
    let back: SweepTable = serde_json::from_str(&json).unwrap();
    assert_eq!(back, t);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["schema"], "sif-lab/1");

    // determinism apart from wall time
    let t2 = run_eps_sweep(&cfg).unwrap();
    assert_eq!(strip_wall_time(&to_csv(&t2)), strip_wall_time(&csv));

    let dir = std::env::temp_dir().join(format!("sif-harness-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("sweep.csv");
    emit(&t, Format::Csv, Some(&path)).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), csv);
    assert!(matches!(emit(&t, Format::Json, Some(&dir.join("missing/x.json"))), Err(HarnessError::Io(_))));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn empty_table_is_header_only() {
    let rows: Vec<SweepRecord> = vec![];
    assert_eq!(to_csv(rows.as_slice()), SWEEP_COLUMNS.join(",") + "\n");
}

#[test]
fn sif_report_emits_one_row() {
    let cfg = RunConfig::from_ini(SWEEP).unwrap();
    let sp = cfg.space().unwrap();
    let data = cfg.problem_data().unwrap();
    let m = sif_core::spectral::MaterialParams::new(1.0, 1e-2).unwrap();
    let (rep, _) = solve_and_extract(Family::Lame, &sp, m, &data).unwrap();
    let csv = to_csv(&rep);
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.lines().nth(1).unwrap().starts_with("lame,"));
    let back: sif_core::extraction::SifReport = serde_json::from_str(&to_json(&rep).unwrap()).unwrap();
    assert_eq!(back, rep);
}

#[test]
fn manufactured_without_singular_content() {
    let cfg = RunConfig::from_ini(
        "[domain]\nshape = lshape\n[material]\nmu = 1\neps = 1e-3\n[manufactured]\nfamily = lame\nc1 = 0\nc2 = 0\nh_levels = \"0.05\"\n",
    )
    .unwrap();
    let r = run_manufactured(&cfg).unwrap();
    // data scale: sup |w| on the L-shape
    let scale = (0..=100)
        .flat_map(|i| (0..=100).map(move |j| [-1.0 + 0.02 * i as f64, -1.0 + 0.02 * j as f64]))
        .filter(|p| !(p[0] < 0.0 && p[1] < 0.0))
        .map(|p| {
            let w = w_poly(p);
            w[0].hypot(w[1])
        })
        .fold(0.0, f64::max);
    assert!(r.rows[0].c.iter().all(|c| c.abs() < 1e-3 * scale), "{:?} scale {scale}", r.rows[0].c);
    assert_eq!(r.rows[0].rel_err, r.rows[0].abs_err);
    let csv = to_csv(&r);
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn manufactured_needs_penalty() {
    let cfg = RunConfig::from_ini(
        "[domain]\nshape = lshape\n[material]\nmu = 1\n[manufactured]\nfamily = lame\nc1 = 1\nc2 = 0\n",
    )
    .unwrap();
    assert!(matches!(run_manufactured(&cfg), Err(HarnessError::Config(_))));
}
