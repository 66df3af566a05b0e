use std::process::Command;

fn lab(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_sif-lab")).args(args).output().unwrap()
}

fn write_config(name: &str, text: &str) -> std::path::PathBuf {
    let p = std::env::temp_dir().join(format!("sif-cli-{}-{name}.ini", std::process::id()));
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn eigen_json_matches_library() {
    let out = lab(&["eigen", "--family", "stokes", "--omega-pi", "1.5", "--format", "json"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["count"], 2);
    let lam = v["exponents"][0].as_f64().unwrap();
    // Stokes characteristic equation at 3pi/2: sin^2(lam w) = lam^2 sin^2 w
    let w = 1.5 * std::f64::consts::PI;
    assert!(((lam * w).sin().powi(2) - lam * lam * w.sin().powi(2)).abs() < 1e-12);
}

#[test]
fn mode_csv_has_requested_rows() {
    let out = lab(&["mode", "--family", "lame", "--eps", "1e-2", "--n", "5"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 6);
    assert_eq!(lines[0], "r,theta,x,y,ux,uy,scalar");
    // the mode vanishes on both corner edges
    for l in [lines[1], lines[5]] {
        let f: Vec<f64> = l.split(',').map(|s| s.parse().unwrap()).collect();
        assert!(f[4].abs() < 1e-12 && f[5].abs() < 1e-12, "{l}");
    }
}

#[test]
fn commands_needing_config_fail_cleanly() {
    let out = lab(&["sweep"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--config"));
}

#[test]
fn bad_config_is_reported() {
    let p = write_config("bad", "[domain]\nshape = lshape\n[material]\nmu = -1\n");
    let out = lab(&["--config", p.to_str().unwrap(), "extract"]);
    std::fs::remove_file(&p).unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("sif-lab:"));
}

#[test]
fn extract_writes_output_file() {
    let p = write_config(
        "extract",
        "[domain]\nshape = lshape\n[mesh]\nh = 0.25\ngrading_levels = 3\n[material]\nmu = 1\neps = 1e-2\n[data]\nf_x = \"1 + y^2\"\nf_y = \"x*y\"\n",
    );
    let out_path = p.with_extension("json");
    let out = lab(&["--config", p.to_str().unwrap(), "--out", out_path.to_str().unwrap(), "--format", "json", "extract"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(v["family"], "lame");
    assert!(v["c1"].as_f64().unwrap().is_finite());
    std::fs::remove_file(&p).unwrap();
    std::fs::remove_file(&out_path).unwrap();
}
