use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_vdw-pme");

const SMALL: &str = "\
name = small
mesh.nx = 8
mesh.ny = 16
time.tau = 1e-3
time.steps = 4
model.law = vdw
boundary.chat = 1
initial.kind = block
output.snapshot_every = 2
";

fn run(dir: &Path, cfg: &str, extra: &[&str]) -> Output {
    let path = dir.join("run.cfg");
    fs::write(&path, cfg).unwrap();
    Command::new(BIN)
        .arg("run")
        .arg(&path)
        .args(extra)
        .env_remove("VDW_PME_OUT")
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn writes_snapshots_and_diagnostics() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = run(tmp.path(), SMALL, &["--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    for step in [0, 2, 4] {
        let csv = fs::read_to_string(out.join(format!("snapshot_{step:05}.csv"))).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("x,y,c,chat"));
        let rows: Vec<&str> = lines.collect();
        assert_eq!(rows.len(), 9 * 17);
        for r in &rows {
            let cols: Vec<&str> = r.split(',').collect();
            assert_eq!(cols.len(), 4);
            for c in cols {
                let mantissa = c.trim_start_matches('-').split('e').next().unwrap();
                assert_eq!(mantissa.replace('.', "").len(), 17, "{c}");
                c.parse::<f64>().unwrap();
            }
        }
        let vtk = fs::read_to_string(out.join(format!("snapshot_{step:05}.vtk"))).unwrap();
        assert_eq!(vtk.lines().next(), Some("# vtk DataFile Version 3.0"));
        assert!(vtk.contains("DATASET STRUCTURED_POINTS"));
        assert!(vtk.contains("DIMENSIONS 9 17 1"));
    }
    assert!(!out.join("snapshot_00001.csv").exists());

    let diag = fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    assert_eq!(diag.lines().count(), 1 + 5);
    assert!(out.join("supports.csv").exists());
}

#[test]
fn output_dir_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("env-out");
    let path = tmp.path().join("run.cfg");
    fs::write(&path, SMALL).unwrap();
    let o = Command::new(BIN)
        .arg("run")
        .arg(&path)
        .arg("--no-vtk")
        .env("VDW_PME_OUT", &out)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(out.join("snapshot_00004.csv").exists());
    assert!(!out.join("snapshot_00004.vtk").exists());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for d in [&a, &b] {
        let o = run(tmp.path(), SMALL, &["--out", d.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
    }
    for name in ["snapshot_00004.csv", "diagnostics.csv", "snapshot_00004.vtk"] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn snapshot_flag_overrides_config() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = run(
        tmp.path(),
        SMALL,
        &["--out", out.to_str().unwrap(), "--snapshot-every", "1"],
    );
    assert_eq!(o.status.code(), Some(0));
    for step in 0..=4 {
        assert!(out.join(format!("snapshot_{step:05}.csv")).exists());
    }
}

#[test]
fn unknown_key_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = format!("{SMALL}model.diffusivity = 2\n");
    let o = run(tmp.path(), &cfg, &["--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let msg = stderr(&o);
    assert!(msg.contains("model.diffusivity"), "{msg}");
    assert!(msg.contains("10"), "line number missing: {msg}");
    assert!(!tmp.path().join("o").exists());
}

#[test]
fn bad_values_are_config_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        SMALL.replace("time.tau = 1e-3", "time.tau = -1"),
        SMALL.replace("mesh.nx = 8", "mesh.nx = zero"),
        SMALL.replace("initial.kind = block", "initial.kind = blob"),
        format!("{SMALL}time.tau = 1e-3\n"),
        format!("{SMALL}just some words\n"),
    ];
    for cfg in &cases {
        let o = run(tmp.path(), cfg, &[]);
        assert_eq!(o.status.code(), Some(2), "{cfg}: {}", stderr(&o));
    }
}

#[test]
fn missing_config_and_double_source_are_rejected() {
    let o = Command::new(BIN).arg("run").env_remove("VDW_PME_OUT").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let tmp = tempfile::tempdir().unwrap();
    let o = run(tmp.path(), SMALL, &["--preset", "barenblatt"]);
    assert_eq!(o.status.code(), Some(2));
    let o = Command::new(BIN)
        .args(["run", "/nonexistent/run.cfg"])
        .output()
        .unwrap();
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn failing_linear_solver_exits_with_solver_code() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = format!("{SMALL}solver.kind = cg\nsolver.max_iter = 1\n");
    let o = run(tmp.path(), &cfg, &["--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn strict_picard_aborts_on_iteration_limit() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = format!("{SMALL}picard.iter_max = 1\n");
    let out = tmp.path().join("o");
    let lenient = run(tmp.path(), &cfg, &["--out", out.to_str().unwrap()]);
    assert_eq!(lenient.status.code(), Some(0), "{}", stderr(&lenient));
    let strict = run(tmp.path(), &cfg, &["--out", out.to_str().unwrap(), "--strict-picard"]);
    assert_eq!(strict.status.code(), Some(3), "{}", stderr(&strict));
}

#[test]
fn preset_with_coarse_mesh() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("p");
    let o = Command::new(BIN)
        .args([
            "run",
            "--preset",
            "barenblatt",
            "--h-exp",
            "4",
            "--snapshot-every",
            "0",
            "--no-vtk",
            "--out",
        ])
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("snapshot_00100.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 17 * 33);
    assert!(out.join("snapshot_00000.csv").exists());
}

#[test]
fn preset_subcommand_prints_source() {
    let o = Command::new(BIN).args(["preset", "experiment1"]).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("initial.kind"));
    let o = Command::new(BIN).args(["preset", "nope"]).output().unwrap();
    assert_ne!(o.status.code(), Some(0));
}
