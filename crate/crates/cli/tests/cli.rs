use std::process::{Command, Output};

fn hygrofrac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hygrofrac"))
        .args(args)
        .env_remove("HYGROFRAC_OUT")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn run_writes_snapshots_and_series() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sf");
    let o = hygrofrac(&["run", "single_fibre", "--mesh-scale", "4", "--quiet", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let vtk = std::fs::read_dir(&out)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "vtk"))
        .count();
    assert!(vtk >= 3);
    let csv = std::fs::read_to_string(out.join("series.csv")).unwrap();
    assert!(csv.starts_with("time_s,reaction_force_N"));
    assert!(stdout(&o).contains("peak_force"));
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_hygrofrac"))
        .args(["run", "single_fibre", "--mesh-scale", "4", "--dt-scale", "10", "--quiet"])
        .env("HYGROFRAC_OUT", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("summary.txt").exists());
}

#[test]
fn validate_reports_line_and_key() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    let mut text = String::from_utf8(hygrofrac(&["show", "single_fibre"]).stdout).unwrap();
    text = text.replacen("length_scale = 0.001", "length_scale = -0.001", 1);
    std::fs::write(&path, &text).unwrap();
    let line = text.lines().position(|l| l.starts_with("length_scale")).unwrap() + 1;

    let o = hygrofrac(&["validate", path.to_str().unwrap()]);
    assert!(!o.status.success());
    let err = stderr(&o);
    assert!(err.contains(&format!("line {line}")), "{err}");
    assert!(err.contains("physics.length_scale"), "{err}");
}

#[test]
fn validate_accepts_shown_presets() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["single_fibre", "secp_plate", "laminate"] {
        let path = dir.path().join(format!("{name}.toml"));
        std::fs::write(&path, hygrofrac(&["show", name]).stdout).unwrap();
        let o = hygrofrac(&["validate", path.to_str().unwrap()]);
        assert!(o.status.success(), "{name}: {}", stderr(&o));
    }
}

#[test]
fn unknown_scenario_is_an_error() {
    let o = hygrofrac(&["run", "no_such_thing"]);
    assert!(!o.status.success());
    assert!(stderr(&o).starts_with("error:"));
}

#[test]
fn list_presets_names_every_preset() {
    let o = hygrofrac(&["list-presets"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for name in ["single_fibre", "multi_fibre_sa", "multi_fibre_rd", "ply", "laminate", "secp_plate"] {
        assert!(text.contains(name), "{name}");
    }
}

#[test]
fn oracle_prints_pass_line() {
    let o = hygrofrac(&["oracle", "at2_homogeneous"]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("PASS at2_homogeneous"));
    assert!(!hygrofrac(&["oracle", "nonsense"]).status.success());
}
