use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
[grid]
nx = 64
np = 64
x_min_length = -8.0
x_max_length = 8.0
p_min_momentum = -8.0
p_max_momentum = 8.0
hbar_action = 1.0

[potential]
kind = "quartic_double_well"
a_energy_per_length2 = 1.0
b_energy_per_length4 = 0.5

[initial]
kind = "gaussian"
x0_length = 1.0
sigma_x_length = 0.7071067811865476
sigma_p_momentum = 0.7071067811865476

[evolution]
bracket = "moyal"
dt_time = 0.02
n_steps = 50
record_every = 5

[outputs]
snapshot_every_steps = 25
"#;

fn wignerlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wignerlab")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn run_is_reproducible_and_embeds_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.toml", SMALL);
    let mut csvs = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let o = wignerlab(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
        assert_eq!(fs::read_to_string(out.join("trajectory.csv.config.toml")).unwrap(), SMALL);
        csvs.push(fs::read(out.join("trajectory.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
    assert!(String::from_utf8_lossy(&csvs[0]).starts_with("t,norm,"));
}

#[test]
fn snapshot_converts_to_pgm() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.toml", SMALL);
    let out = dir.path().join("out");
    assert!(wignerlab(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]).status.success());
    let snap = out.join("snapshots/snap_000050.bin");
    assert!(snap.exists());
    let pgm = dir.path().join("w.pgm");
    let o = wignerlab(&["snapshot-to-pgm", snap.to_str().unwrap(), "--out", pgm.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let bytes = fs::read(&pgm).unwrap();
    assert!(bytes.starts_with(b"P5\n# min="));
    assert!(bytes.len() > 2 * 64 * 64);
}

#[test]
fn malformed_config_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    for (bad, field) in [
        (SMALL.replace("nx = 64", "nx = 60"), "grid.nx"),
        (SMALL.replace("dt_time = 0.02", "dt_time = -0.02"), "evolution.dt_time"),
        (SMALL.replace("hbar_action = 1.0", "hbar_action = \"one\""), "grid.hbar_action"),
        (SMALL.replace("record_every = 5", "record_every = 5\nsteps_total = 3"), "evolution.steps_total"),
    ] {
        let cfg = write(dir.path(), "bad.toml", &bad);
        let o = wignerlab(&["run", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{field}: {}", stderr(&o));
        assert!(stderr(&o).contains(field), "{field}: {}", stderr(&o));
    }
    let o = wignerlab(&["run", "--config", dir.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sweep_is_thread_independent_and_reports_failures() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{SMALL}\n[sweep]\nparameter = \"hbar\"\nvalues = [1.0, 0.5, 40.0]\npaired = true\n");
    let cfg = write(dir.path(), "sweep.toml", &text);
    let mut summaries = Vec::new();
    for threads in ["1", "3"] {
        let out = dir.path().join(format!("t{threads}"));
        let o = wignerlab(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap(), "--parallel", threads]);
        assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
        let failures = fs::read_to_string(out.join("failures.csv")).unwrap();
        assert_eq!(failures.lines().count(), 2, "{failures}");
        assert!(out.join("member_000/breakdown.json").exists());
        summaries.push(fs::read(out.join("summary.csv")).unwrap());
    }
    assert_eq!(summaries[0], summaries[1]);
}

#[test]
fn compare_requires_a_quantum_bracket() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &SMALL.replace("bracket = \"moyal\"", "bracket = \"poisson\""));
    let o = wignerlab(&["compare", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn estimate_prints_recurrence_time() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/hyperion.toml");
    let o = wignerlab(&["estimate", "--config", scenario.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("t_r_years"), "{text}");
    assert!(dir.path().join("estimate.csv").exists());
    assert!(dir.path().join("estimate.csv.config.toml").exists());
}
