use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use heat_inverse_cli::series::{parse_two_columns, read_observations};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_heat-inverse"))
}

fn run(args: &[&str], cwd: &Path) -> Output {
    bin().args(args).current_dir(cwd).output().expect("binary runs")
}

fn ok(args: &[&str], cwd: &Path) -> Output {
    let out = run(args, cwd);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn stderr_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(out.stderr.trim_ascii()).expect("structured stderr")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn decay1_u1_is_exponential() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&["simulate", "--preset", "decay1", "--out", "d"], tmp.path());
    let f = read_observations(&tmp.path().join("d/observations.csv")).unwrap();
    let u1 = &f.observations.u1;
    for (i, &v) in u1.values().iter().enumerate() {
        assert!((v - (-u1.time(i)).exp()).abs() < 1e-13);
    }
    assert!(f.observations.u3.values().iter().all(|&v| v == 0.0));
}

#[test]
fn steady_preset_is_constant_in_time() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&["simulate", "--preset", "steady", "--out", "s"], tmp.path());
    let f = read_observations(&tmp.path().join("s/observations.csv")).unwrap();
    let uy = f.observations.uy.values();
    let exact = 1.0 - 1.0 / std::f64::consts::PI;
    let spread = uy.iter().fold(0.0f64, |a, &v| a.max((v - uy[0]).abs()));
    // Only the Simpson projection of the ramp, O(h⁴ m³), keeps this above
    // round-off.
    assert!(spread < 1e-9, "spread {spread:e}");
    // Truncated at 16 modes, the lifted series still matches 1 - y/π closely.
    assert!((uy[0] - exact).abs() < 1e-3);
}

#[test]
fn simulate_is_byte_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.toml",
        "preset = \"generic\"\nseed = 9\n[problem]\nt_final = 2.0\n[noise]\nkind = \"relative\"\nlevel = 1e-5\n",
    );
    let cfg = cfg.to_str().unwrap();
    ok(&["simulate", "--config", cfg, "--out", "a"], tmp.path());
    ok(&["simulate", "--config", cfg, "--out", "b"], tmp.path());
    for name in ["observations.csv", "observations.json"] {
        let a = std::fs::read(tmp.path().join("a").join(name)).unwrap();
        let b = std::fs::read(tmp.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
    ok(&["simulate", "--config", cfg, "--out", "c", "--seed", "10"], tmp.path());
    assert_ne!(
        std::fs::read(tmp.path().join("a/observations.csv")).unwrap(),
        std::fs::read(tmp.path().join("c/observations.csv")).unwrap()
    );
}

#[test]
fn decay1_round_trip_report() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&["simulate", "--preset", "decay1", "--out", "d"], tmp.path());
    ok(&["invert", "d/observations.csv", "--out", "r"], tmp.path());
    let report = std::fs::read_to_string(tmp.path().join("r/report.txt")).unwrap();
    let det = format!("{:.12}", -32.0 / (3.0 * std::f64::consts::PI));
    assert!(report.contains(&det), "{report}");
    assert!(report.contains("errors against the simulated truth"));

    let coeffs = std::fs::read_to_string(tmp.path().join("r/coefficients.csv")).unwrap();
    let g1_line = coeffs.lines().find(|l| l.starts_with("1,")).unwrap();
    let g1: f64 = g1_line.split(',').nth(1).unwrap().parse().unwrap();
    assert!((g1 - 1.0).abs() < 1e-10);

    let rec = std::fs::read_to_string(tmp.path().join("r/reconstruction.csv")).unwrap();
    for line in rec.lines().filter(|l| !l.starts_with('#')).skip(1) {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!(f[1].abs() < 1e-12 && f[2].abs() < 1e-10, "{line}");
    }
    for name in ["reconstruction.json", "reconstruction.csv", "coefficients.csv", "report.txt"] {
        let text = std::fs::read_to_string(tmp.path().join("r").join(name)).unwrap();
        assert!(text.contains("config_hash") && text.contains("seed"), "{name}");
    }
}

#[test]
fn truncated_input_fails_cleanly() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&["simulate", "--preset", "decay1", "--out", "d"], tmp.path());
    let text = std::fs::read_to_string(tmp.path().join("d/observations.csv")).unwrap();
    let cut: Vec<&str> = text.lines().take_while(|l| !l.starts_with("0.003")).collect();
    std::fs::write(tmp.path().join("short.csv"), cut.join("\n")).unwrap();
    let out = run(&["invert", "short.csv", "--out", "r"], tmp.path());
    assert!(!out.status.success());
    let err = stderr_json(&out);
    assert_eq!(err["error"], "precondition", "{err}");
    assert!(!tmp.path().join("r/report.txt").exists());
}

#[test]
fn malformed_csv_reports_line_number() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&["simulate", "--preset", "decay1", "--out", "d"], tmp.path());
    let text = std::fs::read_to_string(tmp.path().join("d/observations.csv")).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    lines[14] = "0.005,oops,0,0".into();
    std::fs::write(tmp.path().join("bad.csv"), lines.join("\n")).unwrap();
    let out = run(&["invert", "bad.csv"], tmp.path());
    assert_eq!(out.status.code(), Some(4));
    let err = stderr_json(&out);
    assert_eq!(err["error"], "parse");
    assert_eq!(err["line"], 15);
}

#[test]
fn unsafe_observation_point_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let y = std::f64::consts::FRAC_PI_2;
    let cfg = write_config(tmp.path(), "c.toml", &format!("preset = \"decay1\"\n[problem]\ny = {y:?}\n"));
    let out = run(&["simulate", "--config", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(5));
    let err = stderr_json(&out);
    assert_eq!(err["error"], "unsafe_observation_point");
    assert_eq!(err["unsafe_mode"], 2);
}

#[test]
fn unknown_config_keys_exit_with_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", "preset = \"decay1\"\nnoise_level = 3\n");
    let out = run(&["simulate", "--config", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "config");
}

#[test]
fn single_clean_trial_study_matches_invert() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.toml",
        "preset = \"generic\"\n[problem]\nt_final = 3.0\n[study]\nlevels = [0.0]\ntrials = 1\n",
    );
    let cfg = cfg.to_str().unwrap();
    ok(&["simulate", "--config", cfg, "--out", "o"], tmp.path());
    ok(&["invert", "o/observations.csv", "--config", cfg, "--out", "r"], tmp.path());
    ok(&["study", "--config", cfg, "--out", "s"], tmp.path());
    let rec: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("r/reconstruction.json")).unwrap()).unwrap();
    let st: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("s/study.json")).unwrap()).unwrap();
    let trials = st["study"]["trials_detail"].as_array().unwrap();
    assert_eq!(trials.len(), 1);
    assert_eq!(trials[0]["metrics"], rec["truth"]);
    let rows = std::fs::read_to_string(tmp.path().join("s/study_trials.csv")).unwrap();
    assert_eq!(rows.lines().filter(|l| !l.starts_with('#')).count(), 2);
}

#[test]
fn sampled_sources_are_read_relative_to_the_config() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::create_dir(tmp.path().join("cfg")).unwrap();
    let mut h = String::from("t,h\n");
    for i in 0..=1000 {
        let t = i as f64 * 1e-3;
        h.push_str(&format!("{t:?},{:?}\n", 1.0 + t));
    }
    std::fs::write(tmp.path().join("cfg/h.csv"), h).unwrap();
    write_config(
        &tmp.path().join("cfg"),
        "c.toml",
        "[problem]\nh = { file = \"h.csv\" }\nv = \"zero\"\ng = \"f1\"\nt_final = 1.0\n",
    );
    ok(&["simulate", "--config", "cfg/c.toml", "--out", "o"], tmp.path());
    ok(&["invert", "o/observations.csv", "--out", "r"], tmp.path());
    let rec: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("r/reconstruction.json")).unwrap()).unwrap();
    let h_err = rec["truth"]["h_error"].as_f64().unwrap();
    assert!(h_err < 1e-4, "{h_err:e}");
}

#[test]
fn study_outputs_are_deterministic_and_plottable() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.toml",
        "preset = \"fourmode\"\nseed = 3\n[problem]\nt_final = 3.0\ndt = 2e-3\n[inversion]\ndepth = 3\n[study]\nlevels = [1e-6]\ntrials = 3\n",
    );
    let cfg = cfg.to_str().unwrap();
    ok(&["study", "--config", cfg, "--out", "a"], tmp.path());
    ok(&["study", "--config", cfg, "--out", "b"], tmp.path());
    for name in ["study.json", "study_trials.csv", "study_modes.csv", "error_vs_mode.dat", "error_vs_level.dat"] {
        let a = std::fs::read(tmp.path().join("a").join(name)).unwrap();
        assert_eq!(a, std::fs::read(tmp.path().join("b").join(name)).unwrap(), "{name}");
        assert!(String::from_utf8(a).unwrap().contains("config_hash"), "{name}");
    }
    let dat = std::fs::read_to_string(tmp.path().join("a/error_vs_mode.dat")).unwrap();
    let rows: Vec<Vec<f64>> = dat
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split_whitespace().map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.len() == 2));
}

#[test]
fn two_column_reader_skips_header() {
    let (x, v) = parse_two_columns(Path::new("x"), "x,g\n0,0\n1,2\n").unwrap();
    assert_eq!((x.len(), v[1]), (2, 2.0));
}
