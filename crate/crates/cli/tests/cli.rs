use std::f64::consts::TAU;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_rectiplan"));
    c.env_remove("RECTIPLAN_OUT");
    c
}

fn run(args: &[&str], cwd: &Path) -> Output {
    bin().args(args).current_dir(cwd).output().unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

fn single_config(out: &str) -> String {
    format!(
        r#"{{"phase":"single","n":128,"free_wheel":true,"dc_target":0.2,"lambda":10,
            "voltage_harmonics":[{{"k":2,"re":0,"im":0}},{{"k":4,"re":0,"im":0}},{{"k":6,"re":0,"im":0}}],
            "output_dir":"{out}"}}"#
    )
}

fn wave_csv(dir: &Path, name: &str, f: impl Fn(usize) -> f64, n: usize) -> PathBuf {
    let mut text = String::from("v\n");
    for t in 0..n {
        text.push_str(&format!("{:.17e}\n", f(t)));
    }
    write_config(dir, name, &text)
}

#[test]
fn design_writes_every_artifact() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(tmp.path(), "c.json", &single_config("out"));
    let o = run(&["design", "c.json"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = tmp.path().join("out");
    for f in ["scheme.csv", "voltage.csv", "spectrum.csv", "filtered.csv", "report.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let scheme = fs::read_to_string(out.join("scheme.csv")).unwrap();
    assert!(scheme.starts_with("index,theta,state\n"));
    assert_eq!(scheme.lines().count(), 129);
    assert!(!scheme.contains('\r'));
    let report = read_json(&out.join("report.json"));
    assert_eq!(report["status"], "optimal");
    assert!((report["dc"]["relaxed"].as_f64().unwrap() - 0.2).abs() <= 1e-6);
    assert!(report["thd"]["output_voltage"]["conventional_ratio"].is_f64());
    assert_eq!(report["thd"]["input_current"].as_array().unwrap().len(), 1);
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(tmp.path(), "c.json", &single_config("out"));
    assert_eq!(run(&["design", "c.json"], tmp.path()).status.code(), Some(0));
    let first: Vec<Vec<u8>> = ["scheme.csv", "voltage.csv", "spectrum.csv", "filtered.csv", "report.json"]
        .iter()
        .map(|f| fs::read(tmp.path().join("out").join(f)).unwrap())
        .collect();
    assert_eq!(run(&["design", "c.json"], tmp.path()).status.code(), Some(0));
    let second: Vec<Vec<u8>> = ["scheme.csv", "voltage.csv", "spectrum.csv", "filtered.csv", "report.json"]
        .iter()
        .map(|f| fs::read(tmp.path().join("out").join(f)).unwrap())
        .collect();
    assert_eq!(first, second);
}

#[test]
fn unreachable_dc_exits_two_with_diagnosis() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(tmp.path(), "c.json", &single_config("out").replace("0.2", "0.7"));
    let o = run(&["design", "c.json"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    let report = read_json(&tmp.path().join("out/report.json"));
    assert_eq!(report["status"], "infeasible");
    assert_eq!(report["diagnosis"]["blocking"][0], "dc_target");
    let max = report["diagnosis"]["dc_reachable_max"].as_f64().unwrap();
    assert!(max < 0.7 && (max - 2.0 / std::f64::consts::PI).abs() < 1e-3);
    assert!(!tmp.path().join("out/scheme.csv").exists());
}

#[test]
fn conflicting_harmonic_is_named() {
    let tmp = tempfile::tempdir().unwrap();
    let body = single_config("out").replace(r#""lambda":10,"#, r#""lambda":10,"current_zero_harmonics":[3],"#);
    write_config(tmp.path(), "c.json", &body);
    let o = run(&["design", "c.json"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    let report = read_json(&tmp.path().join("out/report.json"));
    let blocking = report["diagnosis"]["blocking"].as_array().unwrap();
    assert!(!blocking.is_empty());
    assert!(blocking.iter().all(|b| b.as_str().unwrap() != "dc_target"));
}

#[test]
fn config_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(tmp.path(), "bad.json", "{not json");
    let o = run(&["design", "bad.json"], tmp.path());
    assert_eq!(o.status.code(), Some(1));

    write_config(tmp.path(), "extra.json", &single_config("out").replace(r#""n":128"#, r#""n":128,"lamda":3"#));
    let o = run(&["design", "extra.json"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("lamda"));

    write_config(tmp.path(), "neg.json", &single_config("out").replace(r#""lambda":10"#, r#""lambda":-1"#));
    let o = run(&["design", "neg.json"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("lambda"));

    let o = run(&["design", "missing.json"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn output_dir_follows_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(tmp.path(), "c.json", &single_config("ignored"));
    let o =
        bin().args(["design", "c.json"]).current_dir(tmp.path()).env("RECTIPLAN_OUT", "elsewhere").output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(tmp.path().join("elsewhere/report.json").exists());
    assert!(!tmp.path().join("ignored").exists());
}

#[test]
fn relaxed_output_when_quantisation_is_off() {
    let tmp = tempfile::tempdir().unwrap();
    let body = single_config("out").replace(r#""lambda":10,"#, r#""lambda":10,"quantize":false,"#);
    write_config(tmp.path(), "c.json", &body);
    assert_eq!(run(&["design", "c.json"], tmp.path()).status.code(), Some(0));
    let scheme = fs::read_to_string(tmp.path().join("out/scheme.csv")).unwrap();
    assert!(scheme.starts_with("index,theta,x\n"));
    let report = read_json(&tmp.path().join("out/report.json"));
    assert_eq!(report["waveform"], "relaxed");
    assert!(report["residuals"]["quantized"].is_null());
    // the emitted waveform is the relaxed one, so its constrained bins vanish
    let spectrum = report["spectrum"].as_array().unwrap();
    for k in [2, 4, 6] {
        assert!(spectrum[k].as_f64().unwrap() <= 1e-6);
    }
}

#[test]
fn three_phase_templates_file_is_read_per_phase() {
    let tmp = tempfile::tempdir().unwrap();
    let n = 24;
    let mut text = String::new();
    for t in 0..n {
        let th = TAU * t as f64 / n as f64;
        let ph = |o: f64| (th + o).sin();
        text.push_str(&format!("{},{},{}\n", ph(0.0), ph(TAU / 3.0), ph(2.0 * TAU / 3.0)));
    }
    fs::write(tmp.path().join("supply.csv"), text).unwrap();
    let body = r#"{"phase":"three","n":24,"dc_target":0.8,"templates_file":"supply.csv","output_dir":"a"}"#;
    write_config(tmp.path(), "a.json", body);
    write_config(
        tmp.path(),
        "b.json",
        &body.replace(r#""templates_file":"supply.csv","#, "").replace(r#""a""#, r#""b""#),
    );
    assert_eq!(run(&["design", "a.json"], tmp.path()).status.code(), Some(0));
    assert_eq!(run(&["design", "b.json"], tmp.path()).status.code(), Some(0));
    let a = read_json(&tmp.path().join("a/report.json"));
    let b = read_json(&tmp.path().join("b/report.json"));
    let (oa, ob) = (a["objective"].as_f64().unwrap(), b["objective"].as_f64().unwrap());
    assert!((oa - ob).abs() <= 1e-9, "{oa} vs {ob}");
    let scheme = fs::read_to_string(tmp.path().join("a/scheme.csv")).unwrap();
    let tokens = ["FREE", "P12+", "P12-", "P23+", "P23-", "P31+", "P31-"];
    assert!(scheme.lines().skip(1).all(|l| tokens.contains(&l.rsplit(',').next().unwrap())));
}

#[test]
fn analyze_reproduces_the_design_spectrum() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(tmp.path(), "c.json", &single_config("out"));
    assert_eq!(run(&["design", "c.json"], tmp.path()).status.code(), Some(0));
    let o = run(&["analyze", "out/voltage.csv", "--desired", "0", "--filter", "--out", "an"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report = read_json(&tmp.path().join("out/report.json"));
    let expected: Vec<f64> = report["spectrum"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    let got: Vec<f64> = fs::read_to_string(tmp.path().join("an/spectrum.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(got.len(), expected.len());
    for (g, e) in got.iter().zip(&expected) {
        assert!((g - e).abs() <= 1e-9);
    }
    let thd = read_json(&tmp.path().join("an/thd.json"));
    let want = report["thd"]["output_voltage"]["energy_ratio"].as_f64().unwrap();
    assert!((thd["energy_ratio"].as_f64().unwrap() - want).abs() <= 1e-9);
    assert_eq!(
        fs::read(tmp.path().join("an/filtered.csv")).unwrap(),
        fs::read(tmp.path().join("out/filtered.csv")).unwrap()
    );
}

#[test]
fn analyze_reference_waveforms() {
    let tmp = tempfile::tempdir().unwrap();
    let n = 1024;
    wave_csv(tmp.path(), "sine.csv", |t| (TAU * t as f64 / n as f64).sin(), n);
    wave_csv(tmp.path(), "square.csv", |t| (TAU * (t as f64 + 0.5) / n as f64).sin().signum(), n);

    assert_eq!(run(&["analyze", "sine.csv", "--desired", "1", "--out", "s"], tmp.path()).status.code(), Some(0));
    let r = read_json(&tmp.path().join("s/thd.json"));
    assert!(r["energy_ratio"].as_f64().unwrap() <= 1e-9);
    assert!(!tmp.path().join("s/filtered.csv").exists());

    assert_eq!(run(&["analyze", "square.csv", "--out", "q"], tmp.path()).status.code(), Some(0));
    let r = read_json(&tmp.path().join("q/thd.json"));
    let expected = 1.0 - 8.0 / std::f64::consts::PI.powi(2);
    assert!((r["energy_ratio"].as_f64().unwrap() - expected).abs() <= 1e-3);
}

#[test]
fn analyze_rejects_bad_csv() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("empty.csv"), "").unwrap();
    assert_eq!(run(&["analyze", "empty.csv"], tmp.path()).status.code(), Some(1));
    fs::write(tmp.path().join("text.csv"), "v\n1.0\nabc\n").unwrap();
    let o = run(&["analyze", "text.csv"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("row 3"));
    fs::write(tmp.path().join("headerless.csv"), "0.5\n-0.5\n0.5\n-0.5\n").unwrap();
    assert_eq!(run(&["analyze", "headerless.csv", "--desired", "2", "--out", "h"], tmp.path()).status.code(), Some(0));
    let r = read_json(&tmp.path().join("h/thd.json"));
    assert!(r["energy_ratio"].as_f64().unwrap() <= 1e-12);
}

#[test]
fn oracle_checks_dominance() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(
        tmp.path(),
        "o.json",
        r#"{"phase":"single","n":12,"dc_target":0.2,"dc_interval":[0.18,0.22],"output_dir":"o"}"#,
    );
    let o = run(&["oracle", "o.json", "--tol", "0.02"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(&tmp.path().join("o/oracle.json"));
    assert_eq!(r["dominance"], true);
    assert_eq!(r["num_enumerated"], 531441);
    assert!(r["num_feasible"].as_u64().unwrap() > 0);
    assert!(r["lp_optimum"].as_f64().unwrap() <= r["best_cost"].as_f64().unwrap() + 1e-9);
}

#[test]
fn oracle_without_feasible_schemes_is_vacuous() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(tmp.path(), "o.json", r#"{"phase":"single","n":8,"dc_target":0.9,"output_dir":"o"}"#);
    assert_eq!(run(&["oracle", "o.json"], tmp.path()).status.code(), Some(0));
    let r = read_json(&tmp.path().join("o/oracle.json"));
    assert_eq!(r["num_feasible"], 0);
    assert_eq!(r["lp_status"], "infeasible");
    assert_eq!(r["dominance"], true);
}

#[test]
fn oracle_refuses_large_grids() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(tmp.path(), "o.json", r#"{"phase":"single","n":20,"dc_target":0.2,"output_dir":"o"}"#);
    let o = run(&["oracle", "o.json"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cap"));
}

#[test]
fn presets_parse_back_as_configs() {
    let tmp = tempfile::tempdir().unwrap();
    for name in ["single-fw", "single-nofw", "three-nofw", "three-fw"] {
        let o = run(&["preset", name], tmp.path());
        assert_eq!(o.status.code(), Some(0));
        let cfg = rectiplan_cli::RunConfig::from_json(&String::from_utf8(o.stdout).unwrap()).unwrap();
        assert_eq!(cfg, rectiplan_cli::preset::preset(name).unwrap());
    }
    assert_eq!(run(&["preset", "single-xyz"], tmp.path()).status.code(), Some(1));
}
