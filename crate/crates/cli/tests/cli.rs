use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_peakset"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const HOPF: &str = r#"{"patch": {"name": "hopf", "radius": 3.141592653589793}}"#;

fn go(cmd: &str, config: &str, out: &Path) -> Output {
    run(&[cmd, "--config", config, "--out", out.to_str().unwrap()])
}

#[test]
fn check_passes_on_hopf_and_fails_on_nontangential_control() {
    let dir = TempDir::new().unwrap();
    let hopf = write_config(dir.path(), "hopf.json", HOPF);
    let out = go("check", &hopf, &dir.path().join("a"));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let nt = write_config(
        dir.path(),
        "nt.json",
        r#"{"patch": {"name": "nontangential_circle", "radius": 3.0}}"#,
    );
    let out = go("check", &nt, &dir.path().join("b"));
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("tangency residual"));
    let report = read_json(&dir.path().join("b/check.json"));
    let residual = report["body"]["patch"]["max_tangency_residual"].as_f64().unwrap();
    assert!((residual - 1.0).abs() < 1e-12);
    assert_eq!(report["body"]["convexity"]["passed"], Value::Bool(true));
}

#[test]
fn usage_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let bad = write_config(dir.path(), "bad.json", "{ not json");
    assert_eq!(go("check", &bad, dir.path()).status.code(), Some(2));
    let unknown = write_config(
        dir.path(),
        "unknown.json",
        r#"{"patch": {"name": "hopf", "radius": 1.0}, "colour": 3}"#,
    );
    assert_eq!(go("check", &unknown, dir.path()).status.code(), Some(2));
    let bad_radius = write_config(
        dir.path(),
        "radius.json",
        r#"{"patch": {"name": "hopf", "radius": 7.0}}"#,
    );
    assert_eq!(go("peak", &bad_radius, dir.path()).status.code(), Some(2));
    let mismatch = write_config(
        dir.path(),
        "mismatch.json",
        r#"{"patch": {"name": "torus3", "radius": 1.0}, "domain": {"catalog": "ball", "n": 2}}"#,
    );
    assert_eq!(go("stratify", &mismatch, dir.path()).status.code(), Some(2));
    assert_eq!(run(&["check"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

fn counts(out: &Path) -> Value {
    read_json(&out.join("stratify.json"))["body"]["component_counts"].clone()
}

#[test]
fn stratify_component_counts() {
    let dir = TempDir::new().unwrap();
    let egg = write_config(
        dir.path(),
        "egg.json",
        r#"{"patch": {"name": "egg_curve", "center": 0.0, "radius": 0.9},
            "grid": {"lo": [-0.5], "hi": [0.5], "steps": [400]},
            "tolerances": {"rank": 1e-6, "nondegeneracy": 1e-9}}"#,
    );
    let o = dir.path().join("egg");
    assert_eq!(go("stratify", &egg, &o).status.code(), Some(0));
    assert_eq!(counts(&o), serde_json::json!({"0": 1, "1": 2}));
    let csv = std::fs::read_to_string(o.join("strata.csv")).unwrap();
    assert!(csv.starts_with("# tool: peakset-cli"));
    assert!(csv.contains("x0,label,min_eigenvalue,transition"));

    let hopf = write_config(dir.path(), "hopf.json", HOPF);
    let o = dir.path().join("hopf");
    assert_eq!(go("stratify", &hopf, &o).status.code(), Some(0));
    assert_eq!(counts(&o), serde_json::json!({"1": 1}));

    let torus = write_config(
        dir.path(),
        "torus.json",
        r#"{"patch": {"name": "torus3", "radius": 3.141592653589793},
            "grid": {"lo": [-1, -1], "hi": [1, 1], "steps": [32, 32]}}"#,
    );
    let o = dir.path().join("torus");
    assert_eq!(go("stratify", &torus, &o).status.code(), Some(0));
    assert_eq!(counts(&o), serde_json::json!({"2": 1}));
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + h * i as f64) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn peak_on_hopf_reports_normalization_and_closed_form_origin() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "hopf.json",
        r#"{"patch": {"name": "hopf", "radius": 3.141592653589793},
            "peak": {"z_off": [[0, 0, 0, 0]]}}"#,
    );
    let o = dir.path().join("p");
    let out = go("peak", &cfg, &o);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let g = read_json(&o.join("g_cache.json"))["body"]["g_origin_closed_form"]
        .as_f64()
        .unwrap();
    assert!((g - 2f64.sqrt() * PI).abs() < 1e-6);

    let varrho = read_json(&o.join("constants.json"))["body"]["constants"]["varrho"]
        .as_f64()
        .unwrap();
    assert_eq!(varrho, 0.25);
    let bump = |t: f64| {
        let s = t / varrho;
        if s.abs() < 1.0 {
            (1.0 - 1.0 / (1.0 - s * s)).exp()
        } else {
            0.0
        }
    };
    let int_f = simpson(bump, -varrho, varrho, 100_000);
    let csv = std::fs::read_to_string(o.join("limit_audit.csv")).unwrap();
    let mut seen = 0;
    for line in csv.lines().filter(|l| !l.starts_with('#')).skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        if cols[1] != "off0" {
            continue;
        }
        let delta: f64 = cols[0].parse().unwrap();
        let re: f64 = cols[3].parse().unwrap();
        let im: f64 = cols[4].parse().unwrap();
        let exact = delta / (delta * delta + 1.0) / (2f64.sqrt() * PI) * int_f;
        assert!((re - exact).abs() < 1e-6 && im.abs() < 1e-6, "delta {delta}: {re} vs {exact}");
        seen += 1;
    }
    assert_eq!(seen, 4);
}

#[test]
fn peak_rejects_degenerate_full_egg_curve() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "egg.json",
        r#"{"patch": {"name": "egg_curve", "center": 0.0, "radius": 0.9}}"#,
    );
    let o = dir.path().join("p");
    assert_eq!(go("peak", &cfg, &o).status.code(), Some(1));
    let report = read_json(&o.join("peak.json"));
    let pts = report["body"]["degenerate_points"].as_array().unwrap();
    assert!(!pts.is_empty());
    for p in pts {
        assert!(p[0].as_f64().unwrap().abs() < 1e-9);
    }
}

#[test]
fn outputs_are_byte_identical_across_runs_and_thread_counts() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "hopf.json", HOPF);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(go("peak", &cfg, &a).status.code(), Some(0));
    let out = run(&[
        "peak",
        "--config",
        &cfg,
        "--out",
        b.to_str().unwrap(),
        "--threads",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let mut names: Vec<_> = std::fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert!(names.len() >= 5);
    for n in names {
        let x = std::fs::read(a.join(&n)).unwrap();
        let y = std::fs::read(b.join(&n)).unwrap();
        assert!(x == y, "{n:?} differs");
    }
}

#[test]
fn seed_flag_changes_the_header() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "hopf.json", HOPF);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(go("check", &cfg, &a).status.code(), Some(0));
    let out = run(&["check", "--config", &cfg, "--out", b.to_str().unwrap(), "--seed", "99"]);
    assert_eq!(out.status.code(), Some(0));
    let ha = read_json(&a.join("check.json"))["header"].clone();
    let hb = read_json(&b.join("check.json"))["header"].clone();
    assert_eq!(hb["seed"], Value::from(99));
    assert_ne!(ha["config_sha256"], hb["config_sha256"]);
}

#[test]
fn catalog_lists_entries() {
    let out = run(&["catalog"]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let names: Vec<&str> = v
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["name"].as_str().unwrap())
        .collect();
    for want in ["hopf", "real_circle", "egg_curve", "torus3", "nontangential_circle"] {
        assert!(names.contains(&want), "{names:?}");
    }
}
