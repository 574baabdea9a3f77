use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;
use tempfile::TempDir;

const LAPLACIAN: &str = r#"{"family":"plap_type","n":2,"params":{"q":0,"a":0}}"#;
const DISK: &str = r#"{"shape":{"kind":"disk","radius":1.0}}"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_degen-eigen"))
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

/// Runs with `--config` and `--out`, returning the exit code.
fn run(config: &Path, out: &Path, extra: &[&str]) -> i32 {
    let status = bin().args(extra).arg("--config").arg(config).arg("--out").arg(out).output().unwrap();
    status.status.code().unwrap()
}

fn summary(out: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap()
}

/// Square of the first zero of J0, from its power series.
fn j0_zero_squared() -> f64 {
    let j0 = |x: f64| {
        let (mut term, mut sum) = (1.0, 1.0);
        for m in 1..60 {
            term *= -(x * x / 4.0) / (m * m) as f64;
            sum += term;
        }
        sum
    };
    let (mut a, mut b) = (2.0, 3.0);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if j0(a) * j0(m) <= 0.0 {
            b = m
        } else {
            a = m
        }
    }
    (0.5 * (a + b)).powi(2)
}

#[test]
fn eigen_radial_laplacian_matches_bessel() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.json", &format!(r#"{{"command":"eigen-radial","operator":{LAPLACIAN}}}"#));
    let out = dir.path().join("out");
    assert_eq!(run(&cfg, &out, &[]), 0);
    let s = summary(&out);
    let lam = s["lambda_star"].as_f64().unwrap();
    assert!((lam - j0_zero_squared()).abs() < 1e-4 * lam, "{lam}");
    assert!(s["iterations"].as_u64().unwrap() > 0);
    assert!(s["residual"].as_f64().unwrap() < 1e-6);
    let profile = std::fs::read_to_string(out.join("profile.csv")).unwrap();
    assert!(profile.starts_with("r,v,dv"));
}

#[test]
fn check_operator_reports_asymmetry_without_failing() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"operator":{"family":"pseudo_plap","n":2,"params":{"p":2,"q":0}}}"#,
    );
    let out = dir.path().join("out");
    assert_eq!(run(&cfg, &out, &["check-operator"]), 0);
    let s = summary(&out);
    assert_eq!(s["conditions"]["d"]["passed"], Value::Bool(false));
    assert_eq!(s["required_pass"], Value::Bool(true));
    assert!(s["margins"]["D"].as_f64().unwrap() < 0.0);
    assert!(out.join("profile.csv").exists());
}

#[test]
fn malformed_configs_exit_four_without_artifacts() {
    let dir = TempDir::new().unwrap();
    let cases = [
        "{ not json",
        r#"{"command":"solve-grid","operator":{"family":"plap_type","n":2},"bogus":1}"#,
        r#"{"command":"solve-grid","operator":{"family":"warp","n":2},"lambda":1}"#,
        r#"{"command":"solve-grid","operator":{"family":"plap_type","n":2},"lambda":1}"#,
        r#"{"command":"solve-radial","operator":{"family":"pseudo_plap","n":2,"params":{"p":2}},"lambda":1}"#,
        r#"{"command":"eigen-radial","operator":{"family":"plap_type","n":2},"solver":{"h":-1}}"#,
    ];
    for (i, body) in cases.iter().enumerate() {
        let cfg = write_config(dir.path(), &format!("c{i}.json"), body);
        let out = dir.path().join(format!("out{i}"));
        assert_eq!(run(&cfg, &out, &[]), 4, "{body}");
        assert!(!out.exists(), "{body}");
    }
    let cfg = write_config(dir.path(), "k.json", &format!(r#"{{"command":"eigen-radial","operator":{LAPLACIAN}}}"#));
    let out = dir.path().join("conflict");
    assert_eq!(run(&cfg, &out, &["solve-grid"]), 4);
    assert!(!out.exists());
}

#[test]
fn grid_blowup_exits_two() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        &format!(r#"{{"command":"solve-grid","operator":{LAPLACIAN},"domain":{DISK},"solver":{{"h":0.0625}},"lambda":7.0}}"#),
    );
    let out = dir.path().join("out");
    assert_eq!(run(&cfg, &out, &[]), 2);
    assert_eq!(summary(&out)["status"], "blowup");
}

#[test]
fn solve_then_verify_round_trip() {
    let dir = TempDir::new().unwrap();
    let body = format!(r#"{{"command":"solve-grid","operator":{LAPLACIAN},"domain":{DISK},"solver":{{"h":0.0625}},"lambda":4.0}}"#);
    let cfg = write_config(dir.path(), "solve.json", &body);
    let out = dir.path().join("solve");
    assert_eq!(run(&cfg, &out, &[]), 0);
    let s = summary(&out);
    assert_eq!(s["status"], "converged");
    assert_eq!(s["checks_passed"], Value::Bool(true));
    assert!(s["margins"]["quotient_comparison"].as_f64().unwrap() >= 0.0);

    let verify = body.replace("solve-grid", "verify").replace("\"lambda\":4.0", "\"lambda\":4.0,\"field\":\"solve/field.csv\"");
    let vcfg = write_config(dir.path(), "verify.json", &verify);
    assert_eq!(run(&vcfg, &dir.path().join("v"), &[]), 0);
    assert_eq!(summary(&dir.path().join("v"))["margins"], s["margins"]);

    // A field dipping below the boundary data violates the strong minimum.
    let csv = std::fs::read_to_string(out.join("field.csv")).unwrap();
    let dipped: String = csv
        .lines()
        .enumerate()
        .map(|(n, l)| {
            let mut cols: Vec<String> = l.split(',').map(String::from).collect();
            if n > 0 && cols[2] == "0" && cols[3] == "0" {
                cols[4] = "0.5".into();
            }
            cols.join(",") + "\n"
        })
        .collect();
    std::fs::write(out.join("field.csv"), dipped).unwrap();
    assert_eq!(run(&vcfg, &dir.path().join("v2"), &[]), 3);
}

#[test]
fn runs_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let sweep = write_config(
        dir.path(),
        "sweep.json",
        &format!(
            r#"{{"command":"sweep-lambda","operator":{LAPLACIAN},"domain":{DISK},"solver":{{"h":0.0625}},
                "lambda_range":{{"start":3.0,"stop":4.0,"count":5}}}}"#
        ),
    );
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(run(&sweep, &a, &["--jobs", "1"]), 0);
    assert_eq!(run(&sweep, &b, &["--jobs", "4"]), 0);
    for f in ["summary.json", "report.json", "field.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let s = summary(&a);
    assert_eq!(s["checks_passed"], Value::Bool(true));
    assert_eq!(s["solves"].as_array().unwrap().len(), 5);

    let check = write_config(dir.path(), "check.json", r#"{"operator":{"family":"inf_type","n":2,"params":{"q":1}}}"#);
    let (c, d) = (dir.path().join("c"), dir.path().join("d"));
    assert_eq!(run(&check, &c, &["check-operator", "--seed", "9"]), 0);
    assert_eq!(run(&check, &d, &["check-operator", "--seed", "9"]), 0);
    assert_eq!(std::fs::read(c.join("summary.json")).unwrap(), std::fs::read(d.join("summary.json")).unwrap());
    assert_eq!(summary(&c)["seed"], 9);
}

#[test]
fn mask_domain_bracket_and_barriers() {
    let dir = TempDir::new().unwrap();
    let mut rows = vec!["2".repeat(17)];
    rows.extend((0..15).map(|_| format!("2{}2", "1".repeat(15))));
    rows.push("2".repeat(17));
    std::fs::write(dir.path().join("square.mask"), rows.join("\n")).unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        &format!(
            r#"{{"command":"eigen-grid","operator":{LAPLACIAN},"domain":{{"mask_file":"square.mask"}},
                "solver":{{"h":0.0625}},"bracket_tol":0.02,"rho":0.5}}"#
        ),
    );
    let out = dir.path().join("out");
    assert_eq!(run(&cfg, &out, &[]), 0);
    let s = summary(&out);
    let (lo, hi) = (s["lam_lo"].as_f64().unwrap(), s["lam_hi"].as_f64().unwrap());
    // The mask spans the unit square, whose first eigenvalue is 2π².
    let want = 2.0 * std::f64::consts::PI.powi(2);
    assert!(lo < hi && (0.5 * (lo + hi) - want).abs() < 0.03 * want, "[{lo}, {hi}]");
    assert!(s["margins"]["blowup_rate"].as_f64().unwrap() >= 0.0);

    let bcfg = write_config(
        dir.path(),
        "b.json",
        &format!(r#"{{"command":"barriers","operator":{{"family":"inf_type","n":2,"params":{{"q":0}}}},"domain":{DISK}}}"#),
    );
    let bout = dir.path().join("b");
    assert_eq!(run(&bcfg, &bout, &[]), 0);
    let reports = summary(&bout)["reports"].as_array().unwrap().clone();
    let ids: Vec<&str> = reports.iter().map(|r| r["formula_id"].as_str().unwrap()).collect();
    assert_eq!(ids, ["threshold_case_i", "lambda_big", "sup_inf_bound"]);
    // (2 - s̄)^k |mhigh(s̄)| / (ν R^γ) with s̄ = 3/2, mhigh = −1/2, R = 2, γ = 4.
    assert!((reports[0]["value"].as_f64().unwrap() - 0.5f64.powi(3) * 0.5 / 16.0).abs() < 1e-12);
}

#[test]
fn solve_radial_reports_infeasible_above_the_eigenvalue() {
    let dir = TempDir::new().unwrap();
    let body = format!(r#"{{"command":"solve-radial","operator":{LAPLACIAN},"lambda":6.0}}"#);
    let cfg = write_config(dir.path(), "c.json", &body);
    let out = dir.path().join("out");
    assert_eq!(run(&cfg, &out, &[]), 2);
    assert_eq!(summary(&out)["status"], "infeasible");
    let ok = write_config(dir.path(), "ok.json", &body.replace("6.0", "4.0"));
    let out = dir.path().join("ok");
    assert_eq!(run(&ok, &out, &[]), 0);
    let v0 = summary(&out)["solution"]["v0"].as_f64().unwrap();
    assert!((v0 - 1.0 / 0.223_890_779_141_235_7).abs() < 1e-4, "{v0}");
}
