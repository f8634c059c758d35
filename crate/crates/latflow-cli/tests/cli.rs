use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};
use std::sync::OnceLock;

fn latflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_latflow")).args(args).env("LATFLOW_THREADS", "2").output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_constants(dir: &Path) -> String {
    let p = dir.join("cal.json");
    std::fs::write(
        &p,
        r#"{"lambda":0.9,"t":4.0,"epsilon":0.3,"C":0.16,"C_ht":2.3,"E101":11.5,"D_breakpoints":[]}"#,
    )
    .unwrap();
    p.to_str().unwrap().to_string()
}

/// A real calibration shared by the tests that need fitted constants.
fn calibration() -> &'static str {
    static PATH: OnceLock<(tempfile::TempDir, String)> = OnceLock::new();
    &PATH
        .get_or_init(|| {
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("calibration.json").to_str().unwrap().to_string();
            let o = latflow(&["calibrate", "--samples", "100", "--seed", "11", "-o", &p]);
            assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
            (dir, p)
        })
        .1
}

#[test]
fn heights_reports_alpha_prime_example() {
    let dir = tempfile::tempdir().unwrap();
    let cal = write_constants(dir.path());
    let o = latflow(&["heights", "--point", "1,1;0,0", "--i", "1", "--calibration", &cal]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let ap = v["alpha_prime"].as_f64().unwrap();
    assert!((ap - 2.8f64.exp()).abs() < 1e-9);
    assert!((v["kappa"].as_f64().unwrap() - 1f64.exp()).abs() < 1e-12);
    assert!(stdout(&o).contains("\"alpha_prime\": 1.64446467710970"));
}

#[test]
fn heights_csv_is_one_row_with_header() {
    let dir = tempfile::tempdir().unwrap();
    let cal = write_constants(dir.path());
    let o = latflow(&["heights", "--point", "1,1;0,0", "--i", "2", "--calibration", &cal, "--format", "csv"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], "kappa,phi_lambda1,ht,alpha_prime,alpha_bq,alpha_tilde");
    assert_eq!(lines[1].split(',').count(), 6);
}

#[test]
fn missing_calibration_exits_2() {
    let o = latflow(&["heights", "--point", "1,1;0,0", "--i", "1", "--calibration", "/nonexistent/cal.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("calibration"));
    let o = latflow(&["heights", "--point", "1,1;0,0", "--i", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn validation_failures_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cal = write_constants(dir.path());
    assert_eq!(latflow(&["heights", "--point", "1,1;0,0", "--i", "3", "--calibration", &cal]).status.code(), Some(2));
    assert_eq!(latflow(&["heights", "--point", "-1,1;0,0", "--i", "1", "--calibration", &cal]).status.code(), Some(2));
    assert_eq!(latflow(&["littlewood", "--xi", "sqrt2+sqrt3,1/3", "--Q", "10"]).status.code(), Some(2));
    assert_eq!(latflow(&["littlewood", "--xi", "1/3", "--Q", "10"]).status.code(), Some(2));
    assert_eq!(latflow(&["calibrate", "--samples", "100"]).status.code(), Some(2));
    assert_eq!(latflow(&["littlewood", "--xi", "phi,phi", "--Q", "10", "--lambda", "1.2"]).status.code(), Some(2));
}

#[test]
fn calibration_for_other_parameters_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cal = write_constants(dir.path());
    let o = latflow(&["heights", "--point", "1,1;0,0", "--i", "1", "--calibration", &cal, "--lambda", "0.8"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn covering_budget_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cal = write_constants(dir.path());
    let o = latflow(&["dimension", "--calibration", &cal, "--N-list", "3"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn littlewood_golden_ratio_window() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("lw.csv");
    let o = latflow(&["littlewood", "--xi", "phi,phi", "--Q", "1000000", "--format", "csv", "-o", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("INFO"));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next(), Some("q,value"));
    let last: f64 = text.lines().last().unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!(last <= 0.01);
}

#[test]
fn divergence_density_series() {
    let o = latflow(&["divergence", "--xi", "sqrt2-1,(sqrt2-1)/2", "--eps", "0.05", "--N", "40", "--format", "csv"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines().skip(1);
    assert_eq!(lines.next(), Some("N,density"));
    let last = text.lines().last().unwrap();
    assert!(last.starts_with("40,"));
    assert!(last[3..].parse::<f64>().unwrap() > 0.8);
}

#[test]
fn config_file_is_read_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    let out = dir.path().join("dani.csv");
    std::fs::write(&cfg, format!("# dani run\nN = 4\nformat = csv\noutputPath = {}\n", out.display())).unwrap();
    let o = latflow(&["dani", "--xi", "1/3,1/2", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next(), Some("N,density,series"));
    assert!(text.lines().any(|l| l.starts_with("4,")));
    assert!(!text.lines().any(|l| l.starts_with("5,")));
    let o = latflow(&["dani", "--xi", "1/3,1/2", "--config", cfg.to_str().unwrap(), "--N", "5"]);
    assert!(o.status.success());
    assert!(std::fs::read_to_string(&out).unwrap().lines().any(|l| l.starts_with("5,")));
    std::fs::write(&cfg, "colour=blue\n").unwrap();
    assert_eq!(latflow(&["dani", "--xi", "1/3,1/2", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn same_seed_gives_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cal = write_constants(dir.path());
    let run = |name: &str, threads: &str| {
        let p = dir.path().join(name);
        let o = Command::new(env!("CARGO_BIN_EXE_latflow"))
            .args(["verify-contraction", "--check", "lipschitz", "--kind", "alpha_prime", "--samples", "60", "--seed", "5"])
            .args(["--calibration", &cal, "-o", p.to_str().unwrap()])
            .env("LATFLOW_THREADS", threads)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read(p).unwrap()
    };
    assert_eq!(run("a.json", "1"), run("b.json", "3"));
}

#[test]
fn verify_contraction_ht_passes_on_fresh_seed() {
    let o = latflow(&["verify-contraction", "--kind", "ht", "--samples", "100", "--seed", "12", "--calibration", calibration()]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).starts_with("PASS"));
}

#[test]
fn calibration_report_round_trips_into_heights() {
    let o = latflow(&["heights", "--point", "0.5,0.7;0.1,0.2", "--i", "1", "--calibration", calibration()]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["alpha_tilde"].as_f64().unwrap() >= 1.0);
}

#[test]
fn inhomogeneous_scan_reports_a_maximum() {
    let o = latflow(&["inhom-littlewood", "--xi", "sqrt2-1,sqrt3-1", "--theta-grid-res", "4", "--q0", "10", "--Q", "1000"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let v: Value = serde_json::from_str(text.split_once('\n').unwrap().1).unwrap();
    assert!(v["max_value"].as_f64().unwrap() > 0.0);
    assert_eq!(v["resolution"].as_u64(), Some(4));
}
