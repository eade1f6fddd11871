use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn qrecur(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qrecur"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn read(path: impl AsRef<Path>) -> String {
    std::fs::read_to_string(path).unwrap()
}

/// File contents without the timestamp line.
fn stable(path: impl AsRef<Path>) -> String {
    read(path).lines().filter(|l| !l.starts_with("# timestamp=")).collect::<Vec<_>>().join("\n")
}

/// `name -> value` for one data row of a headed CSV.
fn row(csv: &str, pick: usize) -> Vec<(String, String)> {
    let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    let values: Vec<String> = lines.nth(pick).unwrap().split(',').map(String::from).collect();
    header.into_iter().zip(values).collect()
}

fn get<'a>(row: &'a [(String, String)], key: &str) -> &'a str {
    &row.iter().find(|(k, _)| k == key).unwrap_or_else(|| panic!("no column {key}")).1
}

#[test]
fn times_uncoupled_keeps_base_periods() {
    let dir = TempDir::new().unwrap();
    let o = qrecur(dir.path(), &["times", "--set", "lambda=0", "--out", "o"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(dir.path().join("o/times.csv"));
    for i in 0..2 {
        let r = row(&csv, i);
        assert_eq!(get(&r, "Tl_cl"), get(&r, "T0_cl"));
        assert_eq!(get(&r, "Tl_Q"), get(&r, "T0_Q"));
    }
    assert!(dir.path().join("o/effective.conf").exists());
}

#[test]
fn times_linear_ladder_renders_infinity() {
    let dir = TempDir::new().unwrap();
    let o = qrecur(dir.path(), &["times", "--set", "zeta=0", "--out", "o"]);
    assert_eq!(code(&o), 0);
    let csv = read(dir.path().join("o/times.csv"));
    for i in 0..2 {
        let r = row(&csv, i);
        assert_eq!(get(&r, "Tl_Q"), "inf");
        assert_eq!(get(&r, "regime"), "case_a");
        assert_eq!(get(&r, "M_cl"), "0");
    }
}

#[test]
fn times_case_c_reports_residual() {
    let dir = TempDir::new().unwrap();
    let o = qrecur(dir.path(), &["times", "--set", "zeta=10", "--set", "lambda=0.01", "--out", "o"]);
    assert_eq!(code(&o), 0);
    let r = row(&read(dir.path().join("o/times.csv")), 1);
    assert_eq!(get(&r, "regime"), "case_c");
    let rc: f64 = get(&r, "r_c").parse().unwrap();
    assert!(rc.is_finite() && rc.abs() < 1e-5);
}

#[test]
fn config_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("bad.conf"), "omega = 1\nfoo = 2\n").unwrap();
    assert_eq!(code(&qrecur(dir.path(), &["times", "--config", "bad.conf"])), 2);
    assert_eq!(code(&qrecur(dir.path(), &["times", "--config", "missing.conf"])), 2);
    assert_eq!(code(&qrecur(dir.path(), &["times", "--set", "hbar=0"])), 2);
    assert_eq!(code(&qrecur(dir.path(), &["sweep", "--workers", "0"])), 2);
    assert_eq!(code(&qrecur(dir.path(), &["spectrum", "--set", "zeta=0"])), 2);
    assert_eq!(code(&qrecur(dir.path(), &["verify", "--only", "nosuch"])), 2);
}

#[test]
fn numerical_quality_exits_3() {
    let dir = TempDir::new().unwrap();
    // nu(0) = 2 with q = 8: the stencil straddles an even/odd pair.
    let args = ["times", "--set", "omega=0.5", "--set", "lambda=1", "--tol", "1e-14"];
    let o = qrecur(dir.path(), &args);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    let o = qrecur(dir.path(), &["evolve", "--set", "sigma_m=20", "--set", "basis=16"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn spectrum_marks_degenerate_entries() {
    let dir = TempDir::new().unwrap();
    let args = [
        "spectrum", "--set", "omega=3", "--set", "lambda=0.25", "--set", "m_range=6", "--tol", "1e-12", "--out", "o",
    ];
    assert_eq!(code(&qrecur(dir.path(), &args)), 0);
    let csv = read(dir.path().join("o/spectrum.csv"));
    assert!(csv.lines().any(|l| l.contains(",nan,degenerate ")));
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 14);
}

#[test]
fn evolve_reference_run() {
    let dir = TempDir::new().unwrap();
    let o = qrecur(dir.path(), &["evolve", "--set", "lambda=0", "--set", "steps=3100", "--out", "o"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&read(dir.path().join("o/report.json"))).unwrap();
    let tcl = report["measured_Tcl"].as_f64().unwrap();
    assert!((tcl - std::f64::consts::TAU).abs() < 0.02 * std::f64::consts::TAU);
    let tq = report["measured_TQ"].as_f64().unwrap();
    assert!((tq - 8.0 * std::f64::consts::PI).abs() < 0.05 * 8.0 * std::f64::consts::PI);
    assert_eq!(report["predicted"]["regime"], "case_b");
    let trace = read(dir.path().join("o/trace.csv"));
    assert!(trace.lines().any(|l| l == "t,C2"));
    assert!(trace.lines().any(|l| l.starts_with("# half_bandwidth=64")));
}

#[test]
fn evolve_resonance_center_run() {
    let dir = TempDir::new().unwrap();
    let args = [
        "evolve", "--set", "omega=0", "--set", "zeta=1", "--set", "lambda=1", "--set", "V=100", "--set", "mean_m=2",
        "--set", "theta0=1.5707963267948966", "--set", "dt=0.002", "--set", "steps=2000", "--set", "predict=center",
        "--out", "o",
    ];
    let o = qrecur(dir.path(), &args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&read(dir.path().join("o/report.json"))).unwrap();
    assert!(report["deviations"]["Tcl"].as_f64().unwrap().abs() < 0.02);
    assert!(report["measured_TQ"].is_null());
    assert_eq!(report["predicted"]["Tl_Q"], "inf");
}

#[test]
fn short_evolve_is_unresolved() {
    let dir = TempDir::new().unwrap();
    let o = qrecur(dir.path(), &["evolve", "--set", "steps=500", "--out", "o"]);
    assert_eq!(code(&o), 4);
    assert!(dir.path().join("o/trace.csv").exists());
    assert!(!dir.path().join("o/report.json").exists());
}

fn write_sweep_config(dir: &Path) {
    let text = "zeta = 0.1\nsweep1.param = lambda\nsweep1.min = 1e-3\nsweep1.max = 1e-2\nsweep1.scale = log\n";
    std::fs::write(dir.join("sweep.conf"), text).unwrap();
}

#[test]
fn sweep_is_independent_of_worker_count() {
    let dir = TempDir::new().unwrap();
    write_sweep_config(dir.path());
    for (w, out) in [("1", "a"), ("8", "b")] {
        assert_eq!(code(&qrecur(dir.path(), &["sweep", "--config", "sweep.conf", "--workers", w, "--out", out])), 0);
    }
    let (a, b) = (stable(dir.path().join("a/sweep.csv")), stable(dir.path().join("b/sweep.csv")));
    assert_eq!(a, b);
    assert_eq!(a.lines().filter(|l| !l.starts_with('#')).count(), 11);
}

#[test]
fn sweep_lambda_law() {
    let dir = TempDir::new().unwrap();
    write_sweep_config(dir.path());
    assert_eq!(code(&qrecur(dir.path(), &["sweep", "--config", "sweep.conf", "--out", "o"])), 0);
    let csv = read(dir.path().join("o/sweep.csv"));
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for i in 0..10 {
        let r = row(&csv, i);
        xs.push(get(&r, "lambda").parse::<f64>().unwrap().ln());
        ys.push(get(&r, "M_Q").parse::<f64>().unwrap().ln());
    }
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    assert!((sxy / sxx - 2.0).abs() < 0.05, "exponent {}", sxy / sxx);
}

#[test]
fn sweep_hbar_quartic_beta() {
    let dir = TempDir::new().unwrap();
    let text = "zeta = 10\nlambda = 0.01\npredict = closed_form\nsweep1.param = hbar\nsweep1.min = 1\nsweep1.max = 2\nsweep1.count = 2\n";
    std::fs::write(dir.path().join("h.conf"), text).unwrap();
    assert_eq!(code(&qrecur(dir.path(), &["sweep", "--config", "h.conf", "--out", "o"])), 0);
    let csv = read(dir.path().join("o/sweep.csv"));
    let beta = |i| get(&row(&csv, i), "beta").parse::<f64>().unwrap();
    assert!((beta(0) / beta(1) - 16.0).abs() < 1e-9);
}

#[test]
fn sweep_without_axes_writes_one_row() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&qrecur(dir.path(), &["sweep", "--out", "o"])), 0);
    let csv = read(dir.path().join("o/sweep.csv"));
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 2);
}

#[test]
fn sweep_two_axes_in_grid_order() {
    let dir = TempDir::new().unwrap();
    let text = "sweep1.param = lambda\nsweep1.min = 0\nsweep1.max = 0.02\nsweep1.count = 3\nsweep2.param = zeta\nsweep2.min = 0.1\nsweep2.max = 0.2\nsweep2.count = 2\n";
    std::fs::write(dir.path().join("g.conf"), text).unwrap();
    assert_eq!(code(&qrecur(dir.path(), &["sweep", "--config", "g.conf", "--out", "o"])), 0);
    let csv = read(dir.path().join("o/sweep.csv"));
    let pairs: Vec<(String, String)> = (0..6)
        .map(|i| {
            let r = row(&csv, i);
            (get(&r, "lambda").to_string(), get(&r, "zeta").to_string())
        })
        .collect();
    assert_eq!(pairs[0], ("0".into(), "0.1".into()));
    assert_eq!(pairs[1], ("0".into(), "0.2".into()));
    assert_eq!(pairs[5], ("0.02".into(), "0.2".into()));
}

#[test]
fn effective_config_reproduces_outputs() {
    let dir = TempDir::new().unwrap();
    let args = ["times", "--set", "zeta=0.1", "--set", "lambda=0.05", "--tol", "1e-12", "--out", "first"];
    assert_eq!(code(&qrecur(dir.path(), &args)), 0);
    let again = ["times", "--config", "first/effective.conf", "--out", "second"];
    assert_eq!(code(&qrecur(dir.path(), &again)), 0);
    assert_eq!(stable(dir.path().join("first/times.csv")), stable(dir.path().join("second/times.csv")));
    let conf = read(dir.path().join("second/effective.conf"));
    assert!(conf.contains("tol = 1e-12"));
}

#[test]
fn verify_subset_and_failures() {
    let dir = TempDir::new().unwrap();
    let o = qrecur(dir.path(), &["verify", "--only", "timescales"]);
    assert_eq!(code(&o), 0);
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.lines().filter(|l| l.starts_with("PASS ")).all(|l| l.starts_with("PASS timescales/")));
    let o = qrecur(dir.path(), &["verify", "--tol", "0.1"]);
    assert_eq!(code(&o), 3);
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("FAIL timescales/numeric_vs_closed_form"));
}

#[test]
fn verify_full_suite_passes() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("c.conf"), "lambda = 0.05\n").unwrap();
    let o = qrecur(dir.path(), &["verify", "--config", "c.conf"]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(code(&o), 0, "{stdout}");
    assert!(stdout.contains("PASS config/unitarity"));
}
