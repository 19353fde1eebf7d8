use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const EXPERIMENT: &str = "period = 2e-3\nsigma = 1e-13\nkappa = 0.25\n";

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mirrorvis")).args(args).output().expect("binary runs")
}

fn write_config(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, body).unwrap();
    path
}

fn curve_to(dir: &TempDir, cfg: &str, out: &str, extra: &[&str]) -> PathBuf {
    let cfg_path = write_config(dir, &format!("{out}.cfg"), cfg);
    let out_path = dir.path().join(out);
    let mut args = vec!["curve", "--config", cfg_path.to_str().unwrap(), "--out", out_path.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = run(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out_path
}

fn rows(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

fn report_value(text: &str, key: &str) -> f64 {
    let line = text.lines().find(|l| l.starts_with(&format!("{key} = "))).unwrap();
    line.split_whitespace().nth(2).unwrap().parse().unwrap()
}

#[test]
fn unitary_exact_curve_returns_to_full_visibility() {
    let dir = TempDir::new().unwrap();
    let out = curve_to(&dir, "method = exact\nkappa = 0.25\neta_hat = 0\n", "exact.csv", &[]);
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.contains("\nt_rad,re_f,im_f,visibility\n"));
    let last = rows(&out).pop().unwrap();
    assert!((last[0] - 2.0 * std::f64::consts::PI).abs() < 1e-15);
    assert!((last[3] - 1.0).abs() < 1e-12);
}

#[test]
fn exact_and_master_od_agree_row_by_row() {
    let dir = TempDir::new().unwrap();
    let base = "kappa = 0.25\neta_hat = 0.1\nn_trunc = 32\n";
    let exact = rows(&curve_to(&dir, &format!("{base}method = exact\n"), "e.csv", &[]));
    let od = rows(&curve_to(&dir, &format!("{base}method = master-od\n"), "od.csv", &[]));
    assert_eq!(exact.len(), od.len());
    let worst = exact
        .iter()
        .zip(&od)
        .map(|(a, b)| {
            assert_eq!(a[0], b[0]);
            (a[1] - b[1]).hypot(a[2] - b[2])
        })
        .fold(0.0, f64::max);
    assert!(worst < 1e-6, "max |df| = {worst}");
}

#[test]
fn seeded_unraveling_is_byte_identical() {
    let dir = TempDir::new().unwrap();
    let cfg = "method = unravel-linear\nkappa = 0.25\neta_hat = 0.1\nn_trunc = 12\nn_points = 5\nn_traj = 200\ntraj_step = 0.005\n";
    let a = curve_to(&dir, cfg, "a.csv", &["--seed", "42"]);
    let b = curve_to(&dir, cfg, "b.csv", &["--seed", "42"]);
    let c = curve_to(&dir, cfg, "c.csv", &["--seed", "43"]);
    let (a, b, c) = (fs::read(a).unwrap(), fs::read(b).unwrap(), fs::read(c).unwrap());
    assert_eq!(a, b);
    assert_ne!(a, c);
    let text = String::from_utf8(a).unwrap();
    assert!(text.contains("# seed = 42\n"));
    assert!(text.contains("t_rad,re_f,im_f,visibility,stderr\n"));
}

#[test]
fn params_reports_collapse_strengths() {
    let dir = TempDir::new().unwrap();
    let csl = write_config(
        &dir,
        "csl.cfg",
        &format!("{EXPERIMENT}model = csl\ngamma_csl = 1e-30\nalpha = 1e10\ndensity_d = 1e24\nside_s = 1e-3\n"),
    );
    let o = run(&["params", "--config", csl.to_str().unwrap()]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!((report_value(&text, "eta") / 5.6e20 - 1.0).abs() < 0.01);
    assert!(text.contains(" s^-1 m^-2"));
    let lambda = report_value(&text, "lambda");
    assert!((lambda / 0.2e-8 - 1.0).abs() < 0.15);
    assert!((0.5e-24..=2e-24).contains(&report_value(&text, "gamma_max")));

    let grw = write_config(&dir, "grw.cfg", &format!("{EXPERIMENT}model = grw\nlambda_grw = 1e-16\nalpha = 1e10\nn_nucleons = 3e15\n"));
    let o = run(&["params", "--config", grw.to_str().unwrap()]);
    assert!(o.status.success());
    let eta = report_value(&String::from_utf8(o.stdout).unwrap(), "eta");
    assert!((eta / 1.5e13 - 1.0).abs() < 1e-6);
}

#[test]
fn config_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let no_side = write_config(&dir, "s.cfg", &format!("{EXPERIMENT}model = csl\ngamma_csl = 1e-30\nalpha = 1e10\ndensity_d = 1e24\n"));
    let o = run(&["params", "--config", no_side.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("side_s"));
    assert_eq!(err.lines().count(), 1);

    let unknown = write_config(&dir, "u.cfg", "kappa = 0.25\nfoo = 1\n");
    assert_eq!(run(&["curve", "--config", unknown.to_str().unwrap()]).status.code(), Some(2));
    let missing = dir.path().join("nope.cfg");
    assert_eq!(run(&["curve", "--config", missing.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_3() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "n.cfg", "method = master-od\nkappa = 0.25\neta_hat = 0.1\nperiods = 100\nn_points = 101\nstep = 10\n");
    assert_eq!(run(&["curve", "--config", cfg.to_str().unwrap()]).status.code(), Some(3));
}

#[test]
fn sweep_prints_pairs_and_steps() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "sw.cfg", "kappa = 0.25\neta_hat = 0\nn_points = 9\nsweep_n = 8, 12, 16\nstep = 0.02\n");
    let o = run(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("converged_n = 12"));
    assert_eq!(text.lines().filter(|l| l.starts_with("STEP ")).count(), 3);
}

fn check_lines(text: &str) -> (usize, usize) {
    let pass = text.lines().filter(|l| l.starts_with("CHECK ") && l.contains(": PASS measured=")).count();
    let fail = text.lines().filter(|l| l.starts_with("CHECK ") && l.contains(": FAIL measured=")).count();
    (pass, fail)
}

#[test]
fn validate_default_config_passes() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "v.cfg", "# defaults throughout\n");
    let o = run(&["validate", "--config", cfg.to_str().unwrap(), "--seed", "7"]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(o.status.code(), Some(0), "{text}");
    let (pass, fail) = check_lines(&text);
    assert!(pass >= 8, "{text}");
    assert_eq!(fail, 0);
}

#[test]
fn validate_unitary_config_runs_unitary_checks_only() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "v0.cfg", "eta_hat = 0\nkappa = 0.25\n");
    let o = run(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let checks: Vec<&str> = text.lines().filter(|l| l.starts_with("CHECK ")).collect();
    assert!(!checks.is_empty());
    assert!(checks.iter().all(|l| l.starts_with("CHECK unitary_")));
}
