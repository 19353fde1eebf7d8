//! Cross-method validation battery.
//!
//! Every check compares a measured number against a threshold and prints as
//! `CHECK <name>: PASS|FAIL measured=<v> threshold=<v>`. The closed-form
//! oracle is a parameter so that a deliberately broken one can be injected.
//!
//! The linear unraveling is only checked at t = π/2: the second moment of its
//! overlap estimator grows without bound over a full period, so no finite
//! ensemble has a trustworthy standard error there.

use std::f64::consts::PI;
use std::fmt;

use mirrorvis_core::collapse::{self, CollapseModelSpec};
use mirrorvis_core::exact::{damping_envelope, f_exact, lambda_damping};
use mirrorvis_core::master::{integrate_od, run_full, truncation_sweep, FullDensityMatrix, IntegratorConfig};
use mirrorvis_core::unravel::{estimate_f_linear, estimate_f_qmupl, EnsembleEstimate, TrajectoryConfig};
use mirrorvis_core::{periods_grid, PhysicalParams, SimParams};
use num_complex::Complex64;

use crate::config::RunConfig;
use crate::output::short;
use crate::CliError;

/// f(t, κ, η̂).
pub type Oracle = fn(f64, f64, f64) -> Complex64;

pub const DEFAULT_KAPPA: f64 = 0.25;
pub const DEFAULT_ETA_HAT: f64 = 0.1;
const ORACLE_POINTS: usize = 64;
const SWEEP_LIST: [usize; 7] = [4, 6, 8, 12, 16, 24, 32];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    AtMost(f64),
    Within(f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub threshold: Threshold,
}

impl Check {
    fn at_most(name: &str, measured: f64, limit: f64) -> Self {
        Self { name: name.to_string(), measured, threshold: Threshold::AtMost(limit) }
    }

    fn within(name: &str, measured: f64, lo: f64, hi: f64) -> Self {
        Self { name: name.to_string(), measured, threshold: Threshold::Within(lo, hi) }
    }

    pub fn passed(&self) -> bool {
        match self.threshold {
            Threshold::AtMost(limit) => self.measured <= limit,
            Threshold::Within(lo, hi) => (lo..=hi).contains(&self.measured),
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        let threshold = match self.threshold {
            Threshold::AtMost(v) => short(v),
            Threshold::Within(lo, hi) => format!("[{},{}]", short(lo), short(hi)),
        };
        write!(f, "CHECK {}: {verdict} measured={} threshold={threshold}", self.name, short(self.measured))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationSettings {
    pub kappa: f64,
    pub eta_hat: f64,
    pub n_trunc: usize,
    pub step: f64,
    pub n_traj: usize,
    pub traj_step: f64,
    pub seed: u64,
}

impl Default for ValidationSettings {
    fn default() -> Self {
        Self {
            kappa: DEFAULT_KAPPA,
            eta_hat: DEFAULT_ETA_HAT,
            n_trunc: crate::config::DEFAULT_TRUNC,
            step: IntegratorConfig::default().step,
            n_traj: TrajectoryConfig::DEFAULT_N_TRAJ,
            traj_step: TrajectoryConfig::DEFAULT_STEP,
            seed: 0,
        }
    }
}

impl ValidationSettings {
    /// κ = 0.25 and η̂ = 0.1 unless the config sets the coupling or the
    /// decoherence strength.
    pub fn from_config(cfg: &RunConfig, seed: Option<u64>) -> Result<Self, CliError> {
        let d = Self::default();
        let (kappa, eta_hat) = if cfg.eta_hat.is_some() || cfg.eta.is_some() || cfg.model.is_some() {
            let p = cfg.sim_params()?;
            (p.kappa, p.eta_hat)
        } else {
            (cfg.kappa.unwrap_or(d.kappa), d.eta_hat)
        };
        let s = Self {
            kappa,
            eta_hat,
            n_trunc: cfg.n_trunc(),
            step: cfg.integrator()?.step,
            n_traj: cfg.n_traj.unwrap_or(d.n_traj),
            traj_step: cfg.traj_step.unwrap_or(d.traj_step),
            seed: seed.or(cfg.seed).unwrap_or(d.seed),
        };
        SimParams::new(s.kappa, s.eta_hat, s.n_trunc, vec![0.0])?;
        Ok(s)
    }

    fn params(&self, eta_hat: f64) -> Result<SimParams, CliError> {
        Ok(SimParams::new(self.kappa, eta_hat, self.n_trunc, periods_grid(1.0, ORACLE_POINTS))?)
    }
}

pub fn default_oracle(t: f64, kappa: f64, eta_hat: f64) -> Complex64 {
    f_exact(t, kappa, eta_hat)
}

/// Runs the battery. With η̂ = 0 only the unitary-limit checks run.
pub fn run_battery(s: &ValidationSettings, oracle: Oracle) -> Result<Vec<Check>, CliError> {
    let mut checks = unitary_checks(s, oracle)?;
    if s.eta_hat == 0.0 {
        return Ok(checks);
    }
    checks.extend(collapse_checks()?);
    checks.extend(damped_checks(s, oracle)?);
    checks.extend(ensemble_checks(s, oracle)?);
    Ok(checks)
}

fn unitary_checks(s: &ValidationSettings, oracle: Oracle) -> Result<Vec<Check>, CliError> {
    let p = s.params(0.0)?;
    let cfg = IntegratorConfig::fixed(s.step);
    let od = integrate_od(&p, &cfg)?;
    let full = run_full(&FullDensityMatrix::initial(s.n_trunc), &p, &cfg)?;
    let end = od.last().expect("grid is non-empty").f;
    let mut phase_err = (end.arg() - 2.0 * PI * s.kappa * s.kappa).rem_euclid(2.0 * PI);
    phase_err = phase_err.min(2.0 * PI - phase_err);
    let oracle0 = |t| oracle(t, s.kappa, 0.0);
    let sweep = truncation_sweep(&p, &IntegratorConfig::fixed(2.0 * PI / 1024.0), &SWEEP_LIST)?;
    Ok(vec![
        Check::at_most("unitary_modulus_2pi", (end.norm() - 1.0).abs(), 1e-8),
        Check::at_most("unitary_phase_2pi", phase_err, 1e-8),
        Check::at_most("unitary_od_vs_oracle", od.max_error_against(oracle0), 1e-8),
        Check::at_most("unitary_full_vs_oracle", full.curve.max_error_against(oracle0), 1e-8),
        Check::at_most("unitary_trace", full.diagnostics.max_trace_error, 1e-10),
        Check::at_most("unitary_truncation_converged_n", sweep.converged_n as f64, s.n_trunc as f64),
    ])
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn collapse_checks() -> Result<Vec<Check>, CliError> {
    let experiment = PhysicalParams::builder().period(2e-3).sigma(1e-13).kappa(0.25).build()?;
    let csl = CollapseModelSpec::csl_reference();
    let eta_csl = csl.eta()?.eta_si;
    let eta_grw = CollapseModelSpec::grw_reference().eta()?.eta_si;
    let lambda = lambda_damping(&experiment.with_eta(eta_csl)?);
    let bound = collapse::gamma_bound(0.002, &experiment, &csl)?;
    Ok(vec![
        Check::at_most("collapse_eta_csl_rel_dev", rel(eta_csl, 0.6e21), 0.10),
        Check::at_most("collapse_eta_grw_log10_dev", (eta_grw / 1e13).log10().abs(), 0.5),
        Check::at_most("collapse_lambda_csl_rel_dev", rel(lambda, 0.2e-8), 0.15),
        Check::within("collapse_gamma_bound", bound.gamma_max, 0.5e-24, 2e-24),
    ])
}

fn damped_checks(s: &ValidationSettings, oracle: Oracle) -> Result<Vec<Check>, CliError> {
    let p = s.params(s.eta_hat)?;
    let o = |t| oracle(t, s.kappa, s.eta_hat);
    let od = integrate_od(&p, &IntegratorConfig::fixed(s.step))?;
    let full = run_full(&FullDensityMatrix::initial(s.n_trunc), &p, &IntegratorConfig::fixed(s.step))?;
    let coarse = integrate_od(&p, &IntegratorConfig::fixed(2.0 * s.step))?;
    let (e_coarse, e_fine) = (coarse.max_error_against(o), od.max_error_against(o));

    let n = 10_000;
    let worst_drop = (0..n)
        .map(|i| damping_envelope(2.0 * PI * i as f64 / (n - 1) as f64))
        .collect::<Vec<_>>()
        .windows(2)
        .map(|w| w[0] - w[1])
        .fold(0.0, f64::max);

    let sweep = truncation_sweep(&p, &IntegratorConfig::fixed(2.0 * PI / 1024.0), &SWEEP_LIST)?;
    Ok(vec![
        Check::at_most("envelope_monotone", worst_drop, 0.0),
        Check::at_most("master_od_vs_oracle", e_fine, 1e-6),
        Check::at_most("master_full_vs_oracle", full.curve.max_error_against(o), 1e-6),
        Check::at_most("master_full_vs_od", full.curve.max_abs_diff(&od)?, 1e-9),
        Check::at_most("master_trace", full.diagnostics.max_trace_error, 1e-10),
        Check::at_most("master_hermiticity", full.diagnostics.max_hermiticity_error, 1e-12),
        Check::at_most("master_positivity", -full.diagnostics.min_eigenvalue, 1e-8),
        Check::within("rk4_order_ratio", e_coarse / e_fine, 8.0, 32.0),
        Check::at_most("truncation_converged_n", sweep.converged_n as f64, s.n_trunc as f64),
    ])
}

fn ensemble_checks(s: &ValidationSettings, oracle: Oracle) -> Result<Vec<Check>, CliError> {
    let p = SimParams::new(s.kappa, s.eta_hat, s.n_trunc, vec![0.0, PI / 2.0, PI, 1.5 * PI, 2.0 * PI])?;
    let base = TrajectoryConfig { n_traj: s.n_traj, step: s.traj_step, ..TrajectoryConfig::for_grid(&p, s.seed) };
    let qmupl = estimate_f_qmupl(&p, &TrajectoryConfig { record_times: vec![PI / 2.0, PI, 2.0 * PI], ..base.clone() })?;
    let linear = estimate_f_linear(&p, &TrajectoryConfig { record_times: vec![PI / 2.0], ..base.clone() })?;

    let z = |e: &EnsembleEstimate, k: usize| (e.mean_f[k] - oracle(e.times[k], s.kappa, s.eta_hat)).norm() / e.stderr_f[k];
    // 0.02 is the target for 10⁴ trajectories; scale it with the ensemble size.
    let stderr_limit = 0.02 * (TrajectoryConfig::DEFAULT_N_TRAJ as f64 / s.n_traj as f64).sqrt();

    let small = SimParams::new(s.kappa, s.eta_hat, s.n_trunc.min(12), periods_grid(1.0, 5))?;
    let small_cfg = TrajectoryConfig { n_traj: 64, step: 2.0 * PI / 512.0, ..TrajectoryConfig::for_grid(&small, s.seed) };
    let bits = |e: &EnsembleEstimate| -> Vec<u64> { e.mean_f.iter().flat_map(|z| [z.re.to_bits(), z.im.to_bits()]).collect() };
    let a = bits(&estimate_f_qmupl(&small, &small_cfg)?);
    let b = bits(&estimate_f_qmupl(&small, &small_cfg)?);
    let differing = a.iter().zip(&b).filter(|(x, y)| x != y).count();

    Ok(vec![
        Check::at_most("qmupl_z_pi_over_2", z(&qmupl, 0), 3.0),
        Check::at_most("qmupl_z_pi", z(&qmupl, 1), 3.0),
        Check::at_most("qmupl_z_2pi", z(&qmupl, 2), 3.0),
        Check::at_most("qmupl_stderr_2pi", qmupl.stderr_f[2], stderr_limit),
        Check::at_most("linear_z_pi_over_2", z(&linear, 0), 3.0),
        Check::at_most("linear_norm_z_pi_over_2", (linear.mean_norm_sq[0] - 1.0).abs() / linear.stderr_norm_sq[0], 4.0),
        Check::at_most("seed_determinism_differing_words", differing as f64, 0.0),
    ])
}

/// Report text and the number of failed checks.
pub fn report(checks: &[Check]) -> (String, usize) {
    let mut text = String::new();
    for c in checks {
        text.push_str(&c.to_string());
        text.push('\n');
    }
    let failed = checks.iter().filter(|c| !c.passed()).count();
    text.push_str(&format!("SUMMARY: {} passed, {failed} failed\n", checks.len() - failed));
    (text, failed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use mirrorvis_core::exact::{damping_envelope, f_qm};

    fn quick() -> ValidationSettings {
        ValidationSettings { n_traj: 400, traj_step: 2.0 * PI / 2048.0, ..Default::default() }
    }

    fn wrong_sign(t: f64, kappa: f64, eta_hat: f64) -> Complex64 {
        f_qm(t, kappa) * (3.0 * kappa * kappa * eta_hat * damping_envelope(t)).exp()
    }

    #[test]
    fn line_format() {
        let c = Check::at_most("x", 0.5, 1.0);
        assert_eq!(c.to_string(), "CHECK x: PASS measured=5.000000e-1 threshold=1.000000e0");
        let r = Check::within("r", 40.0, 8.0, 32.0);
        assert!(!r.passed());
        assert!(r.to_string().starts_with("CHECK r: FAIL measured=4.000000e1 threshold=[8.000000e0,3.200000e1]"));
        assert!(!Check::at_most("nan", f64::NAN, 1.0).passed());
    }

    #[test]
    fn quick_battery_passes() {
        let checks = run_battery(&quick(), default_oracle).unwrap();
        let (text, failed) = report(&checks);
        assert_eq!(failed, 0, "{text}");
        assert!(checks.len() >= 8);
    }

    #[test]
    fn wrong_sign_oracle_is_caught() {
        let checks = run_battery(&quick(), wrong_sign).unwrap();
        let by_name = |n: &str| checks.iter().find(|c| c.name == n).unwrap();
        assert!(!by_name("master_od_vs_oracle").passed());
        assert!(!by_name("master_full_vs_oracle").passed());
        assert!(by_name("unitary_modulus_2pi").passed());
    }

    #[test]
    fn unitary_only_when_undamped() {
        let s = ValidationSettings { eta_hat: 0.0, ..quick() };
        let checks = run_battery(&s, default_oracle).unwrap();
        assert!(checks.iter().all(|c| c.name.starts_with("unitary_")));
        assert!(checks.iter().all(Check::passed));
    }

    #[test]
    fn settings_from_config() {
        let d = ValidationSettings::from_config(&RunConfig::default(), None).unwrap();
        assert_eq!(d, ValidationSettings::default());
        let cfg = RunConfig::parse("kappa = 0.5\neta_hat = 0\nn_traj = 10\nseed = 3").unwrap();
        let s = ValidationSettings::from_config(&cfg, Some(8)).unwrap();
        assert_eq!((s.kappa, s.eta_hat, s.n_traj, s.seed), (0.5, 0.0, 10, 8));
        assert!(ValidationSettings::from_config(&RunConfig::parse("n_trunc = 1").unwrap(), None).is_err());
    }
}
