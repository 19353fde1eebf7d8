//! `curve`, `params` and `sweep` subcommands. Each returns its output text;
//! writing it is left to the caller.

use std::fmt::Write as _;

use mirrorvis_core::collapse::{self, CollapseModel};
use mirrorvis_core::exact::{lambda_damping, sample_curve};
use mirrorvis_core::master::{integrate_full, integrate_od, step_study, truncation_differences, FullDensityMatrix};
use mirrorvis_core::unravel::{estimate_f_linear, estimate_f_qmupl};
use mirrorvis_core::{nondimensionalize, Method, VisibilityCurve};

use crate::config::{RunConfig, DEFAULT_ACCURACY};
use crate::output::{curve_csv, short, version_line};
use crate::CliError;

/// Samples f(t) on the configured grid with the configured method.
pub fn curve(cfg: &RunConfig, seed: Option<u64>) -> Result<VisibilityCurve, CliError> {
    let method = cfg.method.ok_or_else(|| CliError::Config("missing `method`".into()))?;
    let params = cfg.sim_params()?;
    let curve = match method {
        Method::Exact | Method::QmOnly | Method::Heuristic => sample_curve(method, &params)?,
        Method::MasterFull => integrate_full(&FullDensityMatrix::initial(params.n_trunc), &params, &cfg.integrator()?)?,
        Method::MasterOd => integrate_od(&params, &cfg.integrator()?)?,
        Method::UnravelLinear | Method::UnravelQmupl => {
            let tcfg = cfg.trajectories(&params, seed);
            let est = if method == Method::UnravelLinear {
                estimate_f_linear(&params, &tcfg)?
            } else {
                estimate_f_qmupl(&params, &tcfg)?
            };
            est.to_curve(method, &params)
        }
    };
    Ok(curve)
}

pub fn curve_text(cfg: &RunConfig, seed: Option<u64>) -> Result<String, CliError> {
    curve(cfg, seed).map(|c| curve_csv(&c))
}

/// η, η̂, Λ and the γ bound as `name = value unit` lines.
pub fn params_report(cfg: &RunConfig) -> Result<String, CliError> {
    let p = cfg
        .physical()?
        .ok_or_else(|| CliError::Config("`params` needs mirror data (`period` or `omega_m`, `sigma` or `mass`, `kappa`)".into()))?;
    let spec = cfg.collapse_spec();
    let model = spec.as_ref().map_or(CollapseModel::Direct, |s| s.model);
    let eta = cfg.eta_si()?.ok_or_else(|| CliError::Config("missing `model` or `eta`".into()))?;
    let with_eta = p.with_eta(eta)?;
    let eta_hat = nondimensionalize(&with_eta, 2, &[0.0])?.eta_hat;
    let accuracy = cfg.accuracy.unwrap_or(DEFAULT_ACCURACY);

    let mut s = String::new();
    let _ = writeln!(s, "{}", version_line());
    let _ = writeln!(s, "model = {model}");
    let _ = writeln!(s, "eta = {} s^-1 m^-2", short(eta));
    let _ = writeln!(s, "eta_cgs = {} s^-1 cm^-2", short(collapse::units::per_m2_to_per_cm2(eta)));
    let _ = writeln!(s, "eta_hat = {}", short(eta_hat));
    let _ = writeln!(s, "kappa = {}", short(p.kappa()));
    let _ = writeln!(s, "ell = {} m", short(p.ell()));
    let _ = writeln!(s, "period = {} s", short(p.period()));
    let _ = writeln!(s, "lambda = {}", short(lambda_damping(&with_eta)));

    let has_geometry = spec.as_ref().is_some_and(|s| s.alpha.is_some() && s.density_d.is_some() && s.side_s.is_some());
    if has_geometry {
        let bound = collapse::gamma_bound(accuracy, &p, spec.as_ref().unwrap())?;
        let _ = writeln!(s, "accuracy = {}", short(accuracy));
        let _ = writeln!(s, "eta_max = {} s^-1 m^-2", short(bound.eta_max_si));
        let _ = writeln!(s, "gamma_max = {} cm^3 s^-1", short(bound.gamma_max));
    }
    Ok(s)
}

/// Truncation sweep plus an RK4 step study at step, step/2, step/4.
/// The `bool` is false when no consecutive pair met the tolerance.
pub fn sweep_report(cfg: &RunConfig) -> Result<(String, bool), CliError> {
    let params = cfg.sim_params()?;
    let integ = cfg.integrator()?;
    let list = cfg.sweep_list();
    let pairs = truncation_differences(&params, &integ, &list)?;
    let converged = pairs.iter().find(|p| p.max_diff < integ.tol).map(|p| p.n_low);

    let mut s = String::new();
    let _ = writeln!(s, "{}", version_line());
    let _ = writeln!(s, "# kappa = {} eta_hat = {} step = {} tol = {}", params.kappa, params.eta_hat, integ.step, integ.tol);
    for p in &pairs {
        let _ = writeln!(s, "SWEEP n_low={} n_high={} max_diff={}", p.n_low, p.n_high, short(p.max_diff));
    }
    match converged {
        Some(n) => {
            let _ = writeln!(s, "converged_n = {n}");
        }
        None => {
            let _ = writeln!(s, "converged_n = none");
        }
    }

    let steps = [integ.step, integ.step / 2.0, integ.step / 4.0];
    let study = step_study(&params, &steps)?;
    for (i, &(h, err)) in study.iter().enumerate() {
        let ratio = if i == 0 { "-".to_string() } else { short(study[i - 1].1 / err) };
        let _ = writeln!(s, "STEP h={} error={} ratio={ratio}", short(h), short(err));
    }
    Ok((s, converged.is_some()))
}
