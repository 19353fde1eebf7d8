//! Flat `key = value` run configuration.
//!
//! Blank lines and `#` comments are ignored; an inline `#` starts a comment
//! too. Keys may appear once. Physical inputs are SI, collapse-model inputs
//! are cgs (as quoted in the collapse literature).

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::str::FromStr;

use mirrorvis_core::collapse::{CollapseModel, CollapseModelSpec};
use mirrorvis_core::master::{IntegratorConfig, Scheme};
use mirrorvis_core::unravel::TrajectoryConfig;
use mirrorvis_core::{nondimensionalize, periods_grid, Method, PhysicalParams, SimParams};

use crate::CliError;

pub const DEFAULT_PERIODS: f64 = 1.0;
pub const DEFAULT_POINTS: usize = 64;
pub const DEFAULT_TRUNC: usize = 32;
pub const DEFAULT_ACCURACY: f64 = 0.002;
pub const DEFAULT_SWEEP: [usize; 7] = [4, 6, 8, 12, 16, 24, 32];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    // mirror and cavity, SI
    pub omega_c: Option<f64>,
    pub omega_m: Option<f64>,
    pub period: Option<f64>,
    pub mass: Option<f64>,
    pub sigma: Option<f64>,
    pub coupling_g: Option<f64>,
    pub kappa: Option<f64>,
    /// s⁻¹ m⁻²
    pub eta: Option<f64>,
    pub eta_hat: Option<f64>,

    // collapse model
    pub model: Option<CollapseModel>,
    pub lambda_grw: Option<f64>,
    pub alpha: Option<f64>,
    pub n_nucleons: Option<f64>,
    pub gamma_csl: Option<f64>,
    pub density_d: Option<f64>,
    pub side_s: Option<f64>,
    pub eta_direct: Option<f64>,
    pub accuracy: Option<f64>,

    // run
    pub method: Option<Method>,
    pub periods: Option<f64>,
    pub n_points: Option<usize>,
    pub n_trunc: Option<usize>,
    pub step: Option<f64>,
    pub scheme: Option<Scheme>,
    pub tol: Option<f64>,
    pub n_traj: Option<usize>,
    pub traj_step: Option<f64>,
    pub seed: Option<u64>,
    pub sweep_n: Option<Vec<usize>>,
    pub out: Option<PathBuf>,
}

fn num<T: FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.parse().map_err(|_| CliError::Config(format!("`{key}`: cannot parse `{v}`")))
}

fn core<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, CliError> {
    r.map_err(|e| CliError::Config(e.to_string()))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = RunConfig::default();
        let mut seen = BTreeSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let lineno = idx + 1;
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {lineno}: expected `key = value`")))?;
            let (key, value) = (key.trim(), value.trim());
            if value.is_empty() {
                return Err(CliError::Config(format!("line {lineno}: `{key}` has no value")));
            }
            if !seen.insert(key.to_string()) {
                return Err(CliError::Config(format!("line {lineno}: duplicate key `{key}`")));
            }
            cfg.set(key, value).map_err(|e| match e {
                CliError::Config(msg) => CliError::Config(format!("line {lineno}: {msg}")),
                other => other,
            })?;
        }
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn set(&mut self, key: &str, v: &str) -> Result<(), CliError> {
        match key {
            "omega_c" => self.omega_c = Some(num(key, v)?),
            "omega_m" => self.omega_m = Some(num(key, v)?),
            "period" => self.period = Some(num(key, v)?),
            "mass" => self.mass = Some(num(key, v)?),
            "sigma" => self.sigma = Some(num(key, v)?),
            "coupling_g" => self.coupling_g = Some(num(key, v)?),
            "kappa" => self.kappa = Some(num(key, v)?),
            "eta" => self.eta = Some(num(key, v)?),
            "eta_hat" => self.eta_hat = Some(num(key, v)?),
            "model" => self.model = Some(core(v.parse())?),
            "lambda_grw" => self.lambda_grw = Some(num(key, v)?),
            "alpha" => self.alpha = Some(num(key, v)?),
            "n_nucleons" => self.n_nucleons = Some(num(key, v)?),
            "gamma_csl" => self.gamma_csl = Some(num(key, v)?),
            "density_d" => self.density_d = Some(num(key, v)?),
            "side_s" => self.side_s = Some(num(key, v)?),
            "eta_direct" => self.eta_direct = Some(num(key, v)?),
            "accuracy" => self.accuracy = Some(num(key, v)?),
            "method" => self.method = Some(core(v.parse())?),
            "periods" => self.periods = Some(num(key, v)?),
            "n_points" => self.n_points = Some(num(key, v)?),
            "n_trunc" => self.n_trunc = Some(num(key, v)?),
            "step" => self.step = Some(num(key, v)?),
            "scheme" => self.scheme = Some(core(v.parse())?),
            "tol" => self.tol = Some(num(key, v)?),
            "n_traj" => self.n_traj = Some(num(key, v)?),
            "traj_step" => self.traj_step = Some(num(key, v)?),
            "seed" => self.seed = Some(num(key, v)?),
            "sweep_n" => {
                let list = v.split(',').map(|s| num(key, s.trim())).collect::<Result<Vec<usize>, _>>()?;
                self.sweep_n = Some(list);
            }
            "out" => self.out = Some(PathBuf::from(v)),
            _ => return Err(CliError::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    fn has_physical(&self) -> bool {
        [self.omega_m, self.period, self.mass, self.sigma, self.coupling_g, self.omega_c, self.eta]
            .iter()
            .any(Option::is_some)
    }

    /// SI parameters, if any were given; η is left at zero here.
    pub fn physical(&self) -> Result<Option<PhysicalParams>, CliError> {
        if !self.has_physical() {
            return Ok(None);
        }
        let mut b = PhysicalParams::builder();
        macro_rules! pass {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { b = b.$f(v); } )* };
        }
        pass!(omega_c, omega_m, period, mass, sigma, coupling_g, kappa);
        core(b.build()).map(Some)
    }

    pub fn collapse_spec(&self) -> Option<CollapseModelSpec> {
        self.model.map(|model| CollapseModelSpec {
            model,
            lambda_grw: self.lambda_grw,
            alpha: self.alpha,
            n_nucleons: self.n_nucleons,
            gamma_csl: self.gamma_csl,
            density_d: self.density_d,
            side_s: self.side_s,
            eta_direct: self.eta_direct,
        })
    }

    /// η in SI from either `eta` or the collapse model; exactly one may be set.
    pub fn eta_si(&self) -> Result<Option<f64>, CliError> {
        match (self.eta, self.collapse_spec()) {
            (Some(_), Some(_)) => Err(CliError::Config("give either `eta` or `model`, not both".into())),
            (Some(eta), None) => Ok(Some(eta)),
            (None, Some(spec)) => Ok(Some(core(spec.eta())?.eta_si)),
            (None, None) => Ok(None),
        }
    }

    pub fn n_trunc(&self) -> usize {
        self.n_trunc.unwrap_or(DEFAULT_TRUNC)
    }

    pub fn grid(&self) -> Result<Vec<f64>, CliError> {
        let periods = self.periods.unwrap_or(DEFAULT_PERIODS);
        if !(periods.is_finite() && periods > 0.0) {
            return Err(CliError::Config(format!("`periods` must be > 0, got {periods}")));
        }
        let n = self.n_points.unwrap_or(DEFAULT_POINTS);
        if n < 2 {
            return Err(CliError::Config(format!("`n_points` must be at least 2, got {n}")));
        }
        Ok(periods_grid(periods, n))
    }

    /// Dimensionless run parameters. `eta_hat` is used directly; otherwise η
    /// comes from `eta` or `model` and is scaled with the SI mirror data.
    pub fn sim_params(&self) -> Result<SimParams, CliError> {
        let grid = self.grid()?;
        let n = self.n_trunc();
        let physical = self.physical()?;
        let eta_si = self.eta_si()?;
        match (self.eta_hat, eta_si) {
            (Some(_), Some(_)) => Err(CliError::Config("give either `eta_hat` or `eta`/`model`, not both".into())),
            (Some(eta_hat), None) => {
                let kappa = match (self.kappa, &physical) {
                    (Some(k), _) => k,
                    (None, Some(p)) => p.kappa(),
                    (None, None) => return Err(CliError::Config("missing `kappa`".into())),
                };
                core(SimParams::new(kappa, eta_hat, n, grid))
            }
            (None, Some(eta)) => {
                let p = physical.ok_or_else(|| {
                    CliError::Config("`eta`/`model` needs mirror data (`omega_m` or `period`, `sigma` or `mass`)".into())
                })?;
                let p = core(p.with_eta(eta))?;
                let base = core(nondimensionalize(&p, n, &[0.0]))?;
                core(SimParams::new(base.kappa, base.eta_hat, n, grid))
            }
            (None, None) => Err(CliError::Config("missing decoherence strength: set `eta_hat`, `eta` or `model`".into())),
        }
    }

    pub fn integrator(&self) -> Result<IntegratorConfig, CliError> {
        let d = IntegratorConfig::default();
        let cfg = IntegratorConfig {
            step: self.step.unwrap_or(d.step),
            scheme: self.scheme.unwrap_or(d.scheme),
            tol: self.tol.unwrap_or(d.tol),
        };
        core(cfg.validate())?;
        Ok(cfg)
    }

    pub fn trajectories(&self, params: &SimParams, seed_override: Option<u64>) -> TrajectoryConfig {
        let seed = seed_override.or(self.seed).unwrap_or(0);
        TrajectoryConfig {
            n_traj: self.n_traj.unwrap_or(TrajectoryConfig::DEFAULT_N_TRAJ),
            step: self.traj_step.unwrap_or(TrajectoryConfig::DEFAULT_STEP),
            ..TrajectoryConfig::for_grid(params, seed)
        }
    }

    pub fn sweep_list(&self) -> Vec<usize> {
        self.sweep_n.clone().unwrap_or_else(|| DEFAULT_SWEEP.to_vec())
    }
}
