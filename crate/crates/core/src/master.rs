//! Lindblad evolution in the truncated Fock basis.
//!
//! Two routes extract the same off-diagonal factor f(t):
//!
//! * the full photon-branch ⊗ mirror density matrix (2N × 2N), with
//!   f = 2 Tr_m ⟨A|ρ|B⟩;
//! * the mirror-space operator ρ_OD (N × N) obeying
//!   dρ_OD/dt = −i H^A ρ_OD + i ρ_OD H^B − (η̂/2)[x,[x,ρ_OD]], with f = Tr ρ_OD.
//!
//! Basis ordering for the full matrix is branch-major: indices `0..N` are the
//! A branch (photon in the arm with the movable mirror) and `N..2N` the B
//! branch. The photon energy ħω_c is a common phase of both branches and is
//! dropped.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::curve::{Method, VisibilityCurve};
use crate::error::{positive, Error, Result};
use crate::fock::Tridiagonal;
use crate::params::SimParams;

type CMatrix = DMatrix<Complex64>;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Positivity is checked every this many accepted steps.
pub const POSITIVITY_CHECK_INTERVAL: usize = 64;
/// Smallest eigenvalue below which a full run is aborted.
pub const POSITIVITY_ABORT: f64 = -1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    FixedRk4,
    /// RK4 with step-doubling local error control.
    Rk4StepDoubling,
}

impl Scheme {
    pub fn tag(self) -> &'static str {
        match self {
            Scheme::FixedRk4 => "fixed-rk4",
            Scheme::Rk4StepDoubling => "rk4-step-doubling",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed-rk4" => Ok(Scheme::FixedRk4),
            "rk4-step-doubling" => Ok(Scheme::Rk4StepDoubling),
            other => Err(Error::InvalidParam { name: "scheme", reason: format!("unknown scheme `{other}`") }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    /// Dimensionless time step (initial step for the adaptive scheme).
    pub step: f64,
    pub scheme: Scheme,
    /// Local error tolerance for step doubling; convergence threshold for sweeps.
    pub tol: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { step: 2.0 * PI / 4096.0, scheme: Scheme::FixedRk4, tol: 1e-9 }
    }
}

impl IntegratorConfig {
    pub fn fixed(step: f64) -> Self {
        Self { step, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        positive("step", self.step)?;
        positive("tol", self.tol)?;
        Ok(())
    }
}

/// Density matrix of photon branch ⊗ mirror.
#[derive(Debug, Clone, PartialEq)]
pub struct FullDensityMatrix {
    pub entries: CMatrix,
}

impl FullDensityMatrix {
    /// |ψ₀⟩⟨ψ₀| with |ψ₀⟩ = (|A⟩ + |B⟩)|0⟩_m / √2.
    pub fn initial(n_trunc: usize) -> Self {
        let mut entries = CMatrix::zeros(2 * n_trunc, 2 * n_trunc);
        for &i in &[0, n_trunc] {
            for &j in &[0, n_trunc] {
                entries[(i, j)] = Complex64::new(0.5, 0.0);
            }
        }
        Self { entries }
    }

    pub fn n_trunc(&self) -> usize {
        self.entries.nrows() / 2
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.trace()
    }

    /// Largest |ρ_ij − conj(ρ_ji)|.
    pub fn hermiticity_error(&self) -> f64 {
        hermiticity_error(&self.entries)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        // Eigenvalues of the Hermitian part; the anti-Hermitian remainder is tracked separately.
        let h = (&self.entries + self.entries.adjoint()) * Complex64::new(0.5, 0.0);
        h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// 2 Tr_m ⟨A|ρ|B⟩.
    pub fn off_diagonal_factor(&self) -> Complex64 {
        let n = self.n_trunc();
        let s: Complex64 = (0..n).map(|k| self.entries[(k, n + k)]).sum();
        2.0 * s
    }

    /// ρ_OD = 2⟨A|ρ|B⟩ as a mirror operator.
    pub fn off_diagonal_block(&self) -> OffDiagonalMatrix {
        let n = self.n_trunc();
        OffDiagonalMatrix { entries: self.entries.view((0, n), (n, n)) * Complex64::new(2.0, 0.0) }
    }
}

/// Mirror-space operator between the two photon branches; Tr = f.
#[derive(Debug, Clone, PartialEq)]
pub struct OffDiagonalMatrix {
    pub entries: CMatrix,
}

impl OffDiagonalMatrix {
    /// |0⟩⟨0|
    pub fn initial(n_trunc: usize) -> Self {
        let mut entries = CMatrix::zeros(n_trunc, n_trunc);
        entries[(0, 0)] = Complex64::new(1.0, 0.0);
        Self { entries }
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.trace()
    }
}

fn hermiticity_error(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..=j {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Right-hand side of an autonomous matrix ODE.
pub trait MatrixOde {
    fn rhs(&self, y: &CMatrix) -> CMatrix;
}

/// dρ/dt = −i(Lρ − ρR) − (η̂/2)[x,[x,ρ]] with tridiagonal L, R, x.
///
/// L = R = diag(H^A, H^B) gives the full equation; L = H^A, R = H^B the
/// off-diagonal one.
#[derive(Debug, Clone)]
pub struct LindbladGenerator {
    left: Tridiagonal,
    right: Tridiagonal,
    x: Tridiagonal,
    eta_hat: f64,
}

impl LindbladGenerator {
    pub fn full(params: &SimParams) -> Self {
        let n = params.n_trunc;
        let ha = Tridiagonal::hamiltonian_a(n, params.kappa);
        let hb = Tridiagonal::number(n);
        let x = Tridiagonal::position(n);
        let h = Tridiagonal::block_diag(&ha, &hb);
        Self { left: h.clone(), right: h, x: Tridiagonal::block_diag(&x, &x), eta_hat: params.eta_hat }
    }

    pub fn off_diagonal(params: &SimParams) -> Self {
        let n = params.n_trunc;
        Self {
            left: Tridiagonal::hamiltonian_a(n, params.kappa),
            right: Tridiagonal::number(n),
            x: Tridiagonal::position(n),
            eta_hat: params.eta_hat,
        }
    }

    pub fn dim(&self) -> usize {
        self.x.dim()
    }
}

impl MatrixOde for LindbladGenerator {
    fn rhs(&self, rho: &CMatrix) -> CMatrix {
        let mut out = (self.left.mul_left(rho) - self.right.mul_right(rho)) * (-I);
        if self.eta_hat != 0.0 {
            let c = self.x.mul_left(rho) - self.x.mul_right(rho);
            let cc = self.x.mul_left(&c) - self.x.mul_right(&c);
            out -= cc * Complex64::new(0.5 * self.eta_hat, 0.0);
        }
        out
    }
}

fn check_dim(expected: usize, m: &CMatrix) -> Result<()> {
    if m.nrows() != expected || m.ncols() != expected {
        return Err(Error::DimensionMismatch { expected, got: m.nrows() });
    }
    Ok(())
}

/// Dimensionless right-hand side of the full Lindblad equation.
pub fn lindblad_rhs_full(rho: &FullDensityMatrix, params: &SimParams) -> Result<CMatrix> {
    check_dim(2 * params.n_trunc, &rho.entries)?;
    Ok(LindbladGenerator::full(params).rhs(&rho.entries))
}

/// Dimensionless right-hand side of the off-diagonal equation.
pub fn lindblad_rhs_od(rho_od: &OffDiagonalMatrix, params: &SimParams) -> Result<CMatrix> {
    check_dim(params.n_trunc, &rho_od.entries)?;
    Ok(LindbladGenerator::off_diagonal(params).rhs(&rho_od.entries))
}

pub fn rk4_step<S: MatrixOde>(sys: &S, y: &CMatrix, h: f64) -> CMatrix {
    let hc = Complex64::new(h, 0.0);
    let half = Complex64::new(0.5 * h, 0.0);
    let k1 = sys.rhs(y);
    let k2 = sys.rhs(&(y + &k1 * half));
    let k3 = sys.rhs(&(y + &k2 * half));
    let k4 = sys.rhs(&(y + &k3 * hc));
    y + (k1 + (k2 + k3) * Complex64::new(2.0, 0.0) + k4) * Complex64::new(h / 6.0, 0.0)
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Advances `y` from `t0` to `t1`, calling `on_step(y, t)` after every
/// accepted step. Returns the number of accepted steps.
fn advance<S: MatrixOde>(
    sys: &S,
    y: &mut CMatrix,
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
    h_state: &mut f64,
    mut on_step: impl FnMut(&CMatrix, f64) -> Result<()>,
) -> Result<usize> {
    let span = t1 - t0;
    match cfg.scheme {
        Scheme::FixedRk4 => {
            // Substeps no larger than cfg.step that land exactly on t1.
            let n = ((span / cfg.step) - 1e-9).ceil().max(1.0) as usize;
            let h = span / n as f64;
            for k in 1..=n {
                *y = rk4_step(sys, y, h);
                on_step(y, t0 + h * k as f64)?;
            }
            Ok(n)
        }
        Scheme::Rk4StepDoubling => {
            let mut t = t0;
            let mut accepted = 0;
            while t < t1 {
                let h = h_state.min(t1 - t);
                let full = rk4_step(sys, y, h);
                let halfway = rk4_step(sys, y, 0.5 * h);
                let two_half = rk4_step(sys, &halfway, 0.5 * h);
                let err = max_abs(&(&two_half - &full)) / 15.0;
                if !err.is_finite() {
                    return Err(Error::NonFinite { t });
                }
                let factor = if err == 0.0 { 2.0 } else { (0.9 * (cfg.tol / err).powf(0.2)).clamp(0.2, 2.0) };
                if err <= cfg.tol {
                    *y = two_half;
                    t = if t1 - t - h <= 1e-12 * t1.abs().max(1.0) { t1 } else { t + h };
                    accepted += 1;
                    on_step(y, t)?;
                    // A step clipped to hit t1 says nothing about the natural step size.
                    if h == *h_state {
                        *h_state = h * factor;
                    }
                } else {
                    *h_state = h * factor;
                    if *h_state < 1e-14 {
                        return Err(Error::NonFinite { t });
                    }
                }
            }
            Ok(accepted)
        }
    }
}

fn all_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Worst-case health indicators observed during a full-matrix run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullDiagnostics {
    pub max_trace_error: f64,
    pub max_hermiticity_error: f64,
    pub min_eigenvalue: f64,
    pub steps: usize,
}

#[derive(Debug, Clone)]
pub struct FullRun {
    pub curve: VisibilityCurve,
    pub diagnostics: FullDiagnostics,
    pub final_state: FullDensityMatrix,
}

fn base_meta(curve: VisibilityCurve, params: &SimParams, cfg: &IntegratorConfig) -> VisibilityCurve {
    curve
        .with_meta("kappa", params.kappa)
        .with_meta("eta_hat", params.eta_hat)
        .with_meta("n_trunc", params.n_trunc)
        .with_meta("step", cfg.step)
        .with_meta("scheme", cfg.scheme.tag())
        .with_meta("photon_phase", "dropped")
}

/// Integrates the full Lindblad equation and records health diagnostics.
pub fn run_full(rho0: &FullDensityMatrix, params: &SimParams, cfg: &IntegratorConfig) -> Result<FullRun> {
    cfg.validate()?;
    check_dim(2 * params.n_trunc, &rho0.entries)?;
    let sys = LindbladGenerator::full(params);
    let mut rho = rho0.entries.clone();
    let mut curve = base_meta(VisibilityCurve::new(Method::MasterFull), params, cfg);
    if cfg.scheme == Scheme::Rk4StepDoubling {
        curve = curve.with_meta("tol", cfg.tol);
    }

    let mut diag = FullDiagnostics {
        max_trace_error: 0.0,
        max_hermiticity_error: 0.0,
        min_eigenvalue: f64::INFINITY,
        steps: 0,
    };
    let mut h_state = cfg.step;
    let check = |m: &CMatrix, t: f64, diag: &mut FullDiagnostics, eig: bool| -> Result<()> {
        if !all_finite(m) {
            return Err(Error::NonFinite { t });
        }
        diag.max_trace_error = diag.max_trace_error.max((m.trace() - 1.0).norm());
        diag.max_hermiticity_error = diag.max_hermiticity_error.max(hermiticity_error(m));
        if eig {
            let state = FullDensityMatrix { entries: m.clone() };
            let min_eig = state.min_eigenvalue();
            diag.min_eigenvalue = diag.min_eigenvalue.min(min_eig);
            if min_eig < POSITIVITY_ABORT {
                return Err(Error::PositivityViolation { t, min_eig });
            }
        }
        Ok(())
    };

    let grid = &params.t_grid;
    check(&rho, 0.0, &mut diag, true)?;
    curve.push(grid[0], FullDensityMatrix { entries: rho.clone() }.off_diagonal_factor());
    for w in grid.windows(2) {
        let mut steps = diag.steps;
        let mut inner = diag;
        advance(&sys, &mut rho, w[0], w[1], cfg, &mut h_state, |m, t| {
            steps += 1;
            check(m, t, &mut inner, steps.is_multiple_of(POSITIVITY_CHECK_INTERVAL))
        })?;
        diag = inner;
        diag.steps = steps;
        let state = FullDensityMatrix { entries: rho.clone() };
        curve.push(w[1], state.off_diagonal_factor());
    }
    check(&rho, *grid.last().unwrap(), &mut diag, true)?;

    curve = curve.with_meta("steps", diag.steps);
    Ok(FullRun { curve, diagnostics: diag, final_state: FullDensityMatrix { entries: rho } })
}

pub fn integrate_full(rho0: &FullDensityMatrix, params: &SimParams, cfg: &IntegratorConfig) -> Result<VisibilityCurve> {
    run_full(rho0, params, cfg).map(|r| r.curve)
}

/// Integrates ρ_OD from |0⟩⟨0| and samples f = Tr ρ_OD on the grid.
pub fn integrate_od(params: &SimParams, cfg: &IntegratorConfig) -> Result<VisibilityCurve> {
    cfg.validate()?;
    let sys = LindbladGenerator::off_diagonal(params);
    let mut rho = OffDiagonalMatrix::initial(params.n_trunc).entries;
    let mut curve = base_meta(VisibilityCurve::new(Method::MasterOd), params, cfg);
    let mut h_state = cfg.step;
    let mut steps = 0;
    curve.push(params.t_grid[0], rho.trace());
    for w in params.t_grid.windows(2) {
        steps += advance(&sys, &mut rho, w[0], w[1], cfg, &mut h_state, |_, _| Ok(()))?;
        if !all_finite(&rho) {
            return Err(Error::NonFinite { t: w[1] });
        }
        curve.push(w[1], rho.trace());
    }
    Ok(curve.with_meta("steps", steps))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPair {
    pub n_low: usize,
    pub n_high: usize,
    pub max_diff: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub pairs: Vec<SweepPair>,
    pub converged_n: usize,
    pub tol: f64,
}

/// Max-over-grid |f_N − f_N'| for each consecutive pair of `n_list`.
/// Runs for different truncations execute in parallel.
pub fn truncation_differences(params: &SimParams, cfg: &IntegratorConfig, n_list: &[usize]) -> Result<Vec<SweepPair>> {
    if n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParam { name: "n_list", reason: "must be strictly increasing".into() });
    }
    let curves = n_list
        .par_iter()
        .map(|&n| integrate_od(&params.with_truncation(n)?, cfg))
        .collect::<Result<Vec<_>>>()?;
    n_list
        .windows(2)
        .zip(curves.windows(2))
        .map(|(ns, cs)| Ok(SweepPair { n_low: ns[0], n_high: ns[1], max_diff: cs[0].max_abs_diff(&cs[1])? }))
        .collect()
}

/// First truncation whose result agrees with the next one within `cfg.tol`.
pub fn truncation_sweep(params: &SimParams, cfg: &IntegratorConfig, n_list: &[usize]) -> Result<SweepReport> {
    let pairs = truncation_differences(params, cfg, n_list)?;
    match pairs.iter().find(|p| p.max_diff < cfg.tol) {
        Some(p) => Ok(SweepReport { converged_n: p.n_low, pairs: pairs.clone(), tol: cfg.tol }),
        None => Err(Error::NotConverged {
            n: n_list.last().copied().unwrap_or(0),
            last_diff: pairs.last().map_or(f64::INFINITY, |p| p.max_diff),
        }),
    }
}

/// Max error against the closed form for each RK4 step size.
pub fn step_study(params: &SimParams, steps: &[f64]) -> Result<Vec<(f64, f64)>> {
    steps
        .par_iter()
        .map(|&h| {
            let curve = integrate_od(params, &IntegratorConfig::fixed(h))?;
            let err = curve.max_error_against(|t| crate::exact::f_exact(t, params.kappa, params.eta_hat));
            Ok((h, err))
        })
        .collect()
}
