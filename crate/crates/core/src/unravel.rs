//! Monte Carlo unravelings of the position-decoherence master equation.
//!
//! Two stochastic routes estimate f(t):
//!
//! * **linear**: a pair of unnormalized mirror states φ^A, φ^B, each driven by
//!   its own reduced Hamiltonian but by the *same* Wiener path, obeying
//!   dφ = [−iH dt + √η̂ x dW − (η̂/2) x² dt] φ. Then f = E[⟨φ^B|φ^A⟩].
//! * **QMUPL**: the nonlinear norm-preserving equation on the full
//!   photon-branch ⊗ mirror space with x replaced by x − ⟨x⟩. The ensemble
//!   average of |ψ⟩⟨ψ| obeys the same master equation, so f = E[2⟨ψ_B|ψ_A⟩].
//!
//! Both are integrated with fixed-step Euler–Maruyama.
//!
//! # Random streams
//!
//! Trajectory `i` of a run with seed `s` draws from
//! `ChaCha8Rng::seed_from_u64(s)` switched to stream `i` (`set_stream(i)`).
//! Gaussian increments are `sqrt(dt) * z` with `z` sampled from
//! `rand_distr::StandardNormal` (ziggurat). Both rules are part of the
//! reproducibility contract: the same seed, config and parameters produce
//! bit-identical estimates regardless of thread count, because per-trajectory
//! results are reduced in index order.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::curve::{Method, Sample, VisibilityCurve};
use crate::error::{positive, Error, Result};
use crate::fock::MirrorState;
use crate::params::SimParams;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseScheme {
    EulerMaruyama,
}

impl NoiseScheme {
    pub fn tag(self) -> &'static str {
        "euler-maruyama"
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryConfig {
    pub n_traj: usize,
    pub step: f64,
    pub seed: u64,
    pub scheme: NoiseScheme,
    /// Times at which the estimate is reported; must be grid times.
    pub record_times: Vec<f64>,
}

impl TrajectoryConfig {
    pub const DEFAULT_STEP: f64 = 2.0 * PI / 8192.0;
    pub const DEFAULT_N_TRAJ: usize = 10_000;

    /// Records on the whole grid with the default ensemble size and step.
    pub fn for_grid(params: &SimParams, seed: u64) -> Self {
        Self {
            n_traj: Self::DEFAULT_N_TRAJ,
            step: Self::DEFAULT_STEP,
            seed,
            scheme: NoiseScheme::EulerMaruyama,
            record_times: params.t_grid.clone(),
        }
    }

    pub fn validate(&self, params: &SimParams) -> Result<()> {
        if self.n_traj < 1 {
            return Err(Error::InvalidParam { name: "n_traj", reason: "must be at least 1".into() });
        }
        positive("step", self.step)?;
        if self.record_times.is_empty() {
            return Err(Error::InvalidParam { name: "record_times", reason: "empty".into() });
        }
        if self.record_times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParam { name: "record_times", reason: "must be strictly increasing".into() });
        }
        for &r in &self.record_times {
            if !params.t_grid.iter().any(|&t| (t - r).abs() <= 1e-12 * t.abs().max(1.0)) {
                return Err(Error::InvalidParam {
                    name: "record_times",
                    reason: format!("{r} is not a grid time"),
                });
            }
        }
        Ok(())
    }
}

/// Ensemble mean and standard error of f at each record time.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleEstimate {
    pub times: Vec<f64>,
    pub mean_f: Vec<Complex64>,
    /// max(stderr of Re f, stderr of Im f).
    pub stderr_f: Vec<f64>,
    /// Mean ‖φ^A‖² (linear) or ‖ψ‖² (QMUPL).
    pub mean_norm_sq: Vec<f64>,
    pub stderr_norm_sq: Vec<f64>,
    pub n_traj: usize,
    pub seed: u64,
    pub step: f64,
}

impl EnsembleEstimate {
    pub fn to_curve(&self, method: Method, params: &SimParams) -> VisibilityCurve {
        let mut curve = VisibilityCurve::new(method)
            .with_meta("kappa", params.kappa)
            .with_meta("eta_hat", params.eta_hat)
            .with_meta("n_trunc", params.n_trunc)
            .with_meta("step", self.step)
            .with_meta("scheme", NoiseScheme::EulerMaruyama.tag())
            .with_meta("n_traj", self.n_traj)
            .with_meta("seed", self.seed);
        for ((&t, &f), &se) in self.times.iter().zip(&self.mean_f).zip(&self.stderr_f) {
            curve.samples.push(Sample { stderr: Some(se), ..Sample::new(t, f) });
        }
        curve
    }
}

/// Independent generator for one trajectory (see module docs).
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// x = b + b† applied to `v`.
#[inline]
fn apply_position(sqrt_n: &[f64], v: &[Complex64], out: &mut [Complex64]) {
    let n = v.len();
    for i in 0..n {
        let mut acc = Complex64::new(0.0, 0.0);
        if i > 0 {
            acc += v[i - 1] * sqrt_n[i - 1];
        }
        if i + 1 < n {
            acc += v[i + 1] * sqrt_n[i];
        }
        out[i] = acc;
    }
}

fn sqrt_table(n: usize) -> Vec<f64> {
    (1..=n).map(|k| (k as f64).sqrt()).collect()
}

fn finite(v: &[Complex64]) -> bool {
    v.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm_sq(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Reusable state for Euler–Maruyama steps of the linear equation.
#[derive(Debug, Clone)]
pub struct LinearUnraveling {
    kappa: f64,
    eta_hat: f64,
    sqrt_eta: f64,
    sqrt_n: Vec<f64>,
    x_psi: Vec<Complex64>,
    xx_psi: Vec<Complex64>,
}

impl LinearUnraveling {
    pub fn new(params: &SimParams) -> Self {
        let n = params.n_trunc;
        Self {
            kappa: params.kappa,
            eta_hat: params.eta_hat,
            sqrt_eta: params.eta_hat.sqrt(),
            sqrt_n: sqrt_table(n),
            x_psi: vec![Complex64::new(0.0, 0.0); n],
            xx_psi: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    /// One branch: H = b†b − `drive`·x.
    fn step_branch(&mut self, psi: &mut [Complex64], drive: f64, dw: f64, dt: f64) {
        apply_position(&self.sqrt_n, psi, &mut self.x_psi);
        apply_position(&self.sqrt_n, &self.x_psi, &mut self.xx_psi);
        let noise = self.sqrt_eta * dw;
        let damp = 0.5 * self.eta_hat * dt;
        for (k, (p, (&x, &xx))) in psi.iter_mut().zip(self.x_psi.iter().zip(&self.xx_psi)).enumerate() {
            let h_psi = *p * k as f64 - x * drive;
            *p += -I * h_psi * dt - xx * damp + x * noise;
        }
    }

    /// Advances φ^A (under H^A) and φ^B (under H^B) with one shared increment.
    pub fn step(&mut self, a: &mut [Complex64], b: &mut [Complex64], dw: f64, dt: f64) {
        let kappa = self.kappa;
        self.step_branch(a, kappa, dw, dt);
        self.step_branch(b, 0.0, dw, dt);
    }
}

/// Euler–Maruyama update of a linear-unraveling pair driven by one increment.
pub fn step_linear(
    pair: (MirrorState, MirrorState),
    dw: f64,
    params: &SimParams,
    dt: f64,
) -> Result<(MirrorState, MirrorState)> {
    let (mut a, mut b) = pair;
    for s in [&a, &b] {
        if s.dim() != params.n_trunc {
            return Err(Error::DimensionMismatch { expected: params.n_trunc, got: s.dim() });
        }
    }
    let mut sys = LinearUnraveling::new(params);
    sys.step(a.amps.as_mut_slice(), b.amps.as_mut_slice(), dw, dt);
    if !finite(a.amps.as_slice()) || !finite(b.amps.as_slice()) {
        return Err(Error::NonFinite { t: f64::NAN });
    }
    Ok((a, b))
}

/// Full-system QMUPL state: amplitudes `0..N` on branch A, `N..2N` on branch B.
#[derive(Debug, Clone, PartialEq)]
pub struct FullState {
    pub amps: Vec<Complex64>,
}

impl FullState {
    /// (|A⟩ + |B⟩)|0⟩_m / √2.
    pub fn initial(n_trunc: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); 2 * n_trunc];
        amps[0] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        amps[n_trunc] = amps[0];
        Self { amps }
    }

    pub fn n_trunc(&self) -> usize {
        self.amps.len() / 2
    }

    pub fn norm(&self) -> f64 {
        norm_sq(&self.amps).sqrt()
    }

    /// f contribution 2⟨ψ_B|ψ_A⟩ = 2 Tr_m ⟨A|ψ⟩⟨ψ|B⟩.
    pub fn off_diagonal_factor(&self) -> Complex64 {
        let n = self.n_trunc();
        2.0 * dot(&self.amps[n..], &self.amps[..n])
    }

    /// Tr ρ̂² for ρ̂ = |ψ⟩⟨ψ|/‖ψ‖².
    pub fn purity(&self) -> f64 {
        let n2 = norm_sq(&self.amps);
        let mut s = 0.0;
        for a in &self.amps {
            for b in &self.amps {
                s += (a * b.conj()).norm_sqr();
            }
        }
        s / (n2 * n2)
    }

    /// ⟨x⟩ on the mirror factor.
    pub fn mean_position(&self) -> f64 {
        let n = self.n_trunc();
        let sq = sqrt_table(n);
        let mut x = vec![Complex64::new(0.0, 0.0); 2 * n];
        apply_position(&sq, &self.amps[..n], &mut x[..n]);
        apply_position(&sq, &self.amps[n..], &mut x[n..]);
        dot(&self.amps, &x).re / norm_sq(&self.amps)
    }
}

/// Reusable state for Euler–Maruyama steps of the QMUPL equation.
#[derive(Debug, Clone)]
pub struct QmuplUnraveling {
    kappa: f64,
    eta_hat: f64,
    sqrt_eta: f64,
    sqrt_n: Vec<f64>,
    x_psi: Vec<Complex64>,
    y_psi: Vec<Complex64>,
    xy_psi: Vec<Complex64>,
}

impl QmuplUnraveling {
    pub fn new(params: &SimParams) -> Self {
        let n = params.n_trunc;
        let zeros = vec![Complex64::new(0.0, 0.0); 2 * n];
        Self {
            kappa: params.kappa,
            eta_hat: params.eta_hat,
            sqrt_eta: params.eta_hat.sqrt(),
            sqrt_n: sqrt_table(n),
            x_psi: zeros.clone(),
            y_psi: zeros.clone(),
            xy_psi: zeros,
        }
    }

    fn apply_x(&self, v: &[Complex64], out: &mut [Complex64]) {
        let n = self.sqrt_n.len();
        apply_position(&self.sqrt_n, &v[..n], &mut out[..n]);
        apply_position(&self.sqrt_n, &v[n..], &mut out[n..]);
    }

    /// Euler–Maruyama increment without renormalization.
    fn step_raw(&mut self, psi: &mut [Complex64], dw: f64, dt: f64) {
        let n = self.sqrt_n.len();
        let mut x_psi = std::mem::take(&mut self.x_psi);
        let mut y_psi = std::mem::take(&mut self.y_psi);
        let mut xy_psi = std::mem::take(&mut self.xy_psi);

        self.apply_x(psi, &mut x_psi);
        let q_mean = dot(psi, &x_psi).re / norm_sq(psi);
        for k in 0..2 * n {
            y_psi[k] = x_psi[k] - psi[k] * q_mean;
        }
        self.apply_x(&y_psi, &mut xy_psi);

        let noise = self.sqrt_eta * dw;
        let damp = 0.5 * self.eta_hat * dt;
        for k in 0..2 * n {
            let (level, drive) = if k < n { (k, self.kappa) } else { (k - n, 0.0) };
            let h_psi = psi[k] * level as f64 - x_psi[k] * drive;
            let yy_psi = xy_psi[k] - y_psi[k] * q_mean;
            psi[k] += -I * h_psi * dt - yy_psi * damp + y_psi[k] * noise;
        }

        self.x_psi = x_psi;
        self.y_psi = y_psi;
        self.xy_psi = xy_psi;
    }

    pub fn step(&mut self, psi: &mut [Complex64], dw: f64, dt: f64) {
        self.step_raw(psi, dw, dt);
        let norm = norm_sq(psi).sqrt();
        for z in psi.iter_mut() {
            *z /= norm;
        }
    }
}

/// Euler–Maruyama update of the QMUPL equation followed by renormalization.
pub fn step_qmupl(psi: FullState, dw: f64, params: &SimParams, dt: f64) -> Result<FullState> {
    if psi.amps.len() != 2 * params.n_trunc {
        return Err(Error::DimensionMismatch { expected: 2 * params.n_trunc, got: psi.amps.len() });
    }
    if (psi.norm() - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidParam { name: "psi", reason: format!("norm {} is not 1", psi.norm()) });
    }
    let mut psi = psi;
    QmuplUnraveling::new(params).step(&mut psi.amps, dw, dt);
    if !finite(&psi.amps) {
        return Err(Error::NonFinite { t: f64::NAN });
    }
    Ok(psi)
}

/// Substep counts and sizes that land exactly on each record time.
fn segments(record_times: &[f64], step: f64) -> Vec<(usize, f64)> {
    let mut t = 0.0;
    record_times
        .iter()
        .map(|&r| {
            let span = r - t;
            t = r;
            if span <= 0.0 {
                (0, 0.0)
            } else {
                let n = ((span / step) - 1e-9).ceil().max(1.0) as usize;
                (n, span / n as f64)
            }
        })
        .collect()
}

type Record = (Complex64, f64);

fn run_ensemble<F>(cfg: &TrajectoryConfig, traj: F) -> Result<EnsembleEstimate>
where
    F: Fn(&mut ChaCha8Rng) -> Result<Vec<Record>> + Sync,
{
    let per_traj = (0..cfg.n_traj as u64)
        .into_par_iter()
        .map(|i| traj(&mut trajectory_rng(cfg.seed, i)))
        .collect::<Result<Vec<_>>>()?;

    let n_rec = cfg.record_times.len();
    let mut out = EnsembleEstimate {
        times: cfg.record_times.clone(),
        mean_f: Vec::with_capacity(n_rec),
        stderr_f: Vec::with_capacity(n_rec),
        mean_norm_sq: Vec::with_capacity(n_rec),
        stderr_norm_sq: Vec::with_capacity(n_rec),
        n_traj: cfg.n_traj,
        seed: cfg.seed,
        step: cfg.step,
    };
    for k in 0..n_rec {
        let re = MeanStderr::of(per_traj.iter().map(|r| r[k].0.re));
        let im = MeanStderr::of(per_traj.iter().map(|r| r[k].0.im));
        let nn = MeanStderr::of(per_traj.iter().map(|r| r[k].1));
        out.mean_f.push(Complex64::new(re.mean, im.mean));
        out.stderr_f.push(re.stderr.max(im.stderr));
        out.mean_norm_sq.push(nn.mean);
        out.stderr_norm_sq.push(nn.stderr);
    }
    Ok(out)
}

/// Sample mean and standard error, accumulated in iteration order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanStderr {
    pub mean: f64,
    pub stderr: f64,
}

impl MeanStderr {
    /// Shifted by the first value, so a constant sample gives exactly zero spread.
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let mut it = values.into_iter();
        let Some(shift) = it.next() else {
            return Self { mean: f64::NAN, stderr: f64::NAN };
        };
        let (mut n, mut s1, mut s2) = (1usize, 0.0f64, 0.0f64);
        for v in it {
            let d = v - shift;
            s1 += d;
            s2 += d * d;
            n += 1;
        }
        let nf = n as f64;
        let mean = shift + s1 / nf;
        let stderr = if n < 2 { 0.0 } else { ((s2 - s1 * s1 / nf).max(0.0) / (nf - 1.0) / nf).sqrt() };
        Self { mean, stderr }
    }
}

fn linear_trajectory(
    params: &SimParams,
    cfg: &TrajectoryConfig,
    segs: &[(usize, f64)],
    normalize_overlap: bool,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Record>> {
    let n = params.n_trunc;
    let mut sys = LinearUnraveling::new(params);
    let mut a = vec![Complex64::new(0.0, 0.0); n];
    a[0] = Complex64::new(1.0, 0.0);
    let mut b = a.clone();
    let mut out = Vec::with_capacity(segs.len());
    for (&(steps, h), &t) in segs.iter().zip(&cfg.record_times) {
        let sqrt_h = h.sqrt();
        for _ in 0..steps {
            let z: f64 = rng.sample(StandardNormal);
            sys.step(&mut a, &mut b, sqrt_h * z, h);
        }
        if !finite(&a) || !finite(&b) {
            return Err(Error::NonFinite { t });
        }
        let mut f = dot(&b, &a);
        let na = norm_sq(&a);
        if normalize_overlap {
            f /= (na * norm_sq(&b)).sqrt();
        }
        out.push((f, na));
    }
    Ok(out)
}

pub(crate) fn estimate_linear(params: &SimParams, cfg: &TrajectoryConfig, normalize_overlap: bool) -> Result<EnsembleEstimate> {
    cfg.validate(params)?;
    let segs = segments(&cfg.record_times, cfg.step);
    run_ensemble(cfg, |rng| linear_trajectory(params, cfg, &segs, normalize_overlap, rng))
}

/// f(t) ≈ mean of ⟨φ^B|φ^A⟩ over independent Wiener paths, both states
/// starting in the mirror ground state. The raw (unnormalized) overlap is
/// required; normalizing it biases the estimate.
pub fn estimate_f_linear(params: &SimParams, cfg: &TrajectoryConfig) -> Result<EnsembleEstimate> {
    estimate_linear(params, cfg, false)
}

/// f(t) ≈ ensemble mean of 2⟨ψ_B|ψ_A⟩ for QMUPL trajectories started in
/// (|A⟩ + |B⟩)|0⟩_m / √2.
pub fn estimate_f_qmupl(params: &SimParams, cfg: &TrajectoryConfig) -> Result<EnsembleEstimate> {
    cfg.validate(params)?;
    let segs = segments(&cfg.record_times, cfg.step);
    run_ensemble(cfg, |rng| {
        let mut sys = QmuplUnraveling::new(params);
        let mut psi = FullState::initial(params.n_trunc);
        let mut out = Vec::with_capacity(segs.len());
        for (&(steps, h), &t) in segs.iter().zip(&cfg.record_times) {
            let sqrt_h = h.sqrt();
            for _ in 0..steps {
                let z: f64 = rng.sample(StandardNormal);
                sys.step(&mut psi.amps, sqrt_h * z, h);
            }
            if !finite(&psi.amps) {
                return Err(Error::NonFinite { t });
            }
            out.push((psi.off_diagonal_factor(), norm_sq(&psi.amps)));
        }
        Ok(out)
    })
}
