//! Physical (SI) experiment parameters and their dimensionless counterpart.
//!
//! Internally every physics routine works in units where ħ = ω_m = σ = 1:
//! time is the mirror phase ω_m t, position is measured in wave-packet widths
//! and the decoherence strength becomes `eta_hat = η σ² / ω_m`.

use std::f64::consts::PI;

use crate::error::{non_negative, positive, Error, Result};

/// Reduced Planck constant (J s), CODATA 2018 exact value.
pub const HBAR: f64 = 1.054_571_817e-34;

const KAPPA_REL_TOL: f64 = 1e-12;
const SIGMA_REL_TOL: f64 = 1e-9;

/// Experiment parameters in SI units.
///
/// `kappa` and `coupling_g` are kept mutually consistent, as are `sigma` and
/// `mass` when a mass is known. The maximum excursion `ell` is always derived.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalParams {
    omega_c: Option<f64>,
    omega_m: f64,
    mass: Option<f64>,
    sigma: f64,
    coupling_g: f64,
    kappa: f64,
    eta: f64,
}

impl PhysicalParams {
    pub fn builder() -> PhysicalParamsBuilder {
        PhysicalParamsBuilder::default()
    }

    /// Photon angular frequency. Only recorded; the photon phase cancels in `f`.
    pub fn omega_c(&self) -> Option<f64> {
        self.omega_c
    }

    pub fn omega_m(&self) -> f64 {
        self.omega_m
    }

    pub fn mass(&self) -> Option<f64> {
        self.mass
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn coupling_g(&self) -> f64 {
        self.coupling_g
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Maximum centre-of-mass displacement 4κσ.
    pub fn ell(&self) -> f64 {
        4.0 * self.kappa * self.sigma
    }

    /// Mirror oscillation period 2π/ω_m.
    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega_m
    }

    /// Same experiment with a different decoherence strength.
    pub fn with_eta(&self, eta: f64) -> Result<Self> {
        let mut out = self.clone();
        out.eta = non_negative("eta", eta)?;
        Ok(out)
    }
}

#[derive(Debug, Clone, Default)]
pub struct PhysicalParamsBuilder {
    omega_c: Option<f64>,
    omega_m: Option<f64>,
    mass: Option<f64>,
    sigma: Option<f64>,
    coupling_g: Option<f64>,
    kappa: Option<f64>,
    eta: Option<f64>,
}

impl PhysicalParamsBuilder {
    pub fn omega_c(mut self, v: f64) -> Self {
        self.omega_c = Some(v);
        self
    }

    pub fn omega_m(mut self, v: f64) -> Self {
        self.omega_m = Some(v);
        self
    }

    /// Sets ω_m from the mirror period in seconds.
    pub fn period(mut self, t: f64) -> Self {
        self.omega_m = Some(2.0 * PI / t);
        self
    }

    pub fn mass(mut self, v: f64) -> Self {
        self.mass = Some(v);
        self
    }

    pub fn sigma(mut self, v: f64) -> Self {
        self.sigma = Some(v);
        self
    }

    pub fn coupling_g(mut self, v: f64) -> Self {
        self.coupling_g = Some(v);
        self
    }

    pub fn kappa(mut self, v: f64) -> Self {
        self.kappa = Some(v);
        self
    }

    pub fn eta(mut self, v: f64) -> Self {
        self.eta = Some(v);
        self
    }

    pub fn build(self) -> Result<PhysicalParams> {
        let omega_c = self.omega_c.map(|w| positive("omega_c", w)).transpose()?;
        let omega_m = positive(
            "omega_m",
            self.omega_m.ok_or(Error::InvalidParam {
                name: "omega_m",
                reason: "required".into(),
            })?,
        )?;
        let mass = self.mass.map(|m| positive("mass", m)).transpose()?;

        let sigma = match (self.sigma, mass) {
            (Some(s), None) => positive("sigma", s)?,
            (None, Some(m)) => (HBAR / (2.0 * m * omega_m)).sqrt(),
            (Some(s), Some(m)) => {
                let s = positive("sigma", s)?;
                let expect = (HBAR / (2.0 * m * omega_m)).sqrt();
                if ((s - expect) / expect).abs() > SIGMA_REL_TOL {
                    return Err(Error::InvalidParam {
                        name: "sigma",
                        reason: format!("{s} inconsistent with mass (expected {expect})"),
                    });
                }
                s
            }
            (None, None) => {
                return Err(Error::InvalidParam {
                    name: "sigma",
                    reason: "give sigma or mass".into(),
                })
            }
        };

        let (coupling_g, kappa) = match (self.coupling_g, self.kappa) {
            (Some(g), None) => {
                let g = positive("coupling_g", g)?;
                (g, g / omega_m)
            }
            (None, Some(k)) => {
                let k = positive("kappa", k)?;
                (k * omega_m, k)
            }
            (Some(g), Some(k)) => {
                let g = positive("coupling_g", g)?;
                let k = positive("kappa", k)?;
                let expect = g / omega_m;
                if ((k - expect) / expect).abs() > KAPPA_REL_TOL {
                    return Err(Error::InvalidParam {
                        name: "kappa",
                        reason: format!("{k} inconsistent with G/omega_m = {expect}"),
                    });
                }
                (g, k)
            }
            (None, None) => {
                return Err(Error::InvalidParam {
                    name: "kappa",
                    reason: "give kappa or coupling_g".into(),
                })
            }
        };

        let eta = non_negative("eta", self.eta.unwrap_or(0.0))?;

        Ok(PhysicalParams { omega_c, omega_m, mass, sigma, coupling_g, kappa, eta })
    }
}

/// Dimensionless simulation parameters shared by every numerical route.
#[derive(Debug, Clone, PartialEq)]
pub struct SimParams {
    pub kappa: f64,
    pub eta_hat: f64,
    pub n_trunc: usize,
    pub t_grid: Vec<f64>,
}

impl SimParams {
    pub fn new(kappa: f64, eta_hat: f64, n_trunc: usize, t_grid: Vec<f64>) -> Result<Self> {
        if !kappa.is_finite() {
            return Err(Error::InvalidParam { name: "kappa", reason: "must be finite".into() });
        }
        non_negative("eta_hat", eta_hat)?;
        check_truncation(n_trunc)?;
        check_grid(&t_grid)?;
        Ok(Self { kappa, eta_hat, n_trunc, t_grid })
    }

    pub fn with_grid(&self, t_grid: Vec<f64>) -> Result<Self> {
        Self::new(self.kappa, self.eta_hat, self.n_trunc, t_grid)
    }

    pub fn with_truncation(&self, n_trunc: usize) -> Result<Self> {
        Self::new(self.kappa, self.eta_hat, n_trunc, self.t_grid.clone())
    }

    /// Physical η recovered for a given mirror frequency and packet width.
    pub fn eta_si(&self, omega_m: f64, sigma: f64) -> f64 {
        self.eta_hat * omega_m / (sigma * sigma)
    }

    /// Grid times in seconds.
    pub fn times_si(&self, omega_m: f64) -> Vec<f64> {
        self.t_grid.iter().map(|t| t / omega_m).collect()
    }
}

pub(crate) fn check_truncation(n: usize) -> Result<()> {
    if n < 2 {
        Err(Error::TruncationTooSmall { n })
    } else {
        Ok(())
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.first() != Some(&0.0) {
        return Err(Error::BadTimeGrid { index: 0 });
    }
    for (i, w) in grid.windows(2).enumerate() {
        if w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater) || !w[1].is_finite() {
            return Err(Error::BadTimeGrid { index: i + 1 });
        }
    }
    Ok(())
}

/// Converts SI parameters and a time grid in seconds to the internal units.
pub fn nondimensionalize(p: &PhysicalParams, n_trunc: usize, t_grid: &[f64]) -> Result<SimParams> {
    check_truncation(n_trunc)?;
    check_grid(t_grid)?;
    let eta_hat = p.eta * p.sigma * p.sigma / p.omega_m;
    let grid = t_grid.iter().map(|t| t * p.omega_m).collect();
    SimParams::new(p.kappa, eta_hat, n_trunc, grid)
}

/// `n_points` equally spaced dimensionless times covering `periods` mirror
/// periods, both end points included.
pub fn periods_grid(periods: f64, n_points: usize) -> Vec<f64> {
    let t_end = 2.0 * PI * periods;
    match n_points {
        0 => vec![],
        1 => vec![0.0],
        _ => {
            let last = (n_points - 1) as f64;
            (0..n_points).map(|i| t_end * i as f64 / last).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_experiment(eta: f64) -> PhysicalParams {
        PhysicalParams::builder()
            .period(2e-3)
            .sigma(1e-13)
            .kappa(0.25)
            .eta(eta)
            .build()
            .unwrap()
    }

    #[test]
    fn csl_eta_hat() {
        let p = reference_experiment(0.6e21);
        let s = nondimensionalize(&p, 32, &[0.0, 1e-3]).unwrap();
        // 0.6e21 * 1e-26 / (pi * 1e3)
        assert!((s.eta_hat - 1.909_859e-9).abs() < 1e-14);
        assert!((s.t_grid[1] - PI).abs() < 1e-14);
    }

    #[test]
    fn unitary_and_identity_scaling() {
        let s = nondimensionalize(&reference_experiment(0.0), 2, &[0.0]).unwrap();
        assert_eq!(s.eta_hat, 0.0);

        let p = PhysicalParams::builder().omega_m(1.0).sigma(1.0).kappa(0.5).eta(1.0).build().unwrap();
        let s = nondimensionalize(&p, 4, &[0.0, 0.5]).unwrap();
        assert_eq!(s.eta_hat, 1.0);
        assert_eq!(s.t_grid, vec![0.0, 0.5]);
    }

    #[test]
    fn rejects_bad_grid_and_truncation() {
        let p = reference_experiment(1.0);
        assert_eq!(nondimensionalize(&p, 1, &[0.0]), Err(Error::TruncationTooSmall { n: 1 }));
        assert_eq!(
            nondimensionalize(&p, 8, &[0.0, 2.0, 1.0]),
            Err(Error::BadTimeGrid { index: 2 })
        );
        assert_eq!(
            nondimensionalize(&p, 8, &[0.0, 0.0]),
            Err(Error::BadTimeGrid { index: 1 })
        );
        assert!(nondimensionalize(&p, 8, &[0.5, 1.0]).is_err());
        assert!(nondimensionalize(&p, 8, &[]).is_err());
    }

    #[test]
    fn mass_determines_sigma() {
        let m = 5e-12;
        let w = 2.0 * PI * 500.0;
        let p = PhysicalParams::builder().omega_m(w).mass(m).kappa(1.0).build().unwrap();
        let expect = (HBAR / (2.0 * m * w)).sqrt();
        assert!(((p.sigma() - expect) / expect).abs() < 1e-15);

        let ok = PhysicalParams::builder().omega_m(w).mass(m).sigma(expect * (1.0 + 1e-10)).kappa(1.0).build();
        assert!(ok.is_ok());
        let bad = PhysicalParams::builder().omega_m(w).mass(m).sigma(expect * 1.01).kappa(1.0).build();
        assert!(matches!(bad, Err(Error::InvalidParam { name: "sigma", .. })));
    }

    #[test]
    fn kappa_and_coupling_consistency() {
        let p = PhysicalParams::builder().omega_m(10.0).sigma(1.0).coupling_g(2.5).build().unwrap();
        assert_eq!(p.kappa(), 0.25);
        assert_eq!(p.ell(), 1.0);
        let bad = PhysicalParams::builder().omega_m(10.0).sigma(1.0).coupling_g(2.5).kappa(0.3).build();
        assert!(bad.is_err());
        let neg = PhysicalParams::builder().omega_m(10.0).sigma(1.0).kappa(0.3).eta(-1.0).build();
        assert!(neg.is_err());
        assert!(PhysicalParams::builder().sigma(1.0).kappa(0.3).build().is_err());
    }

    #[test]
    fn round_trip_through_internal_units() {
        let p = PhysicalParams::builder()
            .omega_m(3.7e3)
            .sigma(2.3e-13)
            .kappa(0.4)
            .eta(4.2e19)
            .build()
            .unwrap();
        let times = [0.0, 1.1e-4, 7.3e-4, 2.0e-3];
        let s = nondimensionalize(&p, 16, &times).unwrap();
        let rel = |a: f64, b: f64| if b == 0.0 { a.abs() } else { ((a - b) / b).abs() };
        assert!(rel(s.eta_si(p.omega_m(), p.sigma()), p.eta()) < 1e-14);
        for (a, b) in s.times_si(p.omega_m()).iter().zip(times) {
            assert!(rel(*a, b) < 1e-14);
        }
        assert_eq!(s.kappa, p.kappa());
    }

    #[test]
    fn grid_helper() {
        let g = periods_grid(1.0, 5);
        assert_eq!(g.len(), 5);
        assert_eq!(g[0], 0.0);
        assert!((g[4] - 2.0 * PI).abs() < 1e-15);
    }
}
