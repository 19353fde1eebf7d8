//! Collapse-model strengths η and the bounds an experiment can set.
//!
//! Model parameters come in cgs (cm, s) as they are quoted in the collapse
//! literature; η is returned in both s⁻¹ cm⁻² and s⁻¹ m⁻². "Visibility
//! accuracy" is read as a bound on Λ itself, which is accurate because
//! 1 − e^{−Λ} ≈ Λ at the scales involved.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::exact::lambda_damping;
use crate::params::PhysicalParams;

pub mod units {
    //! cgs ↔ SI conversions used by the collapse calculators.

    pub const CM_PER_M: f64 = 100.0;

    pub fn cm_to_m(x: f64) -> f64 {
        x / CM_PER_M
    }

    pub fn m_to_cm(x: f64) -> f64 {
        x * CM_PER_M
    }

    /// cm⁻² → m⁻² (also s⁻¹ cm⁻² → s⁻¹ m⁻²).
    pub fn per_cm2_to_per_m2(x: f64) -> f64 {
        x * CM_PER_M * CM_PER_M
    }

    pub fn per_m2_to_per_cm2(x: f64) -> f64 {
        x / (CM_PER_M * CM_PER_M)
    }
}

/// GRW localization rate λ (s⁻¹).
pub const GRW_LAMBDA: f64 = 1e-16;
/// Localization parameter α (cm⁻²), shared by GRW and CSL.
pub const COLLAPSE_ALPHA: f64 = 1e10;
/// CSL strength γ (cm³ s⁻¹).
pub const CSL_GAMMA: f64 = 1e-30;
/// Nucleon count assumed for the mirror.
pub const MIRROR_NUCLEONS: f64 = 3e15;
/// Nucleon density of the mirror (cm⁻³).
pub const MIRROR_DENSITY: f64 = 1e24;
/// Side of the cubical mirror (cm).
pub const MIRROR_SIDE: f64 = 1e-3;
/// Existing bound on γ from fullerene diffraction (cm³ s⁻¹), for comparison.
pub const FULLERENE_GAMMA_BOUND: f64 = 1e-19;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CollapseModel {
    Grw,
    /// Same η as GRW: η = N λ α / 2.
    Qmupl,
    Csl,
    /// η given directly in s⁻¹ m⁻².
    Direct,
}

impl CollapseModel {
    pub fn tag(self) -> &'static str {
        match self {
            CollapseModel::Grw => "GRW",
            CollapseModel::Qmupl => "QMUPL",
            CollapseModel::Csl => "CSL",
            CollapseModel::Direct => "direct",
        }
    }
}

impl fmt::Display for CollapseModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for CollapseModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "grw" => Ok(Self::Grw),
            "qmupl" => Ok(Self::Qmupl),
            "csl" => Ok(Self::Csl),
            "direct" => Ok(Self::Direct),
            _ => Err(Error::InvalidParam { name: "model", reason: format!("unknown collapse model `{s}`") }),
        }
    }
}

/// Model tag plus whichever parameters that model needs.
#[derive(Debug, Clone, PartialEq)]
pub struct CollapseModelSpec {
    pub model: CollapseModel,
    /// s⁻¹
    pub lambda_grw: Option<f64>,
    /// cm⁻²
    pub alpha: Option<f64>,
    pub n_nucleons: Option<f64>,
    /// cm³ s⁻¹
    pub gamma_csl: Option<f64>,
    /// cm⁻³
    pub density_d: Option<f64>,
    /// cm
    pub side_s: Option<f64>,
    /// s⁻¹ m⁻²
    pub eta_direct: Option<f64>,
}

impl CollapseModelSpec {
    pub fn empty(model: CollapseModel) -> Self {
        Self {
            model,
            lambda_grw: None,
            alpha: None,
            n_nucleons: None,
            gamma_csl: None,
            density_d: None,
            side_s: None,
            eta_direct: None,
        }
    }

    pub fn grw(lambda: f64, alpha: f64, n_nucleons: f64) -> Self {
        Self { lambda_grw: Some(lambda), alpha: Some(alpha), n_nucleons: Some(n_nucleons), ..Self::empty(CollapseModel::Grw) }
    }

    pub fn csl(gamma: f64, alpha: f64, density: f64, side: f64) -> Self {
        Self {
            gamma_csl: Some(gamma),
            alpha: Some(alpha),
            density_d: Some(density),
            side_s: Some(side),
            ..Self::empty(CollapseModel::Csl)
        }
    }

    pub fn direct(eta: f64) -> Self {
        Self { eta_direct: Some(eta), ..Self::empty(CollapseModel::Direct) }
    }

    /// Conventional GRW parameters for a mirror of 3×10¹⁵ nucleons.
    pub fn grw_reference() -> Self {
        Self::grw(GRW_LAMBDA, COLLAPSE_ALPHA, MIRROR_NUCLEONS)
    }

    /// Conventional CSL parameters for a 10 µm cube of density 10²⁴ cm⁻³.
    pub fn csl_reference() -> Self {
        Self::csl(CSL_GAMMA, COLLAPSE_ALPHA, MIRROR_DENSITY, MIRROR_SIDE)
    }

    fn require(&self, field: &'static str, value: Option<f64>) -> Result<f64> {
        let v = value.ok_or(Error::MissingField { model: self.model.tag(), field })?;
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidParam { name: field, reason: format!("must be finite and > 0, got {v}") });
        }
        Ok(v)
    }

    /// η for whichever model is tagged.
    pub fn eta(&self) -> Result<CollapseStrength> {
        match self.model {
            CollapseModel::Grw | CollapseModel::Qmupl => eta_grw(self),
            CollapseModel::Csl => eta_csl(self),
            CollapseModel::Direct => {
                let eta = self.require("eta_direct", self.eta_direct)?;
                Ok(CollapseStrength::from_si(self.model, eta))
            }
        }
    }
}

/// η in both unit systems.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollapseStrength {
    pub model: CollapseModel,
    /// s⁻¹ cm⁻²
    pub eta_cgs: f64,
    /// s⁻¹ m⁻²
    pub eta_si: f64,
}

impl CollapseStrength {
    fn from_cgs(model: CollapseModel, eta_cgs: f64) -> Self {
        Self { model, eta_cgs, eta_si: units::per_cm2_to_per_m2(eta_cgs) }
    }

    fn from_si(model: CollapseModel, eta_si: f64) -> Self {
        Self { model, eta_cgs: units::per_m2_to_per_cm2(eta_si), eta_si }
    }
}

/// η = N η₀ with η₀ = λα/2.
pub fn eta_grw(spec: &CollapseModelSpec) -> Result<CollapseStrength> {
    let lambda = spec.require("lambda_grw", spec.lambda_grw)?;
    let alpha = spec.require("alpha", spec.alpha)?;
    let n = spec.require("n_nucleons", spec.n_nucleons)?;
    Ok(CollapseStrength::from_cgs(spec.model, n * 0.5 * lambda * alpha))
}

/// η = γ S² D² (α/π)^{1/2} for a cubical mirror.
pub fn eta_csl(spec: &CollapseModelSpec) -> Result<CollapseStrength> {
    let gamma = spec.require("gamma_csl", spec.gamma_csl)?;
    let geom = csl_geometry_factor(spec)?;
    Ok(CollapseStrength::from_cgs(spec.model, gamma * geom))
}

/// S² D² (α/π)^{1/2} in cm⁻⁵, the factor multiplying γ.
fn csl_geometry_factor(spec: &CollapseModelSpec) -> Result<f64> {
    let alpha = spec.require("alpha", spec.alpha)?;
    let d = spec.require("density_d", spec.density_d)?;
    let s = spec.require("side_s", spec.side_s)?;
    Ok(s * s * d * d * (alpha / PI).sqrt())
}

/// Λ after one mirror period for the experiment `p` with the model's η.
pub fn lambda_for_experiment(spec: &CollapseModelSpec, p: &PhysicalParams) -> Result<f64> {
    let eta = spec.eta()?;
    Ok(lambda_damping(&p.with_eta(eta.eta_si)?))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaBound {
    pub accuracy: f64,
    /// Largest η (s⁻¹ m⁻²) compatible with Λ ≤ accuracy.
    pub eta_max_si: f64,
    /// Corresponding CSL γ (cm³ s⁻¹).
    pub gamma_max: f64,
}

/// Largest CSL γ for which one period damps the visibility by at most
/// `accuracy`; inverts Λ = (3/16) η ℓ² (2π/ω_m) and η = γ S² D² √(α/π).
pub fn gamma_bound(accuracy: f64, p: &PhysicalParams, spec: &CollapseModelSpec) -> Result<GammaBound> {
    if !(accuracy > 0.0 && accuracy < 1.0) {
        return Err(Error::InvalidParam { name: "accuracy", reason: format!("must lie in (0, 1), got {accuracy}") });
    }
    let geom = csl_geometry_factor(spec)?;
    let ell = p.ell();
    let eta_max_si = accuracy * 16.0 * p.omega_m() / (3.0 * 2.0 * PI * ell * ell);
    let gamma_max = units::per_m2_to_per_cm2(eta_max_si) / geom;
    if !(gamma_max.is_finite() && gamma_max > 0.0) {
        return Err(Error::InvalidParam { name: "geometry", reason: "degenerate experiment geometry".into() });
    }
    Ok(GammaBound { accuracy, eta_max_si, gamma_max })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    fn experiment() -> PhysicalParams {
        PhysicalParams::builder().period(2e-3).sigma(1e-13).kappa(0.25).build().unwrap()
    }

    #[test]
    fn grw_examples() {
        let single = eta_grw(&CollapseModelSpec::grw(1e-16, 1e10, 1.0)).unwrap();
        assert!(rel(single.eta_si, 0.5e-2) < 1e-14);
        let mirror = eta_grw(&CollapseModelSpec::grw_reference()).unwrap();
        assert!(rel(mirror.eta_si, 1.5e13) < 1e-14);
        assert!(matches!(
            eta_grw(&CollapseModelSpec::grw(1e-16, 1e10, 0.0)),
            Err(Error::InvalidParam { name: "n_nucleons", .. })
        ));
        let missing = CollapseModelSpec { lambda_grw: None, ..CollapseModelSpec::grw_reference() };
        assert!(matches!(eta_grw(&missing), Err(Error::MissingField { field: "lambda_grw", .. })));
    }

    #[test]
    fn csl_examples() {
        let eta = eta_csl(&CollapseModelSpec::csl_reference()).unwrap();
        // 1e-30 · 1e-6 · 1e48 · sqrt(1e10/π) cm⁻² s⁻¹, ×1e4 to SI
        let expect = 1e16 * (1e10 / PI).sqrt();
        assert!(rel(eta.eta_si, expect) < 1e-14);
        assert!(rel(eta.eta_si, 5.64e20) < 1e-3);
        assert!(rel(eta.eta_si, 0.6e21) < 0.1);
        assert!(rel(eta.eta_cgs * 1e4, eta.eta_si) < 1e-15);

        let mut ten = CollapseModelSpec::csl_reference();
        ten.gamma_csl = Some(1e-29);
        assert!(rel(eta_csl(&ten).unwrap().eta_si, 10.0 * eta.eta_si) < 1e-14);
        let mut wide = CollapseModelSpec::csl_reference();
        wide.side_s = Some(2e-3);
        assert!(rel(eta_csl(&wide).unwrap().eta_si, 4.0 * eta.eta_si) < 1e-14);

        let mut no_side = CollapseModelSpec::csl_reference();
        no_side.side_s = None;
        assert!(matches!(eta_csl(&no_side), Err(Error::MissingField { field: "side_s", .. })));
    }

    #[test]
    fn csl_to_grw_ratio() {
        let csl = CollapseModelSpec::csl_reference().eta().unwrap().eta_si;
        let grw = CollapseModelSpec::grw_reference().eta().unwrap().eta_si;
        let ratio = csl / grw;
        assert!((3e7..=3e8).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn lambda_for_models() {
        let p = experiment();
        let csl = lambda_for_experiment(&CollapseModelSpec::csl_reference(), &p).unwrap();
        // (3/16) · 5.64e20 · 1e-26 · 2e-3
        let expect = 3.0 / 16.0 * 1e16 * (1e10 / PI).sqrt() * 1e-26 * 2e-3;
        assert!(rel(csl, expect) < 1e-12);
        assert!(rel(csl, 0.2e-8) < 0.15);

        let grw = lambda_for_experiment(&CollapseModelSpec::grw_reference(), &p).unwrap();
        let factor = grw / csl;
        assert!((3e-9..=3e-8).contains(&factor));

        let direct = lambda_for_experiment(&CollapseModelSpec::direct(0.6e21), &p).unwrap();
        assert!(rel(direct, 2.25e-9) < 1e-12);
        let off = lambda_for_experiment(&CollapseModelSpec::direct(1e-300), &p).unwrap();
        assert!(off < 1e-300);
    }

    #[test]
    fn gamma_bound_examples() {
        let p = experiment();
        let spec = CollapseModelSpec::csl_reference();
        let b = gamma_bound(0.002, &p, &spec).unwrap();
        assert!((0.5e-24..=2e-24).contains(&b.gamma_max), "{b:?}");
        assert!(b.gamma_max < FULLERENE_GAMMA_BOUND);

        let half = gamma_bound(0.001, &p, &spec).unwrap();
        assert!(rel(half.gamma_max, 0.5 * b.gamma_max) < 1e-14);

        let mut back = spec.clone();
        back.gamma_csl = Some(b.gamma_max);
        let lam = lambda_for_experiment(&back, &p).unwrap();
        assert!(rel(lam, 0.002) < 1e-12);

        assert!(gamma_bound(0.0, &p, &spec).is_err());
        assert!(gamma_bound(1.5, &p, &spec).is_err());
        let mut flat = spec.clone();
        flat.density_d = None;
        assert!(gamma_bound(0.002, &p, &flat).is_err());
    }

    #[test]
    fn unit_round_trips() {
        for x in [1e-30, 3.7e-3, 1.0, 6.02e23, 1e21] {
            assert!(rel(units::m_to_cm(units::cm_to_m(x)), x) < 1e-14);
            assert!(rel(units::per_m2_to_per_cm2(units::per_cm2_to_per_m2(x)), x) < 1e-14);
        }
        assert_eq!(units::per_cm2_to_per_m2(1.0), 1e4);
    }

    #[test]
    fn model_tags() {
        assert_eq!("csl".parse::<CollapseModel>().unwrap(), CollapseModel::Csl);
        assert_eq!("QMUPL".parse::<CollapseModel>().unwrap(), CollapseModel::Qmupl);
        assert!("penrose".parse::<CollapseModel>().is_err());
        let q = CollapseModelSpec { model: CollapseModel::Qmupl, ..CollapseModelSpec::grw_reference() };
        assert_eq!(q.eta().unwrap().eta_si, CollapseModelSpec::grw_reference().eta().unwrap().eta_si);
    }
}
