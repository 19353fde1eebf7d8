//! Closed-form off-diagonal factor and visibility.
//!
//! All functions take dimensionless time `t = ω_m t_SI`. With `ℓ = 4κσ` the
//! physical damping prefactor (3/16)ηℓ²/ω_m equals `3κ²·eta_hat`, and the
//! heuristic rate ½ηℓ²/ω_m equals `8κ²·eta_hat`. Those identities are used
//! directly so that SI scales never enter the numerics.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::curve::{Method, VisibilityCurve};
use crate::error::{Error, Result};
use crate::params::{PhysicalParams, SimParams};

/// Coherent amplitude of the displaced branch, κ(1 − e^{−it}).
pub fn coherent_amplitude(t: f64, kappa: f64) -> Complex64 {
    kappa * (1.0 - Complex64::new(0.0, -t).exp())
}

/// Unitary off-diagonal factor e^{iκ²(t − sin t)} e^{−κ²(1 − cos t)}.
pub fn f_qm(t: f64, kappa: f64) -> Complex64 {
    let k2 = kappa * kappa;
    Complex64::new(-k2 * (1.0 - t.cos()), k2 * (t - t.sin())).exp()
}

/// g(t) = t − (4/3) sin t + (1/6) sin 2t, the time integral of (2/3)(1 − cos t)².
///
/// Behaves like t⁵/30 near the origin, where the direct form cancels; a
/// short series is used there.
pub fn damping_envelope(t: f64) -> f64 {
    if t.abs() < 0.1 {
        let t2 = t * t;
        t * t2 * t2 * (1.0 / 30.0 - t2 * (1.0 / 252.0 - t2 / 4320.0))
    } else {
        t - (4.0 / 3.0) * t.sin() + (2.0 * t).sin() / 6.0
    }
}

/// dg/dt = (2/3)(1 − cos t)².
pub fn damping_envelope_rate(t: f64) -> f64 {
    let c = 1.0 - t.cos();
    2.0 / 3.0 * c * c
}

pub fn exact_exponent(t: f64, kappa: f64, eta_hat: f64) -> f64 {
    3.0 * kappa * kappa * eta_hat * damping_envelope(t)
}

pub fn heuristic_exponent(t: f64, kappa: f64, eta_hat: f64) -> f64 {
    8.0 * kappa * kappa * eta_hat * t
}

/// Off-diagonal factor under position decoherence of strength `eta_hat`.
pub fn f_exact(t: f64, kappa: f64, eta_hat: f64) -> Complex64 {
    f_qm(t, kappa) * (-exact_exponent(t, kappa, eta_hat)).exp()
}

pub fn visibility(t: f64, kappa: f64, eta_hat: f64) -> f64 {
    f_exact(t, kappa, eta_hat).norm()
}

/// "Back of the envelope" estimate: unitary factor times e^{−½ηℓ²t}.
pub fn f_heuristic(t: f64, kappa: f64, eta_hat: f64) -> Complex64 {
    f_qm(t, kappa) * (-heuristic_exponent(t, kappa, eta_hat)).exp()
}

/// Damping exponent Λ after one mirror period, 6πκ²·eta_hat.
pub fn lambda_dimensionless(kappa: f64, eta_hat: f64) -> f64 {
    6.0 * PI * kappa * kappa * eta_hat
}

/// Λ = (3/16) η ℓ² (2π/ω_m) for SI parameters.
pub fn lambda_damping(p: &PhysicalParams) -> f64 {
    let eta_hat = p.eta() * p.sigma() * p.sigma() / p.omega_m();
    lambda_dimensionless(p.kappa(), eta_hat)
}

/// Closed form selected by `method` evaluated on the parameter grid.
pub fn sample_curve(method: Method, params: &SimParams) -> Result<VisibilityCurve> {
    let (kappa, eta_hat) = (params.kappa, params.eta_hat);
    let eval: fn(f64, f64, f64) -> Complex64 = match method {
        Method::Exact => f_exact,
        Method::QmOnly => |t, k, _| f_qm(t, k),
        Method::Heuristic => f_heuristic,
        other => {
            return Err(Error::WrongMethod { method: other.tag().into(), handler: "closed-form evaluation" })
        }
    };
    let mut curve = VisibilityCurve::new(method)
        .with_meta("kappa", kappa)
        .with_meta("eta_hat", if method == Method::QmOnly { 0.0 } else { eta_hat });
    for &t in &params.t_grid {
        curve.push(t, eval(t, kappa, eta_hat));
    }
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::periods_grid;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn amplitude_examples() {
        assert_eq!(coherent_amplitude(0.0, 0.25), Complex64::new(0.0, 0.0));
        assert!(close(coherent_amplitude(PI, 0.25), Complex64::new(0.5, 0.0), 1e-15));
        assert!(coherent_amplitude(2.0 * PI, 0.25).norm() < 1e-15);
    }

    #[test]
    fn unitary_factor_examples() {
        assert_eq!(f_qm(0.0, 0.3), Complex64::new(1.0, 0.0));
        for n in 1..4 {
            let t = 2.0 * PI * n as f64;
            let f = f_qm(t, 0.4);
            assert!((f.norm() - 1.0).abs() < 1e-14);
            assert!(close(f, Complex64::from_polar(1.0, 0.16 * t), 1e-12));
        }
        let expect = Complex64::from_polar((-0.125f64).exp(), PI / 16.0);
        assert!(close(f_qm(PI, 0.25), expect, 1e-15));
    }

    #[test]
    fn unitary_factor_is_overlap_of_branches() {
        // |f_qm| = |⟨0|α_t⟩| = e^{-|α_t|²/2}
        for i in 0..50 {
            let t = 0.13 * i as f64;
            let a = coherent_amplitude(t, 0.6);
            assert!((f_qm(t, 0.6).norm() - (-0.5 * a.norm_sqr()).exp()).abs() < 1e-15);
        }
    }

    #[test]
    fn exact_factor_examples() {
        for i in 0..20 {
            let t = 0.37 * i as f64;
            assert_eq!(f_exact(t, 0.25, 0.0), f_qm(t, 0.25));
        }
        let lam = lambda_dimensionless(0.25, 0.1);
        assert!((lam - 6.0 * PI * 0.0625 * 0.1).abs() < 1e-15);
        assert!((f_exact(2.0 * PI, 0.25, 0.1).norm() - (-lam).exp()).abs() < 1e-14);

        let v = visibility(PI, 0.25, 0.1);
        let expect = (-0.125 - 3.0 * 0.0625 * 0.1 * PI).exp();
        assert!((v - expect).abs() < 1e-15);
        assert!((3.0 * 0.0625 * 0.1 * PI - 0.05890).abs() < 1e-5);
    }

    #[test]
    fn visibility_examples() {
        assert_eq!(visibility(0.0, 0.25, 0.3), 1.0);
        assert!((visibility(4.0 * PI, 0.7, 0.0) - 1.0).abs() < 1e-14);
        // CSL scale: Λ = 6π/16 · 1.9099e-9 ≈ 2.25e-9
        let eta_hat = 0.6e21 * 1e-26 / (PI * 1e3);
        let v = visibility(2.0 * PI, 0.25, eta_hat);
        assert!((1.0 - v - 2.25e-9).abs() < 1e-12);
    }

    #[test]
    fn lambda_examples() {
        let p = PhysicalParams::builder().period(2e-3).sigma(1e-13).kappa(0.25).eta(0.6e21).build().unwrap();
        // κ = 1/4 makes ℓ = σ
        assert!((p.ell() - 1e-13).abs() < 1e-28);
        let lam = lambda_damping(&p);
        let direct = 3.0 / 16.0 * 0.6e21 * 1e-26 * 2e-3;
        assert!(((lam - direct) / direct).abs() < 1e-13);
        assert!(((lam - 2.25e-9) / 2.25e-9).abs() < 1e-12);

        assert_eq!(lambda_damping(&p.with_eta(0.0).unwrap()), 0.0);

        let doubled = PhysicalParams::builder().period(2e-3).sigma(2e-13).kappa(0.25).eta(0.6e21).build().unwrap();
        assert!(((lambda_damping(&doubled) / lam) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn heuristic_examples() {
        assert_eq!(f_heuristic(1.3, 0.25, 0.0), f_qm(1.3, 0.25));
        let t = 2.0 * PI;
        let ratio = heuristic_exponent(t, 0.25, 0.1) / exact_exponent(t, 0.25, 0.1);
        assert!((ratio - 8.0 / 3.0).abs() < 1e-13);
        let expect = (-16.0 * PI * 0.0625 * 0.1f64).exp();
        assert!((f_heuristic(t, 0.25, 0.1).norm() - expect).abs() < 1e-14);
    }

    #[test]
    fn envelope_series_matches_direct_form() {
        for t in [0.02, 0.05, 0.09, 0.0999] {
            let direct = t - (4.0 / 3.0) * f64::sin(t) + f64::sin(2.0 * t) / 6.0;
            assert!(((damping_envelope(t) - direct) / direct).abs() < 1e-7, "t={t}");
        }
        assert_eq!(damping_envelope(0.0), 0.0);
        assert!(damping_envelope(1e-2).abs() < 1e-10);
        assert!((damping_envelope(2.0 * PI) - 2.0 * PI).abs() < 1e-14);
    }

    #[test]
    fn envelope_is_integral_of_rate() {
        // composite Simpson on [0, 7]
        let n = 20_000;
        let b = 7.0;
        let h = b / n as f64;
        let mut s = damping_envelope_rate(0.0) + damping_envelope_rate(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * damping_envelope_rate(i as f64 * h);
        }
        let integral = s * h / 3.0;
        assert!((integral - damping_envelope(b)).abs() < 1e-12);
    }

    #[test]
    fn envelope_monotone_and_below_heuristic() {
        let n = 10_000;
        let mut prev = damping_envelope(0.0);
        for i in 1..=n {
            let t = 4.0 * PI * i as f64 / n as f64;
            let g = damping_envelope(t);
            assert!(damping_envelope_rate(t) >= 0.0);
            assert!(g >= prev - 1e-15, "t={t}");
            assert!(exact_exponent(t, 0.3, 0.2) <= heuristic_exponent(t, 0.3, 0.2));
            assert!(visibility(t, 0.3, 0.2) <= f_qm(t, 0.3).norm());
            prev = g;
        }
    }

    #[test]
    fn unitary_visibility_is_periodic() {
        for i in 0..100 {
            let t = 0.0731 * i as f64;
            let a = visibility(t, 0.45, 0.0);
            let b = visibility(t + 2.0 * PI, 0.45, 0.0);
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn sample_curve_dispatch() {
        let params = SimParams::new(0.25, 0.1, 8, periods_grid(1.0, 5)).unwrap();
        let exact = sample_curve(Method::Exact, &params).unwrap();
        let qm = sample_curve(Method::QmOnly, &params).unwrap();
        let heur = sample_curve(Method::Heuristic, &params).unwrap();
        assert_eq!(exact.samples.len(), 5);
        assert!(close(exact.samples[2].f, f_exact(PI, 0.25, 0.1), 1e-15));
        assert!(close(qm.samples[2].f, f_qm(PI, 0.25), 1e-15));
        assert!(close(heur.samples[4].f, f_heuristic(2.0 * PI, 0.25, 0.1), 1e-15));
        for s in &exact.samples {
            assert!((s.nu - s.f.norm()).abs() < 1e-14);
            assert!(s.nu <= 1.0 + 1e-9);
        }
        assert!(matches!(sample_curve(Method::MasterOd, &params), Err(Error::WrongMethod { .. })));
    }
}
