//! Interference visibility of a photon entangled with a moving mirror whose
//! centre of mass undergoes position decoherence (dρ/dt ⊃ −½η[q,[q,ρ]]).
//!
//! The off-diagonal photon factor f(t), whose modulus is the fringe
//! visibility, is available through three independent routes:
//!
//! * [`exact`]: the closed form,
//! * [`master`]: RK4 integration of the master equation in a truncated Fock
//!   basis, either on the full photon ⊗ mirror space or on the reduced
//!   off-diagonal operator,
//! * [`unravel`]: Monte Carlo ensembles of a linear stochastic unraveling
//!   and of the nonlinear QMUPL collapse equation.
//!
//! [`collapse`] turns GRW/QMUPL/CSL parameters into η, the one-period damping
//! exponent Λ, and bounds on the CSL rate.

pub mod collapse;
pub mod curve;
pub mod error;
pub mod exact;
pub mod fock;
pub mod master;
pub mod params;
pub mod unravel;

pub use curve::{Method, Sample, VisibilityCurve};
pub use error::{Error, Result};
pub use params::{nondimensionalize, periods_grid, PhysicalParams, SimParams};
