use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// How a visibility curve was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Exact,
    QmOnly,
    Heuristic,
    MasterFull,
    MasterOd,
    UnravelLinear,
    UnravelQmupl,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Exact,
        Method::QmOnly,
        Method::Heuristic,
        Method::MasterFull,
        Method::MasterOd,
        Method::UnravelLinear,
        Method::UnravelQmupl,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::QmOnly => "qm-only",
            Method::Heuristic => "heuristic",
            Method::MasterFull => "master-full",
            Method::MasterOd => "master-od",
            Method::UnravelLinear => "unravel-linear",
            Method::UnravelQmupl => "unravel-qmupl",
        }
    }

    pub fn is_stochastic(self) -> bool {
        matches!(self, Method::UnravelLinear | Method::UnravelQmupl)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.tag() == s)
            .ok_or_else(|| Error::UnknownMethod(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    /// Dimensionless time ω_m t.
    pub t: f64,
    pub f: Complex64,
    /// |f|, never clamped.
    pub nu: f64,
    /// Standard error of `f` for ensemble estimates.
    pub stderr: Option<f64>,
}

impl Sample {
    pub fn new(t: f64, f: Complex64) -> Self {
        Self { t, f, nu: f.norm(), stderr: None }
    }
}

/// Sampled off-diagonal factor f(t) with run metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct VisibilityCurve {
    pub samples: Vec<Sample>,
    pub method: Method,
    pub meta: BTreeMap<String, String>,
}

impl VisibilityCurve {
    pub fn new(method: Method) -> Self {
        Self { samples: Vec::new(), method, meta: BTreeMap::new() }
    }

    pub fn push(&mut self, t: f64, f: Complex64) {
        debug_assert!(self.samples.last().is_none_or(|s| s.t < t));
        self.samples.push(Sample::new(t, f));
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.insert(key.to_string(), value.to_string());
        self
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn values(&self) -> Vec<Complex64> {
        self.samples.iter().map(|s| s.f).collect()
    }

    pub fn last(&self) -> Option<&Sample> {
        self.samples.last()
    }

    /// Largest |f_self − f_other| over matching samples.
    pub fn max_abs_diff(&self, other: &VisibilityCurve) -> Result<f64> {
        if self.samples.len() != other.samples.len() {
            return Err(Error::DimensionMismatch {
                expected: self.samples.len(),
                got: other.samples.len(),
            });
        }
        Ok(self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| (a.f - b.f).norm())
            .fold(0.0, f64::max))
    }

    /// Largest deviation from a reference function of time.
    pub fn max_error_against(&self, reference: impl Fn(f64) -> Complex64) -> f64 {
        self.samples.iter().map(|s| (s.f - reference(s.t)).norm()).fold(0.0, f64::max)
    }
}
