//! Truncated Fock-space states and operators for the mirror mode.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::params::check_truncation;

/// Default bound on the coherent-state probability lost to truncation.
pub const DEFAULT_LEAKAGE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OperatorKind {
    Annihilation,
    Creation,
    /// b + b†, the position operator in units of σ.
    Position,
    /// H^A / ħω_m = b†b − κ(b + b†), the mirror Hamiltonian when the photon is in arm A.
    HamiltonianA,
    /// H^B / ħω_m = b†b.
    HamiltonianB,
    General,
}

impl OperatorKind {
    pub fn tag(self) -> &'static str {
        match self {
            Self::Annihilation => "annihilation",
            Self::Creation => "creation",
            Self::Position => "position",
            Self::HamiltonianA => "hamiltonian-a",
            Self::HamiltonianB => "hamiltonian-b",
            Self::General => "general",
        }
    }
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for OperatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "annihilation" | "b" => Self::Annihilation,
            "creation" | "b-dagger" => Self::Creation,
            "position" | "b+b-dagger" => Self::Position,
            "hamiltonian-a" => Self::HamiltonianA,
            "hamiltonian-b" => Self::HamiltonianB,
            "general" => Self::General,
            other => return Err(Error::UnknownOperatorKind(other.to_string())),
        })
    }
}

/// Dense operator on the truncated mirror space.
#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator {
    pub entries: DMatrix<Complex64>,
    pub kind: OperatorKind,
}

impl FockOperator {
    pub fn general(entries: DMatrix<Complex64>) -> Self {
        Self { entries, kind: OperatorKind::General }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| (self.entries[(i, j)] - self.entries[(j, i)].conj()).norm() <= tol))
    }

    /// Real tridiagonal view, if the operator has that shape.
    pub fn tridiagonal(&self) -> Option<Tridiagonal> {
        let n = self.dim();
        let mut t = Tridiagonal::zeros(n);
        for j in 0..n {
            for i in 0..n {
                let z = self.entries[(i, j)];
                let in_band = i.abs_diff(j) <= 1;
                if z.im != 0.0 || (!in_band && z.re != 0.0) {
                    return None;
                }
            }
        }
        for i in 0..n {
            t.diag[i] = self.entries[(i, i)].re;
            if i + 1 < n {
                t.upper[i] = self.entries[(i, i + 1)].re;
                t.lower[i] = self.entries[(i + 1, i)].re;
            }
        }
        Some(t)
    }

    pub fn apply(&self, state: &MirrorState) -> Result<MirrorState> {
        if state.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: state.dim() });
        }
        Ok(MirrorState { amps: &self.entries * &state.amps })
    }
}

/// Builds one of the canonical mirror operators in the dimensionless units
/// (energies in ħω_m, positions in σ).
pub fn make_operator(kind: OperatorKind, n_trunc: usize, kappa: f64) -> Result<FockOperator> {
    check_truncation(n_trunc)?;
    let t = match kind {
        OperatorKind::Annihilation => Tridiagonal::annihilation(n_trunc),
        OperatorKind::Creation => Tridiagonal::annihilation(n_trunc).transpose(),
        OperatorKind::Position => Tridiagonal::position(n_trunc),
        OperatorKind::HamiltonianA => Tridiagonal::hamiltonian_a(n_trunc, kappa),
        OperatorKind::HamiltonianB => Tridiagonal::number(n_trunc),
        OperatorKind::General => return Err(Error::UnknownOperatorKind(kind.tag().into())),
    };
    Ok(FockOperator { entries: t.to_dense(), kind })
}

/// Real tridiagonal matrix. Every operator the dynamics needs (b, b†, b+b†,
/// H^A, H^B and their block-diagonal photon-branch extensions) has this
/// shape, so products cost O(N) per column instead of O(N²).
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    /// `lower[i]` is entry (i+1, i).
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    /// `upper[i]` is entry (i, i+1).
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn zeros(n: usize) -> Self {
        let off = n.saturating_sub(1);
        Self { lower: vec![0.0; off], diag: vec![0.0; n], upper: vec![0.0; off] }
    }

    pub fn annihilation(n: usize) -> Self {
        let mut t = Self::zeros(n);
        for (i, u) in t.upper.iter_mut().enumerate() {
            *u = ((i + 1) as f64).sqrt();
        }
        t
    }

    pub fn number(n: usize) -> Self {
        let mut t = Self::zeros(n);
        for (i, d) in t.diag.iter_mut().enumerate() {
            *d = i as f64;
        }
        t
    }

    pub fn position(n: usize) -> Self {
        let b = Self::annihilation(n);
        Self { lower: b.upper.clone(), diag: vec![0.0; n], upper: b.upper }
    }

    pub fn hamiltonian_a(n: usize, kappa: f64) -> Self {
        let x = Self::position(n);
        let mut h = Self::number(n);
        for (hl, xl) in h.lower.iter_mut().zip(&x.lower) {
            *hl = -kappa * xl;
        }
        for (hu, xu) in h.upper.iter_mut().zip(&x.upper) {
            *hu = -kappa * xu;
        }
        h
    }

    /// diag(a, b) on the 2N-dimensional branch ⊗ mirror space.
    pub fn block_diag(a: &Self, b: &Self) -> Self {
        let n = a.dim();
        assert_eq!(n, b.dim());
        let mut lower = a.lower.clone();
        lower.push(0.0);
        lower.extend_from_slice(&b.lower);
        let mut upper = a.upper.clone();
        upper.push(0.0);
        upper.extend_from_slice(&b.upper);
        let mut diag = a.diag.clone();
        diag.extend_from_slice(&b.diag);
        Self { lower, diag, upper }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn transpose(&self) -> Self {
        Self { lower: self.upper.clone(), diag: self.diag.clone(), upper: self.lower.clone() }
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(self.diag[i], 0.0);
            if i + 1 < n {
                m[(i, i + 1)] = Complex64::new(self.upper[i], 0.0);
                m[(i + 1, i)] = Complex64::new(self.lower[i], 0.0);
            }
        }
        m
    }

    /// out = T v
    pub fn mul_vec_into(&self, v: &[Complex64], out: &mut [Complex64]) {
        let n = self.dim();
        debug_assert!(v.len() == n && out.len() == n);
        for i in 0..n {
            let mut acc = v[i] * self.diag[i];
            if i > 0 {
                acc += v[i - 1] * self.lower[i - 1];
            }
            if i + 1 < n {
                acc += v[i + 1] * self.upper[i];
            }
            out[i] = acc;
        }
    }

    /// T M
    pub fn mul_left(&self, m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let n = self.dim();
        let mut out = DMatrix::zeros(n, m.ncols());
        // column-major storage: each chunk is one column
        for (src, dst) in m.as_slice().chunks_exact(n).zip(out.as_mut_slice().chunks_exact_mut(n)) {
            self.mul_vec_into(src, dst);
        }
        out
    }

    /// M T
    pub fn mul_right(&self, m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let n = self.dim();
        let rows = m.nrows();
        let mut out = DMatrix::zeros(rows, n);
        for j in 0..n {
            for i in 0..rows {
                let mut acc = m[(i, j)] * self.diag[j];
                if j > 0 {
                    acc += m[(i, j - 1)] * self.upper[j - 1];
                }
                if j + 1 < n {
                    acc += m[(i, j + 1)] * self.lower[j];
                }
                out[(i, j)] = acc;
            }
        }
        out
    }
}

/// Mirror state in the number basis |0⟩..|N−1⟩. Not necessarily normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct MirrorState {
    pub amps: DVector<Complex64>,
}

impl MirrorState {
    pub fn from_amps(amps: Vec<Complex64>) -> Self {
        Self { amps: DVector::from_vec(amps) }
    }

    /// Number state |n⟩.
    pub fn basis(n: usize, n_trunc: usize) -> Self {
        let mut amps = DVector::zeros(n_trunc);
        amps[n] = Complex64::new(1.0, 0.0);
        Self { amps }
    }

    pub fn ground(n_trunc: usize) -> Self {
        Self::basis(0, n_trunc)
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// ⟨a|b⟩
pub fn overlap(a: &MirrorState, b: &MirrorState) -> Result<Complex64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: b.dim() });
    }
    Ok(a.amps.iter().zip(b.amps.iter()).map(|(x, y)| x.conj() * y).sum())
}

pub fn coherent_state(alpha: Complex64, n_trunc: usize) -> Result<MirrorState> {
    coherent_state_with_tolerance(alpha, n_trunc, DEFAULT_LEAKAGE_TOL)
}

/// Truncated, renormalized coherent state |α⟩. Fails when the discarded
/// tail Σ_{n≥N} |⟨n|α⟩|² exceeds `leakage_tol`.
pub fn coherent_state_with_tolerance(
    alpha: Complex64,
    n_trunc: usize,
    leakage_tol: f64,
) -> Result<MirrorState> {
    check_truncation(n_trunc)?;
    let mean_n = alpha.norm_sqr();
    let mut c = Complex64::new((-0.5 * mean_n).exp(), 0.0);
    let mut amps = Vec::with_capacity(n_trunc);
    for n in 0..n_trunc {
        if n > 0 {
            c = c * alpha / (n as f64).sqrt();
        }
        amps.push(c);
    }

    // Tail summed term by term past the Poisson mean; 1 − Σ_kept would lose it to rounding.
    let mut leaked = 0.0;
    let mut n = n_trunc;
    loop {
        c = c * alpha / (n as f64).sqrt();
        let p = c.norm_sqr();
        leaked += p;
        if (n as f64) > mean_n && (p < 1e-40 || p < leaked * 1e-17) {
            break;
        }
        n += 1;
    }
    if leaked > leakage_tol {
        return Err(Error::TruncationLeakage { alpha_abs: alpha.norm(), n: n_trunc, leaked });
    }

    let mut state = MirrorState::from_amps(amps);
    let norm = state.norm();
    state.amps /= Complex64::new(norm, 0.0);
    Ok(state)
}
