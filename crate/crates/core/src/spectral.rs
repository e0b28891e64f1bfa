//! Mode bases, spectral states, and the norms and energies built from them.
//!
//! Everything is expressed against an orthonormal eigenbasis `{w_k}` of `-Δ`,
//! so Parseval holds without normalisation factors: `‖∇u‖² = Σ λ_k v_k²`.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisKind {
    /// Dirichlet sine modes `sqrt(2/π) sin(k x)` on `(0, π)`, `μ_k = k`.
    IntervalDirichlet,
    /// Zero-mean cosine modes on a periodic interval, `μ_k = 2πk / period`.
    Torus,
}

/// Discrete frequency set standing in for the continuous Fourier variable.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeBasis<T> {
    kind: BasisKind,
    frequencies: Vec<T>,
    eigenvalues: Vec<T>,
}

impl<T: Real> ModeBasis<T> {
    pub fn interval_dirichlet(count: usize) -> Result<Self> {
        let frequencies = (1..=count).map(|k| T::lit(k as f64)).collect();
        Self::from_frequencies(BasisKind::IntervalDirichlet, frequencies)
    }

    pub fn torus(count: usize, period: T) -> Result<Self> {
        if !(period > T::zero()) || !period.is_finite() {
            return Err(Error::InvalidParameter {
                name: "period",
                reason: format!("must be positive and finite, got {period}"),
            });
        }
        let step = T::lit(2.0) * T::PI() / period;
        let frequencies = (1..=count).map(|k| step * T::lit(k as f64)).collect();
        Self::from_frequencies(BasisKind::Torus, frequencies)
    }

    fn from_frequencies(kind: BasisKind, frequencies: Vec<T>) -> Result<Self> {
        if frequencies.is_empty() {
            return Err(Error::InvalidParameter {
                name: "count",
                reason: "a mode basis needs at least one mode".into(),
            });
        }
        let increasing = frequencies.windows(2).all(|w| w[0] < w[1]);
        if !increasing || !(frequencies[0] > T::zero()) {
            return Err(Error::InvalidParameter {
                name: "frequencies",
                reason: "frequencies must be positive and strictly increasing".into(),
            });
        }
        let eigenvalues = frequencies.iter().map(|&mu| mu * mu).collect();
        Ok(Self {
            kind,
            frequencies,
            eigenvalues,
        })
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn count(&self) -> usize {
        self.frequencies.len()
    }

    /// Frequencies `μ_k = sqrt(λ_k)`.
    pub fn frequencies(&self) -> &[T] {
        &self.frequencies
    }

    /// Eigenvalues `λ_k` of `-Δ`.
    pub fn eigenvalues(&self) -> &[T] {
        &self.eigenvalues
    }

    pub fn max_frequency(&self) -> T {
        *self.frequencies.last().expect("basis is never empty")
    }

    fn check_len(&self, what: &'static str, len: usize) -> Result<()> {
        if len != self.count() {
            return Err(Error::LengthMismatch {
                what,
                expected: self.count(),
                found: len,
            });
        }
        Ok(())
    }
}

/// Gevrey order `s > 1` and radius `η > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GevreyParams<T> {
    pub s: T,
    pub eta: T,
}

impl<T: Real> GevreyParams<T> {
    pub fn new(s: T, eta: T) -> Result<Self> {
        if !(s > T::one()) || !s.is_finite() {
            return Err(Error::InvalidParameter {
                name: "s",
                reason: format!("Gevrey order must exceed 1, got {s}"),
            });
        }
        if !(eta > T::zero()) || !eta.is_finite() {
            return Err(Error::InvalidParameter {
                name: "eta",
                reason: format!("Gevrey radius must be positive, got {eta}"),
            });
        }
        Ok(Self { s, eta })
    }

    /// Exponent `η μ^{1/s}` of the Gevrey weight at frequency `mu`.
    pub fn exponent(&self, mu: T) -> T {
        self.eta * mu.powf(self.s.recip())
    }
}

/// Coefficients of `u` and `∂ₜu` against the basis at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralState<T> {
    basis: Arc<ModeBasis<T>>,
    position: Vec<T>,
    velocity: Vec<T>,
}

impl<T: Real> SpectralState<T> {
    pub fn new(basis: Arc<ModeBasis<T>>, position: Vec<T>, velocity: Vec<T>) -> Result<Self> {
        basis.check_len("position", position.len())?;
        basis.check_len("velocity", velocity.len())?;
        if position.iter().chain(&velocity).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                what: "spectral state",
            });
        }
        Ok(Self {
            basis,
            position,
            velocity,
        })
    }

    pub fn zeros(basis: Arc<ModeBasis<T>>) -> Self {
        let n = basis.count();
        Self {
            basis,
            position: vec![T::zero(); n],
            velocity: vec![T::zero(); n],
        }
    }

    pub fn basis(&self) -> &Arc<ModeBasis<T>> {
        &self.basis
    }

    pub fn position(&self) -> &[T] {
        &self.position
    }

    pub fn velocity(&self) -> &[T] {
        &self.velocity
    }

    pub fn scaled(&self, alpha: T) -> Self {
        Self {
            basis: Arc::clone(&self.basis),
            position: self.position.iter().map(|&x| alpha * x).collect(),
            velocity: self.velocity.iter().map(|&x| alpha * x).collect(),
        }
    }

    /// Same state with velocities negated (time reversal).
    pub fn reversed(&self) -> Self {
        Self {
            basis: Arc::clone(&self.basis),
            position: self.position.clone(),
            velocity: self.velocity.iter().map(|&x| -x).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.position
            .iter()
            .chain(&self.velocity)
            .all(|x| *x == T::zero())
    }

    /// `‖∇u‖² = Σ λ_k v_k²`.
    pub fn dirichlet_energy(&self) -> T {
        self.basis
            .eigenvalues()
            .iter()
            .zip(&self.position)
            .map(|(&l, &v)| l * v * v)
            .sum()
    }

    /// `‖∂ₜu‖² = Σ v̇_k²`.
    pub fn kinetic_energy(&self) -> T {
        self.velocity.iter().map(|&v| v * v).sum()
    }

    /// Quadratic and quartic parts of the Hamiltonian.
    pub fn hamiltonian_parts(&self) -> (T, T) {
        let d = self.dirichlet_energy();
        let half = T::lit(0.5);
        (half * (d + self.kinetic_energy()), T::lit(0.25) * d * d)
    }

    pub fn hamiltonian(&self) -> T {
        let (quad, quart) = self.hamiltonian_parts();
        quad + quart
    }
}

/// `sqrt(Σ μ_k^{2σ} c_k²)`, the homogeneous `Ḣ^σ` norm.
pub fn sobolev_norm<T: Real>(coeffs: &[T], basis: &ModeBasis<T>, sigma: T) -> Result<T> {
    basis.check_len("coefficients", coeffs.len())?;
    let two_sigma = T::lit(2.0) * sigma;
    let sum: T = basis
        .frequencies()
        .iter()
        .zip(coeffs)
        .map(|(&mu, &c)| mu.powf(two_sigma) * c * c)
        .sum();
    Ok(sum.sqrt())
}

/// Squared `‖(-Δ)^{σ/2} f‖²` in `γ^s_η`: `Σ e^{η μ^{1/s}} μ^{2σ} c_k²`.
///
/// Falls back to log-space accumulation when individual weights overflow, and
/// returns [`Error::Range`] only when the result itself is not representable.
pub fn gevrey_norm_sq<T: Real>(
    coeffs: &[T],
    basis: &ModeBasis<T>,
    gp: &GevreyParams<T>,
    sigma: T,
) -> Result<T> {
    basis.check_len("coefficients", coeffs.len())?;
    let two_sigma = T::lit(2.0) * sigma;
    let direct: T = basis
        .frequencies()
        .iter()
        .zip(coeffs)
        .map(|(&mu, &c)| gp.exponent(mu).exp() * mu.powf(two_sigma) * c * c)
        .sum();
    if direct.is_finite() {
        return Ok(direct);
    }

    let logs: Vec<T> = basis
        .frequencies()
        .iter()
        .zip(coeffs)
        .filter(|(_, &c)| c != T::zero())
        .map(|(&mu, &c)| gp.exponent(mu) + two_sigma * mu.ln() + T::lit(2.0) * c.abs().ln())
        .collect();
    let peak = logs.iter().copied().fold(T::neg_infinity(), T::max);
    let log_total = peak + logs.iter().map(|&l| (l - peak).exp()).sum::<T>().ln();
    if log_total > T::max_exp_arg() || !log_total.is_finite() {
        return Err(Error::Range {
            what: "Gevrey norm",
            log_value: log_total.as_f64(),
        });
    }
    Ok(log_total.exp())
}

/// `sqrt(Σ e^{η μ^{1/s}} μ^{2σ} c_k²)`.
pub fn gevrey_norm<T: Real>(
    coeffs: &[T],
    basis: &ModeBasis<T>,
    gp: &GevreyParams<T>,
    sigma: T,
) -> Result<T> {
    match gevrey_norm_sq(coeffs, basis, gp, sigma) {
        Ok(sq) => Ok(sq.sqrt()),
        Err(Error::Range { log_value, .. }) => {
            // The norm itself may still fit even if its square does not.
            let half = log_value / 2.0;
            if half < T::max_exp_arg().as_f64() {
                Ok(T::lit(half.exp()))
            } else {
                Err(Error::Range {
                    what: "Gevrey norm",
                    log_value: half,
                })
            }
        }
        Err(e) => Err(e),
    }
}

pub fn hamiltonian<T: Real>(state: &SpectralState<T>) -> T {
    state.hamiltonian()
}

pub fn dirichlet_energy<T: Real>(state: &SpectralState<T>) -> T {
    state.dirichlet_energy()
}
