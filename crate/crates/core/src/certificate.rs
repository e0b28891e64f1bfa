//! Well-posedness constants evaluated on concrete data, with verdicts.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::{GevreyParams, ModeBasis, SpectralState};

/// Multiplicative margin applied to the smallest admissible `M`.
pub const M_MARGIN: f64 = 1e-6;

/// `q = 1 + 1/s`.
pub fn q_from_s<T: Real>(s: T) -> Result<T> {
    if !(s > T::one()) || !s.is_finite() {
        return Err(Error::InvalidParameter {
            name: "s",
            reason: format!("must be finite and > 1, got {s}"),
        });
    }
    Ok(T::one() + s.recip())
}

fn check_constants<T: Real>(m: T, r: T, t: T) -> Result<()> {
    if !(m > T::lit(2.0)) || !m.is_finite() {
        return Err(Error::InvalidParameter {
            name: "M",
            reason: format!("must be finite and > 2, got {m}"),
        });
    }
    if !(r >= T::zero()) || !r.is_finite() {
        return Err(Error::InvalidParameter {
            name: "R",
            reason: format!("must be finite and >= 0, got {r}"),
        });
    }
    if !(t > T::zero()) || !t.is_finite() {
        return Err(Error::InvalidParameter {
            name: "T",
            reason: format!("must be finite and > 0, got {t}"),
        });
    }
    Ok(())
}

/// `ln(M² e^{4M²} R T^q)`; `-∞` when `R = 0`.
pub fn k0_log<T: Real>(m: T, r: T, t: T, q: T) -> Result<T> {
    check_constants(m, r, t)?;
    Ok(T::lit(2.0) * m.ln() + T::lit(4.0) * m * m + r.ln() + q * t.ln())
}

/// `K₀ = M² e^{4M²} R T^q`.
pub fn k0<T: Real>(m: T, r: T, t: T, q: T) -> Result<T> {
    let log = k0_log(m, r, t, q)?;
    if r == T::zero() {
        return Ok(T::zero());
    }
    let four_m2 = T::lit(4.0) * m * m;
    let value = if four_m2 < T::max_exp_arg() {
        m * m * four_m2.exp() * r * t.powf(q)
    } else {
        log.exp()
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Range {
            what: "K0",
            log_value: log.as_f64(),
        })
    }
}

/// `ln(2s M² e^{4M²} R T^{1+1/s})`, the log of the data-dependent part of `η₀`.
pub fn eta0_log_first_term<T: Real>(m: T, r: T, t: T, s: T) -> Result<T> {
    check_constants(m, r, t)?;
    q_from_s(s)?;
    Ok((T::lit(2.0) * s).ln()
        + T::lit(2.0) * m.ln()
        + T::lit(4.0) * m * m
        + r.ln()
        + (T::one() + s.recip()) * t.ln())
}

/// `ln η₀`, finite for every admissible input.
pub fn eta0_log<T: Real>(m: T, r: T, t: T, s: T) -> Result<T> {
    let first = eta0_log_first_term(m, r, t, s)?;
    let second = (T::lit(4.0) * m * m).ln();
    let hi = first.max(second);
    let lo = first.min(second);
    Ok(hi + (lo - hi).exp().ln_1p())
}

/// `η₀ = 2s M² e^{4M²} R T^{1+1/s} + 4M²`.
pub fn eta0<T: Real>(m: T, r: T, t: T, s: T) -> Result<T> {
    let first_log = eta0_log_first_term(m, r, t, s)?;
    let four_m2 = T::lit(4.0) * m * m;
    if r == T::zero() {
        return Ok(four_m2);
    }
    let first = if four_m2 < T::max_exp_arg() {
        T::lit(2.0) * s * m * m * four_m2.exp() * r * t.powf(T::one() + s.recip())
    } else {
        first_log.exp()
    };
    let value = first + four_m2;
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Range {
            what: "eta0",
            log_value: eta0_log(m, r, t, s)?.as_f64(),
        })
    }
}

/// `ln Σ e^{η μ^{1/s}} (μ³ u0_k² + μ u1_k²)`; `-∞` for zero data.
pub fn data_radius_log<T: Real>(
    u0: &[T],
    u1: &[T],
    basis: &ModeBasis<T>,
    gp: &GevreyParams<T>,
) -> Result<T> {
    for (what, c) in [("u0", u0), ("u1", u1)] {
        if c.len() != basis.count() {
            return Err(Error::LengthMismatch {
                what,
                expected: basis.count(),
                found: c.len(),
            });
        }
    }
    let three = T::lit(3.0);
    let log_terms: Vec<T> = basis
        .frequencies()
        .iter()
        .zip(u0.iter().zip(u1))
        .filter_map(|(&mu, (&a, &b))| {
            let w = mu.powf(three) * a * a + mu * b * b;
            (w > T::zero()).then(|| gp.exponent(mu) + w.ln())
        })
        .collect();
    let Some(top) = log_terms.iter().copied().reduce(T::max) else {
        return Ok(T::neg_infinity());
    };
    Ok(top + log_terms.iter().map(|&l| (l - top).exp()).sum::<T>().ln())
}

/// `Σ e^{η μ^{1/s}} (μ³ u0_k² + μ u1_k²)`.
pub fn data_radius<T: Real>(
    u0: &[T],
    u1: &[T],
    basis: &ModeBasis<T>,
    gp: &GevreyParams<T>,
) -> Result<T> {
    let log = data_radius_log(u0, u1, basis, gp)?;
    if log < T::max_exp_arg() {
        Ok(log.exp())
    } else {
        Err(Error::Range {
            what: "data radius",
            log_value: log.as_f64(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict<T> {
    pub code: &'static str,
    pub statement: &'static str,
    pub margin: T,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate<T> {
    pub h0: T,
    pub m_upper: T,
    pub m_was_chosen: bool,
    pub r_log: T,
    /// `None` when `R` is not representable.
    pub r: Option<T>,
    pub s: T,
    pub q: T,
    pub horizon: T,
    pub eta: T,
    pub k0_log: T,
    /// `None` when `K₀` is not representable.
    pub k0: Option<T>,
    pub eta0_log: T,
    /// `None` when `η₀` is not representable.
    pub eta0: Option<T>,
    /// `η - η₀`; `None` when `η₀` is not representable.
    pub eta_prime: Option<T>,
    pub verdicts: Vec<Verdict<T>>,
    pub passed: bool,
}

impl<T: Real> Certificate<T> {
    pub fn failed_codes(&self) -> Vec<&'static str> {
        self.verdicts
            .iter()
            .filter(|v| !v.passed)
            .map(|v| v.code)
            .collect()
    }

    /// `PASS` or `FAIL <codes>`.
    pub fn verdict_line(&self) -> String {
        if self.passed {
            "PASS".to_string()
        } else {
            format!("FAIL {}", self.failed_codes().join(" "))
        }
    }
}

/// `max(2, 2 sqrt(2ℋ₀ + 1)) (1 + 10⁻⁶)`.
pub fn minimal_m<T: Real>(h0: T) -> T {
    let two = T::lit(2.0);
    two.max(two * (two * h0 + T::one()).sqrt()) * (T::one() + T::lit(M_MARGIN))
}

/// Evaluates all constants for `state` and checks
/// (a) `M > 2`, (b) `2ℋ₀ < M²/4 - 1`, (c) `η > η₀`.
/// Failing hypotheses yield a failing certificate, not an error.
pub fn check_hypotheses<T: Real>(
    state: &SpectralState<T>,
    s: T,
    eta: T,
    horizon: T,
    m_choice: Option<T>,
) -> Result<Certificate<T>> {
    let q = q_from_s(s)?;
    let gp = GevreyParams::new(s, eta)?;
    if !(horizon > T::zero()) || !horizon.is_finite() {
        return Err(Error::InvalidParameter {
            name: "T",
            reason: format!("must be finite and > 0, got {horizon}"),
        });
    }
    let h0 = state.hamiltonian();
    let m = m_choice.unwrap_or_else(|| minimal_m(h0));
    if !m.is_finite() {
        return Err(Error::InvalidParameter {
            name: "M",
            reason: format!("must be finite, got {m}"),
        });
    }
    let r_log = data_radius_log(state.position(), state.velocity(), state.basis(), &gp)?;
    let r = (r_log < T::max_exp_arg()).then(|| r_log.exp());

    let two = T::lit(2.0);
    let m_ok = m > two;
    let energy_margin = m * m / T::lit(4.0) - T::one() - two * h0;
    let mut verdicts = vec![
        Verdict {
            code: "m-above-2",
            statement: "M > 2",
            margin: m - two,
            passed: m_ok,
        },
        Verdict {
            code: "energy",
            statement: "2 H(0) < M^2/4 - 1",
            margin: energy_margin,
            passed: energy_margin > T::zero(),
        },
    ];

    // Constants are only defined for M > 2; below that, (c) fails outright.
    let (k0_log, k0_value, eta0_log, eta0_value) = match (m_ok, r) {
        (false, _) => (T::nan(), None, T::nan(), None),
        (true, Some(r)) => (
            k0_log(m, r, horizon, q)?,
            k0(m, r, horizon, q).ok(),
            eta0_log(m, r, horizon, s)?,
            eta0(m, r, horizon, s).ok(),
        ),
        (true, None) => {
            let base = T::lit(2.0) * m.ln() + T::lit(4.0) * m * m + r_log;
            let k0_log = base + q * horizon.ln();
            // 4M² is negligible next to an unrepresentable first term.
            let eta0_log = (T::lit(2.0) * s).ln() + base + q * horizon.ln();
            (k0_log, None, eta0_log, None)
        }
    };
    let eta_prime = eta0_value.map(|e| eta - e);
    let eta_margin = eta_prime.unwrap_or(T::neg_infinity());
    verdicts.push(Verdict {
        code: "eta",
        statement: "eta > eta0(M, R, T)",
        margin: if m_ok { eta_margin } else { T::nan() },
        passed: m_ok && eta_margin > T::zero(),
    });
    let passed = verdicts.iter().all(|v| v.passed);
    Ok(Certificate {
        h0,
        m_upper: m,
        m_was_chosen: m_choice.is_none(),
        r_log,
        r,
        s,
        q,
        horizon,
        eta,
        k0_log,
        k0: k0_value,
        eta0_log,
        eta0: eta0_value,
        eta_prime,
        verdicts,
        passed,
    })
}
