//! Compartmental SIR baseline: the coupled ODEs
//!
//! ```text
//! dS/dt = -beta * S * I / N
//! dI/dt =  beta * S * I / N - gamma * I
//! dR/dt =  gamma * I
//! ```
//!
//! integrated with fixed-step RK4, plus the two reproduction-number
//! decompositions. Everything here is a pure function over value types; the
//! agent-based model in [`crate::spatial`] is validated against these
//! trajectories in the well-mixed regime.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SirError {
    #[error("population must be at least 1, got {0}")]
    InvalidPopulation(f64),
    #[error("{name} must be finite, got {value}")]
    NotFinite { name: &'static str, value: f64 },
    #[error("{name} must be non-negative, got {value}")]
    Negative { name: &'static str, value: f64 },
    #[error("gamma must be positive, got {0}")]
    NonPositiveGamma(f64),
    #[error("infectious duration d must be positive, got {0}")]
    NonPositiveDuration(f64),
    #[error("tau must lie in [0, 1], got {0}")]
    TauOutOfRange(f64),
    #[error("step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("horizon {horizon} must be at least one step {step}")]
    HorizonTooShort { horizon: f64, step: f64 },
}

/// Real-valued compartment sizes at time `t`. Counts are not rounded;
/// rounding is presentation-only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SirState {
    pub s: f64,
    pub i: f64,
    pub r: f64,
    pub t: f64,
}

impl SirState {
    pub fn new(s: f64, i: f64, r: f64) -> Self {
        Self { s, i, r, t: 0.0 }
    }

    pub fn total(&self) -> f64 {
        self.s + self.i + self.r
    }
}

/// Rate parameters plus the contact-level decomposition inputs.
///
/// `beta`/`gamma` drive the ODEs; `tau` (infection probability given
/// contact), `c_bar` (mean S-I contact rate) and `d` (infectious duration)
/// only feed [`r0_from_contact`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SirParams {
    pub beta: f64,
    pub gamma: f64,
    pub n: f64,
    pub tau: f64,
    pub c_bar: f64,
    pub d: f64,
}

impl SirParams {
    /// Params with only the rate terms set; the contact decomposition
    /// defaults to a neutral (0, 0, 1).
    pub fn rates(beta: f64, gamma: f64, n: f64) -> Self {
        Self {
            beta,
            gamma,
            n,
            tau: 0.0,
            c_bar: 0.0,
            d: 1.0,
        }
    }

    /// `beta` is allowed to be zero (no transmission) even though typical
    /// epidemics have beta > 0; the decoupled case is a useful oracle.
    fn check_rates(&self) -> Result<(), SirError> {
        for (name, value) in [("beta", self.beta), ("gamma", self.gamma), ("n", self.n)] {
            if !value.is_finite() {
                return Err(SirError::NotFinite { name, value });
            }
        }
        if self.beta < 0.0 {
            return Err(SirError::Negative {
                name: "beta",
                value: self.beta,
            });
        }
        if self.gamma < 0.0 {
            return Err(SirError::Negative {
                name: "gamma",
                value: self.gamma,
            });
        }
        if self.n < 1.0 {
            return Err(SirError::InvalidPopulation(self.n));
        }
        Ok(())
    }
}

/// Instantaneous rates (ds, di, dr) at `state`.
///
/// The recovery component is derived as `-(ds + di)` rather than recomputed
/// as `gamma * i`, so the triple sums to zero in f64 exactly, not just
/// analytically; the difference from `gamma * i` is below one ulp of the
/// larger flux.
pub fn sir_derivative(state: &SirState, params: &SirParams) -> Result<(f64, f64, f64), SirError> {
    params.check_rates()?;
    Ok(raw_derivative(state.s, state.i, params))
}

fn raw_derivative(s: f64, i: f64, params: &SirParams) -> (f64, f64, f64) {
    let infection = params.beta * s * i / params.n;
    let recovery = params.gamma * i;
    let ds = 0.0 - infection;
    let di = infection - recovery;
    let dr = 0.0 - (ds + di);
    (ds, di, dr)
}

/// Fixed-step RK4 trajectory from `initial` over `horizon` time units.
/// Output contains the initial state plus one sample per step.
pub fn integrate(
    initial: &SirState,
    params: &SirParams,
    horizon: f64,
    step: f64,
) -> Result<Vec<SirState>, SirError> {
    params.check_rates()?;
    for (name, value) in [
        ("s", initial.s),
        ("i", initial.i),
        ("r", initial.r),
        ("t", initial.t),
        ("horizon", horizon),
    ] {
        if !value.is_finite() {
            return Err(SirError::NotFinite { name, value });
        }
    }
    for (name, value) in [("s", initial.s), ("i", initial.i), ("r", initial.r)] {
        if value < 0.0 {
            return Err(SirError::Negative { name, value });
        }
    }
    if !step.is_finite() || step <= 0.0 {
        return Err(SirError::InvalidStep(step));
    }
    if horizon < step {
        return Err(SirError::HorizonTooShort { horizon, step });
    }

    // Tolerant floor so horizons that are exact multiples of the step do not
    // lose the last sample to rounding (0.3 / 0.1 < 3 in f64).
    let n_steps = (horizon / step + 1e-9).floor() as usize;
    let mut series = Vec::with_capacity(n_steps + 1);
    series.push(*initial);

    let (mut s, mut i, mut r) = (initial.s, initial.i, initial.r);
    for k in 1..=n_steps {
        let (k1s, k1i, k1r) = raw_derivative(s, i, params);
        let h2 = step / 2.0;
        let (k2s, k2i, k2r) = raw_derivative(s + h2 * k1s, i + h2 * k1i, params);
        let (k3s, k3i, k3r) = raw_derivative(s + h2 * k2s, i + h2 * k2i, params);
        let (k4s, k4i, k4r) = raw_derivative(s + step * k3s, i + step * k3i, params);
        let w = step / 6.0;
        s += w * (k1s + 2.0 * k2s + 2.0 * k3s + k4s);
        i += w * (k1i + 2.0 * k2i + 2.0 * k3i + k4i);
        r += w * (k1r + 2.0 * k2r + 2.0 * k3r + k4r);
        series.push(SirState {
            s,
            i,
            r,
            t: initial.t + k as f64 * step,
        });
    }
    Ok(series)
}

/// R0 as the ratio of the effective contact rate to the recovery rate.
pub fn r0_from_rates(params: &SirParams) -> Result<f64, SirError> {
    for (name, value) in [("beta", params.beta), ("gamma", params.gamma)] {
        if !value.is_finite() {
            return Err(SirError::NotFinite { name, value });
        }
    }
    if params.beta < 0.0 {
        return Err(SirError::Negative {
            name: "beta",
            value: params.beta,
        });
    }
    if params.gamma <= 0.0 {
        return Err(SirError::NonPositiveGamma(params.gamma));
    }
    Ok(params.beta / params.gamma)
}

/// How [`r0_from_contact`] composes (tau, c_bar, d).
///
/// The quotient form divides by the infectious duration and is the default
/// for comparability with the rate identity as commonly quoted; the product
/// form multiplies, which is the dimensionally consistent reading when `d`
/// is a duration (R0 = tau * c_bar * d = beta * d). Both are exposed
/// explicitly instead of silently correcting either.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ContactR0Form {
    Quotient,
    Product,
}

/// R0 from the contact-level decomposition, under the chosen form.
pub fn r0_from_contact(params: &SirParams, form: ContactR0Form) -> Result<f64, SirError> {
    for (name, value) in [("tau", params.tau), ("c_bar", params.c_bar), ("d", params.d)] {
        if !value.is_finite() {
            return Err(SirError::NotFinite { name, value });
        }
    }
    if !(0.0..=1.0).contains(&params.tau) {
        return Err(SirError::TauOutOfRange(params.tau));
    }
    if params.c_bar < 0.0 {
        return Err(SirError::Negative {
            name: "c_bar",
            value: params.c_bar,
        });
    }
    if params.d <= 0.0 {
        return Err(SirError::NonPositiveDuration(params.d));
    }
    Ok(match form {
        ContactR0Form::Quotient => params.tau * params.c_bar / params.d,
        ContactR0Form::Product => params.tau * params.c_bar * params.d,
    })
}
