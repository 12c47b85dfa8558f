//! Ternary deadzone sign and the uniform midpoint quantizer.
//!
//! Both maps are deliberately literal. The deadzone boundary is *inclusive*
//! (`|z| = eps` already fires), and the quantizer is exactly
//! `delta * floor(x / delta + 1/2)`, whose floor-based tie rule rounds
//! midpoints up: `q(-0.25, 0.5) = 0.0`, `q(0.25, 0.5) = 0.5`. Nothing here
//! rounds to nearest-even, because the protocols' guarantees are proved for
//! this exact map.

use std::fmt;
use std::ops::Neg;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum QuantizeError {
    #[error("deadzone threshold must be positive, got {eps}")]
    NonPositiveEps { eps: f64 },
    #[error("quantizer step must be positive, got {delta}")]
    NonPositiveDelta { delta: f64 },
    #[error("input is NaN")]
    NanInput,
}

/// A control value in `{-1, 0, +1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
#[repr(i8)]
pub enum Ternary {
    Minus = -1,
    #[default]
    Zero = 0,
    Plus = 1,
}

impl Ternary {
    pub fn as_i8(self) -> i8 {
        self as i8
    }

    pub fn as_f64(self) -> f64 {
        self.as_i8() as f64
    }

    pub fn is_zero(self) -> bool {
        self == Ternary::Zero
    }
}

impl Neg for Ternary {
    type Output = Ternary;
    fn neg(self) -> Ternary {
        match self {
            Ternary::Minus => Ternary::Plus,
            Ternary::Zero => Ternary::Zero,
            Ternary::Plus => Ternary::Minus,
        }
    }
}

impl fmt::Display for Ternary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_i8())
    }
}

/// Deadzone sign: `sign(z)` when `|z| >= eps` (boundary inclusive), else 0.
pub fn sign_eps(z: f64, eps: f64) -> Result<Ternary, QuantizeError> {
    if !(eps > 0.0) || eps.is_nan() {
        return Err(QuantizeError::NonPositiveEps { eps });
    }
    if z.is_nan() {
        return Err(QuantizeError::NanInput);
    }
    Ok(sign_eps_valid(z, eps))
}

/// [`sign_eps`] without argument checking, for call sites that validated
/// `eps > 0` up front (the protocol constructors).
pub(crate) fn sign_eps_valid(z: f64, eps: f64) -> Ternary {
    debug_assert!(eps > 0.0 && !z.is_nan());
    if z >= eps {
        Ternary::Plus
    } else if z <= -eps {
        Ternary::Minus
    } else {
        Ternary::Zero
    }
}

/// Uniform midpoint quantizer `delta * floor(x / delta + 1/2)`.
pub fn q_uniform(x: f64, delta: f64) -> Result<f64, QuantizeError> {
    if !(delta > 0.0) || delta.is_nan() {
        return Err(QuantizeError::NonPositiveDelta { delta });
    }
    if x.is_nan() {
        return Err(QuantizeError::NanInput);
    }
    Ok(q_uniform_valid(x, delta))
}

/// [`q_uniform`] without argument checking, for validated call sites.
pub(crate) fn q_uniform_valid(x: f64, delta: f64) -> f64 {
    debug_assert!(delta > 0.0 && !x.is_nan());
    delta * (x / delta + 0.5).floor()
}
