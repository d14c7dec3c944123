//! Small numeric helpers shared across the decoder and loss modules.

/// Sign with the fixed tie-break `sign(0) = +1`.
///
/// Every sign decision in the crate (syndromes, hard decisions, message
/// routing) goes through this function so that zero inputs behave
/// identically everywhere.
#[inline]
pub(crate) fn sign_pm(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Overflow-safe `ln(1 + exp(x))`.
#[inline]
pub(crate) fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Logistic sigmoid, computed without overflowing for large `|x|`.
#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// The raw value whose softplus image is exactly 1: `ln(e - 1)`.
pub(crate) fn softplus_inverse_one() -> f64 {
    (std::f64::consts::E - 1.0).ln()
}
