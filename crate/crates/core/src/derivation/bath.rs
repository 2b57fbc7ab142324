use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Selects `γ(ω)` (absorption, `Plus`) or `γ(−ω)` (emission, `Minus`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateSign {
    Plus,
    Minus,
}

/// Thermal bath rate `γ(±ω) = (γ₀/2)(coth(βω/2) ∓ 1)` for `ω > 0`.
///
/// Evaluated as `γ₀·n̄` and `γ₀·(1 + n̄)` with `n̄ = 1/expm1(βω)`, which is
/// the same expression without the cancellation in `coth − 1` at large βω.
pub fn bath_rate(gamma0: f64, beta: f64, omega: f64, sign: RateSign) -> Result<f64> {
    if !(gamma0.is_finite() && gamma0 >= 0.0) {
        return Err(Error::bad_parameter(
            "gamma0",
            format!("must be finite and >= 0, got {gamma0}"),
        ));
    }
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::bad_parameter(
            "beta",
            format!("must be finite and > 0, got {beta}"),
        ));
    }
    if omega.is_nan() || omega <= 0.0 {
        return Err(Error::ZeroFrequency);
    }
    let occupation = 1.0 / (beta * omega).exp_m1();
    Ok(match sign {
        RateSign::Plus => gamma0 * occupation,
        RateSign::Minus => gamma0 * (1.0 + occupation),
    })
}
