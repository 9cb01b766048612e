use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::codec::code_length;
use crate::error::{Error, Result};
use crate::planner::lambda_of;
use crate::scalar::{format_rational, int, rational_to_f64, Rational};

/// Bound values as exact text plus a floating approximation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundValue {
    pub exact: String,
    pub approx: f64,
}

impl BoundValue {
    fn of(r: &Rational) -> Self {
        Self {
            exact: format_rational(r),
            approx: rational_to_f64(r),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub epsilon: String,
    pub gamma: String,
    pub reward_range: String,
    pub action_count: usize,
    pub padded_action_count: usize,
    pub d: usize,
    pub lambda: f64,
    pub plain_bound: BoundValue,
    pub binary_bound: BoundValue,
    pub binary_asymptotic_bound: BoundValue,
    /// `1 − λ`.
    pub one_minus_lambda: f64,
    /// `(1 − γ)/(d + 1 − γ)`.
    pub certificate: f64,
    pub certificate_holds: bool,
}

fn check(epsilon: &Rational, gamma: &Rational, action_count: usize, range: &Rational) -> Result<()> {
    if !epsilon.is_positive() {
        return Err(Error::InvalidParam("ε must be positive".into()));
    }
    if gamma.is_negative() || *gamma >= int(1) {
        return Err(Error::InvalidParam("need 0 ≤ γ < 1".into()));
    }
    if action_count < 2 {
        return Err(Error::InvalidParam("need at least 2 actions".into()));
    }
    if !range.is_positive() {
        return Err(Error::InvalidParam("reward range must be positive".into()));
    }
    Ok(())
}

/// `c = (1 − γ)/(d + 1 − γ)` and whether `1 − γ^{1/d} ≥ c`, decided exactly as
/// `γ ≤ (1 − c)^d`.
pub fn lambda_certificate(gamma: &Rational, d: usize) -> (Rational, bool) {
    let cert = (int(1) - gamma) / (int(d as i64 + 1) - gamma);
    let holds = *gamma <= num_traits::pow(int(1) - &cert, d);
    (cert, holds)
}

/// `(2R/(ε(1−γ)³))^{|𝒜|}`.
pub fn bound_plain(
    epsilon: &Rational,
    gamma: &Rational,
    action_count: usize,
    range: &Rational,
) -> Result<Rational> {
    check(epsilon, gamma, action_count, range)?;
    let one_minus = int(1) - gamma;
    let base = int(2) * range / (epsilon * num_traits::pow(one_minus, 3));
    Ok(num_traits::pow(base, action_count))
}

/// The binarized bound `4R²⌈1−γ+lb|𝒜|⌉⁶/(γ²ε²(1−γ)⁶)` on the padded action set, with
/// its `γ → 1` form `4R²⌈lb|𝒜|⌉⁶/(ε²(1−γ)⁶)` and the `1 − λ` certificate.
pub fn bound_binary(
    epsilon: &Rational,
    gamma: &Rational,
    action_count: usize,
    range: &Rational,
) -> Result<BoundReport> {
    check(epsilon, gamma, action_count, range)?;
    if gamma.is_zero() {
        return Err(Error::InvalidParam(
            "the binarized bound divides by γ², so γ must be positive".into(),
        ));
    }
    let d = code_length(action_count, 2);
    let one_minus = int(1) - gamma;
    // after padding lb|𝒜| = d, so ⌈1 − γ + d⌉ = d + 1 for 0 < γ < 1
    let ceil = (int(1) - gamma + int(d as i64)).ceil();
    let scale = int(4) * range * range;
    let denom = gamma * gamma * epsilon * epsilon * num_traits::pow(one_minus.clone(), 6);
    let binary = &scale * num_traits::pow(ceil, 6) / denom;
    let asymptotic = &scale * num_traits::pow(int(d as i64), 6)
        / (epsilon * epsilon * num_traits::pow(one_minus.clone(), 6));
    let lambda = lambda_of(rational_to_f64(gamma), d);
    let (cert, holds) = lambda_certificate(gamma, d);
    let plain = bound_plain(epsilon, gamma, action_count, range)?;
    Ok(BoundReport {
        epsilon: format_rational(epsilon),
        gamma: format_rational(gamma),
        reward_range: format_rational(range),
        action_count,
        padded_action_count: 1 << d,
        d,
        lambda,
        plain_bound: BoundValue::of(&plain),
        binary_bound: BoundValue::of(&binary),
        binary_asymptotic_bound: BoundValue::of(&asymptotic),
        one_minus_lambda: 1.0 - lambda,
        certificate: rational_to_f64(&cert),
        certificate_holds: holds,
    })
}
