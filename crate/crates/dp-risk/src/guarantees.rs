//! Privacy guarantee types and conversions between them.
//!
//! Four guarantee families are supported:
//!
//! * pure DP: loss bounded by `eps` always;
//! * approximate DP: `(eps, delta)`, the standard relaxation;
//! * pointwise DP (PDP): `P[-eps' <= Z <= eps'] >= 1 - delta'` where `Z` is
//!   the privacy loss of the released output, the form risk bounds consume;
//! * zero-concentrated DP (zCDP): subgaussian loss with parameter `rho`.
//!
//! The central conversion tightens an `(eps, delta)` guarantee into a
//! pointwise one at any confidence `delta' > delta`:
//!
//! ```text
//! eps' = ln(delta' * e^eps + delta) - ln(delta' - delta)
//! ```
//!
//! `eps'` equals `eps` exactly when `delta = 0` and exceeds it otherwise;
//! it decreases toward `eps` as the confidence slack `delta'` grows.

use serde::{Deserialize, Serialize};

use crate::numeric::golden_section_min;
use crate::{require, Error, Result};

/// Largest `eps` for which a difference-bound guarantee yields a second,
/// undoubled pointwise guarantee: `2 ln 3`.
pub const DIFF_BOUND_EPS_LIMIT: f64 = 2.1972245773362196;

/// Smallest intermediate delta considered by the optimized zCDP conversion.
/// Below this the tail bound is so loose that the optimum never lands there.
const MIN_INTERMEDIATE_DELTA: f64 = 1e-300;

/// A privacy guarantee in one of the supported families.
///
/// Serialized with a `type` tag (`pure_dp`, `approx_dp`, `pdp`, `zcdp`) and
/// only the fields the family uses.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PrivacyGuarantee {
    /// Loss bounded by `epsilon` with probability one.
    PureDp { epsilon: f64 },
    /// Standard `(epsilon, delta)` guarantee.
    ApproxDp { epsilon: f64, delta: f64 },
    /// Pointwise loss bound: `|Z| <= epsilon` except with probability `delta`
    /// over the released output.
    Pdp { epsilon: f64, delta: f64 },
    /// Zero-concentrated guarantee with parameter `rho`.
    Zcdp { rho: f64 },
}

impl PrivacyGuarantee {
    /// Checks field ranges: `epsilon >= 0`, `delta` in `[0, 1)`, `rho > 0`,
    /// all finite.
    pub fn validate(&self) -> Result<()> {
        match *self {
            PrivacyGuarantee::PureDp { epsilon } => check_epsilon(epsilon),
            PrivacyGuarantee::ApproxDp { epsilon, delta }
            | PrivacyGuarantee::Pdp { epsilon, delta } => {
                check_epsilon(epsilon)?;
                check_delta(delta, "delta")
            }
            PrivacyGuarantee::Zcdp { rho } => require(rho > 0.0 && rho.is_finite(), || {
                format!("rho must be positive and finite, got {rho}")
            }),
        }
    }

    /// The `(epsilon, delta)` view of a DP-family guarantee; pure DP reads as
    /// `delta = 0`. Errors for zCDP and pointwise guarantees, which are not
    /// `(eps, delta)` statements.
    pub fn as_dp(&self) -> Result<(f64, f64)> {
        match *self {
            PrivacyGuarantee::PureDp { epsilon } => Ok((epsilon, 0.0)),
            PrivacyGuarantee::ApproxDp { epsilon, delta } => Ok((epsilon, delta)),
            PrivacyGuarantee::Pdp { .. } => Err(Error::domain(
                "pointwise guarantee where an (eps, delta) guarantee is required",
            )),
            PrivacyGuarantee::Zcdp { .. } => Err(Error::domain(
                "zCDP guarantee where an (eps, delta) guarantee is required",
            )),
        }
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    require(epsilon >= 0.0 && epsilon.is_finite(), || {
        format!("epsilon must be nonnegative and finite, got {epsilon}")
    })
}

fn check_delta(delta: f64, name: &str) -> Result<()> {
    require((0.0..1.0).contains(&delta), || {
        format!("{name} must lie in [0, 1), got {delta}")
    })
}

fn check_confidence_delta(delta_prime: f64) -> Result<()> {
    require(delta_prime > 0.0 && delta_prime <= 1.0, || {
        format!("delta_prime must lie in (0, 1], got {delta_prime}")
    })
}

/// A pointwise guarantee is an `(eps, delta)` guarantee as stated.
pub fn pdp_to_dp(epsilon: f64, delta: f64) -> Result<(f64, f64)> {
    check_epsilon(epsilon)?;
    check_delta(delta, "delta")?;
    Ok((epsilon, delta))
}

/// `(eps, delta)` implied by a zCDP guarantee at a chosen `delta`:
/// `eps = rho + 2 * sqrt(rho * ln(1 / delta))`.
pub fn zcdp_to_dp(rho: f64, delta: f64) -> Result<f64> {
    require(rho > 0.0 && rho.is_finite(), || {
        format!("rho must be positive and finite, got {rho}")
    })?;
    require(delta > 0.0 && delta < 1.0, || {
        format!("delta must lie in (0, 1), got {delta}")
    })?;
    Ok(rho + 2.0 * (rho * (1.0 / delta).ln()).sqrt())
}

/// Pointwise bound at confidence `delta_prime` implied by an `(eps, delta)`
/// guarantee. Requires `delta_prime > delta`; returns `eps` exactly when
/// `delta = 0`.
pub fn dp_to_pdp(epsilon: f64, delta: f64, delta_prime: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    check_delta(delta, "delta")?;
    check_confidence_delta(delta_prime)?;
    require(delta_prime > delta, || {
        format!("delta_prime ({delta_prime}) must exceed delta ({delta})")
    })?;
    if delta == 0.0 {
        // Identity case; skip the log round-trip so the bound is bitwise eps.
        return Ok(epsilon);
    }
    Ok((delta_prime * epsilon.exp() + delta).ln() - (delta_prime - delta).ln())
}

/// [`dp_to_pdp`] evaluated over a grid of confidence levels; returns
/// `(delta_prime, eps_prime)` pairs in input order.
pub fn dp_to_pdp_curve(epsilon: f64, delta: f64, grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    grid.iter()
        .map(|&dp| dp_to_pdp(epsilon, delta, dp).map(|e| (dp, e)))
        .collect()
}

/// Inverse of [`dp_to_pdp`] in `eps`: the largest `(eps, delta)` level whose
/// pointwise bound at confidence `delta_prime` is `eps_prime`.
///
/// `eps = ln(((delta_prime - delta) * e^eps' - delta) / delta_prime)`.
/// Errors if the argument of the logarithm is not positive; a result `<= 0`
/// means no positive budget attains the requested bound (callers decide
/// whether that is a domain error or an infeasibility).
pub fn dp_epsilon_from_pdp(eps_prime: f64, delta: f64, delta_prime: f64) -> Result<f64> {
    check_epsilon(eps_prime)?;
    check_delta(delta, "delta")?;
    check_confidence_delta(delta_prime)?;
    require(delta_prime > delta, || {
        format!("delta_prime ({delta_prime}) must exceed delta ({delta})")
    })?;
    if delta == 0.0 {
        return Ok(eps_prime);
    }
    let arg = ((delta_prime - delta) * eps_prime.exp() - delta) / delta_prime;
    require(arg > 0.0, || {
        format!("no (eps, {delta}) guarantee yields pointwise bound {eps_prime} at confidence {delta_prime}")
    })?;
    Ok(arg.ln())
}

/// The boosted epsilon available from a difference-bound guarantee:
/// `eps_tilde = ln(3 e^{eps/2} - 1) - ln(3 - e^{eps/2})`.
///
/// Defined for `eps < 2 ln 3`; returns `None` beyond, where the bound
/// degenerates.
pub fn epsilon_tilde(epsilon: f64) -> Option<f64> {
    if !(0.0..DIFF_BOUND_EPS_LIMIT).contains(&epsilon) {
        return None;
    }
    let s = (0.5 * epsilon).exp();
    Some((3.0 * s - 1.0).ln() - (3.0 - s).ln())
}

/// Pointwise guarantees implied by a bound on the posterior-minus-prior
/// difference at level `(eps, delta)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DiffImpliedPdp {
    /// Always available: pointwise `(eps, 2 delta)`.
    pub at_doubled_delta: (f64, f64),
    /// For `eps < 2 ln 3` only: pointwise `(eps_tilde, delta)` with
    /// `eps_tilde > eps`. `None` when the construction degenerates.
    pub at_tilde: Option<(f64, f64)>,
}

/// Pointwise guarantees implied by a difference-bound statement.
///
/// The `(eps, 2 delta)` form always holds. The `(eps_tilde, delta)` form
/// requires `eps < 2 ln 3` and is reported as unavailable, not an error,
/// beyond that threshold. Requires `2 delta < 1`.
pub fn diff_bound_to_pdp(epsilon: f64, delta: f64) -> Result<DiffImpliedPdp> {
    check_epsilon(epsilon)?;
    check_delta(delta, "delta")?;
    require(2.0 * delta < 1.0, || {
        format!("doubled delta must stay below 1, got delta = {delta}")
    })?;
    Ok(DiffImpliedPdp {
        at_doubled_delta: (epsilon, 2.0 * delta),
        at_tilde: epsilon_tilde(epsilon).map(|et| (et, delta)),
    })
}

/// Result of the optimized zCDP-to-pointwise conversion.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OptimizedConversion {
    /// The minimized pointwise bound.
    pub epsilon_prime: f64,
    /// Confidence level the bound holds at.
    pub delta_prime: f64,
    /// The intermediate `(eps, delta)` guarantee the optimum passes through.
    pub intermediate_epsilon: f64,
    pub intermediate_delta: f64,
}

/// Tightest pointwise bound at confidence `delta_prime` implied by a zCDP
/// guarantee, minimizing over the intermediate delta split:
///
/// ```text
/// eps'(rho, delta') = min over delta in (0, delta') of
///     dp_to_pdp(zcdp_to_dp(rho, delta), delta, delta')
/// ```
///
/// The objective is unimodal in `ln delta`; a golden-section search over
/// `ln delta` with bracket tolerance `1e-10` locates the optimum to well
/// below the `1e-6` contract on `eps'`.
pub fn zcdp_to_pdp_optimized(rho: f64, delta_prime: f64) -> Result<OptimizedConversion> {
    require(rho > 0.0 && rho.is_finite(), || {
        format!("rho must be positive and finite, got {rho}")
    })?;
    check_confidence_delta(delta_prime)?;
    let objective = |ln_delta: f64| {
        let delta = ln_delta.exp();
        // Both inner calls are in-domain for delta in (0, delta_prime).
        let eps = rho + 2.0 * (rho * (1.0 / delta).ln()).sqrt();
        (delta_prime * eps.exp() + delta).ln() - (delta_prime - delta).ln()
    };
    let lo = MIN_INTERMEDIATE_DELTA.ln();
    // Keep a sliver of slack so delta_prime - delta stays positive.
    let hi = delta_prime.ln() - 1e-9;
    let (ln_delta_star, eps_prime) = golden_section_min(objective, lo, hi, 1e-10);
    let delta_star = ln_delta_star.exp();
    Ok(OptimizedConversion {
        epsilon_prime: eps_prime,
        delta_prime,
        intermediate_epsilon: rho + 2.0 * (rho * (1.0 / delta_star).ln()).sqrt(),
        intermediate_delta: delta_star,
    })
}
