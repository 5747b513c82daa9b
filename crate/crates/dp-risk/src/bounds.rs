//! Bounds on adversary inference from a pointwise privacy loss guarantee.
//!
//! Under a pointwise bound `|Z| <= eps'` holding with probability `1 - delta'`,
//! an adversary with prior membership belief `p` has posterior `X` confined,
//! at that confidence, to
//!
//! ```text
//! p / (p + (1 - p) e^{eps'}) <= X <= p / (p + (1 - p) e^{-eps'})
//! ```
//!
//! Derived bands on the same event:
//!
//! * ratio: `e^{-eps'} <= X / p <= e^{eps'}`;
//! * difference: `|X - p| <= tanh(eps' / 4)`, tight at the worst-case priors
//!   `1 / (1 + e^{+-eps'/2})`.
//!
//! Every bound and its inversion (risk target back to `eps'`) lives here.
//! Evaluations use `expm1`/`log1p` forms where the naive expressions would
//! cancel, so bounds are accurate near `X = p` even for `eps'` below `1e-8`.

use serde::{Deserialize, Serialize};

use crate::{require, Error, Result};

/// Above this the naive posterior formulas overflow; limits are exact there.
const LARGE_EPS: f64 = 700.0;

/// Two-sided posterior bound holding with probability `confidence`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProbabilityInterval {
    pub lower: f64,
    pub upper: f64,
    /// Probability, over released outputs, that the posterior lies inside.
    pub confidence: f64,
}

/// Symmetric band of the given magnitude holding with probability
/// `confidence`. For ratios the band is `[1/magnitude, magnitude]`; for
/// differences it is `[-magnitude, +magnitude]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SymmetricBound {
    pub magnitude: f64,
    pub confidence: f64,
}

/// Worst-case multiplicative and additive posterior movement at one prior,
/// maximized over membership and non-membership and over direction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CombinedWorstCase {
    /// Largest relative belief change: `max(X/p, (1-X)/(1-p))` bound.
    pub ratio_max: f64,
    /// Largest absolute belief change `|X - p|`.
    pub diff_max: f64,
    pub confidence: f64,
}

/// Risk criterion a release must satisfy; the quantity bounded as a function
/// of `eps'`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    /// Upper end of the posterior interval (requires a prior).
    PosteriorUpper,
    /// Posterior-to-prior ratio bound `e^{eps'}` (prior free).
    RatioUpper,
    /// Difference-band magnitude `tanh(eps'/4)` (prior free).
    DiffMagnitude,
}

fn check_eps_prime(eps_prime: f64) -> Result<()> {
    require(eps_prime >= 0.0 && !eps_prime.is_nan(), || {
        format!("eps_prime must be nonnegative, got {eps_prime}")
    })
}

fn check_confidence(delta_prime: f64) -> Result<()> {
    // Zero is meaningful here: a surely-holding pointwise bound (for example
    // from a pure guarantee) carries confidence exactly 1.
    require((0.0..=1.0).contains(&delta_prime), || {
        format!("delta_prime must lie in [0, 1], got {delta_prime}")
    })
}

fn check_prior(prior: f64) -> Result<()> {
    require((0.0..=1.0).contains(&prior), || {
        format!("prior must lie in [0, 1], got {prior}")
    })
}

fn check_interior_prior(prior: f64) -> Result<()> {
    require(prior > 0.0 && prior < 1.0, || {
        format!("prior must lie strictly inside (0, 1), got {prior}")
    })
}

/// Posterior increase `upper - p`, evaluated without cancellation.
fn posterior_increase(eps_prime: f64, p: f64) -> f64 {
    // p(1-p)(1 - e^{-eps'}) / (p + (1-p) e^{-eps'});  stable for all eps'.
    let em = (-eps_prime).exp();
    p * (1.0 - p) * (-(-eps_prime).exp_m1()) / (p + (1.0 - p) * em)
}

/// Posterior decrease `p - lower`, evaluated without cancellation.
fn posterior_decrease(eps_prime: f64, p: f64) -> f64 {
    if eps_prime > LARGE_EPS {
        // Lower bound is numerically zero; the decrease is all of p.
        return p;
    }
    let e = eps_prime.exp();
    p * (1.0 - p) * eps_prime.exp_m1() / (p + (1.0 - p) * e)
}

/// Posterior membership interval at prior `p` under a pointwise bound
/// `eps'` holding with confidence `1 - delta'`.
pub fn posterior_interval(
    eps_prime: f64,
    delta_prime: f64,
    prior: f64,
) -> Result<ProbabilityInterval> {
    check_eps_prime(eps_prime)?;
    check_confidence(delta_prime)?;
    check_prior(prior)?;
    let p = prior;
    Ok(ProbabilityInterval {
        lower: p - posterior_decrease(eps_prime, p),
        upper: p + posterior_increase(eps_prime, p),
        confidence: 1.0 - delta_prime,
    })
}

/// Posterior-to-prior ratio band `[e^{-eps'}, e^{eps'}]`.
pub fn ratio_interval(eps_prime: f64, delta_prime: f64) -> Result<SymmetricBound> {
    check_eps_prime(eps_prime)?;
    check_confidence(delta_prime)?;
    Ok(SymmetricBound {
        magnitude: eps_prime.exp(),
        confidence: 1.0 - delta_prime,
    })
}

/// Posterior-minus-prior band `|X - p| <= tanh(eps'/4)`, valid at every
/// prior simultaneously.
pub fn diff_interval(eps_prime: f64, delta_prime: f64) -> Result<SymmetricBound> {
    check_eps_prime(eps_prime)?;
    check_confidence(delta_prime)?;
    Ok(SymmetricBound {
        magnitude: (eps_prime / 4.0).tanh(),
        confidence: 1.0 - delta_prime,
    })
}

/// Priors at which the difference band is attained: the posterior increase
/// is maximal at `1 / (1 + e^{eps'/2})` and the decrease at
/// `1 / (1 + e^{-eps'/2})`.
pub fn worst_case_priors_diff(eps_prime: f64) -> Result<(f64, f64)> {
    check_eps_prime(eps_prime)?;
    let half = 0.5 * eps_prime;
    Ok((1.0 / (1.0 + half.exp()), 1.0 / (1.0 + (-half).exp())))
}

/// Smallest `eps'` whose difference band has magnitude `diff`:
/// `eps' = 2 ln((1 + d) / (1 - d))`.
pub fn epsilon_for_diff(diff: f64) -> Result<f64> {
    require(diff > 0.0 && diff < 1.0, || {
        format!("difference bound must lie in (0, 1), got {diff}")
    })?;
    Ok(4.0 * diff.atanh())
}

/// Smallest `eps'` whose ratio band has magnitude `ratio`: `eps' = ln ratio`.
pub fn epsilon_for_ratio(ratio: f64) -> Result<f64> {
    require(ratio > 1.0 && ratio.is_finite(), || {
        format!("ratio bound must exceed 1, got {ratio}")
    })?;
    Ok(ratio.ln())
}

/// Smallest `eps'` keeping the posterior upper bound at prior `p` below
/// `threshold`: `eps' = ln(threshold (1 - p) / (p (1 - threshold)))`.
pub fn epsilon_for_posterior(threshold: f64, prior: f64) -> Result<f64> {
    check_interior_prior(prior)?;
    require(threshold > prior && threshold < 1.0, || {
        format!("posterior threshold must lie in (prior, 1), got {threshold} at prior {prior}")
    })?;
    Ok((threshold * (1.0 - prior)).ln() - (prior * (1.0 - threshold)).ln())
}

/// Worst-case ratio and difference movement at a single prior.
///
/// The ratio maximum covers both hypotheses: the membership belief ratio is
/// bounded by `1 / (p + (1-p) e^{-eps'})` and the non-membership one by
/// `1 / (p e^{-eps'} + (1-p))`; the larger applies. Requires `p` strictly
/// inside `(0, 1)`.
pub fn combined_worst_case(
    eps_prime: f64,
    delta_prime: f64,
    prior: f64,
) -> Result<CombinedWorstCase> {
    check_eps_prime(eps_prime)?;
    check_confidence(delta_prime)?;
    check_interior_prior(prior)?;
    let p = prior;
    let em = (-eps_prime).exp();
    let member_ratio = 1.0 / (p + (1.0 - p) * em);
    let nonmember_ratio = 1.0 / (p * em + (1.0 - p));
    let inc = posterior_increase(eps_prime, p);
    let dec = posterior_decrease(eps_prime, p);
    Ok(CombinedWorstCase {
        ratio_max: member_ratio.max(nonmember_ratio),
        diff_max: inc.max(dec),
        confidence: 1.0 - delta_prime,
    })
}

/// Value of a criterion at a given `eps'` (and prior, where one is needed).
pub fn criterion_value(criterion: Criterion, eps_prime: f64, prior: Option<f64>) -> Result<f64> {
    check_eps_prime(eps_prime)?;
    match criterion {
        Criterion::PosteriorUpper => {
            let p = prior.ok_or_else(|| Error::domain("posterior criterion requires a prior"))?;
            check_prior(p)?;
            Ok(p + posterior_increase(eps_prime, p))
        }
        Criterion::RatioUpper => Ok(eps_prime.exp()),
        Criterion::DiffMagnitude => Ok((eps_prime / 4.0).tanh()),
    }
}

/// Largest `eps'` whose criterion value stays at or below `threshold`
/// (exact inversion, no search).
pub fn epsilon_for_criterion(
    criterion: Criterion,
    threshold: f64,
    prior: Option<f64>,
) -> Result<f64> {
    match criterion {
        Criterion::PosteriorUpper => {
            let p = prior.ok_or_else(|| Error::domain("posterior criterion requires a prior"))?;
            epsilon_for_posterior(threshold, p)
        }
        Criterion::RatioUpper => epsilon_for_ratio(threshold),
        Criterion::DiffMagnitude => epsilon_for_diff(threshold),
    }
}

/// Round to a fixed number of decimal places (used when comparing against
/// figures quoted at limited precision).
pub fn round_to(x: f64, decimals: i32) -> f64 {
    let scale = 10f64.powi(decimals);
    (x * scale).round() / scale
}
