//! Accumulation of privacy guarantees across multiple releases and the
//! resulting risk-versus-release-count curves.
//!
//! Three composition rules for `(eps, delta)` guarantees:
//!
//! * basic: epsilons and deltas add;
//! * advanced: for any slack `s > 0` spent from the delta budget,
//!   `eps = sum(eps_j (e^{eps_j} - 1)) + sqrt(2 sum(eps_j^2) ln(1/s))`;
//! * optimal (homogeneous): the exact frontier. For `k` releases at
//!   `(eps0, delta0)` and any `ell <= k/2`, the composition satisfies
//!   `((k - 2 ell) eps0, 1 - (1 - delta0)^k (1 - delta_ell))` with
//!
//!   ```text
//!   delta_ell = sum_{j=0}^{ell-1} C(k,j) (e^{(k-j) eps0} - e^{(k-2 ell+j) eps0})
//!               / (1 + e^{eps0})^k
//!   ```
//!
//! plus plain parameter addition for zCDP. The frontier sum runs in log
//! space (log-gamma binomials, max-factored log-sum-exp, `expm1`/`log1p`
//! assembly) so it stays accurate out to hundreds of releases.
//!
//! [`risk_curve`] chains composition with the pointwise conversion and a
//! risk criterion, spending a fixed confidence budget `delta'` at every `k`.
//! Where the split between composition delta and conversion slack is free
//! (advanced, optimal, zCDP), each point minimizes `eps'` over that split:
//! advanced and zCDP use the same one-dimensional search contract as the
//! optimized zCDP conversion, and the optimal method minimizes over the
//! frontier index, which sweeps the same tradeoff in discrete steps.

use serde::{Deserialize, Serialize};

use crate::bounds::{criterion_value, Criterion};
use crate::guarantees::{dp_to_pdp, zcdp_to_pdp_optimized, PrivacyGuarantee};
use crate::numeric::{compensated_sum, golden_section_min, ln_binomial, log_sum_exp};
use crate::{require, Error, Result};

/// Composition rule for accumulating per-release guarantees.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Basic,
    Advanced,
    Optimal,
    Zcdp,
}

/// One point of the optimal homogeneous composition frontier.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FrontierPoint {
    pub ell: u32,
    pub epsilon: f64,
    pub delta: f64,
}

/// One point of a risk-versus-release-count curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurvePoint {
    pub k: u32,
    /// Composed `(eps, delta)` guarantee the point passes through.
    pub epsilon_total: f64,
    pub delta_total: f64,
    /// Pointwise bound at the curve's confidence budget.
    pub epsilon_prime: f64,
    /// The tracked risk criterion evaluated at `epsilon_prime`.
    pub criterion_value: f64,
}

fn check_pair(eps: f64, delta: f64) -> Result<()> {
    require(eps >= 0.0 && eps.is_finite(), || {
        format!("epsilon must be nonnegative and finite, got {eps}")
    })?;
    require((0.0..1.0).contains(&delta), || {
        format!("delta must lie in [0, 1), got {delta}")
    })
}

/// Basic composition: `(sum eps_j, sum delta_j)`.
pub fn compose_basic(guarantees: &[(f64, f64)]) -> Result<(f64, f64)> {
    require(!guarantees.is_empty(), || "no guarantees to compose".into())?;
    for &(e, d) in guarantees {
        check_pair(e, d)?;
    }
    let eps = compensated_sum(guarantees.iter().map(|g| g.0));
    let delta = compensated_sum(guarantees.iter().map(|g| g.1));
    Ok((eps, delta))
}

/// Advanced composition at total delta budget `total_delta`: the per-release
/// deltas add, and the leftover slack `total_delta - sum delta_j` buys
///
/// ```text
/// eps = sum eps_j (e^{eps_j} - 1) + sqrt(2 sum eps_j^2 ln(1 / slack))
/// ```
///
/// Requires positive slack.
pub fn compose_advanced(epsilons: &[f64], deltas: &[f64], total_delta: f64) -> Result<(f64, f64)> {
    require(!epsilons.is_empty(), || "no guarantees to compose".into())?;
    require(epsilons.len() == deltas.len(), || {
        format!(
            "epsilon and delta lists differ in length: {} vs {}",
            epsilons.len(),
            deltas.len()
        )
    })?;
    for (&e, &d) in epsilons.iter().zip(deltas) {
        check_pair(e, d)?;
    }
    require(total_delta > 0.0 && total_delta < 1.0, || {
        format!("total_delta must lie in (0, 1), got {total_delta}")
    })?;
    let sum_deltas = compensated_sum(deltas.iter().copied());
    let slack = total_delta - sum_deltas;
    require(slack > 0.0, || {
        format!(
            "total_delta {total_delta} leaves no slack above the summed per-release deltas {sum_deltas}"
        )
    })?;
    let drift = compensated_sum(epsilons.iter().map(|&e| e * e.exp_m1()));
    let variance = compensated_sum(epsilons.iter().map(|&e| e * e));
    Ok((
        drift + (2.0 * variance * (1.0 / slack).ln()).sqrt(),
        total_delta,
    ))
}

/// The frontier delta term `delta_ell` for `k` homogeneous releases at
/// `eps0`, evaluated in log space. Zero for `ell = 0`.
pub fn delta_ell(k: u32, ell: u32, eps0: f64) -> f64 {
    debug_assert!(2 * ell <= k);
    if ell == 0 || eps0 == 0.0 {
        return 0.0;
    }
    let kf = f64::from(k);
    // ln((1 + e^{eps0})^k), finite for eps0 below ~700.
    let ln_norm = kf * (1.0 + eps0.exp()).ln();
    let terms: Vec<f64> = (0..ell)
        .map(|j| {
            let a = f64::from(k - j) * eps0;
            let b = (f64::from(k) - 2.0 * f64::from(ell) + f64::from(j)) * eps0;
            // ln(e^a - e^b) = a + log1p(-e^{b-a}), with b < a guaranteed.
            ln_binomial(u64::from(k), u64::from(j)) + a + (-((b - a).exp())).ln_1p() - ln_norm
        })
        .collect();
    log_sum_exp(&terms).exp()
}

/// Total delta of the frontier point: `1 - (1 - delta0)^k (1 - delta_ell)`.
fn frontier_total_delta(k: u32, delta0: f64, d_ell: f64) -> f64 {
    let ln_keep = f64::from(k) * (-delta0).ln_1p() + (-d_ell).ln_1p();
    -ln_keep.exp_m1()
}

/// The optimal homogeneous composition frontier for `k` releases at
/// `(eps0, delta0)`: one point per `ell` in `0..=k/2`, with `epsilon`
/// strictly decreasing and `delta` nondecreasing in `ell`.
pub fn optimal_frontier(eps0: f64, delta0: f64, k: u32) -> Result<Vec<FrontierPoint>> {
    check_pair(eps0, delta0)?;
    require(k >= 1, || "release count must be at least 1".into())?;
    Ok((0..=k / 2)
        .map(|ell| {
            let d_ell = delta_ell(k, ell, eps0);
            FrontierPoint {
                ell,
                epsilon: f64::from(k - 2 * ell) * eps0,
                delta: frontier_total_delta(k, delta0, d_ell),
            }
        })
        .collect())
}

/// One frontier point: `((k - 2 ell) eps0, 1 - (1-delta0)^k (1 - delta_ell))`.
pub fn compose_optimal_homogeneous(eps0: f64, delta0: f64, k: u32, ell: u32) -> Result<(f64, f64)> {
    check_pair(eps0, delta0)?;
    require(k >= 1, || "release count must be at least 1".into())?;
    require(2 * ell <= k, || {
        format!("ell must satisfy 2 ell <= k, got ell = {ell}, k = {k}")
    })?;
    let d_ell = delta_ell(k, ell, eps0);
    Ok((
        f64::from(k - 2 * ell) * eps0,
        frontier_total_delta(k, delta0, d_ell),
    ))
}

/// The frontier point with minimal `epsilon` among those with
/// `delta <= target_delta`; ties break toward smaller `ell`. `None` when no
/// point qualifies.
pub fn frontier_select(frontier: &[FrontierPoint], target_delta: f64) -> Option<&FrontierPoint> {
    let mut best: Option<&FrontierPoint> = None;
    for point in frontier {
        if point.delta <= target_delta && best.map_or(true, |b| point.epsilon < b.epsilon) {
            best = Some(point);
        }
    }
    best
}

/// zCDP composition: parameters add.
pub fn compose_zcdp(rhos: &[f64]) -> Result<f64> {
    require(!rhos.is_empty(), || "no guarantees to compose".into())?;
    for &r in rhos {
        require(r > 0.0 && r.is_finite(), || {
            format!("rho must be positive and finite, got {r}")
        })?;
    }
    Ok(compensated_sum(rhos.iter().copied()))
}

/// Risk curve across `1..=k_max` releases of one repeated guarantee, under a
/// fixed confidence budget `delta_prime`.
///
/// For every `k` the composed guarantee is converted to a pointwise bound at
/// confidence `delta_prime` and the criterion evaluated there. Methods with
/// a free delta split (advanced, zCDP via its intermediate delta, optimal
/// via the frontier index) allocate the confidence budget by minimizing
/// `eps'` over that split at each `k`.
pub fn risk_curve(
    per_release: &PrivacyGuarantee,
    method: Method,
    k_max: u32,
    prior: Option<f64>,
    delta_prime: f64,
    criterion: Criterion,
) -> Result<Vec<CurvePoint>> {
    per_release.validate()?;
    require(k_max >= 1, || "k_max must be at least 1".into())?;
    require(delta_prime > 0.0 && delta_prime <= 1.0, || {
        format!("delta_prime must lie in (0, 1], got {delta_prime}")
    })?;
    if criterion == Criterion::PosteriorUpper {
        require(prior.is_some(), || {
            "posterior criterion requires a prior".into()
        })?;
    }

    let mut points = Vec::with_capacity(k_max as usize);
    for k in 1..=k_max {
        let (eps_total, delta_total, eps_prime) = match method {
            Method::Basic => {
                let (e0, d0) = per_release.as_dp()?;
                let (eps, delta) = (f64::from(k) * e0, f64::from(k) * d0);
                require(delta < delta_prime, || {
                    format!(
                        "composed delta {delta} reaches the confidence budget {delta_prime} at k = {k}"
                    )
                })?;
                (eps, delta, dp_to_pdp(eps, delta, delta_prime)?)
            }
            Method::Advanced => {
                let (e0, d0) = per_release.as_dp()?;
                let sum_deltas = f64::from(k) * d0;
                require(sum_deltas < delta_prime, || {
                    format!(
                        "per-release deltas exhaust the confidence budget {delta_prime} at k = {k}"
                    )
                })?;
                // Minimize eps' over the slack spent on composition; the
                // remainder of the budget pays for the pointwise conversion.
                // The slack enters the formula directly: reconstructing it
                // from the total would collapse to zero once it drops below
                // the total's float resolution.
                let drift = f64::from(k) * e0 * e0.exp_m1();
                let variance = f64::from(k) * e0 * e0;
                let eps_at = |ln_slack: f64| drift + (2.0 * variance * -ln_slack).sqrt();
                let objective = |ln_slack: f64| {
                    let total = sum_deltas + ln_slack.exp();
                    dp_to_pdp(eps_at(ln_slack), total, delta_prime)
                        .expect("total below the budget keeps conversion in domain")
                };
                let hi = (delta_prime - sum_deltas).ln() - 1e-9;
                let (ln_slack, eps_prime) =
                    golden_section_min(objective, (1e-300f64).ln(), hi, 1e-10);
                (eps_at(ln_slack), sum_deltas + ln_slack.exp(), eps_prime)
            }
            Method::Optimal => {
                let (e0, d0) = per_release.as_dp()?;
                let frontier = optimal_frontier(e0, d0, k)?;
                let mut best: Option<(f64, f64, f64)> = None;
                for point in &frontier {
                    if point.delta >= delta_prime {
                        continue;
                    }
                    let ep = dp_to_pdp(point.epsilon, point.delta, delta_prime)?;
                    if best.map_or(true, |(_, _, b)| ep < b) {
                        best = Some((point.epsilon, point.delta, ep));
                    }
                }
                best.ok_or_else(|| {
                    Error::domain(format!(
                        "no frontier point fits under the confidence budget {delta_prime} at k = {k}"
                    ))
                })?
            }
            Method::Zcdp => {
                let rho = match *per_release {
                    PrivacyGuarantee::Zcdp { rho } => rho,
                    _ => {
                        return Err(Error::domain(
                            "zCDP composition requires a zCDP per-release guarantee",
                        ))
                    }
                };
                let conv = zcdp_to_pdp_optimized(f64::from(k) * rho, delta_prime)?;
                (
                    conv.intermediate_epsilon,
                    conv.intermediate_delta,
                    conv.epsilon_prime,
                )
            }
        };
        points.push(CurvePoint {
            k,
            epsilon_total: eps_total,
            delta_total,
            epsilon_prime: eps_prime,
            criterion_value: criterion_value(criterion, eps_prime, prior)?,
        });
    }
    Ok(points)
}

/// First `k` whose criterion value strictly exceeds `threshold`.
pub fn first_crossing(points: &[CurvePoint], threshold: f64) -> Option<u32> {
    points
        .iter()
        .find(|p| p.criterion_value > threshold)
        .map(|p| p.k)
}
