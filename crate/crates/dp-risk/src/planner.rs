//! Backward planning: from an acceptable disclosure risk to privacy budgets.
//!
//! A [`RiskProfile`] states the risk an organization will tolerate (one
//! criterion, its threshold, the confidence it must hold at, and a prior
//! where the criterion needs one). Planning proceeds in two inversions:
//!
//! 1. [`max_total_epsilon`]: the largest total `(eps, delta)` budget whose
//!    pointwise bound still meets the profile. Exact formula inversion; a
//!    profile no positive budget can meet yields an infeasibility report,
//!    never a clamped value.
//! 2. [`per_release_epsilon`]: the largest per-release epsilon whose
//!    composition over a [`ReleaseSchedule`] stays within that total.
//!    Composition is monotone in the per-release epsilon, so a bisection
//!    with tolerance `1e-6` on `[0, eps_total]` suffices.
//!
//! [`plan`] chains both steps for a set of profiles, binding on the most
//! demanding one, and [`worst_case_report`] summarizes the risk landscape of
//! a fixed budget across priors.

use serde::Serialize;

use crate::bounds::{
    combined_worst_case, diff_interval, epsilon_for_criterion, ratio_interval,
    worst_case_priors_diff, Criterion,
};
use crate::composition::{compose_advanced, optimal_frontier, Method};
use crate::guarantees::{dp_epsilon_from_pdp, dp_to_pdp};
use crate::numeric::bisect_largest_feasible;
use crate::{require, Error, Result};

/// Bisection tolerance of the per-release solver.
const PER_RELEASE_TOLERANCE: f64 = 1e-6;

/// An acceptable-risk statement: keep `criterion` at or below `threshold`
/// with confidence `1 - delta_prime`, at prior `prior` where the criterion
/// depends on one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RiskProfile {
    pub criterion: Criterion,
    pub threshold: f64,
    pub delta_prime: f64,
    pub prior: Option<f64>,
}

impl RiskProfile {
    /// The largest pointwise bound meeting this profile (exact inversion).
    pub fn epsilon_prime(&self) -> Result<f64> {
        require(self.delta_prime > 0.0 && self.delta_prime <= 1.0, || {
            format!("delta_prime must lie in (0, 1], got {}", self.delta_prime)
        })?;
        epsilon_for_criterion(self.criterion, self.threshold, self.prior)
    }
}

/// How a total budget is spread over releases.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReleaseSchedule {
    /// Number of releases `k`.
    pub releases: u32,
    /// Delta granted to each individual release.
    pub per_release_delta: f64,
    /// Delta budget for the composed guarantee (basic and advanced methods).
    pub total_delta: f64,
    /// Composition rule the schedule will be executed under.
    pub method: Method,
}

impl ReleaseSchedule {
    fn validate(&self) -> Result<()> {
        require(self.releases >= 1, || {
            "schedule needs at least one release".into()
        })?;
        require((0.0..1.0).contains(&self.per_release_delta), || {
            format!(
                "per-release delta must lie in [0, 1), got {}",
                self.per_release_delta
            )
        })?;
        require((0.0..1.0).contains(&self.total_delta), || {
            format!("total delta must lie in [0, 1), got {}", self.total_delta)
        })?;
        require(self.method != Method::Zcdp, || {
            "the per-release solver covers basic, advanced, and optimal schedules".into()
        })
    }
}

/// Output of [`plan`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PlanReport {
    /// Pointwise bound required by the binding profile.
    pub epsilon_prime: f64,
    /// Index into the profile slice of the binding (most demanding) profile.
    pub binding_profile: usize,
    /// Largest admissible total epsilon at the schedule's total delta.
    pub epsilon_total: f64,
    /// Largest per-release epsilon under the schedule's composition method.
    pub per_release_epsilon: f64,
    /// The same budget split under pure DP with basic composition, for
    /// comparison: `epsilon_prime / releases`.
    pub pure_basic_comparison: f64,
}

/// Largest total epsilon whose pointwise bound at the profile's confidence
/// still meets the profile, given the composed guarantee carries
/// `total_delta`.
///
/// Inverts `eps' = ln(delta' e^eps + delta) - ln(delta' - delta)` for `eps`.
/// Infeasible when the inverted argument is at most 1, meaning the delta
/// terms alone exceed the risk tolerance; the report says so instead of
/// clamping to zero.
pub fn max_total_epsilon(profile: &RiskProfile, total_delta: f64) -> Result<f64> {
    require((0.0..1.0).contains(&total_delta), || {
        format!("total delta must lie in [0, 1), got {total_delta}")
    })?;
    let eps_prime = profile.epsilon_prime()?;
    let delta_prime = profile.delta_prime;
    if total_delta == 0.0 {
        return Ok(eps_prime);
    }
    require(total_delta < delta_prime, || {
        format!(
            "total delta {total_delta} must stay below the profile confidence delta_prime {delta_prime}"
        )
    })?;
    let arg = ((delta_prime - total_delta) * eps_prime.exp() - total_delta) / delta_prime;
    if arg <= 1.0 {
        return Err(Error::infeasible(
            format!(
                "no positive budget meets the risk tolerance: at total delta {total_delta} and \
                 confidence delta_prime {delta_prime} the pointwise bound {eps_prime:.6} is \
                 consumed by the delta terms alone"
            ),
            "total_delta",
        ));
    }
    // Equivalent to dp_epsilon_from_pdp, restated to classify arg <= 1 as
    // infeasibility rather than a domain error.
    debug_assert!(dp_epsilon_from_pdp(eps_prime, total_delta, delta_prime).is_ok());
    Ok(arg.ln())
}

/// Largest per-release epsilon whose composition fits within `eps_total`.
///
/// The delta side per method: basic composition must fit its summed deltas
/// inside the schedule's total delta; advanced additionally needs positive
/// slack there; the optimal frontier spends `frontier_delta_allowance`
/// (confidence budget granted to composition, normally the binding profile's
/// `delta_prime`), with the per-release deltas' floor checked against it.
pub fn per_release_epsilon(
    schedule: &ReleaseSchedule,
    eps_total: f64,
    frontier_delta_allowance: f64,
) -> Result<f64> {
    schedule.validate()?;
    require(eps_total > 0.0 && eps_total.is_finite(), || {
        format!("total epsilon must be positive and finite, got {eps_total}")
    })?;
    let k = schedule.releases;
    let kf = f64::from(k);
    let d0 = schedule.per_release_delta;
    match schedule.method {
        Method::Basic => {
            if kf * d0 > schedule.total_delta {
                return Err(Error::infeasible(
                    format!(
                        "per-release deltas alone ({} x {d0}) exceed the total delta budget {}",
                        k, schedule.total_delta
                    ),
                    "total_delta",
                ));
            }
            Ok(eps_total / kf)
        }
        Method::Advanced => {
            if kf * d0 >= schedule.total_delta {
                return Err(Error::infeasible(
                    format!(
                        "advanced composition needs slack above the per-release deltas: \
                         {} x {d0} does not fit inside the total delta budget {}",
                        k, schedule.total_delta
                    ),
                    "total_delta",
                ));
            }
            let deltas = vec![d0; k as usize];
            let feasible = |e: f64| {
                let epsilons = vec![e; k as usize];
                let (composed, _) = compose_advanced(&epsilons, &deltas, schedule.total_delta)
                    .expect("validated schedule keeps advanced composition in domain");
                composed <= eps_total
            };
            Ok(bisect_largest_feasible(
                feasible,
                0.0,
                eps_total,
                PER_RELEASE_TOLERANCE,
            ))
        }
        Method::Optimal => {
            require(
                frontier_delta_allowance > 0.0 && frontier_delta_allowance < 1.0,
                || {
                    format!(
                        "frontier delta allowance must lie in (0, 1), got {frontier_delta_allowance}"
                    )
                },
            )?;
            let floor = -(kf * (-d0).ln_1p()).exp_m1();
            if floor > frontier_delta_allowance {
                return Err(Error::infeasible(
                    format!(
                        "per-release deltas compose to {floor:.3e}, above the frontier delta \
                         allowance {frontier_delta_allowance}"
                    ),
                    "frontier_delta_allowance",
                ));
            }
            let feasible = |e: f64| {
                optimal_frontier(e, d0, k)
                    .expect("validated schedule keeps the frontier in domain")
                    .iter()
                    .any(|p| p.delta <= frontier_delta_allowance && p.epsilon <= eps_total)
            };
            Ok(bisect_largest_feasible(
                feasible,
                0.0,
                eps_total,
                PER_RELEASE_TOLERANCE,
            ))
        }
        Method::Zcdp => unreachable!("rejected by schedule validation"),
    }
}

/// Full planning pass: the binding profile's pointwise bound, the largest
/// total budget meeting every profile, and the per-release epsilon under the
/// schedule. The optimal method's frontier spends the binding profile's
/// confidence budget.
pub fn plan(profiles: &[RiskProfile], schedule: &ReleaseSchedule) -> Result<PlanReport> {
    require(!profiles.is_empty(), || {
        "at least one risk profile is required".into()
    })?;
    schedule.validate()?;
    let mut binding = 0usize;
    let mut eps_total = f64::INFINITY;
    for (i, profile) in profiles.iter().enumerate() {
        let candidate = max_total_epsilon(profile, schedule.total_delta)?;
        if candidate < eps_total {
            eps_total = candidate;
            binding = i;
        }
    }
    let eps_prime = profiles[binding].epsilon_prime()?;
    let per_release = per_release_epsilon(schedule, eps_total, profiles[binding].delta_prime)?;
    Ok(PlanReport {
        epsilon_prime: eps_prime,
        binding_profile: binding,
        epsilon_total: eps_total,
        per_release_epsilon: per_release,
        pure_basic_comparison: eps_prime / f64::from(schedule.releases),
    })
}

/// Fixed parameters a worst-case report is computed at.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReportParameters {
    pub epsilon: f64,
    pub delta: f64,
    pub delta_prime: f64,
    /// Pointwise bound implied by `(epsilon, delta)` at `delta_prime`.
    pub epsilon_prime: f64,
}

/// Prior-independent bounds implied by the pointwise guarantee.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Envelope {
    /// Posterior-to-prior ratio never exceeds this, at any prior.
    pub ratio_upper: f64,
    /// `|posterior - prior|` never exceeds this, at any prior.
    pub diff_magnitude: f64,
}

/// Priors at which the difference envelope is attained.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WorstPriors {
    pub diff_increase_p: f64,
    pub diff_decrease_p: f64,
}

/// Worst-case movement at one prior.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridRow {
    pub prior: f64,
    pub ratio_max: f64,
    pub diff_max: f64,
}

/// Location and value of a grid maximum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Extremum {
    pub prior: f64,
    pub value: f64,
}

/// Maxima of the grid columns.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridExtrema {
    pub max_ratio: Extremum,
    pub max_diff: Extremum,
}

/// Worst-case disclosure risk of a fixed `(epsilon, delta)` budget at
/// confidence `delta_prime`: per-prior worst movements over a grid, the
/// prior-free envelopes, and the analytic worst-case priors.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WorstCaseReport {
    pub parameters: ReportParameters,
    pub envelope: Envelope,
    pub worst_priors: WorstPriors,
    pub grid: Vec<GridRow>,
    pub grid_extrema: GridExtrema,
}

/// The standard report grid: priors `0.001` to `0.999` in steps of `0.001`.
pub fn default_prior_grid() -> Vec<f64> {
    (1..=999).map(|i| f64::from(i) / 1000.0).collect()
}

/// Builds a [`WorstCaseReport`] for the budget `(epsilon, delta)` at
/// confidence `delta_prime` over the given prior grid.
pub fn worst_case_report(
    epsilon: f64,
    delta: f64,
    delta_prime: f64,
    grid: &[f64],
) -> Result<WorstCaseReport> {
    require(!grid.is_empty(), || "prior grid must be nonempty".into())?;
    let eps_prime = dp_to_pdp(epsilon, delta, delta_prime)?;
    let rows: Vec<GridRow> = grid
        .iter()
        .map(|&p| {
            let wc = combined_worst_case(eps_prime, delta_prime, p)?;
            Ok(GridRow {
                prior: p,
                ratio_max: wc.ratio_max,
                diff_max: wc.diff_max,
            })
        })
        .collect::<Result<_>>()?;
    let max_ratio = rows.iter().fold(
        Extremum {
            prior: rows[0].prior,
            value: f64::NEG_INFINITY,
        },
        |best, r| {
            if r.ratio_max > best.value {
                Extremum {
                    prior: r.prior,
                    value: r.ratio_max,
                }
            } else {
                best
            }
        },
    );
    let max_diff = rows.iter().fold(
        Extremum {
            prior: rows[0].prior,
            value: f64::NEG_INFINITY,
        },
        |best, r| {
            if r.diff_max > best.value {
                Extremum {
                    prior: r.prior,
                    value: r.diff_max,
                }
            } else {
                best
            }
        },
    );
    let (inc_p, dec_p) = worst_case_priors_diff(eps_prime)?;
    Ok(WorstCaseReport {
        parameters: ReportParameters {
            epsilon,
            delta,
            delta_prime,
            epsilon_prime: eps_prime,
        },
        envelope: Envelope {
            ratio_upper: ratio_interval(eps_prime, delta_prime)?.magnitude,
            diff_magnitude: diff_interval(eps_prime, delta_prime)?.magnitude,
        },
        worst_priors: WorstPriors {
            diff_increase_p: inc_p,
            diff_decrease_p: dec_p,
        },
        grid: rows,
        grid_extrema: GridExtrema {
            max_ratio,
            max_diff,
        },
    })
}
