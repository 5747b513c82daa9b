//! Exact evaluation of finite mechanism pairs: the ground truth every
//! closed-form bound in this crate can be checked against.
//!
//! A [`MechanismPair`] is one mechanism observed on two neighboring inputs:
//! a finite outcome set with one probability vector per world. From it we
//! derive the privacy loss distribution (the log likelihood ratio under
//! either world, with `+inf`/`-inf` atoms where supports differ), the
//! adversary's posterior distribution, tight delta curves, and pointwise
//! guarantee checks.
//!
//! Interval membership uses the crate boundary convention: a mass sitting
//! within [`BOUNDARY_TOLERANCE`](crate::BOUNDARY_TOLERANCE) of an endpoint
//! counts as inside. Constructions that are tight in exact arithmetic (the
//! difference-band counterexample below places outcomes exactly on the band
//! boundary) evaluate correctly in floats under this convention.

use serde::{Deserialize, Serialize};

use crate::bounds::ProbabilityInterval;
use crate::guarantees::epsilon_tilde;
use crate::numeric::{compensated_sum, ln_binomial, CompensatedSum};
use crate::{require, Error, Result, BOUNDARY_TOLERANCE};

/// Masses of each world must sum to one within this.
const MASS_TOLERANCE: f64 = 1e-12;

/// Probability vectors this close are treated as identical when detecting
/// the homogeneous collapse in [`compose_pairs`].
const COLLAPSE_TOLERANCE: f64 = 1e-15;

/// Cartesian products beyond this many outcomes are refused.
const MAX_PRODUCT_OUTCOMES: usize = 1_000_000;

/// Which of the two neighboring inputs the mechanism ran on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum World {
    With,
    Without,
}

/// A finite mechanism observed on two neighboring inputs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MechanismPair {
    outcomes: Vec<String>,
    prob_with: Vec<f64>,
    prob_without: Vec<f64>,
}

#[derive(Deserialize)]
struct MechanismPairData {
    outcomes: Vec<String>,
    prob_with: Vec<f64>,
    prob_without: Vec<f64>,
}

impl<'de> Deserialize<'de> for MechanismPair {
    fn deserialize<D>(deserializer: D) -> std::result::Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        let raw = MechanismPairData::deserialize(deserializer)?;
        MechanismPair::new(raw.outcomes, raw.prob_with, raw.prob_without)
            .map_err(serde::de::Error::custom)
    }
}

impl MechanismPair {
    /// Validates and builds a pair: equal-length nonempty vectors, unique
    /// outcome labels, finite nonnegative masses, each world summing to one
    /// within `1e-12`. Masses are taken as given, never renormalized.
    pub fn new(outcomes: Vec<String>, prob_with: Vec<f64>, prob_without: Vec<f64>) -> Result<Self> {
        require(!outcomes.is_empty(), || {
            "a mechanism pair needs at least one outcome".into()
        })?;
        require(
            outcomes.len() == prob_with.len() && outcomes.len() == prob_without.len(),
            || {
                format!(
                    "outcome and probability lengths differ: {} labels, {} with, {} without",
                    outcomes.len(),
                    prob_with.len(),
                    prob_without.len()
                )
            },
        )?;
        {
            let mut seen = std::collections::HashSet::with_capacity(outcomes.len());
            for label in &outcomes {
                require(seen.insert(label.as_str()), || {
                    format!("duplicate outcome label {label:?}")
                })?;
            }
        }
        for (name, probs) in [("prob_with", &prob_with), ("prob_without", &prob_without)] {
            for &p in probs.iter() {
                require(p.is_finite() && p >= 0.0, || {
                    format!("{name} entries must be finite and nonnegative, got {p}")
                })?;
            }
            let total = compensated_sum(probs.iter().copied());
            require((total - 1.0).abs() <= MASS_TOLERANCE, || {
                format!("{name} sums to {total}, not 1 within {MASS_TOLERANCE}")
            })?;
        }
        Ok(MechanismPair {
            outcomes,
            prob_with,
            prob_without,
        })
    }

    pub fn outcomes(&self) -> &[String] {
        &self.outcomes
    }

    pub fn prob_with(&self) -> &[f64] {
        &self.prob_with
    }

    pub fn prob_without(&self) -> &[f64] {
        &self.prob_without
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    fn world_probs(&self, world: World) -> (&[f64], &[f64]) {
        match world {
            World::With => (&self.prob_with, &self.prob_without),
            World::Without => (&self.prob_without, &self.prob_with),
        }
    }
}

/// One atom of the privacy loss distribution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LossAtom {
    /// Log likelihood ratio of the sampled world against the other; may be
    /// `+inf` where the other world's support ends.
    pub loss: f64,
    pub mass: f64,
}

/// The privacy loss distribution of one world of a pair.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LossDistribution {
    pub world: World,
    pub atoms: Vec<LossAtom>,
}

/// Privacy loss distribution: for each outcome with positive mass in the
/// sampled world, the loss `ln(p_world(y) / p_other(y))` carrying that mass.
pub fn plrv(pair: &MechanismPair, world: World) -> LossDistribution {
    let (own, other) = pair.world_probs(world);
    let atoms = own
        .iter()
        .zip(other)
        .filter(|(&p, _)| p > 0.0)
        .map(|(&p, &q)| LossAtom {
            loss: (p / q).ln(),
            mass: p,
        })
        .collect();
    LossDistribution { world, atoms }
}

/// One atom of the adversary's posterior distribution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PosteriorAtom {
    pub posterior: f64,
    pub mass: f64,
}

fn check_prior(prior: f64) -> Result<()> {
    require((0.0..=1.0).contains(&prior), || {
        format!("prior must lie in [0, 1], got {prior}")
    })
}

/// Posterior membership probability per outcome, derived by transforming
/// the privacy loss distribution: under the sampled world's loss `z`, the
/// posterior at prior `p` is `p / (p + (1-p) e^{-z})` when sampling the
/// with-world and `p / (p + (1-p) e^{z})` when sampling the without-world.
pub fn posterior_distribution(
    pair: &MechanismPair,
    prior: f64,
    world: World,
) -> Result<Vec<PosteriorAtom>> {
    check_prior(prior)?;
    let loss = plrv(pair, world);
    Ok(loss
        .atoms
        .iter()
        .map(|atom| {
            let posterior = if prior == 0.0 {
                0.0
            } else if prior == 1.0 {
                1.0
            } else {
                let weight = match world {
                    World::With => (-atom.loss).exp(),
                    World::Without => atom.loss.exp(),
                };
                // weight = p_without(y) / p_with(y); +inf collapses to 0.
                prior / (prior + (1.0 - prior) * weight)
            };
            PosteriorAtom {
                posterior,
                mass: atom.mass,
            }
        })
        .collect())
}

/// Posterior membership probability per outcome by direct Bayes evaluation,
/// independent of the loss distribution; cross-checks
/// [`posterior_distribution`].
pub fn posterior_distribution_direct(
    pair: &MechanismPair,
    prior: f64,
    world: World,
) -> Result<Vec<PosteriorAtom>> {
    check_prior(prior)?;
    let (own, _) = pair.world_probs(world);
    Ok(own
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0)
        .map(|(i, &p)| {
            let joint_with = prior * pair.prob_with[i];
            let joint_without = (1.0 - prior) * pair.prob_without[i];
            PosteriorAtom {
                posterior: joint_with / (joint_with + joint_without),
                mass: p,
            }
        })
        .collect())
}

/// Probability, under the sampled world, that the posterior falls outside
/// the interval. Boundary masses within the crate tolerance count as inside.
pub fn violation_probability(
    pair: &MechanismPair,
    prior: f64,
    interval: &ProbabilityInterval,
    world: World,
) -> Result<f64> {
    let atoms = posterior_distribution(pair, prior, world)?;
    let mut mass = CompensatedSum::default();
    for atom in atoms {
        if atom.posterior < interval.lower - BOUNDARY_TOLERANCE
            || atom.posterior > interval.upper + BOUNDARY_TOLERANCE
        {
            mass.add(atom.mass);
        }
    }
    Ok(mass.total())
}

fn check_eps(eps: f64) -> Result<()> {
    require(eps >= 0.0 && eps.is_finite(), || {
        format!("epsilon must be nonnegative and finite, got {eps}")
    })
}

/// Expectation form of the tight delta for one neighbor order:
/// `sum_y max(0, p(y) - e^eps q(y))`.
fn tight_delta_expectation(p: &[f64], q: &[f64], eps: f64) -> f64 {
    let scale = eps.exp();
    let mut acc = CompensatedSum::default();
    for (&pw, &qw) in p.iter().zip(q) {
        let excess = pw - scale * qw;
        if excess > 0.0 {
            acc.add(excess);
        }
    }
    acc.total()
}

/// Tail form of the tight delta for one neighbor order:
/// `P[Z > eps] - e^eps Q[Z > eps]` with `Z = ln(p/q)` over the p-support.
fn tight_delta_tail(p: &[f64], q: &[f64], eps: f64) -> f64 {
    let mut p_tail = CompensatedSum::default();
    let mut q_tail = CompensatedSum::default();
    for (&pw, &qw) in p.iter().zip(q) {
        if pw > 0.0 && (pw / qw).ln() > eps {
            p_tail.add(pw);
            q_tail.add(qw);
        }
    }
    p_tail.total() - eps.exp() * q_tail.total()
}

/// The smallest delta at which the pair satisfies `(eps, delta)` DP:
/// `max` over both neighbor orders of `sum_y max(0, p(y) - e^eps q(y))`.
pub fn tight_delta(pair: &MechanismPair, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    let forward = tight_delta_expectation(&pair.prob_with, &pair.prob_without, eps);
    let reverse = tight_delta_expectation(&pair.prob_without, &pair.prob_with, eps);
    Ok(forward.max(reverse))
}

/// Both evaluation forms of the tight delta (expectation form, tail form),
/// each maximized over neighbor orders. They agree in exact arithmetic;
/// exposing both lets tests pin their float-level agreement.
pub fn tight_delta_forms(pair: &MechanismPair, eps: f64) -> Result<(f64, f64)> {
    check_eps(eps)?;
    let expectation = tight_delta_expectation(&pair.prob_with, &pair.prob_without, eps).max(
        tight_delta_expectation(&pair.prob_without, &pair.prob_with, eps),
    );
    let tail = tight_delta_tail(&pair.prob_with, &pair.prob_without, eps).max(tight_delta_tail(
        &pair.prob_without,
        &pair.prob_with,
        eps,
    ));
    Ok((expectation, tail))
}

/// Whether the pair satisfies the pointwise guarantee `(eps, delta)`: in
/// both worlds, the loss mass outside `[-eps, eps]` (boundary tolerance
/// applied) is at most `delta`.
pub fn pdp_holds(pair: &MechanismPair, eps: f64, delta: f64) -> Result<bool> {
    check_eps(eps)?;
    require((0.0..=1.0).contains(&delta), || {
        format!("delta must lie in [0, 1], got {delta}")
    })?;
    for world in [World::With, World::Without] {
        let loss = plrv(pair, world);
        let mut tail = CompensatedSum::default();
        for atom in loss.atoms {
            if atom.loss.abs() > eps + BOUNDARY_TOLERANCE {
                tail.add(atom.mass);
            }
        }
        if tail.total() > delta + BOUNDARY_TOLERANCE {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Binary randomized response at level `eps`: answers truthfully with
/// probability `e^eps / (1 + e^eps)`. The canonical pair with loss exactly
/// `+-eps` on its two outcomes.
pub fn randomized_response(eps: f64) -> Result<MechanismPair> {
    check_eps(eps)?;
    let em = (-eps).exp();
    let truthful = 1.0 / (1.0 + em);
    let flipped = em / (1.0 + em);
    MechanismPair::new(
        vec!["yes".into(), "no".into()],
        vec![truthful, flipped],
        vec![flipped, truthful],
    )
}

/// The construction separating difference-bound guarantees from pointwise
/// ones: with probability `delta (1 + e^{-eps_tilde})` it answers like
/// randomized response at `eps_tilde`, otherwise it reports nothing.
///
/// The pair satisfies the difference band of `(eps, delta)` (each informative
/// outcome moves the posterior exactly to the band edge at prior one half)
/// but its loss exceeds `eps` with probability above `delta`, so it fails
/// the pointwise guarantee at `(eps, delta)` while satisfying it at
/// `(eps, 2 delta)` and at `(eps_tilde, delta)`.
pub fn counterexample_diff_vs_pointwise(eps: f64, delta: f64) -> Result<MechanismPair> {
    require(delta > 0.0 && delta < 0.5, || {
        format!("delta must lie in (0, 0.5), got {delta}")
    })?;
    require(eps > 0.0, || format!("epsilon must be positive, got {eps}"))?;
    let tilde = epsilon_tilde(eps).ok_or_else(|| {
        Error::domain(format!(
            "the construction needs eps below 2 ln 3, got {eps}"
        ))
    })?;
    let em = (-tilde).exp();
    let yes = delta;
    let no = delta * em;
    let informative = yes + no;
    require(informative <= 1.0, || {
        format!("signal mass delta (1 + e^-eps_tilde) = {informative} exceeds 1")
    })?;
    let nothing = 1.0 - informative;
    MechanismPair::new(
        vec!["yes".into(), "no".into(), "nothing".into()],
        vec![yes, no, nothing],
        vec![no, yes, nothing],
    )
}

fn is_swap_symmetric_binary(pair: &MechanismPair) -> bool {
    pair.len() == 2
        && (pair.prob_with[0] - pair.prob_without[1]).abs() <= COLLAPSE_TOLERANCE
        && (pair.prob_with[1] - pair.prob_without[0]).abs() <= COLLAPSE_TOLERANCE
}

fn pairs_identical(a: &MechanismPair, b: &MechanismPair) -> bool {
    a.len() == b.len()
        && a.outcomes == b.outcomes
        && a.prob_with
            .iter()
            .zip(&b.prob_with)
            .all(|(x, y)| (x - y).abs() <= COLLAPSE_TOLERANCE)
        && a.prob_without
            .iter()
            .zip(&b.prob_without)
            .all(|(x, y)| (x - y).abs() <= COLLAPSE_TOLERANCE)
}

/// Runs `k` identical copies of a swap-symmetric binary pair, collapsed by
/// the sufficient statistic (count of first-outcome coordinates).
fn compose_homogeneous_binary(pair: &MechanismPair, k: u32) -> Result<MechanismPair> {
    let q = pair.prob_with[0];
    let r = pair.prob_with[1];
    let degenerate = q == 0.0 || r == 0.0;
    let (ln_q, ln_r) = ((q).ln(), (r).ln());
    let mut outcomes = Vec::with_capacity(k as usize + 1);
    let mut with = Vec::with_capacity(k as usize + 1);
    let mut without = Vec::with_capacity(k as usize + 1);
    for count in (0..=k).rev() {
        let a = f64::from(count);
        let b = f64::from(k - count);
        let (mass_with, mass_without) = if degenerate {
            // 0^0 = 1 under powi; the log path would produce 0 * -inf.
            let binom = ln_binomial(u64::from(k), u64::from(count)).exp();
            (
                binom * q.powi(count as i32) * r.powi((k - count) as i32),
                binom * r.powi(count as i32) * q.powi((k - count) as i32),
            )
        } else {
            let ln_binom = ln_binomial(u64::from(k), u64::from(count));
            (
                (ln_binom + a * ln_q + b * ln_r).exp(),
                (ln_binom + a * ln_r + b * ln_q).exp(),
            )
        };
        outcomes.push(count.to_string());
        with.push(mass_with);
        without.push(mass_without);
    }
    MechanismPair::new(outcomes, with, without)
}

/// Product mechanism of independent runs, one per input pair.
///
/// Identical swap-symmetric binary pairs (randomized response and its
/// relatives) collapse to `k + 1` outcomes keyed by the count of
/// first-outcome coordinates; anything else takes the cartesian product,
/// refused beyond one million outcomes.
pub fn compose_pairs(pairs: &[MechanismPair]) -> Result<MechanismPair> {
    require(!pairs.is_empty(), || "no mechanism pairs to compose".into())?;
    if pairs.len() == 1 {
        return Ok(pairs[0].clone());
    }
    let first = &pairs[0];
    if is_swap_symmetric_binary(first) && pairs.iter().all(|p| pairs_identical(first, p)) {
        return compose_homogeneous_binary(first, pairs.len() as u32);
    }

    let total: usize = pairs
        .iter()
        .try_fold(1usize, |acc, p| {
            acc.checked_mul(p.len())
                .filter(|&t| t <= MAX_PRODUCT_OUTCOMES)
        })
        .ok_or_else(|| {
            Error::domain(format!(
                "cartesian product exceeds {MAX_PRODUCT_OUTCOMES} outcomes; \
                 only identical binary swap-symmetric pairs collapse"
            ))
        })?;
    let mut outcomes = vec![String::new()];
    let mut with = vec![1.0f64];
    let mut without = vec![1.0f64];
    for pair in pairs {
        let mut next_outcomes = Vec::with_capacity(outcomes.len() * pair.len());
        let mut next_with = Vec::with_capacity(outcomes.len() * pair.len());
        let mut next_without = Vec::with_capacity(outcomes.len() * pair.len());
        for (i, label) in outcomes.iter().enumerate() {
            for (j, part) in pair.outcomes.iter().enumerate() {
                next_outcomes.push(if label.is_empty() {
                    part.clone()
                } else {
                    format!("{label}|{part}")
                });
                next_with.push(with[i] * pair.prob_with[j]);
                next_without.push(without[i] * pair.prob_without[j]);
            }
        }
        outcomes = next_outcomes;
        with = next_with;
        without = next_without;
    }
    debug_assert_eq!(outcomes.len(), total);
    MechanismPair::new(outcomes, with, without)
}
