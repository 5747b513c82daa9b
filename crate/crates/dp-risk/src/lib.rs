//! Translate differential privacy guarantees into bounds on what an adversary
//! can learn about one person's record, and plan privacy budgets backwards
//! from an acceptable disclosure risk.
//!
//! The crate is organized around one pipeline:
//!
//! 1. [`guarantees`] converts between guarantee families (pure DP, approximate
//!    DP, zero-concentrated DP) and the probabilistic pointwise form that
//!    supports direct risk statements: with probability at least `1 - delta'`
//!    over the released output, the privacy loss lies in `[-eps', eps']`.
//! 2. [`bounds`] turns a pointwise loss bound `eps'` into bounds on posterior
//!    membership probability, posterior-to-prior ratio, and posterior minus
//!    prior, each holding with the accompanying confidence.
//! 3. [`composition`] accumulates per-release guarantees across `k` releases
//!    (basic, advanced, optimal homogeneous, zCDP) and produces risk-versus-k
//!    curves under a fixed confidence budget.
//! 4. [`mechanisms`] evaluates finite mechanism pairs exactly (privacy loss
//!    distribution, posterior distribution, tight delta curves) so every
//!    closed-form bound above can be checked against ground truth.
//! 5. [`planner`] inverts the pipeline: from a risk tolerance to the largest
//!    admissible total budget, and from a release schedule to a per-release
//!    budget.
//!
//! Conventions used throughout: logarithms are natural, priors and deltas are
//! probabilities in `[0, 1]`, and `eps` values are nonnegative finite floats
//! unless a function documents otherwise. Functions return [`Error::Domain`]
//! for inputs outside their stated domain and [`Error::Infeasible`] when a
//! requested target cannot be met by any parameter choice; they do not clamp.

pub mod bounds;
pub mod composition;
pub mod guarantees;
pub mod mechanisms;
pub mod planner;

mod numeric;

use std::fmt;

/// Reasons a planning request cannot be satisfied, with enough context to
/// adjust the request.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct InfeasibilityReport {
    /// What was asked for and why no parameter choice can deliver it.
    pub reason: String,
    /// Name of the quantity that ran out (for example `total_delta`).
    pub binding: String,
}

impl fmt::Display for InfeasibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (binding constraint: {})", self.reason, self.binding)
    }
}

/// Crate-wide error type.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Input outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// The request is well formed but no parameter choice can satisfy it.
    #[error("infeasible request: {0}")]
    Infeasible(InfeasibilityReport),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn infeasible(reason: impl Into<String>, binding: impl Into<String>) -> Self {
        Error::Infeasible(InfeasibilityReport {
            reason: reason.into(),
            binding: binding.into(),
        })
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Absolute tolerance for boundary membership: a float that lands within
/// `1e-12` of an interval endpoint counts as inside. Exact-arithmetic
/// statements that hold with equality at a boundary stay true in floats.
pub const BOUNDARY_TOLERANCE: f64 = 1e-12;

pub(crate) fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Domain(msg()))
    }
}
