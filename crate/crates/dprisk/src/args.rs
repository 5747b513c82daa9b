//! Command-line argument definitions.

use clap::{Args, Parser, Subcommand, ValueEnum};
use dp_risk::bounds::Criterion;
use dp_risk::composition::Method;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "dprisk",
    version,
    about = "Privacy guarantees in, disclosure risk bounds out",
    propagate_version = true
)]
pub struct Cli {
    /// Emit a machine-readable JSON envelope instead of the default output.
    #[arg(long, global = true)]
    pub json: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Risk intervals implied by a guarantee, optionally at a prior.
    Bounds(BoundsArgs),
    /// Convert between guarantee families.
    Convert(ConvertArgs),
    /// Compose repeated releases under a named method.
    Compose(ComposeArgs),
    /// Risk-versus-release-count series (CSV by default).
    Curve(CurveArgs),
    /// Invert risk caps into a privacy budget and per-release schedule.
    Plan(PlanArgs),
    /// Run enumeration oracles on a finite mechanism pair.
    Mech(MechArgs),
    /// Worst-case disclosure report over a prior grid.
    Report(ReportArgs),
}

#[derive(Args)]
pub struct BoundsArgs {
    /// Guarantee epsilon.
    #[arg(long)]
    pub epsilon: f64,
    /// Guarantee delta.
    #[arg(long, default_value_t = 0.0)]
    pub delta: f64,
    /// Confidence mass conceded by the pointwise bound.
    #[arg(long = "delta-prime")]
    pub delta_prime: f64,
    /// Adversary prior; enables the posterior interval and worst-case row.
    #[arg(long)]
    pub prior: Option<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    /// (epsilon, delta) differential privacy.
    Dp,
    /// Pointwise guarantee on the privacy loss.
    Pdp,
    /// Zero-concentrated differential privacy.
    Zcdp,
    /// Posterior-difference bound.
    Diff,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Dp => "dp",
            Family::Pdp => "pdp",
            Family::Zcdp => "zcdp",
            Family::Diff => "diff",
        }
    }
}

#[derive(Args)]
pub struct ConvertArgs {
    /// Source guarantee family.
    #[arg(long, value_enum)]
    pub from: Family,
    /// Target guarantee family.
    #[arg(long, value_enum)]
    pub to: Family,
    /// Source epsilon (dp, pdp, diff).
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Source delta (dp, pdp, diff) or intermediate delta (zcdp to dp).
    #[arg(long)]
    pub delta: Option<f64>,
    /// Source rho (zcdp).
    #[arg(long)]
    pub rho: Option<f64>,
    /// Confidence mass for a pointwise target.
    #[arg(long = "delta-prime")]
    pub delta_prime: Option<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Basic,
    Advanced,
    Optimal,
    Zcdp,
}

impl From<MethodArg> for Method {
    fn from(value: MethodArg) -> Method {
        match value {
            MethodArg::Basic => Method::Basic,
            MethodArg::Advanced => Method::Advanced,
            MethodArg::Optimal => Method::Optimal,
            MethodArg::Zcdp => Method::Zcdp,
        }
    }
}

impl MethodArg {
    pub fn name(self) -> &'static str {
        match self {
            MethodArg::Basic => "basic",
            MethodArg::Advanced => "advanced",
            MethodArg::Optimal => "optimal",
            MethodArg::Zcdp => "zcdp",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CriterionArg {
    PosteriorUpper,
    RatioUpper,
    DiffMagnitude,
}

impl From<CriterionArg> for Criterion {
    fn from(value: CriterionArg) -> Criterion {
        match value {
            CriterionArg::PosteriorUpper => Criterion::PosteriorUpper,
            CriterionArg::RatioUpper => Criterion::RatioUpper,
            CriterionArg::DiffMagnitude => Criterion::DiffMagnitude,
        }
    }
}

impl CriterionArg {
    pub fn name(self) -> &'static str {
        match self {
            CriterionArg::PosteriorUpper => "posterior-upper",
            CriterionArg::RatioUpper => "ratio-upper",
            CriterionArg::DiffMagnitude => "diff-magnitude",
        }
    }
}

#[derive(Args)]
pub struct ComposeArgs {
    /// Composition method.
    #[arg(long, value_enum)]
    pub method: MethodArg,
    /// Homogeneous release count; pairs with --eps-per or --rho-per.
    #[arg(short = 'k', long)]
    pub releases: Option<u32>,
    /// Per-release epsilon for homogeneous composition.
    #[arg(long = "eps-per")]
    pub eps_per: Option<f64>,
    /// Per-release delta for homogeneous composition.
    #[arg(long = "delta-per", default_value_t = 0.0)]
    pub delta_per: f64,
    /// Per-release rho for homogeneous zCDP composition.
    #[arg(long = "rho-per")]
    pub rho_per: Option<f64>,
    /// Heterogeneous per-release epsilons (repeat the flag).
    #[arg(long = "eps")]
    pub eps: Vec<f64>,
    /// Heterogeneous per-release deltas (repeat the flag; defaults to zero).
    #[arg(long = "delta")]
    pub delta: Vec<f64>,
    /// Heterogeneous per-release rhos (repeat the flag).
    #[arg(long = "rho")]
    pub rho: Vec<f64>,
    /// Total delta the advanced bound may spend.
    #[arg(long = "total-delta")]
    pub total_delta: Option<f64>,
    /// Delta target selecting the optimal-composition frontier point.
    #[arg(long = "target-delta")]
    pub target_delta: Option<f64>,
}

#[derive(Args)]
pub struct CurveArgs {
    /// Composition method.
    #[arg(long, value_enum)]
    pub method: MethodArg,
    /// Per-release epsilon (basic, advanced, optimal).
    #[arg(long = "eps-per")]
    pub eps_per: Option<f64>,
    /// Per-release delta (basic, advanced, optimal).
    #[arg(long = "delta-per", default_value_t = 0.0)]
    pub delta_per: f64,
    /// Per-release rho (zcdp).
    #[arg(long = "rho-per")]
    pub rho_per: Option<f64>,
    /// Largest release count on the curve.
    #[arg(long = "k-max")]
    pub k_max: u32,
    /// Adversary prior (required by the posterior criterion).
    #[arg(long)]
    pub prior: Option<f64>,
    /// Confidence mass conceded by the pointwise conversion.
    #[arg(long = "delta-prime")]
    pub delta_prime: f64,
    /// Risk criterion evaluated at each release count.
    #[arg(long, value_enum)]
    pub criterion: CriterionArg,
    /// Report the first release count whose criterion exceeds this value.
    #[arg(long)]
    pub threshold: Option<f64>,
}

#[derive(Args)]
pub struct PlanArgs {
    /// Cap on the adversary's posterior (requires --prior).
    #[arg(long = "max-posterior")]
    pub max_posterior: Option<f64>,
    /// Cap on the posterior-to-prior ratio.
    #[arg(long = "max-ratio")]
    pub max_ratio: Option<f64>,
    /// Cap on the posterior-minus-prior magnitude.
    #[arg(long = "max-diff")]
    pub max_diff: Option<f64>,
    /// Adversary prior for the posterior cap.
    #[arg(long)]
    pub prior: Option<f64>,
    /// Confidence mass conceded by each cap.
    #[arg(long = "delta-prime")]
    pub delta_prime: f64,
    /// Number of planned releases.
    #[arg(short = 'k', long)]
    pub releases: u32,
    /// Delta granted to each release.
    #[arg(long = "per-release-delta")]
    pub per_release_delta: f64,
    /// Total delta budget across the schedule.
    #[arg(long = "total-delta")]
    pub total_delta: f64,
    /// Composition method the schedule will use.
    #[arg(long, value_enum)]
    pub method: MethodArg,
}

#[derive(Args)]
#[command(group(
    clap::ArgGroup::new("source")
        .required(true)
        .args(["pair_file", "rr", "counterexample"])
))]
pub struct MechArgs {
    /// Mechanism pair from a JSON file
    /// {"outcomes": [...], "prob_with": [...], "prob_without": [...]}.
    #[arg(long = "pair-file")]
    pub pair_file: Option<PathBuf>,
    /// Binary randomized response at this epsilon.
    #[arg(long)]
    pub rr: Option<f64>,
    /// Pair separating the difference bound from the pointwise bound.
    #[arg(long, num_args = 2, value_names = ["EPS", "DELTA"])]
    pub counterexample: Option<Vec<f64>>,

    #[command(subcommand)]
    pub op: MechOp,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BandArg {
    Posterior,
    Ratio,
    Diff,
    All,
}

#[derive(Subcommand)]
pub enum MechOp {
    /// Smallest delta making the pair (epsilon, delta) private.
    TightDelta {
        #[arg(long)]
        epsilon: f64,
    },
    /// Whether the loss stays inside [-epsilon, epsilon] with mass
    /// at least 1 - delta in both worlds.
    PdpCheck {
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        delta: f64,
    },
    /// Probability mass escaping a risk band at a prior.
    Violation {
        #[arg(long)]
        prior: f64,
        #[arg(long = "eps-prime")]
        eps_prime: f64,
        #[arg(long = "delta-prime")]
        delta_prime: f64,
        #[arg(long, value_enum, default_value = "all")]
        band: BandArg,
    },
}

#[derive(Args)]
pub struct ReportArgs {
    /// Guarantee epsilon.
    #[arg(long)]
    pub epsilon: f64,
    /// Guarantee delta.
    #[arg(long, default_value_t = 0.0)]
    pub delta: f64,
    /// Confidence mass conceded by the pointwise bound.
    #[arg(long = "delta-prime")]
    pub delta_prime: f64,
}
