//! Subcommand handlers: parse-level structs in, printed output out.
//!
//! Every handler computes through the library, then emits either the
//! default human or plot-friendly form, or the JSON envelope under
//! `--json`. Handlers never read stdin.

use crate::args::{
    BandArg, BoundsArgs, Cli, Command, ComposeArgs, ConvertArgs, CurveArgs, Family, MechArgs,
    MechOp, PlanArgs, ReportArgs,
};
use crate::output::{self, Envelope};
use anyhow::{anyhow, Context, Result};
use dp_risk::bounds::{self, Criterion, ProbabilityInterval};
use dp_risk::composition;
use dp_risk::guarantees::{self, PrivacyGuarantee};
use dp_risk::mechanisms::{self, MechanismPair, World};
use dp_risk::planner::{self, ReleaseSchedule, RiskProfile};
use dp_risk::{Error as DpError, InfeasibilityReport};
use serde_json::{json, Value};

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Bounds(args) => run_bounds(cli.json, args),
        Command::Convert(args) => run_convert(cli.json, args),
        Command::Compose(args) => run_compose(cli.json, args),
        Command::Curve(args) => run_curve(cli.json, args),
        Command::Plan(args) => run_plan(cli.json, args),
        Command::Mech(args) => run_mech(cli.json, args),
        Command::Report(args) => run_report(cli.json, args),
    }
}

fn emit(
    json: bool,
    command: &'static str,
    inputs: Value,
    provenance: &'static str,
    result: Value,
    lines: Vec<String>,
) -> Result<()> {
    if json {
        Envelope::new(command, inputs, provenance, result).print()
    } else {
        let mut text = lines.join("\n");
        text.push('\n');
        output::write_stdout(&text)?;
        Ok(())
    }
}

fn require_flag(value: Option<f64>, flag: &str, what: &str) -> Result<f64> {
    value.ok_or_else(|| anyhow!("{what} requires {flag}"))
}

fn run_bounds(json: bool, a: &BoundsArgs) -> Result<()> {
    let eps_prime = guarantees::dp_to_pdp(a.epsilon, a.delta, a.delta_prime)?;
    let ratio = bounds::ratio_interval(eps_prime, a.delta_prime)?;
    let diff = bounds::diff_interval(eps_prime, a.delta_prime)?;
    let posterior = a
        .prior
        .map(|p| bounds::posterior_interval(eps_prime, a.delta_prime, p))
        .transpose()?;
    let worst = a
        .prior
        .map(|p| bounds::combined_worst_case(eps_prime, a.delta_prime, p))
        .transpose()?;

    let confidence = 1.0 - a.delta_prime;
    let mut lines = vec![
        format!("pointwise bound: eps' = {eps_prime:.6} @ confidence {confidence}"),
        format!(
            "ratio band [{:.6}, {:.6}] @ {confidence}",
            1.0 / ratio.magnitude,
            ratio.magnitude
        ),
        format!("difference band +-{:.6} @ {confidence}", diff.magnitude),
    ];
    if let Some(interval) = &posterior {
        lines.insert(
            1,
            format!(
                "posterior interval [{:.6}, {:.6}] @ {confidence}",
                interval.lower, interval.upper
            ),
        );
    }
    if let (Some(prior), Some(wc)) = (a.prior, &worst) {
        lines.push(format!(
            "worst case at prior {prior}: ratio <= {:.6}, diff <= {:.6}",
            wc.ratio_max, wc.diff_max
        ));
    }

    emit(
        json,
        "bounds",
        json!({
            "epsilon": a.epsilon,
            "delta": a.delta,
            "delta_prime": a.delta_prime,
            "prior": a.prior,
        }),
        "closed-form formula",
        json!({
            "epsilon_prime": eps_prime,
            "ratio_band": ratio,
            "difference_band": diff,
            "posterior_interval": posterior,
            "worst_case": worst,
        }),
        lines,
    )
}

fn run_convert(json: bool, a: &ConvertArgs) -> Result<()> {
    let what = format!("convert --from {} --to {}", a.from.name(), a.to.name());
    let (result, provenance, lines) = match (a.from, a.to) {
        (Family::Dp, Family::Pdp) => {
            let epsilon = require_flag(a.epsilon, "--epsilon", &what)?;
            let delta = a.delta.unwrap_or(0.0);
            let delta_prime = require_flag(a.delta_prime, "--delta-prime", &what)?;
            let eps_prime = guarantees::dp_to_pdp(epsilon, delta, delta_prime)?;
            (
                json!({ "epsilon_prime": eps_prime, "delta_prime": delta_prime }),
                "closed-form formula",
                vec![format!(
                    "pointwise bound: eps' = {eps_prime:.6} at delta' = {delta_prime}"
                )],
            )
        }
        (Family::Pdp, Family::Dp) => {
            let epsilon = require_flag(a.epsilon, "--epsilon", &what)?;
            let delta = a.delta.unwrap_or(0.0);
            let (eps, d) = guarantees::pdp_to_dp(epsilon, delta)?;
            (
                json!({ "epsilon": eps, "delta": d }),
                "closed-form formula",
                vec![format!(
                    "guarantee: eps = {eps:.6}, delta = {d} (a pointwise bound holds as stated)"
                )],
            )
        }
        (Family::Zcdp, Family::Dp) => {
            let rho = require_flag(a.rho, "--rho", &what)?;
            let delta = require_flag(a.delta, "--delta", &what)?;
            let eps = guarantees::zcdp_to_dp(rho, delta)?;
            (
                json!({ "epsilon": eps, "delta": delta }),
                "closed-form formula",
                vec![format!("guarantee: eps = {eps:.6} at delta = {delta}")],
            )
        }
        (Family::Zcdp, Family::Pdp) => {
            let rho = require_flag(a.rho, "--rho", &what)?;
            let delta_prime = require_flag(a.delta_prime, "--delta-prime", &what)?;
            let conv = guarantees::zcdp_to_pdp_optimized(rho, delta_prime)?;
            let lines = vec![format!(
                "pointwise bound: eps' = {:.6} at delta' = {} \
                 (via intermediate eps = {:.6}, delta = {:.3e})",
                conv.epsilon_prime,
                conv.delta_prime,
                conv.intermediate_epsilon,
                conv.intermediate_delta
            )];
            (serde_json::to_value(conv)?, "optimized split search", lines)
        }
        (Family::Diff, Family::Pdp) => {
            let epsilon = require_flag(a.epsilon, "--epsilon", &what)?;
            let delta = require_flag(a.delta, "--delta", &what)?;
            let implied = guarantees::diff_bound_to_pdp(epsilon, delta)?;
            let mut lines = vec![format!(
                "pointwise bound: eps' = {:.6} at delta = {} (doubled-delta form)",
                implied.at_doubled_delta.0, implied.at_doubled_delta.1
            )];
            match implied.at_tilde {
                Some((et, d)) => lines.push(format!(
                    "pointwise bound: eps' = {et:.6} at delta = {d} (inflated-epsilon form)"
                )),
                None => lines.push(
                    "inflated-epsilon form unavailable: eps is at or above 2 ln 3".to_string(),
                ),
            }
            (serde_json::to_value(implied)?, "closed-form formula", lines)
        }
        _ => {
            return Err(anyhow!(
                "unsupported conversion: {} to {}",
                a.from.name(),
                a.to.name()
            ))
        }
    };

    emit(
        json,
        "convert",
        json!({
            "from": a.from.name(),
            "to": a.to.name(),
            "epsilon": a.epsilon,
            "delta": a.delta,
            "rho": a.rho,
            "delta_prime": a.delta_prime,
        }),
        provenance,
        result,
        lines,
    )
}

fn run_compose(json: bool, a: &ComposeArgs) -> Result<()> {
    let inputs = json!({
        "method": a.method.name(),
        "releases": a.releases,
        "eps_per": a.eps_per,
        "delta_per": a.delta_per,
        "rho_per": a.rho_per,
        "eps": a.eps,
        "delta": a.delta,
        "rho": a.rho,
        "total_delta": a.total_delta,
        "target_delta": a.target_delta,
    });

    if a.method == crate::args::MethodArg::Zcdp {
        let rhos: Vec<f64> = if let Some(k) = a.releases {
            let rho = require_flag(a.rho_per, "--rho-per", "zcdp composition with -k")?;
            vec![rho; k as usize]
        } else if !a.rho.is_empty() {
            a.rho.clone()
        } else {
            return Err(anyhow!(
                "zcdp composition needs -k with --rho-per, or repeated --rho"
            ));
        };
        let rho = composition::compose_zcdp(&rhos)?;
        return emit(
            json,
            "compose",
            inputs,
            "closed-form formula",
            json!({ "rho": rho }),
            vec![format!(
                "composed guarantee: rho = {rho} over {} releases",
                rhos.len()
            )],
        );
    }

    if a.method == crate::args::MethodArg::Optimal {
        let k = a
            .releases
            .ok_or_else(|| anyhow!("optimal composition requires -k"))?;
        let eps0 = require_flag(a.eps_per, "--eps-per", "optimal composition")?;
        let target = require_flag(a.target_delta, "--target-delta", "optimal composition")?;
        let frontier = composition::optimal_frontier(eps0, a.delta_per, k)?;
        let selected = composition::frontier_select(&frontier, target).ok_or_else(|| {
            DpError::Infeasible(InfeasibilityReport {
                reason: format!(
                    "no point of the optimal frontier at k = {k}, eps0 = {eps0}, \
                     delta0 = {} keeps delta within {target}",
                    a.delta_per
                ),
                binding: "target_delta".to_string(),
            })
        })?;
        return emit(
            json,
            "compose",
            inputs,
            "frontier enumeration",
            json!({ "selected": selected, "frontier_points": frontier.len() }),
            vec![format!(
                "composed guarantee: eps = {:.6}, delta = {} (frontier index ell = {})",
                selected.epsilon, selected.delta, selected.ell
            )],
        );
    }

    let (epsilons, deltas) = if let Some(k) = a.releases {
        let eps = require_flag(a.eps_per, "--eps-per", "homogeneous composition")?;
        (vec![eps; k as usize], vec![a.delta_per; k as usize])
    } else if !a.eps.is_empty() {
        let deltas = if a.delta.is_empty() {
            vec![0.0; a.eps.len()]
        } else if a.delta.len() == a.eps.len() {
            a.delta.clone()
        } else {
            return Err(anyhow!(
                "--delta given {} times but --eps {} times",
                a.delta.len(),
                a.eps.len()
            ));
        };
        (a.eps.clone(), deltas)
    } else {
        return Err(anyhow!(
            "composition needs -k with --eps-per, or repeated --eps"
        ));
    };

    let (eps, delta, provenance): (f64, f64, &'static str) = match a.method {
        crate::args::MethodArg::Basic => {
            let pairs: Vec<(f64, f64)> = epsilons
                .iter()
                .copied()
                .zip(deltas.iter().copied())
                .collect();
            let (e, d) = composition::compose_basic(&pairs)?;
            (e, d, "closed-form formula")
        }
        crate::args::MethodArg::Advanced => {
            let total = require_flag(a.total_delta, "--total-delta", "advanced composition")?;
            let (e, d) = composition::compose_advanced(&epsilons, &deltas, total)?;
            (e, d, "closed-form bound")
        }
        _ => unreachable!("zcdp and optimal are handled above"),
    };

    emit(
        json,
        "compose",
        inputs,
        provenance,
        json!({ "epsilon": eps, "delta": delta }),
        vec![format!(
            "composed guarantee: eps = {eps:.6}, delta = {delta} ({} composition of {} releases)",
            a.method.name(),
            epsilons.len()
        )],
    )
}

fn run_curve(json: bool, a: &CurveArgs) -> Result<()> {
    let per_release = if a.method == crate::args::MethodArg::Zcdp {
        let rho = require_flag(a.rho_per, "--rho-per", "a zcdp curve")?;
        PrivacyGuarantee::Zcdp { rho }
    } else {
        let epsilon = require_flag(a.eps_per, "--eps-per", "a dp curve")?;
        if a.delta_per == 0.0 {
            PrivacyGuarantee::PureDp { epsilon }
        } else {
            PrivacyGuarantee::ApproxDp {
                epsilon,
                delta: a.delta_per,
            }
        }
    };
    let points = composition::risk_curve(
        &per_release,
        a.method.into(),
        a.k_max,
        a.prior,
        a.delta_prime,
        a.criterion.into(),
    )?;
    let crossing = a.threshold.map(|t| composition::first_crossing(&points, t));

    if json {
        let provenance = match a.method {
            crate::args::MethodArg::Basic => "closed-form formula",
            crate::args::MethodArg::Advanced | crate::args::MethodArg::Zcdp => {
                "optimized split search"
            }
            crate::args::MethodArg::Optimal => "frontier enumeration with optimized split",
        };
        return Envelope::new(
            "curve",
            json!({
                "method": a.method.name(),
                "eps_per": a.eps_per,
                "delta_per": a.delta_per,
                "rho_per": a.rho_per,
                "k_max": a.k_max,
                "prior": a.prior,
                "delta_prime": a.delta_prime,
                "criterion": a.criterion.name(),
                "threshold": a.threshold,
            }),
            provenance,
            json!({
                "points": points,
                "threshold": a.threshold,
                "first_crossing": crossing.flatten(),
            }),
        )
        .print();
    }

    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record([
        "k",
        "epsilon_total",
        "delta_total",
        "epsilon_prime",
        "criterion_value",
    ])?;
    for p in &points {
        writer.write_record([
            p.k.to_string(),
            format!("{:.16e}", p.epsilon_total),
            format!("{:.16e}", p.delta_total),
            format!("{:.16e}", p.epsilon_prime),
            format!("{:.16e}", p.criterion_value),
        ])?;
    }
    let mut body = String::from_utf8(writer.into_inner()?)?;
    if let Some(crossing) = crossing {
        match crossing {
            Some(k) => body.push_str(&format!("# first_crossing,{k}\n")),
            None => body.push_str("# first_crossing,none\n"),
        }
    }
    output::write_stdout(&body)?;
    Ok(())
}

fn run_plan(json: bool, a: &PlanArgs) -> Result<()> {
    let mut profiles = Vec::new();
    let mut labels = Vec::new();
    if let Some(threshold) = a.max_posterior {
        let prior = a
            .prior
            .ok_or_else(|| anyhow!("--max-posterior requires --prior"))?;
        profiles.push(RiskProfile {
            criterion: Criterion::PosteriorUpper,
            threshold,
            delta_prime: a.delta_prime,
            prior: Some(prior),
        });
        labels.push("max-posterior");
    }
    if let Some(threshold) = a.max_ratio {
        profiles.push(RiskProfile {
            criterion: Criterion::RatioUpper,
            threshold,
            delta_prime: a.delta_prime,
            prior: None,
        });
        labels.push("max-ratio");
    }
    if let Some(threshold) = a.max_diff {
        profiles.push(RiskProfile {
            criterion: Criterion::DiffMagnitude,
            threshold,
            delta_prime: a.delta_prime,
            prior: None,
        });
        labels.push("max-diff");
    }
    if profiles.is_empty() {
        return Err(anyhow!(
            "plan needs at least one cap: --max-posterior, --max-ratio, or --max-diff"
        ));
    }

    let schedule = ReleaseSchedule {
        releases: a.releases,
        per_release_delta: a.per_release_delta,
        total_delta: a.total_delta,
        method: a.method.into(),
    };
    let report = planner::plan(&profiles, &schedule)?;
    let binding = labels[report.binding_profile];

    let lines = vec![
        format!(
            "binding cap: {binding} <= {} (profile {} of {})",
            profiles[report.binding_profile].threshold,
            report.binding_profile + 1,
            profiles.len()
        ),
        format!(
            "pointwise budget: eps' = {:.6} at delta' = {}",
            report.epsilon_prime, a.delta_prime
        ),
        format!(
            "total budget: eps = {:.6} at total delta = {}",
            report.epsilon_total, a.total_delta
        ),
        format!(
            "per-release epsilon: {:.6} ({} composition, k = {})",
            report.per_release_epsilon,
            a.method.name(),
            a.releases
        ),
        format!(
            "pure basic comparison: {:.6} per release",
            report.pure_basic_comparison
        ),
    ];

    emit(
        json,
        "plan",
        json!({
            "max_posterior": a.max_posterior,
            "max_ratio": a.max_ratio,
            "max_diff": a.max_diff,
            "prior": a.prior,
            "delta_prime": a.delta_prime,
            "releases": a.releases,
            "per_release_delta": a.per_release_delta,
            "total_delta": a.total_delta,
            "method": a.method.name(),
        }),
        "exact inversion and bisection search",
        json!({
            "report": report,
            "binding_cap": binding,
            "profiles": profiles,
        }),
        lines,
    )
}

fn load_pair(a: &MechArgs) -> Result<(MechanismPair, Value)> {
    if let Some(path) = &a.pair_file {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading pair file {}", path.display()))?;
        let pair: MechanismPair = serde_json::from_str(&text)
            .with_context(|| format!("parsing pair file {}", path.display()))?;
        Ok((pair, json!({ "pair_file": path.display().to_string() })))
    } else if let Some(eps) = a.rr {
        Ok((
            mechanisms::randomized_response(eps)?,
            json!({ "randomized_response_epsilon": eps }),
        ))
    } else {
        let args = a
            .counterexample
            .as_ref()
            .expect("clap enforces exactly one pair source");
        let pair = mechanisms::counterexample_diff_vs_pointwise(args[0], args[1])?;
        Ok((
            pair,
            json!({ "counterexample": { "epsilon": args[0], "delta": args[1] } }),
        ))
    }
}

fn violation_entry(
    pair: &MechanismPair,
    prior: f64,
    lower: f64,
    upper: f64,
    delta_prime: f64,
) -> Result<(f64, f64, Value)> {
    let interval = ProbabilityInterval {
        lower,
        upper,
        confidence: 1.0 - delta_prime,
    };
    let with = mechanisms::violation_probability(pair, prior, &interval, World::With)?;
    let without = mechanisms::violation_probability(pair, prior, &interval, World::Without)?;
    Ok((
        with,
        without,
        json!({ "lower": lower, "upper": upper, "with": with, "without": without }),
    ))
}

fn run_mech(json: bool, a: &MechArgs) -> Result<()> {
    let (pair, source) = load_pair(a)?;

    let (op_inputs, result, lines) = match a.op {
        MechOp::TightDelta { epsilon } => {
            let (expectation, tail) = mechanisms::tight_delta_forms(&pair, epsilon)?;
            let delta = mechanisms::tight_delta(&pair, epsilon)?;
            (
                json!({ "op": "tight-delta", "epsilon": epsilon }),
                json!({
                    "epsilon": epsilon,
                    "delta": delta,
                    "forms": { "expectation": expectation, "tail": tail },
                }),
                vec![format!(
                    "tight delta at eps = {epsilon}: {delta} (forms differ by {:.3e})",
                    (expectation - tail).abs()
                )],
            )
        }
        MechOp::PdpCheck { epsilon, delta } => {
            let holds = mechanisms::pdp_holds(&pair, epsilon, delta)?;
            (
                json!({ "op": "pdp-check", "epsilon": epsilon, "delta": delta }),
                json!({ "epsilon": epsilon, "delta": delta, "holds": holds }),
                vec![format!(
                    "pointwise guarantee (eps = {epsilon}, delta = {delta}) holds: {holds}"
                )],
            )
        }
        MechOp::Violation {
            prior,
            eps_prime,
            delta_prime,
            band,
        } => {
            let mut bands = serde_json::Map::new();
            let mut lines = Vec::new();
            let wants = |b: BandArg| band == b || band == BandArg::All;
            if wants(BandArg::Posterior) {
                let interval = bounds::posterior_interval(eps_prime, delta_prime, prior)?;
                let (with, without, entry) =
                    violation_entry(&pair, prior, interval.lower, interval.upper, delta_prime)?;
                lines.push(format!(
                    "posterior band [{:.6}, {:.6}]: escape mass with = {with}, without = {without}",
                    interval.lower, interval.upper
                ));
                bands.insert("posterior".to_string(), entry);
            }
            if wants(BandArg::Ratio) {
                let magnitude = bounds::ratio_interval(eps_prime, delta_prime)?.magnitude;
                let lower = prior / magnitude;
                let upper = (prior * magnitude).min(1.0);
                let (with, without, entry) =
                    violation_entry(&pair, prior, lower, upper, delta_prime)?;
                lines.push(format!(
                    "ratio band [{lower:.6}, {upper:.6}]: escape mass with = {with}, without = {without}"
                ));
                bands.insert("ratio".to_string(), entry);
            }
            if wants(BandArg::Diff) {
                let magnitude = bounds::diff_interval(eps_prime, delta_prime)?.magnitude;
                let lower = (prior - magnitude).max(0.0);
                let upper = (prior + magnitude).min(1.0);
                let (with, without, entry) =
                    violation_entry(&pair, prior, lower, upper, delta_prime)?;
                lines.push(format!(
                    "difference band [{lower:.6}, {upper:.6}]: escape mass with = {with}, without = {without}"
                ));
                bands.insert("diff".to_string(), entry);
            }
            (
                json!({
                    "op": "violation",
                    "prior": prior,
                    "eps_prime": eps_prime,
                    "delta_prime": delta_prime,
                }),
                json!({ "prior": prior, "bands": Value::Object(bands) }),
                lines,
            )
        }
    };

    let mut inputs = json!({ "source": source, "outcomes": pair.len() });
    if let Some(map) = inputs.as_object_mut() {
        if let Some(op_map) = op_inputs.as_object() {
            for (key, value) in op_map {
                map.insert(key.clone(), value.clone());
            }
        }
    }

    emit(
        json,
        "mech",
        inputs,
        "finite outcome enumeration",
        result,
        lines,
    )
}

fn run_report(json: bool, a: &ReportArgs) -> Result<()> {
    let grid = planner::default_prior_grid();
    let report = planner::worst_case_report(a.epsilon, a.delta, a.delta_prime, &grid)?;
    if json {
        return Envelope::new(
            "report",
            json!({
                "epsilon": a.epsilon,
                "delta": a.delta,
                "delta_prime": a.delta_prime,
                "grid_points": grid.len(),
            }),
            "closed-form formula over prior grid",
            serde_json::to_value(&report)?,
        )
        .print();
    }
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    output::write_stdout(&text)?;
    Ok(())
}
