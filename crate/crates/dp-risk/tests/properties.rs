//! Contract-level property suites: the documented invariants of the
//! conversion, bound, composition, and planning APIs, checked on grids and
//! under randomized search.

use dp_risk::bounds::{
    diff_interval, epsilon_for_diff, epsilon_for_posterior, epsilon_for_ratio, posterior_interval,
    ratio_interval, worst_case_priors_diff, Criterion,
};
use dp_risk::composition::{compose_advanced, delta_ell, first_crossing, risk_curve, Method};
use dp_risk::guarantees::{
    dp_epsilon_from_pdp, dp_to_pdp, epsilon_tilde, zcdp_to_dp, zcdp_to_pdp_optimized,
    PrivacyGuarantee,
};
use dp_risk::mechanisms::{plrv, posterior_distribution, MechanismPair, World};
use dp_risk::planner::{max_total_epsilon, per_release_epsilon, ReleaseSchedule, RiskProfile};
use proptest::prelude::*;

// ------------------------------------------------------------- conversions

proptest! {
    /// With a zero guarantee delta the pointwise conversion is the identity,
    /// bit for bit, at every confidence level.
    #[test]
    fn zero_delta_conversion_is_identity(
        eps in 1e-6f64..6.0,
        delta_prime in 1e-6f64..1.0,
    ) {
        prop_assert_eq!(dp_to_pdp(eps, 0.0, delta_prime).unwrap(), eps);
    }

    /// Granting more conversion confidence (larger delta') can only shrink
    /// the pointwise epsilon; spending none of it grows the epsilon.
    #[test]
    fn conversion_strictly_decreases_in_confidence_delta(
        eps in 1e-3f64..4.0,
        delta in 1e-9f64..1e-3,
        d1 in 1e-2f64..0.5,
        d2 in 1e-2f64..0.5,
    ) {
        prop_assume!((d1 - d2).abs() > 1e-9);
        let (lo, hi) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
        let at_lo = dp_to_pdp(eps, delta, lo).unwrap();
        let at_hi = dp_to_pdp(eps, delta, hi).unwrap();
        prop_assert!(at_lo > at_hi);
    }

    /// A leakier guarantee (larger delta) converts to a strictly larger
    /// pointwise epsilon at the same confidence.
    #[test]
    fn conversion_strictly_increases_in_guarantee_delta(
        eps in 1e-3f64..4.0,
        d1 in 1e-9f64..1e-3,
        d2 in 1e-9f64..1e-3,
        delta_prime in 1e-2f64..0.5,
    ) {
        prop_assume!((d1 - d2).abs() > 1e-12);
        let (lo, hi) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
        let at_lo = dp_to_pdp(eps, lo, delta_prime).unwrap();
        let at_hi = dp_to_pdp(eps, hi, delta_prime).unwrap();
        prop_assert!(at_lo < at_hi);
    }

    /// Any positive guarantee delta costs pointwise epsilon.
    #[test]
    fn conversion_exceeds_plain_epsilon(
        eps in 1e-3f64..4.0,
        delta in 1e-12f64..1e-3,
        delta_prime in 1e-2f64..1.0,
    ) {
        prop_assert!(dp_to_pdp(eps, delta, delta_prime).unwrap() > eps);
    }

    /// The budget inversion undoes the conversion.
    #[test]
    fn conversion_round_trips_through_inverse(
        eps in 1e-3f64..4.0,
        delta in 1e-9f64..1e-3,
        delta_prime in 1e-2f64..0.5,
    ) {
        let eps_prime = dp_to_pdp(eps, delta, delta_prime).unwrap();
        let back = dp_epsilon_from_pdp(eps_prime, delta, delta_prime).unwrap();
        prop_assert!((back - eps).abs() <= 1e-10 * eps.max(1.0));
    }

    /// The widened epsilon that repairs the difference-bound gap always
    /// exceeds the original epsilon inside its domain.
    #[test]
    fn tilde_epsilon_dominates(eps in 1e-6f64..2.197) {
        let tilde = epsilon_tilde(eps).expect("inside the domain");
        prop_assert!(tilde > eps);
    }

    /// Minimizing over the intermediate delta dominates every fixed split of
    /// the confidence budget.
    #[test]
    fn optimized_zcdp_conversion_dominates_fixed_splits(
        rho in 1e-4f64..0.5,
        delta_prime in 1e-3f64..0.2,
        frac in 0.05f64..0.95,
    ) {
        let optimized = zcdp_to_pdp_optimized(rho, delta_prime).unwrap();
        let mid = frac * delta_prime;
        let eps = zcdp_to_dp(rho, mid).unwrap();
        let fixed = dp_to_pdp(eps, mid, delta_prime).unwrap();
        prop_assert!(optimized.epsilon_prime <= fixed + 1e-9);
    }

    /// Guarantees survive a JSON round trip exactly.
    #[test]
    fn guarantee_json_round_trip(
        eps in 1e-9f64..10.0,
        delta in 0.0f64..0.5,
        rho in 1e-9f64..2.0,
        pick in 0u8..4,
    ) {
        let g = match pick {
            0 => PrivacyGuarantee::PureDp { epsilon: eps },
            1 => PrivacyGuarantee::ApproxDp { epsilon: eps, delta },
            2 => PrivacyGuarantee::Pdp { epsilon: eps, delta },
            _ => PrivacyGuarantee::Zcdp { rho },
        };
        let text = serde_json::to_string(&g).unwrap();
        let back: PrivacyGuarantee = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(g, back);
    }
}

/// First-order behavior at the origin: the widened epsilon converges to the
/// plain epsilon as epsilon shrinks.
#[test]
fn tilde_epsilon_taylor_limit() {
    let tilde = epsilon_tilde(1e-4).expect("inside the domain");
    assert!(tilde > 1e-4);
    assert!((tilde - 1e-4).abs() < 1e-4);
}

// ------------------------------------------------------------- risk bounds

fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| lo * (hi / lo).powf(i as f64 / (points - 1) as f64))
        .collect()
}

/// Posterior interval endpoints move monotonically as the pointwise epsilon
/// grows: lower nonincreasing, upper nondecreasing.
#[test]
fn posterior_endpoints_monotone_in_epsilon() {
    for &prior in &[0.1, 0.27, 0.5, 0.9] {
        let mut prev: Option<(f64, f64)> = None;
        for &eps in &log_grid(1e-3, 5.0, 100) {
            let interval = posterior_interval(eps, 0.05, prior).unwrap();
            if let Some((lo, hi)) = prev {
                assert!(
                    interval.lower <= lo + 1e-15,
                    "lower rose at eps'={eps} prior={prior}"
                );
                assert!(
                    interval.upper >= hi - 1e-15,
                    "upper fell at eps'={eps} prior={prior}"
                );
            }
            prev = Some((interval.lower, interval.upper));
        }
    }
}

/// The prior-free difference band dominates the per-prior posterior shift,
/// with equality exactly at the worst-case prior.
#[test]
fn difference_band_dominates_posterior_shift() {
    for &eps in &[0.1, 0.5, 1.0, 2.0, 5.0] {
        let band = diff_interval(eps, 0.05).unwrap().magnitude;
        let (worst_increase, _) = worst_case_priors_diff(eps).unwrap();
        let mut argmax = 0.0;
        let mut best = f64::NEG_INFINITY;
        for i in 1..=999 {
            let p = f64::from(i) / 1000.0;
            let shift = posterior_interval(eps, 0.05, p).unwrap().upper - p;
            assert!(
                shift <= band + 1e-12,
                "band violated at prior {p}, eps'={eps}"
            );
            if shift > best {
                best = shift;
                argmax = p;
            }
        }
        assert!(
            (argmax - worst_increase).abs() <= 0.001 + 1e-9,
            "grid argmax {argmax} is more than one step from the worst prior {worst_increase}"
        );
        let at_worst = posterior_interval(eps, 0.05, worst_increase).unwrap().upper;
        assert!(
            (at_worst - worst_increase - band).abs() < 1e-12,
            "equality fails at the worst prior"
        );
    }
}

/// The ratio envelope is the supremum of the per-prior posterior-to-prior
/// ratio, approached as the prior goes to zero. The gap at prior p is
/// exactly p (e^eps - 1) / (1 + p (e^eps - 1)), so the 0.2 percent window
/// at p = 0.001 holds for eps' <= 1 and widens to 0.7 percent by eps' = 2.
#[test]
fn ratio_envelope_is_supremum_toward_zero_prior() {
    for &eps in &[0.1f64, 0.5, 1.0, 2.0] {
        let envelope = ratio_interval(eps, 0.05).unwrap().magnitude;
        assert!((envelope - eps.exp()).abs() < 1e-12);
        for i in 1..=999 {
            let p = f64::from(i) / 1000.0;
            let ratio = posterior_interval(eps, 0.05, p).unwrap().upper / p;
            assert!(ratio <= envelope * (1.0 + 1e-12));
        }
        let near_zero = posterior_interval(eps, 0.05, 0.001).unwrap().upper / 0.001;
        let gap = (envelope - near_zero) / envelope;
        assert!(gap >= 0.0);
        let expected_gap = 0.001 * eps.exp_m1() / (1.0 + 0.001 * eps.exp_m1());
        assert!((gap - expected_gap).abs() < 1e-9);
        if eps <= 1.0 {
            assert!(gap < 0.002, "gap {gap} at eps'={eps}");
        } else {
            assert!(gap < 0.007, "gap {gap} at eps'={eps}");
        }
    }
}

/// Difference-band inversion is the identity across the working range.
#[test]
fn diff_inversion_identity_on_grid() {
    for &eps in &log_grid(1e-3, 5.0, 101) {
        let magnitude = diff_interval(eps, 0.0).unwrap().magnitude;
        let back = epsilon_for_diff(magnitude).unwrap();
        assert!(
            (back - eps).abs() < 1e-10,
            "round trip off at eps'={eps}: {back}"
        );
    }
}

proptest! {
    /// Ratio and posterior threshold inversions round-trip.
    #[test]
    fn ratio_and_posterior_inversions_round_trip(
        eps in 1e-3f64..5.0,
        prior in 0.05f64..0.95,
    ) {
        let ratio = ratio_interval(eps, 0.0).unwrap().magnitude;
        prop_assert!((epsilon_for_ratio(ratio).unwrap() - eps).abs() < 1e-10 * eps.max(1.0));
        let upper = posterior_interval(eps, 0.0, prior).unwrap().upper;
        prop_assume!(upper < 1.0 - 1e-12);
        let back = epsilon_for_posterior(upper, prior).unwrap();
        prop_assert!((back - eps).abs() < 1e-9 * eps.max(1.0));
    }

    /// Interval shape: ordered endpoints inside [0, 1], containing the
    /// prior, with full confidence exactly when no mass is conceded.
    #[test]
    fn interval_shape_and_confidence(
        eps in 0.0f64..5.0,
        delta_prime in 0.0f64..1.0,
        prior in 0.0f64..1.0,
    ) {
        let interval = posterior_interval(eps, delta_prime, prior).unwrap();
        prop_assert!(0.0 <= interval.lower);
        prop_assert!(interval.lower <= interval.upper);
        prop_assert!(interval.upper <= 1.0);
        prop_assert!(interval.lower <= prior && prior <= interval.upper);
        prop_assert_eq!(interval.confidence == 1.0, delta_prime == 0.0);
    }
}

// ------------------------------------------------------------- composition

/// The sublinear composition bound loses to plain summation for few
/// releases and wins beyond the closed-form crossover.
#[test]
fn advanced_beats_basic_exactly_beyond_crossover() {
    for k in 1usize..=60 {
        let epsilons = vec![0.05; k];
        let deltas = vec![0.0; k];
        let (advanced, _) = compose_advanced(&epsilons, &deltas, 1e-6).unwrap();
        let basic = 0.05 * k as f64;
        if k >= 31 {
            assert!(advanced < basic, "advanced should win at k={k}");
        } else {
            assert!(advanced > basic, "basic should win at k={k}");
        }
    }
}

/// More releases never shrink the risk: every curve is nondecreasing in k,
/// for every method and criterion.
#[test]
fn risk_curves_never_improve_with_more_releases() {
    let pure = PrivacyGuarantee::PureDp { epsilon: 0.05 };
    let zcdp = PrivacyGuarantee::Zcdp { rho: 0.01 };
    let setups = [
        (pure, Method::Basic, 0.05),
        (pure, Method::Advanced, 0.05),
        (pure, Method::Optimal, 0.05),
        (zcdp, Method::Zcdp, 0.01),
    ];
    let criteria = [
        (Criterion::PosteriorUpper, Some(0.5)),
        (Criterion::RatioUpper, None),
        (Criterion::DiffMagnitude, None),
    ];
    for (guarantee, method, delta_prime) in setups {
        for (criterion, prior) in criteria {
            let curve = risk_curve(&guarantee, method, 200, prior, delta_prime, criterion).unwrap();
            assert_eq!(curve.len(), 200);
            for pair in curve.windows(2) {
                assert!(
                    pair[1].epsilon_prime >= pair[0].epsilon_prime - 1e-9,
                    "{method:?}/{criterion:?}: eps' fell from k={} to k={}",
                    pair[0].k,
                    pair[1].k
                );
                assert!(
                    pair[1].criterion_value >= pair[0].criterion_value - 1e-9,
                    "{method:?}/{criterion:?}: value fell from k={} to k={}",
                    pair[0].k,
                    pair[1].k
                );
            }
        }
    }
}

/// A crossing reported on a curve is the first index past the threshold.
#[test]
fn first_crossing_is_first_strict_exceedance() {
    let pure = PrivacyGuarantee::PureDp { epsilon: 0.05 };
    let curve = risk_curve(
        &pure,
        Method::Basic,
        40,
        Some(0.5),
        0.05,
        Criterion::PosteriorUpper,
    )
    .unwrap();
    let k = first_crossing(&curve, 0.8).unwrap();
    assert_eq!(k, 28);
    assert!(curve[k as usize - 2].criterion_value <= 0.8);
    assert!(curve[k as usize - 1].criterion_value > 0.8);
}

/// Direct floating-point evaluation of the optimal-composition delta,
/// trusted only where it cannot overflow.
fn direct_delta_ell(k: u32, ell: u32, eps: f64) -> f64 {
    let mut binom = 1.0f64;
    let mut sum = 0.0f64;
    for j in 0..ell {
        let a = (f64::from(k - j) * eps).exp();
        let b = ((f64::from(k) - 2.0 * f64::from(ell) + f64::from(j)) * eps).exp();
        sum += binom * (a - b);
        binom *= f64::from(k - j) / f64::from(j + 1);
    }
    sum / (1.0 + eps.exp()).powi(k as i32)
}

/// The log-space evaluation agrees with the direct form to relative 1e-10
/// across the whole non-overflowing range.
#[test]
fn log_space_delta_matches_direct_evaluation() {
    for &k in &[2u32, 5, 10, 50, 100, 200, 400] {
        for &eps in &[0.01f64, 0.05, 0.1] {
            let step = (k / 14).max(1);
            let mut ell = 1u32;
            while ell <= k / 2 {
                let log_form = delta_ell(k, ell, eps);
                let direct = direct_delta_ell(k, ell, eps);
                assert!(direct.is_finite());
                if direct > 0.0 {
                    let rel = ((log_form - direct) / direct).abs();
                    assert!(rel < 1e-10, "k={k} ell={ell} eps={eps}: rel err {rel}");
                }
                ell += step;
            }
        }
    }
}

// ----------------------------------------------------------------- planner

proptest! {
    /// Inverting a risk profile and converting back lands on the profile's
    /// pointwise epsilon; reported infeasibility is genuine.
    #[test]
    fn budget_inversion_round_trips(
        threshold in 0.05f64..0.6,
        delta_prime in 1e-3f64..0.2,
        delta_frac in 1e-6f64..0.5,
    ) {
        let profile = RiskProfile {
            criterion: Criterion::DiffMagnitude,
            threshold,
            delta_prime,
            prior: None,
        };
        let delta = delta_frac * delta_prime;
        let target = profile.epsilon_prime().unwrap();
        match max_total_epsilon(&profile, delta) {
            Ok(eps_total) => {
                let eps_prime = dp_to_pdp(eps_total, delta, delta_prime).unwrap();
                prop_assert!((eps_prime - target).abs() < 1e-9 * target.max(1.0));
            }
            Err(_) => {
                // Even a zero budget would overshoot the profile.
                prop_assert!(
                    (delta_prime - delta) * target.exp() <= (delta_prime + delta) * (1.0 + 1e-12)
                );
            }
        }
    }
}

/// Per-release budgets compose back inside the totals they were derived
/// from, for every method.
#[test]
fn per_release_budgets_compose_back_within_totals() {
    let eps_total = 0.8107857613387809;
    for &(method, k, per_delta, total_delta) in &[
        (Method::Basic, 12u32, 1e-8, 1e-6),
        (Method::Basic, 40, 2e-8, 1e-5),
        (Method::Advanced, 12, 1e-8, 1e-6),
        (Method::Advanced, 25, 1e-9, 1e-7),
        (Method::Optimal, 12, 1e-8, 1e-6),
        (Method::Optimal, 9, 1e-8, 1e-6),
    ] {
        let schedule = ReleaseSchedule {
            releases: k,
            per_release_delta: per_delta,
            total_delta,
            method,
        };
        let allowance = 0.01;
        let per = per_release_epsilon(&schedule, eps_total, allowance).unwrap();
        assert!(per > 0.0);
        match method {
            Method::Basic => {
                assert!(per * f64::from(k) <= eps_total + 1e-9);
            }
            Method::Advanced => {
                let epsilons = vec![per; k as usize];
                let deltas = vec![per_delta; k as usize];
                let (composed, _) = compose_advanced(&epsilons, &deltas, total_delta).unwrap();
                assert!(composed <= eps_total + 1e-9, "advanced k={k}: {composed}");
            }
            Method::Optimal => {
                let feasible = (0..=k / 2).any(|ell| {
                    let eps = f64::from(k - 2 * ell) * per;
                    let delta = dp_risk::composition::delta_ell(k, ell, per);
                    let total =
                        -((f64::from(k) * (-per_delta).ln_1p() + (-delta).ln_1p()).exp_m1());
                    eps <= eps_total + 1e-9 && total <= allowance + 1e-15
                });
                assert!(feasible, "optimal k={k}: no frontier point fits");
            }
            Method::Zcdp => unreachable!(),
        }
    }
}

// -------------------------------------------------------------- mechanisms

fn pair_strategy() -> impl Strategy<Value = MechanismPair> {
    (2usize..=5)
        .prop_flat_map(|n| {
            (
                proptest::collection::vec(0.05f64..1.0, n),
                proptest::collection::vec(0.05f64..1.0, n),
            )
        })
        .prop_map(|(with, without)| {
            let normalize = |weights: Vec<f64>| {
                let total: f64 = weights.iter().sum();
                weights.into_iter().map(|w| w / total).collect::<Vec<_>>()
            };
            let labels = (0..with.len()).map(|i| format!("o{i}")).collect();
            MechanismPair::new(labels, normalize(with), normalize(without))
                .expect("normalized vectors form a valid pair")
        })
}

proptest! {
    /// Loss and posterior distributions conserve probability mass.
    #[test]
    fn loss_and_posterior_masses_are_conserved(
        pair in pair_strategy(),
        prior in 0.01f64..0.99,
    ) {
        for world in [World::With, World::Without] {
            let loss = plrv(&pair, world);
            let total: f64 = loss.atoms.iter().map(|a| a.mass).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            let posterior = posterior_distribution(&pair, prior, world).unwrap();
            let total: f64 = posterior.iter().map(|a| a.mass).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            for atom in posterior {
                prop_assert!((0.0..=1.0).contains(&atom.posterior));
            }
        }
    }

    /// Mechanism pairs survive a JSON round trip exactly, and the round
    /// trip re-validates.
    #[test]
    fn mechanism_json_round_trip(pair in pair_strategy()) {
        let text = serde_json::to_string(&pair).unwrap();
        let back: MechanismPair = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(pair, back);
    }
}
