//! Numeric helpers shared across modules: compensated summation, log-space
//! binomials, log-sum-exp, golden-section minimization, and bisection.

use statrs::function::gamma::ln_gamma;

/// Neumaier-compensated running sum. Keeps the accumulated error at a few
/// ulps even when terms cancel or span many orders of magnitude.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Sum of an iterator with Neumaier compensation.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = CompensatedSum::default();
    for v in values {
        acc.add(v);
    }
    acc.total()
}

/// `ln C(n, k)` via log-gamma; exact enough for n in the millions. The
/// endpoint cases are returned exactly rather than through log-gamma, whose
/// small residues at integer arguments would otherwise leak into them.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    debug_assert!(k <= n);
    if k == 0 || k == n {
        return 0.0;
    }
    if k == 1 || k == n - 1 {
        return (n as f64).ln();
    }
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Max-factored log-sum-exp with compensated accumulation.
/// Empty input or all `-inf` terms yield `-inf`.
pub fn log_sum_exp(terms: &[f64]) -> f64 {
    let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return f64::NEG_INFINITY;
    }
    let mut acc = CompensatedSum::default();
    for &t in terms {
        acc.add((t - m).exp());
    }
    m + acc.total().ln()
}

/// Golden-section minimum of a unimodal `f` on `[lo, hi]`.
///
/// Shrinks the bracket below `xtol` (capped at 300 iterations, enough for a
/// bracket of width 1e3 down to 1e-12) and returns `(argmin, f(argmin))`.
pub fn golden_section_min(f: impl Fn(f64) -> f64, lo: f64, hi: f64, xtol: f64) -> (f64, f64) {
    // (sqrt(5) - 1) / 2, the inverse golden ratio.
    const INVPHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INVPHI * (b - a);
    let mut d = a + INVPHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iters = 0;
    while b - a > xtol && iters < 300 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INVPHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INVPHI * (b - a);
            fd = f(d);
        }
        iters += 1;
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Largest `x` in `[lo, hi]` with `feasible(x)` true, assuming feasibility
/// is monotone (true on a prefix of the interval). The caller is responsible
/// for checking `feasible(lo)` beforehand; if `feasible(hi)` holds the upper
/// endpoint is returned directly.
pub fn bisect_largest_feasible(feasible: impl Fn(f64) -> bool, lo: f64, hi: f64, xtol: f64) -> f64 {
    if feasible(hi) {
        return hi;
    }
    let (mut lo, mut hi) = (lo, hi);
    let mut iters = 0;
    while hi - lo > xtol && iters < 200 {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
        iters += 1;
    }
    lo
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_cancellation() {
        let mut s = CompensatedSum::default();
        s.add(1.0);
        s.add(1e100);
        s.add(1.0);
        s.add(-1e100);
        assert_eq!(s.total(), 2.0);
    }

    #[test]
    fn ln_binomial_small_cases() {
        assert!((ln_binomial(5, 2) - 10f64.ln()).abs() < 1e-12);
        assert!((ln_binomial(10, 0)).abs() < 1e-12);
        assert!((ln_binomial(400, 1) - 400f64.ln()).abs() < 1e-10);
        // Symmetry: C(n, k) = C(n, n - k) up to summation order.
        assert!((ln_binomial(400, 150) - ln_binomial(400, 250)).abs() < 1e-12);
    }

    #[test]
    fn log_sum_exp_matches_direct() {
        let terms = [-1.0, -2.0, -3.0];
        let direct: f64 = terms.iter().map(|t: &f64| t.exp()).sum::<f64>().ln();
        assert!((log_sum_exp(&terms) - direct).abs() < 1e-14);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY]), f64::NEG_INFINITY);
    }

    #[test]
    fn golden_section_finds_parabola_minimum() {
        let (x, fx) = golden_section_min(|x| (x - 1.25) * (x - 1.25), -4.0, 5.0, 1e-10);
        assert!((x - 1.25).abs() < 1e-9);
        assert!(fx < 1e-17);
    }

    #[test]
    fn bisect_finds_threshold() {
        let x = bisect_largest_feasible(|x| x <= 0.73, 0.0, 1.0, 1e-9);
        assert!((x - 0.73).abs() < 1e-8);
        assert_eq!(bisect_largest_feasible(|_| true, 0.0, 2.0, 1e-9), 2.0);
    }
}
