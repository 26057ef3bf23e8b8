//! Scalar building blocks: thermal entropy, Shannon entropy, log-binomials
//! and the squared-binomial series behind the pure-dephasing solution.
//!
//! Public entropies are in bits. Anything that can overflow is accumulated
//! as a natural logarithm, wrapped in [`LogReal`].

use std::f64::consts::{LN_2, PI};
use std::iter::Sum;
use std::ops::{Add, Div, Mul};

use crate::error::{domain, Error, Result};

/// Natural logarithm of a nonnegative real. `ln(0)` is `-inf`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct LogReal(f64);

impl LogReal {
    pub const ZERO: LogReal = LogReal(f64::NEG_INFINITY);
    pub const ONE: LogReal = LogReal(0.0);

    pub fn from_ln(ln_value: f64) -> Self {
        LogReal(ln_value)
    }

    pub fn from_value(x: f64) -> Result<Self> {
        if x.is_nan() || x < 0.0 {
            return Err(domain(format!("LogReal requires a nonnegative value, got {x}")));
        }
        Ok(LogReal(x.ln()))
    }

    /// The stored logarithm.
    pub fn ln(self) -> f64 {
        self.0
    }

    pub fn log2(self) -> f64 {
        self.0 / LN_2
    }

    /// The represented value, `exp(ln)`.
    pub fn value(self) -> f64 {
        self.0.exp()
    }

    pub fn is_zero(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }

    pub fn powi(self, k: i32) -> Self {
        if self.is_zero() {
            return if k == 0 { LogReal::ONE } else { LogReal::ZERO };
        }
        LogReal(self.0 * k as f64)
    }
}

impl Add for LogReal {
    type Output = LogReal;

    fn add(self, rhs: LogReal) -> LogReal {
        let (hi, lo) = if self.0 >= rhs.0 { (self.0, rhs.0) } else { (rhs.0, self.0) };
        if lo == f64::NEG_INFINITY {
            return LogReal(hi);
        }
        LogReal(hi + (lo - hi).exp().ln_1p())
    }
}

impl Mul for LogReal {
    type Output = LogReal;

    fn mul(self, rhs: LogReal) -> LogReal {
        if self.is_zero() || rhs.is_zero() {
            return LogReal::ZERO;
        }
        LogReal(self.0 + rhs.0)
    }
}

impl Div for LogReal {
    type Output = LogReal;

    fn div(self, rhs: LogReal) -> LogReal {
        if self.is_zero() {
            return LogReal::ZERO;
        }
        LogReal(self.0 - rhs.0)
    }
}

impl Sum for LogReal {
    fn sum<I: Iterator<Item = LogReal>>(iter: I) -> LogReal {
        let logs: Vec<f64> = iter.map(LogReal::ln).collect();
        LogReal(log_sum_exp(&logs))
    }
}

/// Streaming log-sum-exp; rescales whenever a larger term arrives.
#[derive(Clone, Copy, Debug)]
pub(crate) struct LogSumAcc {
    max: f64,
    scaled: f64,
}

impl LogSumAcc {
    pub fn new() -> Self {
        LogSumAcc {
            max: f64::NEG_INFINITY,
            scaled: 0.0,
        }
    }

    pub fn push(&mut self, log_term: f64) {
        if log_term == f64::NEG_INFINITY {
            return;
        }
        if log_term > self.max {
            self.scaled = self.scaled * (self.max - log_term).exp() + 1.0;
            self.max = log_term;
        } else {
            self.scaled += (log_term - self.max).exp();
        }
    }

    pub fn ln(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled.ln()
        }
    }
}

/// Two-pass log-sum-exp with compensated accumulation.
pub(crate) fn log_sum_exp(logs: &[f64]) -> f64 {
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + neumaier_sum(logs.iter().map(|&l| (l - max).exp())).ln()
}

pub(crate) fn neumaier_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Entropy in bits of a thermal state with mean photon number `n`:
/// `(n+1) log2(n+1) - n log2(n)`, continuous at zero.
pub fn thermal_entropy_g(n: f64) -> Result<f64> {
    if n.is_nan() || n < 0.0 {
        return Err(domain(format!("thermal entropy needs n >= 0, got {n}")));
    }
    Ok(g_unchecked(n))
}

/// Evaluated as `ln(n+1) + n ln(1 + 1/n)`, a sum of two positive terms,
/// which avoids the cancellation of the textbook form at large `n`.
pub(crate) fn g_unchecked(n: f64) -> f64 {
    if n <= 0.0 {
        return 0.0;
    }
    (n.ln_1p() + n * n.recip().ln_1p()) / LN_2
}

/// `ln C(n, k)`.
///
/// Small `min(k, n-k)` is summed exactly as a product of ratios; otherwise
/// a Stirling form is used where every leading term is nonnegative, so no
/// large log-gamma values cancel.
pub fn log_binomial(n: u64, k: u64) -> Result<LogReal> {
    if k > n {
        return Err(domain(format!("log_binomial needs k <= n, got n={n}, k={k}")));
    }
    Ok(LogReal(ln_binomial(n, k)))
}

pub(crate) fn ln_binomial(n: u64, k: u64) -> f64 {
    debug_assert!(k <= n);
    let k = k.min(n - k);
    if k == 0 {
        return 0.0;
    }
    let rest = (n - k) as f64;
    if k <= 64 {
        return neumaier_sum((1..=k).map(|i| (rest / i as f64).ln_1p()));
    }
    let nf = n as f64;
    let kf = k as f64;
    let lead = kf * (nf / kf).ln() - rest * (-kf / nf).ln_1p();
    let half = 0.5 * (nf / (2.0 * PI * kf * rest)).ln();
    lead + half + stirling_remainder(nf) - stirling_remainder(kf) - stirling_remainder(rest)
}

/// `ln Γ(x+1) - (x ln x - x + ln(2πx)/2)` for x > 64.
fn stirling_remainder(x: f64) -> f64 {
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 * (1.0 / 1680.0))))
}

pub(crate) const MASS_TOLERANCE: f64 = 1e-10;

/// Shannon entropy in bits of a (possibly truncated) probability vector
/// whose omitted mass is at most `tail_bound`.
pub fn shannon_entropy(probs: &[f64], tail_bound: f64) -> Result<f64> {
    if let Some((i, p)) = probs.iter().enumerate().find(|(_, p)| !(**p >= 0.0)) {
        return Err(domain(format!("probability at index {i} is {p}")));
    }
    let mass = neumaier_sum(probs.iter().copied());
    if mass > 1.0 + MASS_TOLERANCE || mass + tail_bound.max(0.0) < 1.0 - MASS_TOLERANCE {
        return Err(Error::Consistency(format!(
            "probability mass {mass} with tail bound {tail_bound:e} is not 1"
        )));
    }
    let nats = neumaier_sum(probs.iter().filter(|p| **p > 0.0).map(|&p| -p * p.ln()));
    Ok(nats / LN_2)
}

/// Log-terms of a nonnegative series whose term ratio `t[n+1]/t[n]` is
/// nonincreasing in `n`, summed until the geometric tail bound certifies
/// convergence.
#[derive(Clone, Debug)]
pub(crate) struct CertifiedSeries {
    pub log_terms: Vec<f64>,
    pub log_sum: f64,
    /// Upper bound on the omitted mass relative to `exp(log_sum)`.
    pub rel_tail: f64,
}

pub(crate) const SERIES_BLOCK: usize = 64;
const MAX_SERIES_TERMS: usize = 50_000_000;

/// Sums `exp(log_term(n))` for n = 0, 1, ... in blocks of [`SERIES_BLOCK`].
///
/// Stops at the end of a block once the last term relative to the running
/// sum is below `term_rel`, the term ratio is below one, and the geometric
/// bound `t_N r / (1 - r)` on the rest is below `tail_rel` of the sum.
pub(crate) fn sum_certified(
    log_term: impl Fn(u64) -> f64,
    term_rel: f64,
    tail_rel: f64,
    min_terms: usize,
) -> Result<CertifiedSeries> {
    let mut log_terms = Vec::new();
    let mut acc = LogSumAcc::new();
    loop {
        for _ in 0..SERIES_BLOCK {
            let l = log_term(log_terms.len() as u64);
            acc.push(l);
            log_terms.push(l);
        }
        if log_terms.len() < min_terms {
            continue;
        }
        let n = log_terms.len() - 1;
        let last = log_terms[n];
        let running = acc.ln();
        if last == f64::NEG_INFINITY {
            // Remaining terms vanish identically (all our series have
            // terms that are zero from some index on or never).
            return Ok(finish(log_terms, 0.0));
        }
        let log_ratio = log_term(n as u64 + 1) - last;
        if log_ratio < 0.0 {
            let r = log_ratio.exp();
            let rel_last = (last - running).exp();
            let rel_tail = rel_last * r / (1.0 - r);
            if rel_last < term_rel && rel_tail < tail_rel {
                return Ok(finish(log_terms, rel_tail));
            }
        }
        if log_terms.len() >= MAX_SERIES_TERMS {
            return Err(Error::Series {
                terms: MAX_SERIES_TERMS,
            });
        }
    }
}

fn finish(log_terms: Vec<f64>, rel_tail: f64) -> CertifiedSeries {
    let log_sum = log_sum_exp(&log_terms);
    CertifiedSeries {
        log_terms,
        log_sum,
        rel_tail,
    }
}

const SERIES_TERM_REL: f64 = 1e-16;
const SERIES_TAIL_REL: f64 = 1e-14;

fn check_hyp_args(m: u64, z: f64) -> Result<()> {
    if m == 0 {
        return Err(domain("series parameter m must be >= 1"));
    }
    if !(0.0..1.0).contains(&z) {
        return Err(domain(format!(
            "squared-binomial series needs 0 <= z < 1 (diverges at z = 1), got {z}"
        )));
    }
    Ok(())
}

pub(crate) fn log_squared_binomial_term(m: u64, z: f64, n: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    if z == 0.0 {
        return f64::NEG_INFINITY;
    }
    2.0 * ln_binomial(n + m - 1, m - 1) + n as f64 * z.ln()
}

/// `ln 2F1(m, m; 1; z) = ln Σ_n C(n+m-1, m-1)^2 z^n`.
pub fn hyp2f1_squared_series(m: u64, z: f64) -> Result<LogReal> {
    Ok(squared_binomial_sums(m, z)?.log_norm)
}

/// Normalization and first-moment sums of the squared-binomial weights.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SquaredBinomialSums {
    /// `ln Σ_n C(n+m-1, m-1)^2 z^n`
    pub log_norm: LogReal,
    /// `ln Σ_n n C(n+m-1, m-1)^2 z^n`
    pub log_first_moment: LogReal,
    pub terms: usize,
}

impl SquaredBinomialSums {
    /// Mean of the distribution with weights `C(n+m-1, m-1)^2 z^n`.
    pub fn mean(&self) -> f64 {
        (self.log_first_moment / self.log_norm).value()
    }
}

/// Both series are summed directly; no hypergeometric identities are used.
pub fn squared_binomial_sums(m: u64, z: f64) -> Result<SquaredBinomialSums> {
    check_hyp_args(m, z)?;
    let norm = sum_certified(
        |n| log_squared_binomial_term(m, z, n),
        SERIES_TERM_REL,
        SERIES_TAIL_REL,
        0,
    )?;
    // The moment series' term ratio is nonincreasing from n = 1 on, and the
    // ratio test only runs at block ends.
    let first = sum_certified(
        |n| {
            if n == 0 {
                f64::NEG_INFINITY
            } else {
                log_squared_binomial_term(m, z, n) + (n as f64).ln()
            }
        },
        SERIES_TERM_REL,
        SERIES_TAIL_REL,
        0,
    )?;
    Ok(SquaredBinomialSums {
        log_norm: LogReal(norm.log_sum),
        log_first_moment: LogReal(first.log_sum),
        terms: norm.log_terms.len().max(first.log_terms.len()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn g_small_cases() {
        assert_eq!(thermal_entropy_g(0.0).unwrap(), 0.0);
        assert!((thermal_entropy_g(1.0).unwrap() - 2.0).abs() < 1e-15);
        assert!(thermal_entropy_g(-1e-3).is_err());
        assert!(thermal_entropy_g(f64::NAN).is_err());
    }

    #[test]
    fn g_is_continuous_at_zero() {
        assert!(thermal_entropy_g(1e-300).unwrap() < 1e-290);
        assert!(thermal_entropy_g(1e-12).unwrap() < 1e-10);
    }

    #[test]
    fn g_monotone_and_concave() {
        let xs: Vec<f64> = (1..400).map(|i| i as f64 * 0.05).collect();
        let gs: Vec<f64> = xs.iter().map(|&x| g_unchecked(x)).collect();
        for w in gs.windows(3) {
            assert!(w[1] > w[0]);
            assert!(w[2] - w[1] < w[1] - w[0]);
        }
    }

    #[test]
    fn log_binomial_small() {
        assert_eq!(log_binomial(0, 0).unwrap().ln(), 0.0);
        assert!((log_binomial(3, 1).unwrap().ln() - 3f64.ln()).abs() < 1e-15);
        assert!((log_binomial(10, 5).unwrap().value() - 252.0).abs() < 1e-10);
        assert!(log_binomial(3, 4).is_err());
    }

    #[test]
    fn log_binomial_paths_agree_at_threshold() {
        // Both sides of the k = 64 switch against Pascal-rule recurrence in logs.
        let n = 300u64;
        let mut row = vec![0.0f64; 1];
        for i in 1..=n {
            let mut next = vec![0.0f64; i as usize + 1];
            for k in 1..i as usize {
                let a = row[k - 1];
                let b = row[k];
                let hi = a.max(b);
                next[k] = hi + ((a - hi).exp() + (b - hi).exp()).ln();
            }
            row = next;
        }
        for k in [60u64, 64, 65, 70, 150] {
            let got = ln_binomial(n, k);
            assert!((got - row[k as usize]).abs() / row[k as usize] < 1e-13, "k={k}");
        }
    }

    #[test]
    fn shannon_entropy_cases() {
        assert_eq!(shannon_entropy(&[1.0], 0.0).unwrap(), 0.0);
        assert!((shannon_entropy(&[0.25; 4], 0.0).unwrap() - 2.0).abs() < 1e-15);
        assert!(matches!(shannon_entropy(&[0.5, -0.1, 0.6], 0.0), Err(Error::Domain(_))));
        assert!(matches!(shannon_entropy(&[0.5, 0.4], 0.0), Err(Error::Consistency(_))));
        assert!(shannon_entropy(&[0.5, 0.4], 0.1).is_ok());
    }

    #[test]
    fn geometric_entropy_is_g() {
        for e in [0.1, 1.0, 10.0] {
            let q: f64 = e / (e + 1.0);
            let n = 2000;
            let probs: Vec<f64> = (0..n).map(|k| q.powi(k) / (e + 1.0)).collect();
            let tail = q.powi(n);
            let h = shannon_entropy(&probs, tail).unwrap();
            assert!((h - g_unchecked(e)).abs() < 1e-10, "E={e}");
        }
    }

    #[test]
    fn hyp_series_geometric_case() {
        for i in 1..10 {
            let z = i as f64 / 10.0;
            let s = hyp2f1_squared_series(1, z).unwrap();
            assert!((s.value() * (1.0 - z) - 1.0).abs() < 1e-12, "z={z}");
        }
        assert!((hyp2f1_squared_series(1, 0.5).unwrap().ln() - 2f64.ln()).abs() < 1e-14);
        for m in [1, 2, 7, 40] {
            assert_eq!(hyp2f1_squared_series(m, 0.0).unwrap().ln(), 0.0);
        }
        assert!(hyp2f1_squared_series(2, 1.0).is_err());
        assert!(hyp2f1_squared_series(2, -0.1).is_err());
        assert!(hyp2f1_squared_series(0, 0.3).is_err());
    }

    #[test]
    fn hyp_series_m2_closed_form() {
        // Σ (n+1)^2 z^n = (1+z)/(1-z)^3
        for z in [0.05, 0.3, 0.7, 0.95] {
            let s = squared_binomial_sums(2, z).unwrap();
            let want = (1.0 + z) / (1.0 - z).powi(3);
            assert!((s.log_norm.value() / want - 1.0).abs() < 1e-13);
            // Σ n (n+1)^2 z^n = z (4 + z (1 + z)...) checked via derivative:
            // d/dz[(1+z)/(1-z)^3] = (4 + 2z)/(1-z)^4
            let want_first = z * (4.0 + 2.0 * z) / (1.0 - z).powi(4);
            assert!((s.log_first_moment.value() / want_first - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn mean_is_zero_at_zero_argument() {
        let s = squared_binomial_sums(3, 0.0).unwrap();
        assert!(s.log_first_moment.is_zero());
        assert_eq!(s.mean(), 0.0);
    }

    #[test]
    fn log_real_arithmetic() {
        let a = LogReal::from_value(3.0).unwrap();
        let b = LogReal::from_value(5.0).unwrap();
        assert!(((a + b).value() - 8.0).abs() < 1e-14);
        assert!(((a * b).value() - 15.0).abs() < 1e-13);
        assert!(((b / a).value() - 5.0 / 3.0).abs() < 1e-15);
        assert_eq!((a + LogReal::ZERO).ln(), a.ln());
        assert!((LogReal::ZERO * a).is_zero());
        assert!(LogReal::from_value(-1.0).is_err());
        assert!(LogReal::from_value(0.0).unwrap().is_zero());
    }

    proptest! {
        #[test]
        fn log_real_round_trips(exp10 in -300.0f64..300.0) {
            let x = 10f64.powf(exp10);
            let back = LogReal::from_value(x).unwrap().value();
            prop_assert!((back / x - 1.0).abs() < 1e-12);
        }

        #[test]
        fn log_sum_matches_direct(xs in proptest::collection::vec(1e-3f64..1e3, 1..50)) {
            let direct: f64 = xs.iter().sum();
            let via_log: LogReal = xs.iter().map(|&x| LogReal::from_value(x).unwrap()).sum();
            prop_assert!((via_log.value() / direct - 1.0).abs() < 1e-12);
        }

        #[test]
        fn series_sum_independent_of_chunking(
            m in 1u64..12,
            z in 0.01f64..0.9,
            chunk in 1usize..97,
        ) {
            let s = sum_certified(|n| log_squared_binomial_term(m, z, n), 1e-16, 1e-14, 0).unwrap();
            let mut chunks: Vec<LogReal> = s
                .log_terms
                .chunks(chunk)
                .map(|c| LogReal::from_ln(log_sum_exp(c)))
                .collect();
            chunks.reverse();
            let combined: LogReal = chunks.into_iter().sum();
            let streamed = {
                let mut acc = LogSumAcc::new();
                for &l in s.log_terms.iter().rev() {
                    acc.push(l);
                }
                acc.ln()
            };
            prop_assert!((combined.ln() - s.log_sum).abs() <= 1e-13 * s.log_sum.abs().max(1.0));
            prop_assert!((streamed - s.log_sum).abs() <= 1e-13 * s.log_sum.abs().max(1.0));
        }
    }
}
