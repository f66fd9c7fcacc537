//! Phase-level statistics: acceptance rates with Wald intervals, pooled
//! two-proportion z-tests, Fisher's exact test, blind-rejection ratios and
//! the inference-cost model.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("sample size must be at least 1")]
    EmptySample,
    #[error("count {k} exceeds sample size {n}")]
    CountExceedsTotal { n: u64, k: u64 },
    #[error("invalid phase counts: {0}")]
    InvalidCounts(String),
    #[error("pooled proportion is {0}; the z statistic has zero variance")]
    DegenerateVariance(&'static str),
    #[error("no rejections recorded; blind-rejection ratio is undefined")]
    NoRejections,
    #[error("no accepted suggestions; calls per accepted suggestion is undefined")]
    NoAccepted,
    #[error("contingency table is empty")]
    EmptyTable,
    #[error("cannot parse amount {0:?}: expected a decimal with at most 6 fractional digits")]
    BadAmount(String),
}

/// Suggestion counts of one experimental phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PhaseCounts {
    pub n_total: u64,
    pub k_accepted: u64,
    pub n_blind: u64,
}

impl PhaseCounts {
    pub fn new(n_total: u64, k_accepted: u64, n_blind: u64) -> Result<Self, StatsError> {
        if k_accepted > n_total {
            return Err(StatsError::CountExceedsTotal {
                n: n_total,
                k: k_accepted,
            });
        }
        if n_blind > n_total - k_accepted {
            return Err(StatsError::InvalidCounts(format!(
                "{n_blind} blind rejections but only {} rejections",
                n_total - k_accepted
            )));
        }
        Ok(Self {
            n_total,
            k_accepted,
            n_blind,
        })
    }

    pub fn n_rejected(&self) -> u64 {
        self.n_total - self.k_accepted
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub rate: f64,
    pub se: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestMethod {
    PooledZ,
    FisherExact,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
    pub p_value: f64,
    pub method: TestMethod,
}

/// 97.5th percentile of the standard normal.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// Standard normal CDF, `0.5 * erfc(-x / sqrt(2))`.
///
/// `erfc` uses the Maclaurin series of `erf` below 2 and the Laplace
/// continued fraction above, giving an absolute error far below 1e-7 and
/// tail probabilities with full relative precision.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Two-sided tail probability `P(|Z| >= |z|)`.
pub fn two_sided_p(z: f64) -> f64 {
    erfc(z.abs() / std::f64::consts::SQRT_2).min(1.0)
}

fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    if x < 2.0 {
        return 1.0 - erf_series(x);
    }
    if x > 27.0 {
        return 0.0;
    }
    // erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
    let mut tail = x;
    for k in (1..=120).rev() {
        tail = x + (k as f64 / 2.0) / tail;
    }
    (-x * x).exp() / (std::f64::consts::PI.sqrt() * tail)
}

fn erf_series(x: f64) -> f64 {
    // erf(x) = 2/sqrt(pi) * sum_n (-1)^n x^(2n+1) / (n! (2n+1))
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut n = 0.0;
    while term.abs() > 1e-17 * sum.abs() {
        n += 1.0;
        term *= -x2 / n;
        sum += term / (2.0 * n + 1.0);
    }
    2.0 / std::f64::consts::PI.sqrt() * sum
}

/// Rate `k/n` with its Wald standard error and interval `rate ± z_crit·se`,
/// clipped to [0, 1].
pub fn wald_estimate(n: u64, k: u64, z_crit: f64) -> Result<RateEstimate, StatsError> {
    if n == 0 {
        return Err(StatsError::EmptySample);
    }
    if k > n {
        return Err(StatsError::CountExceedsTotal { n, k });
    }
    let rate = k as f64 / n as f64;
    let se = (rate * (1.0 - rate) / n as f64).sqrt();
    Ok(RateEstimate {
        rate,
        se,
        ci_low: (rate - z_crit * se).max(0.0),
        ci_high: (rate + z_crit * se).min(1.0),
    })
}

/// Pooled two-sample z-test of `k1/n1` against `k2/n2`. Positive z means the
/// first proportion is larger.
pub fn two_proportion_z(n1: u64, k1: u64, n2: u64, k2: u64) -> Result<TestResult, StatsError> {
    if n1 == 0 || n2 == 0 {
        return Err(StatsError::EmptySample);
    }
    if k1 > n1 {
        return Err(StatsError::CountExceedsTotal { n: n1, k: k1 });
    }
    if k2 > n2 {
        return Err(StatsError::CountExceedsTotal { n: n2, k: k2 });
    }
    let (n1f, n2f) = (n1 as f64, n2 as f64);
    let pooled = (k1 + k2) as f64 / (n1f + n2f);
    if k1 + k2 == 0 {
        return Err(StatsError::DegenerateVariance("0"));
    }
    if k1 + k2 == n1 + n2 {
        return Err(StatsError::DegenerateVariance("1"));
    }
    let se = (pooled * (1.0 - pooled) * (1.0 / n1f + 1.0 / n2f)).sqrt();
    let z = (k1 as f64 / n1f - k2 as f64 / n2f) / se;
    Ok(TestResult {
        z: Some(z),
        p_value: two_sided_p(z),
        method: TestMethod::PooledZ,
    })
}

/// z-test on the share of blind rejections among all rejections.
pub fn blind_ratio_tests(a: &PhaseCounts, b: &PhaseCounts) -> Result<TestResult, StatsError> {
    if a.n_rejected() == 0 || b.n_rejected() == 0 {
        return Err(StatsError::NoRejections);
    }
    two_proportion_z(a.n_rejected(), a.n_blind, b.n_rejected(), b.n_blind)
}

/// Two-sided Fisher exact test on the 2×2 table `[[a, b], [c, d]]`.
///
/// The p-value sums the probabilities of all tables with the observed margins
/// that are no more likely than the observed one (with a 1e-7 relative slack
/// for ties).
pub fn fisher_exact_2x2(a: u64, b: u64, c: u64, d: u64) -> Result<TestResult, StatsError> {
    let n = a + b + c + d;
    if n == 0 {
        return Err(StatsError::EmptyTable);
    }
    let row1 = a + b;
    let col1 = a + c;
    let row2 = n - row1;
    let ln_fact = ln_factorials(n as usize);
    let ln_choose =
        |n: u64, k: u64| ln_fact[n as usize] - ln_fact[k as usize] - ln_fact[(n - k) as usize];
    let ln_total = ln_choose(n, col1);
    let ln_prob = |x: u64| ln_choose(row1, x) + ln_choose(row2, col1 - x) - ln_total;

    let lo = col1.saturating_sub(row2);
    let hi = row1.min(col1);
    let observed = ln_prob(a).exp();
    let cutoff = observed * (1.0 + 1e-7);
    let p: f64 = (lo..=hi)
        .map(|x| ln_prob(x).exp())
        .filter(|&p| p <= cutoff)
        .sum();
    Ok(TestResult {
        z: None,
        p_value: p.clamp(0.0, 1.0),
        method: TestMethod::FisherExact,
    })
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..=n {
        acc += (i as f64).ln();
        out.push(acc);
    }
    out
}

/// Blind-rejection ratios of a phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlindRatios {
    pub per_reject: f64,
    pub per_suggest: f64,
}

pub fn blind_ratios(counts: &PhaseCounts) -> Result<BlindRatios, StatsError> {
    if counts.n_rejected() == 0 {
        return Err(StatsError::NoRejections);
    }
    Ok(BlindRatios {
        per_reject: counts.n_blind as f64 / counts.n_rejected() as f64,
        per_suggest: counts.n_blind as f64 / counts.n_total as f64,
    })
}

/// Inference calls spent per accepted suggestion.
pub fn calls_per_accept(counts: &PhaseCounts) -> Result<f64, StatsError> {
    if counts.k_accepted == 0 {
        return Err(StatsError::NoAccepted);
    }
    Ok(counts.n_total as f64 / counts.k_accepted as f64)
}

/// Relative drop in calls per accepted suggestion from `before` to `after`.
pub fn relative_reduction(before: &PhaseCounts, after: &PhaseCounts) -> Result<f64, StatsError> {
    Ok(1.0 - calls_per_accept(after)? / calls_per_accept(before)?)
}

/// US dollars as integer micro-dollars.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
pub struct Usd(pub i64);

impl Usd {
    pub const MICROS_PER_DOLLAR: i64 = 1_000_000;

    pub fn from_micros(micros: i64) -> Self {
        Usd(micros)
    }

    pub fn micros(self) -> i64 {
        self.0
    }

    pub fn as_dollars(self) -> f64 {
        self.0 as f64 / Self::MICROS_PER_DOLLAR as f64
    }

    /// Parses `"0.0004"`, `"$7.5"` or `"12"` exactly.
    pub fn parse(text: &str) -> Result<Self, StatsError> {
        let bad = || StatsError::BadAmount(text.to_string());
        let s = text.trim().trim_start_matches('$');
        let (neg, s) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let (whole, frac) = s.split_once('.').unwrap_or((s, ""));
        if whole.is_empty() && frac.is_empty() {
            return Err(bad());
        }
        if frac.len() > 6
            || !whole
                .chars()
                .chain(frac.chars())
                .all(|c| c.is_ascii_digit())
        {
            return Err(bad());
        }
        let whole: i64 = if whole.is_empty() {
            0
        } else {
            whole.parse().map_err(|_| bad())?
        };
        let frac_micros: i64 = format!("{frac:0<6}").parse().map_err(|_| bad())?;
        let micros = whole
            .checked_mul(Self::MICROS_PER_DOLLAR)
            .and_then(|w| w.checked_add(frac_micros))
            .ok_or_else(bad)?;
        Ok(Usd(if neg { -micros } else { micros }))
    }
}

impl fmt::Display for Usd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        let whole = abs / Self::MICROS_PER_DOLLAR as u64;
        let frac = abs % Self::MICROS_PER_DOLLAR as u64;
        // Without a precision: as many digits as needed, at least two.
        let digits = f.precision().unwrap_or_else(|| {
            let mut d = 6;
            let mut rest = frac;
            while d > 2 && rest.is_multiple_of(10) {
                rest /= 10;
                d -= 1;
            }
            d
        });
        let digits = digits.min(6);
        if digits == 0 {
            return write!(f, "{sign}${}", whole + u64::from(frac >= 500_000));
        }
        let scale = 10u64.pow(6 - digits as u32);
        let mut shown = (frac + scale / 2) / scale;
        let mut whole = whole;
        if shown >= 10u64.pow(digits as u32) {
            shown = 0;
            whole += 1;
        }
        write!(f, "{sign}${whole}.{shown:0width$}", width = digits)
    }
}

/// Dollars saved on `accepted_target` accepted suggestions by running phase
/// `b` instead of phase `a`:
/// `(cpa(a) - cpa(b)) * accepted_target * tokens_per_call / 1000 * price_per_1k`.
///
/// Computed exactly in integers and rounded to the nearest micro-dollar.
pub fn cost_savings(
    a: &PhaseCounts,
    b: &PhaseCounts,
    accepted_target: u64,
    tokens_per_call: u64,
    price_per_1k_tokens: Usd,
) -> Result<Usd, StatsError> {
    if a.k_accepted == 0 || b.k_accepted == 0 {
        return Err(StatsError::NoAccepted);
    }
    // cpa(a) - cpa(b) = (n_a k_b - n_b k_a) / (k_a k_b)
    let num = (i128::from(a.n_total) * i128::from(b.k_accepted)
        - i128::from(b.n_total) * i128::from(a.k_accepted))
        * i128::from(accepted_target)
        * i128::from(tokens_per_call)
        * i128::from(price_per_1k_tokens.micros());
    let den = i128::from(a.k_accepted) * i128::from(b.k_accepted) * 1000;
    Ok(Usd(div_round(num, den) as i64))
}

fn div_round(num: i128, den: i128) -> i128 {
    let q = num / den;
    let r = num % den;
    if 2 * r.abs() >= den.abs() {
        q + num.signum() * den.signum()
    } else {
        q
    }
}
