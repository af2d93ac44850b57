//! Location significance testing, Pearson correlation and split-half
//! reliability.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::location::LocationDescriptor;

const BUSINESS_COUNTS_TSV: &str = include_str!("../data/business_counts.tsv");

pub const DEFAULT_ALPHA: f64 = 0.05;

/// Coefficients at or above this are considered acceptably reliable.
pub const RELIABILITY_THRESHOLD: f64 = 0.70;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinomialTestInput {
    pub successes: u64,
    pub trials: u64,
    /// Number of candidate locations; the null proportion is `1/k`.
    pub categories: u64,
    pub alpha: f64,
    /// Use this null proportion instead of `1/k`, e.g. a rounded value.
    pub p_override: Option<f64>,
}

impl BinomialTestInput {
    pub fn new(successes: u64, trials: u64, categories: u64) -> Self {
        BinomialTestInput {
            successes,
            trials,
            categories,
            alpha: DEFAULT_ALPHA,
            p_override: None,
        }
    }

    pub fn with_p(mut self, p: f64) -> Self {
        self.p_override = Some(p);
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn p(&self) -> f64 {
        self.p_override.unwrap_or(1.0 / self.categories as f64)
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidArgument("n must be positive".into()));
        }
        if self.successes > self.trials {
            return Err(Error::InvalidArgument(format!(
                "successes {} exceed trials {}",
                self.successes, self.trials
            )));
        }
        if self.categories < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 locations, got {}",
                self.categories
            )));
        }
        let p = self.p();
        if !(p > 0.0 && p <= 0.5) {
            return Err(Error::InvalidArgument(format!("null proportion {p} outside (0, 0.5]")));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidArgument(format!("alpha {} outside (0, 1)", self.alpha)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decision {
    RejectH0,
    AcceptH0,
}

impl Decision {
    pub fn label(&self) -> &'static str {
        match self {
            Decision::RejectH0 => "Reject",
            Decision::AcceptH0 => "Accept",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinomialTestResult {
    pub z: f64,
    pub critical: f64,
    pub decision: Decision,
    /// Whether both `np` and `nq` exceed 10. When false the decision is
    /// always `AcceptH0`.
    pub approximation_valid: bool,
}

/// `(X/n - p) / sqrt(p(1-p)/n)`.
pub fn z_score(successes: u64, trials: u64, p: f64) -> f64 {
    let n = trials as f64;
    (successes as f64 / n - p) / (p * (1.0 - p) / n).sqrt()
}

/// Upper-tail critical value of the standard normal at `alpha`.
pub fn critical_value(alpha: f64) -> f64 {
    Normal::new(0.0, 1.0).expect("standard normal").inverse_cdf(1.0 - alpha)
}

/// One-tailed test of whether a location holds more relevant items than a
/// uniform spread over `k` locations would give, using the normal
/// approximation to the binomial.
pub fn binomial_location_test(input: &BinomialTestInput) -> Result<BinomialTestResult> {
    input.validate()?;
    let p = input.p();
    let n = input.trials as f64;
    let z = z_score(input.successes, input.trials, p);
    let critical = critical_value(input.alpha);
    let approximation_valid = n * p > 10.0 && n * (1.0 - p) > 10.0;
    let decision = if approximation_valid && z > critical {
        Decision::RejectH0
    } else {
        Decision::AcceptH0
    };
    Ok(BinomialTestResult {
        z,
        critical,
        decision,
        approximation_valid,
    })
}

/// Sample Pearson correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::InvalidArgument(format!(
            "length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::UndefinedCorrelation("need at least 2 points".into()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("values must be finite".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("zero variance".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitHalf {
    pub r: f64,
    /// Measurement slots assigned to the first half; the rest form the second.
    pub first_half: Vec<usize>,
}

impl SplitHalf {
    pub fn is_reliable(&self) -> bool {
        is_reliable(self.r)
    }
}

pub fn is_reliable(r: f64) -> bool {
    r >= RELIABILITY_THRESHOLD
}

/// Split-half reliability over `items`, each holding the same number
/// (at least 2) of repeated measurements, e.g. one frequency per respondent
/// for a location. The measurement slots are shuffled with `seed` and cut
/// in two; each half is averaged per item and the halves are correlated.
pub fn split_half_reliability(items: &[Vec<f64>], seed: u64) -> Result<SplitHalf> {
    if items.len() < 2 {
        return Err(Error::UndefinedCorrelation("need at least 2 items".into()));
    }
    let m = items[0].len();
    if m < 2 {
        return Err(Error::InvalidArgument("each item needs at least 2 measurements".into()));
    }
    if let Some(bad) = items.iter().position(|v| v.len() != m) {
        return Err(Error::InvalidArgument(format!(
            "item {bad} has {} measurements, expected {m}",
            items[bad].len()
        )));
    }
    let mut slots: Vec<usize> = (0..m).collect();
    slots.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (a, b) = slots.split_at(m / 2);
    let mean = |v: &[f64], idx: &[usize]| idx.iter().map(|&i| v[i]).sum::<f64>() / idx.len() as f64;
    let x: Vec<f64> = items.iter().map(|v| mean(v, a)).collect();
    let y: Vec<f64> = items.iter().map(|v| mean(v, b)).collect();
    let mut first_half = a.to_vec();
    first_half.sort_unstable();
    Ok(SplitHalf {
        r: pearson(&x, &y)?,
        first_half,
    })
}

/// Relevant-item counts per location, parsed from `location<TAB>count`
/// lines with an optional header.
pub fn parse_location_counts(tsv: &str, origin: &str) -> Result<Vec<(LocationDescriptor, u64)>> {
    let mut rows = Vec::new();
    for (i, line) in tsv.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') || (i == 0 && line.starts_with("location\t")) {
            continue;
        }
        let (loc, count) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(origin, i + 1, "expected `location<TAB>count`"))?;
        let loc = loc
            .parse()
            .map_err(|e: Error| Error::parse(origin, i + 1, e.to_string()))?;
        let count = count
            .trim()
            .parse()
            .map_err(|_| Error::parse(origin, i + 1, format!("bad count `{count}`")))?;
        rows.push((loc, count));
    }
    Ok(rows)
}

/// Relevant items behind [`business_location_counts`], including those
/// found outside the candidate locations.
pub const BUSINESS_RELEVANT_TOTAL: u64 = 905;

/// Survey counts for the business category over its 19 candidate
/// locations.
pub fn business_location_counts() -> Vec<(LocationDescriptor, u64)> {
    parse_location_counts(BUSINESS_COUNTS_TSV, "<builtin counts>").expect("builtin counts are valid")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationTestRow {
    pub location: LocationDescriptor,
    pub successes: u64,
    pub result: BinomialTestResult,
}

/// Test every location of a count table. `k` is the row count and `n`
/// defaults to the table total; `p` defaults to `1/k`.
pub fn test_locations(
    counts: &[(LocationDescriptor, u64)],
    n: Option<u64>,
    p: Option<f64>,
    alpha: f64,
) -> Result<Vec<LocationTestRow>> {
    let n = n.unwrap_or_else(|| counts.iter().map(|(_, c)| c).sum());
    let k = counts.len() as u64;
    counts
        .iter()
        .map(|(location, x)| {
            let input = BinomialTestInput {
                successes: *x,
                trials: n,
                categories: k,
                alpha,
                p_override: p,
            };
            Ok(LocationTestRow {
                location: location.clone(),
                successes: *x,
                result: binomial_location_test(&input)?,
            })
        })
        .collect()
}
