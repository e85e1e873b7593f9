//! Posterior summaries, partition agreement, and autocorrelation.

use std::collections::{BTreeMap, HashMap};
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Empirical distribution of a positive integer quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteSummary {
    /// `(value, probability)` pairs in increasing value order.
    pub pmf: Vec<(usize, f64)>,
    /// Most frequent value; ties go to the smaller value.
    pub mode: usize,
    /// Smallest value whose empirical CDF reaches 0.25.
    pub q1: usize,
    pub median: usize,
    /// Smallest value whose empirical CDF reaches 0.75.
    pub q3: usize,
}

impl DiscreteSummary {
    pub fn from_draws(values: &[usize]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("no draws to summarize"));
        }
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        for &v in values {
            *counts.entry(v).or_default() += 1;
        }
        let n = values.len() as f64;
        let pmf: Vec<(usize, f64)> = counts.iter().map(|(&v, &c)| (v, c as f64 / n)).collect();
        let mut mode = (0, 0);
        for (&v, &c) in &counts {
            if c > mode.1 {
                mode = (v, c);
            }
        }
        let quantile = |q: f64| {
            let mut cum = 0usize;
            for (&v, &c) in &counts {
                cum += c;
                if cum as f64 >= q * n {
                    return v;
                }
            }
            *counts.keys().next_back().expect("non-empty")
        };
        Ok(Self {
            mode: mode.0,
            q1: quantile(0.25),
            median: quantile(0.5),
            q3: quantile(0.75),
            pmf,
        })
    }

    /// Probability of `value` (zero if never drawn).
    pub fn prob(&self, value: usize) -> f64 {
        self.pmf
            .iter()
            .find(|(v, _)| *v == value)
            .map_or(0.0, |(_, p)| *p)
    }
}

/// Posterior distributions of `K` and `K₊`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorTable {
    pub k: DiscreteSummary,
    pub k_plus: DiscreteSummary,
}

pub fn posterior_table(k: &[usize], k_plus: &[usize]) -> Result<PosteriorTable> {
    if k.len() != k_plus.len() {
        return Err(Error::invalid("K and K+ traces differ in length"));
    }
    Ok(PosteriorTable {
        k: DiscreteSummary::from_draws(k)?,
        k_plus: DiscreteSummary::from_draws(k_plus)?,
    })
}

fn choose2(n: usize) -> f64 {
    let n = n as f64;
    n * (n - 1.0) / 2.0
}

/// Adjusted Rand index between two labelings of the same observations.
///
/// When both labelings put everything into a single cluster (or both into
/// singletons) the index is defined as 1.
pub fn adjusted_rand_index<A, B>(a: &[A], b: &[B]) -> Result<f64>
where
    A: Eq + Hash + Copy,
    B: Eq + Hash + Copy,
{
    if a.len() != b.len() {
        return Err(Error::invalid("labelings differ in length"));
    }
    if a.is_empty() {
        return Err(Error::invalid("labelings are empty"));
    }
    let mut joint: HashMap<(A, B), usize> = HashMap::new();
    let mut ra: HashMap<A, usize> = HashMap::new();
    let mut rb: HashMap<B, usize> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *joint.entry((x, y)).or_default() += 1;
        *ra.entry(x).or_default() += 1;
        *rb.entry(y).or_default() += 1;
    }
    let index: f64 = joint.values().map(|&c| choose2(c)).sum();
    let sa: f64 = ra.values().map(|&c| choose2(c)).sum();
    let sb: f64 = rb.values().map(|&c| choose2(c)).sum();
    let expected = sa * sb / choose2(a.len()).max(f64::MIN_POSITIVE);
    let max = 0.5 * (sa + sb);
    if (max - expected).abs() < 1e-12 {
        return Ok(if index == max { 1.0 } else { 0.0 });
    }
    Ok((index - expected) / (max - expected))
}

/// Autocorrelation estimate, or a marker for a constant series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Acf {
    /// Lags `0..=max_lag`; lag 0 is exactly 1.
    Values(Vec<f64>),
    /// The series has zero variance.
    Degenerate,
}

/// Sample autocorrelation with the biased (divide by `n`) normalization.
pub fn acf(series: &[f64], max_lag: usize) -> Result<Acf> {
    if series.len() <= max_lag {
        return Err(Error::invalid(format!(
            "series of length {} is too short for lag {max_lag}",
            series.len()
        )));
    }
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    let dev: Vec<f64> = series.iter().map(|x| x - mean).collect();
    let c0: f64 = dev.iter().map(|d| d * d).sum::<f64>() / n;
    if c0 <= 0.0 || !c0.is_finite() {
        return Ok(Acf::Degenerate);
    }
    Ok(Acf::Values(
        (0..=max_lag)
            .map(|h| {
                if h == 0 {
                    1.0
                } else {
                    dev.iter().zip(&dev[h..]).map(|(a, b)| a * b).sum::<f64>() / n / c0
                }
            })
            .collect(),
    ))
}
