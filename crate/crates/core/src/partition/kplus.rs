use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prior::{ComponentCountPrior, ConcentrationSpec, SupportWalk, WeightScheme};
use crate::special::{ln_factorial, ln_gamma, log_sum_exp, LogAccumulator};

use super::ctable::{c_column, c_column_uncached, CWeights};
use super::eppf::{log_eppf_conditional_unchecked, log_v};
use super::{truncated_k_sum, PartitionSummary, REL_TOL, TAIL_TOL};

/// Prior specification under which the distribution of the number of filled
/// components is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "regime", rename_all = "snake_case")]
pub enum Regime {
    /// `K` random, `γ_K = γ`.
    Static { gamma: f64 },
    /// `K` random, `γ_K = α / K`.
    Dynamic { alpha: f64 },
    /// Dirichlet process mixture with concentration `α`.
    Dpm { alpha: f64 },
    /// Finite mixture with `K` fixed and `γ_K = γ`.
    FixedK { k: usize, gamma: f64 },
}

impl Regime {
    /// Regime implied by a fixed concentration specification.
    pub fn from_spec(spec: &ConcentrationSpec) -> Result<Self> {
        let v = spec
            .fixed_value()
            .ok_or_else(|| Error::invalid("regime needs a fixed concentration"))?;
        Ok(match spec.scheme() {
            WeightScheme::Static => Regime::Static { gamma: v },
            WeightScheme::Dynamic => Regime::Dynamic { alpha: v },
        })
    }

    fn validate(&self) -> Result<()> {
        let v = match *self {
            Regime::Static { gamma } | Regime::FixedK { gamma, .. } => gamma,
            Regime::Dynamic { alpha } | Regime::Dpm { alpha } => alpha,
        };
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::invalid(format!("concentration must be positive, got {v}")));
        }
        if let Regime::FixedK { k: 0, .. } = self {
            return Err(Error::invalid("fixed K must be at least 1"));
        }
        Ok(())
    }
}

/// `ln N!/k! - k ln Γ(γ) + ln C_{N,k}` summed with `ln V`, the generic
/// per-`k` term shared by the finite-`K` regimes.
fn log_kplus_term(n: usize, k: usize, log_v: f64, gamma: f64, log_c: f64) -> f64 {
    ln_factorial(n) - ln_factorial(k) + log_v - k as f64 * ln_gamma(gamma) + log_c
}

/// Prior distribution of the number of filled components `K₊` for `N`
/// observations. Entry `k - 1` holds `P(K₊ = k)`. Priors with mass beyond
/// [`HARD_K_CAP`](crate::prior::HARD_K_CAP) are conditioned on `K` not
/// exceeding it.
pub fn prior_k_plus(n: usize, prior: &ComponentCountPrior, regime: &Regime) -> Result<Vec<f64>> {
    Ok(log_prior_k_plus(n, prior, regime)?
        .into_iter()
        .map(f64::exp)
        .collect())
}

pub(crate) fn log_prior_k_plus(
    n: usize,
    prior: &ComponentCountPrior,
    regime: &Regime,
) -> Result<Vec<f64>> {
    regime.validate()?;
    if n == 0 {
        return Err(Error::invalid("N must be at least 1"));
    }
    let ln_nf = ln_factorial(n);
    let mut out = match *regime {
        Regime::Dpm { alpha } => {
            let c = c_column(n, CWeights::Dpm);
            let base = ln_gamma(alpha) - ln_gamma(alpha + n as f64) + ln_nf;
            (1..=n)
                .map(|k| base - ln_factorial(k) + k as f64 * alpha.ln() + c[k - 1])
                .collect()
        }
        Regime::FixedK { k: kk, gamma } => {
            let c = c_column(n, CWeights::Gamma(gamma));
            (1..=n)
                .map(|k| log_kplus_term(n, k, log_v(n, k, kk, gamma), gamma, c[k - 1]))
                .collect()
        }
        Regime::Static { gamma } => {
            let c = c_column(n, CWeights::Gamma(gamma));
            (1..=n)
                .map(|k| {
                    let lv = truncated_k_sum(prior, k, |kk| log_v(n, k, kk, gamma));
                    log_kplus_term(n, k, lv, gamma, c[k - 1])
                })
                .collect()
        }
        Regime::Dynamic { alpha } => dynamic_log_k_plus(n, prior, alpha),
    };
    let total = log_sum_exp(&out);
    out.iter_mut().for_each(|l| *l -= total);
    Ok(out)
}

/// Dynamic scheme: a fresh composition table per `K` because `γ_K = α/K`.
fn dynamic_log_k_plus(n: usize, prior: &ComponentCountPrior, alpha: f64) -> Vec<f64> {
    let mut acc = vec![LogAccumulator::new(); n];
    let mut total = LogAccumulator::new();
    let rel = REL_TOL.ln();
    for (k, lp, tail) in SupportWalk::new(prior, 1) {
        if lp == f64::NEG_INFINITY {
            if tail < TAIL_TOL {
                break;
            }
            continue;
        }
        let g = alpha / k as f64;
        let kmax = k.min(n);
        let c = c_column_uncached(n, kmax, CWeights::Gamma(g));
        let mut this = LogAccumulator::new();
        for kp in 1..=kmax {
            let t = lp + log_kplus_term(n, kp, log_v(n, kp, k, g), g, c[kp - 1]);
            acc[kp - 1].add(t);
            this.add(t);
        }
        let s = this.value();
        total.add(s);
        if tail < TAIL_TOL && s - total.value() < rel {
            break;
        }
    }
    acc.iter().map(LogAccumulator::value).collect()
}

/// `E[K₊]` for `N` observations.
pub fn expected_k_plus(n: usize, prior: &ComponentCountPrior, regime: &Regime) -> Result<f64> {
    Ok(prior_k_plus(n, prior, regime)?
        .iter()
        .enumerate()
        .map(|(i, p)| (i + 1) as f64 * p)
        .sum())
}

/// Log probability of the ordered cluster sizes `(N_1, ..., N_k)` given
/// `K₊ = k`, with clusters labelled in exchangeable random order. The
/// result is normalized over all compositions of `N` into `k` parts.
pub fn log_conditional_eppf_given_k_plus(
    p: &PartitionSummary,
    prior: &ComponentCountPrior,
    regime: &Regime,
) -> Result<f64> {
    regime.validate()?;
    let n = p.n();
    let k = p.k_plus();
    let sizes = p.sizes();
    let ln_size_fact: f64 = sizes.iter().map(|&s| ln_factorial(s)).sum();
    Ok(match *regime {
        Regime::Dpm { .. } => {
            let c = c_column(n, CWeights::Dpm);
            -sizes.iter().map(|&s| (s as f64).ln()).sum::<f64>() - c[k - 1]
        }
        Regime::Static { gamma } | Regime::FixedK { gamma, .. } => {
            if let Regime::FixedK { k: kk, .. } = *regime {
                if kk < k {
                    return Ok(f64::NEG_INFINITY);
                }
            }
            let c = c_column(n, CWeights::Gamma(gamma));
            sizes.iter().map(|&s| ln_gamma(s as f64 + gamma)).sum::<f64>() - ln_size_fact - c[k - 1]
        }
        Regime::Dynamic { alpha } => {
            let num = truncated_k_sum(prior, k, |kk| {
                log_eppf_conditional_unchecked(p, kk, alpha / kk as f64)
            });
            num + ln_factorial(n) - ln_factorial(k) - ln_size_fact
                - log_prior_k_plus(n, prior, regime)?[k - 1]
        }
    })
}
