use crate::error::{Error, Result};
use crate::prior::{ComponentCountPrior, ConcentrationSpec};
use crate::special::{ln_factorial, ln_gamma, log_add, LogAccumulator};

use super::{truncated_k_sum, PartitionSummary};

fn check_gamma(gamma_k: f64) -> Result<()> {
    if gamma_k.is_finite() && gamma_k > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("gamma_K must be positive, got {gamma_k}")))
    }
}

/// `ln V^{K,γ}_{N,k} = ln [Γ(γK) K! / (Γ(γK + N) (K - k)!)]`; `-inf` if `K < k`.
pub fn log_v(n: usize, k_plus: usize, k: usize, gamma_k: f64) -> f64 {
    if k < k_plus {
        return f64::NEG_INFINITY;
    }
    let gk = gamma_k * k as f64;
    ln_gamma(gk) + ln_factorial(k) - ln_gamma(gk + n as f64) - ln_factorial(k - k_plus)
}

/// Log EPPF of a partition given `K` components and Dirichlet parameter
/// `gamma_k`. Returns `-inf` when the partition has more clusters than `K`.
pub fn log_eppf_conditional(p: &PartitionSummary, k: usize, gamma_k: f64) -> Result<f64> {
    check_gamma(gamma_k)?;
    if k == 0 {
        return Err(Error::invalid("K must be at least 1"));
    }
    Ok(log_eppf_conditional_unchecked(p, k, gamma_k))
}

pub(crate) fn log_eppf_conditional_unchecked(p: &PartitionSummary, k: usize, gamma_k: f64) -> f64 {
    let kp = p.k_plus();
    if k < kp {
        return f64::NEG_INFINITY;
    }
    let lg = ln_gamma(gamma_k);
    let body: f64 = p.sizes().iter().map(|&s| ln_gamma(s as f64 + gamma_k) - lg).sum();
    log_v(p.n(), kp, k, gamma_k) + body
}

/// Log EPPF with `K` integrated out under `prior`; the concentration must be
/// fixed.
pub fn log_eppf_marginal(
    p: &PartitionSummary,
    prior: &ComponentCountPrior,
    spec: &ConcentrationSpec,
) -> Result<f64> {
    spec.validate()?;
    let value = spec
        .fixed_value()
        .ok_or_else(|| Error::invalid("marginal EPPF needs a fixed concentration"))?;
    let scheme = spec.scheme();
    Ok(truncated_k_sum(prior, p.k_plus(), |k| {
        log_eppf_conditional_unchecked(p, k, scheme.gamma_k(value, k))
    }))
}

/// Log EPPF of the Dirichlet process (Ewens distribution).
pub fn log_ewens(p: &PartitionSummary, alpha: f64) -> Result<f64> {
    check_gamma(alpha)?;
    let body: f64 = p.sizes().iter().map(|&s| ln_gamma(s as f64)).sum();
    Ok(p.k_plus() as f64 * alpha.ln() + ln_gamma(alpha) - ln_gamma(alpha + p.n() as f64) + body)
}

/// `ln R_{N,K}(α)`, the factor turning the Ewens EPPF into the dynamic
/// finite-`K` EPPF with `γ_K = α/K`.
pub fn log_r_factor(p: &PartitionSummary, k: usize, alpha: f64) -> Result<f64> {
    check_gamma(alpha)?;
    if k == 0 {
        return Err(Error::invalid("K must be at least 1"));
    }
    Ok(log_r_unchecked(p, k, alpha))
}

fn log_r_unchecked(p: &PartitionSummary, k: usize, alpha: f64) -> f64 {
    if k < p.k_plus() {
        return f64::NEG_INFINITY;
    }
    let g = alpha / k as f64;
    let kf = k as f64;
    let lg1 = ln_gamma(1.0 + g);
    p.sizes()
        .iter()
        .enumerate()
        .map(|(j, &s)| {
            let s = s as f64;
            ln_gamma(s + g) - lg1 - ln_gamma(s) + ((kf - j as f64) / kf).ln()
        })
        .sum()
}

/// `ln Σ_K p(K) V^{K,γ}_{N,k}` for the static scheme.
pub fn log_v_static(n: usize, k_plus: usize, prior: &ComponentCountPrior, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    if k_plus == 0 || k_plus > n {
        return Err(Error::invalid(format!("need 1 <= k <= N, got k={k_plus}, N={n}")));
    }
    Ok(truncated_k_sum(prior, k_plus, |k| log_v(n, k_plus, k, gamma)))
}

/// Largest relative residual of the recursion
/// `V_{N,k} = (N + γk) V_{N+1,k} + γ V_{N+1,k+1}` over `k = 1..N-1`, with
/// every `V` the static `K`-sum under `prior`.
pub fn static_v_recursion_check(n: usize, prior: &ComponentCountPrior, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    if n < 2 {
        return Err(Error::invalid(format!("recursion check needs N >= 2, got {n}")));
    }
    let mut worst: f64 = 0.0;
    for k in 1..n {
        let lhs = truncated_k_sum(prior, k, |kk| log_v(n, k, kk, gamma));
        let a = truncated_k_sum(prior, k, |kk| log_v(n + 1, k, kk, gamma));
        let b = truncated_k_sum(prior, k + 1, |kk| log_v(n + 1, k + 1, kk, gamma));
        let rhs = log_add(((n as f64) + gamma * k as f64).ln() + a, gamma.ln() + b);
        if lhs == f64::NEG_INFINITY && rhs == f64::NEG_INFINITY {
            continue;
        }
        worst = worst.max((rhs - lhs).exp_m1().abs());
    }
    Ok(worst)
}

/// Prior predictive probability that observation `N + 1` opens a new
/// cluster under the dynamic scheme with fixed `α`.
pub fn prob_new_cluster_dynamic(
    p: &PartitionSummary,
    prior: &ComponentCountPrior,
    alpha: f64,
) -> Result<f64> {
    check_gamma(alpha)?;
    let kp = p.k_plus();
    let mut num = LogAccumulator::new();
    let log_den = truncated_k_sum(prior, kp, |k| {
        let r = log_r_unchecked(p, k, alpha);
        if k > kp {
            num.add(r + ((k - kp) as f64 / k as f64).ln() + prior.log_pmf_unchecked(k));
        }
        r
    });
    if log_den == f64::NEG_INFINITY {
        // The partition itself is impossible under `prior`.
        return Ok(0.0);
    }
    let n = p.n() as f64;
    Ok(alpha / (alpha + n) * (num.value() - log_den).exp())
}
