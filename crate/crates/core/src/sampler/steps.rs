//! Closed-form conditional densities used by the sampler's `K` and
//! concentration updates.

use crate::prior::{Hyperprior, WeightScheme};
use crate::special::{ln_factorial, ln_gamma};

/// Unnormalized `ln p(K | C, concentration)` for `K = K₊..=k_max`, where
/// `log_prior[K - 1] = ln p(K)`. Entry `K - K₊` belongs to `K`.
pub fn log_k_posterior_weights(
    sizes: &[usize],
    scheme: WeightScheme,
    value: f64,
    log_prior: &[f64],
) -> Vec<f64> {
    let kp = sizes.len();
    let k_max = log_prior.len();
    let n: usize = sizes.iter().sum();
    let nf = n as f64;
    (kp.max(1)..=k_max)
        .map(|k| {
            let lp = log_prior[k - 1];
            if lp == f64::NEG_INFINITY {
                return lp;
            }
            let kf = k as f64;
            let common = ln_factorial(k) - ln_factorial(k - kp);
            lp + common
                + match scheme {
                    WeightScheme::Static => ln_gamma(value * kf) - ln_gamma(nf + value * kf),
                    WeightScheme::Dynamic => {
                        let g = value / kf;
                        let lg1 = ln_gamma(1.0 + g);
                        kp as f64 * (value.ln() - kf.ln())
                            + sizes
                                .iter()
                                .map(|&s| ln_gamma(s as f64 + g) - lg1)
                                .sum::<f64>()
                    }
                }
        })
        .collect()
}

/// Unnormalized log full conditional of the concentration parameter given
/// the filled cluster sizes and `K`.
pub fn log_concentration_target(
    sizes: &[usize],
    k: usize,
    scheme: WeightScheme,
    hyper: &Hyperprior,
    value: f64,
) -> f64 {
    if !(value > 0.0) {
        return f64::NEG_INFINITY;
    }
    let nf: f64 = sizes.iter().sum::<usize>() as f64;
    let kf = k as f64;
    let lp = hyper.log_density(value);
    match scheme {
        WeightScheme::Dynamic => {
            let g = value / kf;
            let lg1 = ln_gamma(1.0 + g);
            lp + sizes.len() as f64 * value.ln() + ln_gamma(value) - ln_gamma(nf + value)
                + sizes.iter().map(|&s| ln_gamma(s as f64 + g) - lg1).sum::<f64>()
        }
        WeightScheme::Static => {
            // Γ(γ) = Γ(1 + γ) / γ keeps small γ accurate.
            let lg = ln_gamma(1.0 + value) - value.ln();
            lp + ln_gamma(value * kf) - ln_gamma(nf + value * kf)
                + sizes.iter().map(|&s| ln_gamma(s as f64 + value) - lg).sum::<f64>()
        }
    }
}

/// Log acceptance ratio of a random-walk proposal on `ln(value)`, including
/// the Jacobian `proposed / current`.
pub fn log_mh_ratio(
    sizes: &[usize],
    k: usize,
    scheme: WeightScheme,
    hyper: &Hyperprior,
    current: f64,
    proposed: f64,
) -> f64 {
    log_concentration_target(sizes, k, scheme, hyper, proposed)
        - log_concentration_target(sizes, k, scheme, hyper, current)
        + (proposed / current).ln()
}

/// Permutation that moves filled components to the front while keeping the
/// relative order within filled and within empty components. Entry `old`
/// holds the new index of component `old`.
pub fn filled_first_permutation(counts: &[usize]) -> Vec<usize> {
    let mut new_index = vec![0; counts.len()];
    let mut next = 0;
    for (old, &c) in counts.iter().enumerate() {
        if c > 0 {
            new_index[old] = next;
            next += 1;
        }
    }
    for (old, &c) in counts.iter().enumerate() {
        if c == 0 {
            new_index[old] = next;
            next += 1;
        }
    }
    new_index
}
