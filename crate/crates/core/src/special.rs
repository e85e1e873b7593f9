//! Log-domain numerical helpers and random variate primitives shared across
//! the crate.

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

/// Natural log of the Gamma function for positive arguments.
#[inline]
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// `ln(n!)`.
#[inline]
pub fn ln_factorial(n: usize) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

#[inline]
pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// `ln(a + b)` given `ln a` and `ln b`.
#[inline]
pub fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln Σ exp(x_i)`; returns `-inf` for an empty slice or all `-inf` inputs.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + xs.iter().map(|&x| (x - max).exp()).sum::<f64>().ln()
}

/// Streaming log-sum-exp accumulator.
#[derive(Debug, Clone, Copy)]
pub struct LogAccumulator {
    max: f64,
    scaled: f64,
}

impl Default for LogAccumulator {
    fn default() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            scaled: 0.0,
        }
    }
}

impl LogAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x <= self.max {
            self.scaled += (x - self.max).exp();
        } else {
            self.scaled = self.scaled * (self.max - x).exp() + 1.0;
            self.max = x;
        }
    }

    /// Current value of `ln Σ exp(x_i)`.
    pub fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled.ln()
        }
    }
}

/// Samples an index from unnormalized log-weights.
///
/// Entries equal to `-inf` are never selected. Panics if every weight is
/// `-inf`, which callers rule out by construction.
pub fn sample_log_categorical<R: Rng + ?Sized>(log_weights: &[f64], rng: &mut R) -> usize {
    let max = log_weights
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    assert!(max > f64::NEG_INFINITY, "all categorical weights are zero");
    let total: f64 = log_weights.iter().map(|&w| (w - max).exp()).sum();
    let mut u = rng.random::<f64>() * total;
    let mut last = 0;
    for (k, &w) in log_weights.iter().enumerate() {
        if w == f64::NEG_INFINITY {
            continue;
        }
        let p = (w - max).exp();
        if u < p {
            return k;
        }
        u -= p;
        last = k;
    }
    last
}

/// Draws `ln X` for `X ~ Gamma(shape, 1)`.
///
/// Small shapes go through `X = Y · U^{1/shape}` with `Y ~ Gamma(shape + 1)`
/// so that the result stays finite even when `X` underflows.
pub fn ln_gamma_variate<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    debug_assert!(shape > 0.0);
    if shape < 1.0 {
        let y = Gamma::new(shape + 1.0, 1.0)
            .expect("positive shape")
            .sample(rng);
        let u: f64 = rng.random::<f64>();
        // ln(0) is impossible: random::<f64>() is in [0, 1), guard anyway.
        let u = if u > 0.0 { u } else { f64::MIN_POSITIVE };
        y.ln() + u.ln() / shape
    } else {
        Gamma::new(shape, 1.0)
            .expect("positive shape")
            .sample(rng)
            .ln()
    }
}

/// Gamma variate with shape/rate parameterization.
pub fn gamma_variate<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> f64 {
    Gamma::new(shape, 1.0 / rate)
        .expect("positive gamma parameters")
        .sample(rng)
}

#[inline]
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Draws from `Dirichlet(params)` and returns normalized log-weights.
pub fn ln_dirichlet_variate<R: Rng + ?Sized>(params: &[f64], rng: &mut R) -> Vec<f64> {
    let mut logs: Vec<f64> = params.iter().map(|&a| ln_gamma_variate(a, rng)).collect();
    let norm = log_sum_exp(&logs);
    for l in &mut logs {
        *l -= norm;
    }
    logs
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn log_sum_exp_matches_direct() {
        let xs = [0.1f64.ln(), 0.2f64.ln(), 0.7f64.ln()];
        assert!((log_sum_exp(&xs)).abs() < 1e-15);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        let mut acc = LogAccumulator::new();
        for x in xs {
            acc.add(x);
        }
        assert!(acc.value().abs() < 1e-15);
    }

    #[test]
    fn accumulator_handles_large_spread() {
        let mut acc = LogAccumulator::new();
        acc.add(-1000.0);
        acc.add(1000.0);
        acc.add(f64::NEG_INFINITY);
        assert!((acc.value() - 1000.0).abs() < 1e-12);
    }

    #[test]
    fn ln_gamma_known_values() {
        assert!((ln_gamma(5.0) - 24f64.ln()).abs() < 1e-14);
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-14);
        assert!((ln_factorial(10) - 3628800f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn categorical_skips_zero_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let k = sample_log_categorical(&[f64::NEG_INFINITY, 0.0, f64::NEG_INFINITY], &mut rng);
            assert_eq!(k, 1);
        }
    }

    #[test]
    fn small_shape_gamma_stays_finite() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut mean = 0.0;
        let n = 200_000;
        for _ in 0..n {
            let l = ln_gamma_variate(0.01, &mut rng);
            assert!(l.is_finite());
            mean += l.exp();
        }
        mean /= n as f64;
        // E[X] = shape; the sample mean is heavy-tailed, use a loose bound.
        assert!((mean - 0.01).abs() < 0.003, "mean {mean}");
    }

    #[test]
    fn dirichlet_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let params = [2.0, 3.0, 5.0];
        let n = 100_000;
        let mut acc = [0.0; 3];
        for _ in 0..n {
            let w = ln_dirichlet_variate(&params, &mut rng);
            let s: f64 = w.iter().map(|x| x.exp()).sum();
            assert!((s - 1.0).abs() < 1e-12);
            for (a, x) in acc.iter_mut().zip(&w) {
                *a += x.exp();
            }
        }
        for (a, p) in acc.iter().zip(params) {
            assert!((a / n as f64 - p / 10.0).abs() < 0.005);
        }
    }
}
