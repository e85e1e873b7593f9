use rand::Rng;
use serde_json::json;

use crate::cluster::kmeans;
use crate::error::{Error, Result};
use crate::special::{gamma_variate, standard_normal};

use super::ComponentKernel;

/// Mean and variance of a univariate normal component, with cached terms
/// of its log density.
#[derive(Debug, Clone, PartialEq)]
pub struct UvnTheta {
    pub mu: f64,
    pub sigma2: f64,
    log_norm: f64,
    half_prec: f64,
}

impl UvnTheta {
    pub fn new(mu: f64, sigma2: f64) -> Self {
        Self {
            mu,
            sigma2,
            log_norm: -0.5 * (2.0 * std::f64::consts::PI * sigma2).ln(),
            half_prec: 0.5 / sigma2,
        }
    }
}

/// Univariate normal components with data-scaled hierarchical priors:
/// `μ ~ N(m, R²)`, `σ² ~ InvGamma(e0, C0)`, `C0 ~ Gamma(g0, G0)` (rate),
/// where `m` is the midpoint and `R` the range of the data.
#[derive(Debug, Clone)]
pub struct UnivariateNormalKernel {
    pub m: f64,
    pub range: f64,
    pub e0: f64,
    pub g0: f64,
    pub g0_rate: f64,
}

impl UnivariateNormalKernel {
    /// Defaults `e0 = 2`, `g0 = 0.2`, `G0 = 10 / R²`.
    pub fn from_data(y: &[f64]) -> Result<Self> {
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("observations must be finite".into()));
        }
        let lo = y.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let range = hi - lo;
        if !(range > 0.0) {
            return Err(Error::Data("data need at least two distinct values".into()));
        }
        Ok(Self {
            m: 0.5 * (lo + hi),
            range,
            e0: 2.0,
            g0: 0.2,
            g0_rate: 10.0 / (range * range),
        })
    }

    fn prior_var(&self) -> f64 {
        self.range * self.range
    }
}

fn variance(y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
}

impl ComponentKernel for UnivariateNormalKernel {
    type Obs = f64;
    type Theta = UvnTheta;
    type Phi = f64;

    fn tag(&self) -> &'static str {
        "uvn-rg"
    }

    #[inline]
    fn log_density(&self, y: &f64, t: &UvnTheta) -> f64 {
        let d = y - t.mu;
        t.log_norm - d * d * t.half_prec
    }

    fn draw_theta_prior<R: Rng + ?Sized>(&self, c0: &f64, rng: &mut R) -> UvnTheta {
        let mu = self.m + self.range * standard_normal(rng);
        let sigma2 = 1.0 / gamma_variate(self.e0, *c0, rng);
        UvnTheta::new(mu, sigma2)
    }

    fn draw_theta_posterior<R: Rng + ?Sized>(
        &self,
        data: &[&f64],
        current: &UvnTheta,
        c0: &f64,
        rng: &mut R,
    ) -> UvnTheta {
        let n = data.len() as f64;
        let sum: f64 = data.iter().copied().sum();
        let prec = 1.0 / self.prior_var() + n / current.sigma2;
        let mean = (self.m / self.prior_var() + sum / current.sigma2) / prec;
        let mu = mean + standard_normal(rng) / prec.sqrt();
        let ss: f64 = data.iter().map(|&&y| (y - mu) * (y - mu)).sum();
        let sigma2 = 1.0 / gamma_variate(self.e0 + 0.5 * n, c0 + 0.5 * ss, rng);
        UvnTheta::new(mu, sigma2)
    }

    fn draw_phi<R: Rng + ?Sized>(&self, filled: &[UvnTheta], _c0: &f64, rng: &mut R) -> Result<f64> {
        let shape = self.g0 + self.e0 * filled.len() as f64;
        let rate = self.g0_rate + filled.iter().map(|t| 1.0 / t.sigma2).sum::<f64>();
        Ok(gamma_variate(shape, rate, rng))
    }

    fn initial_phi(&self) -> f64 {
        self.g0 / self.g0_rate
    }

    fn initialize<R: Rng + ?Sized>(&self, data: &[f64], k0: usize, rng: &mut R) -> Result<Vec<UvnTheta>> {
        let pts: Vec<Vec<f64>> = data.iter().map(|&y| vec![y]).collect();
        let cl = kmeans(&pts, k0, 1, rng)?;
        let var = variance(data);
        Ok(cl.centers.iter().map(|c| UvnTheta::new(c[0], var)).collect())
    }

    fn features(&self, t: &UvnTheta) -> Vec<f64> {
        vec![t.mu]
    }

    fn flatten(&self, t: &UvnTheta) -> Vec<f64> {
        vec![t.mu, t.sigma2]
    }

    fn constants(&self) -> serde_json::Value {
        json!({
            "m": self.m,
            "R": self.range,
            "e0": self.e0,
            "g0": self.g0,
            "G0": self.g0_rate,
        })
    }
}
