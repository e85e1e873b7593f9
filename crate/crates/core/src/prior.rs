//! Priors on the number of components `K` and on the concentration
//! parameter of the component-weight Dirichlet distribution.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{gamma_variate, ln_beta, ln_gamma};

/// Largest `K` visited when summing over an unbounded prior support.
pub const HARD_K_CAP: usize = 100_000;

/// Prior on the number of mixture components, supported on `K >= 1`.
///
/// Poisson, negative binomial, geometric and beta-negative-binomial priors
/// are translated so that `K - 1` follows the named distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PriorTag", into = "PriorTag")]
pub enum ComponentCountPrior {
    Poisson { lambda: f64 },
    NegBin { a_lambda: f64, beta: f64 },
    Geometric { pi: f64 },
    BetaNegBin { a_lambda: f64, a_pi: f64, b_pi: f64 },
    Uniform { k_max: usize },
    PointMass { k: usize },
}

/// Serialized form: a family tag plus a flat parameter list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorTag {
    pub family: String,
    #[serde(default)]
    pub params: Vec<f64>,
}

fn positive(name: &str, x: f64) -> Result<f64> {
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(Error::invalid(format!("{name} must be positive and finite, got {x}")))
    }
}

fn count(name: &str, x: f64) -> Result<usize> {
    if x.is_finite() && x >= 1.0 && x.fract() == 0.0 && x <= usize::MAX as f64 {
        Ok(x as usize)
    } else {
        Err(Error::invalid(format!("{name} must be a positive integer, got {x}")))
    }
}

impl ComponentCountPrior {
    pub fn poisson(lambda: f64) -> Result<Self> {
        Ok(Self::Poisson {
            lambda: positive("lambda", lambda)?,
        })
    }

    pub fn negbin(a_lambda: f64, beta: f64) -> Result<Self> {
        Ok(Self::NegBin {
            a_lambda: positive("a_lambda", a_lambda)?,
            beta: positive("beta", beta)?,
        })
    }

    pub fn geometric(pi: f64) -> Result<Self> {
        if !(pi > 0.0 && pi <= 1.0) {
            return Err(Error::invalid(format!("pi must lie in (0, 1], got {pi}")));
        }
        Ok(Self::Geometric { pi })
    }

    pub fn beta_negbin(a_lambda: f64, a_pi: f64, b_pi: f64) -> Result<Self> {
        Ok(Self::BetaNegBin {
            a_lambda: positive("a_lambda", a_lambda)?,
            a_pi: positive("a_pi", a_pi)?,
            b_pi: positive("b_pi", b_pi)?,
        })
    }

    pub fn uniform(k_max: usize) -> Result<Self> {
        if k_max == 0 {
            return Err(Error::invalid("uniform prior needs k_max >= 1"));
        }
        Ok(Self::Uniform { k_max })
    }

    pub fn point_mass(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("point mass must sit on K >= 1"));
        }
        Ok(Self::PointMass { k })
    }

    /// Builds a prior from its family tag and parameter list.
    pub fn from_tag(family: &str, params: &[f64]) -> Result<Self> {
        let want = |n: usize| -> Result<()> {
            if params.len() == n {
                Ok(())
            } else {
                Err(Error::invalid(format!(
                    "prior '{family}' takes {n} parameter(s), got {}",
                    params.len()
                )))
            }
        };
        match family.to_ascii_lowercase().as_str() {
            "poisson" => {
                want(1)?;
                Self::poisson(params[0])
            }
            "negbin" => {
                want(2)?;
                Self::negbin(params[0], params[1])
            }
            "geometric" => {
                want(1)?;
                Self::geometric(params[0])
            }
            "bnb" => {
                want(3)?;
                Self::beta_negbin(params[0], params[1], params[2])
            }
            "uniform" => {
                want(1)?;
                Self::uniform(count("k_max", params[0])?)
            }
            "pointmass" => {
                want(1)?;
                Self::point_mass(count("k", params[0])?)
            }
            other => Err(Error::invalid(format!("unknown prior family '{other}'"))),
        }
    }

    pub fn tag(&self) -> PriorTag {
        let (family, params) = match *self {
            Self::Poisson { lambda } => ("poisson", vec![lambda]),
            Self::NegBin { a_lambda, beta } => ("negbin", vec![a_lambda, beta]),
            Self::Geometric { pi } => ("geometric", vec![pi]),
            Self::BetaNegBin { a_lambda, a_pi, b_pi } => ("bnb", vec![a_lambda, a_pi, b_pi]),
            Self::Uniform { k_max } => ("uniform", vec![k_max as f64]),
            Self::PointMass { k } => ("pointmass", vec![k as f64]),
        };
        PriorTag {
            family: family.to_string(),
            params,
        }
    }

    /// Smallest `K` with positive mass.
    pub fn support_min(&self) -> usize {
        match *self {
            Self::PointMass { k } => k,
            _ => 1,
        }
    }

    /// Largest `K` with positive mass, if bounded.
    pub fn support_max(&self) -> Option<usize> {
        match *self {
            Self::Uniform { k_max } => Some(k_max),
            Self::PointMass { k } => Some(k),
            Self::Geometric { pi: 1.0 } => Some(1),
            _ => None,
        }
    }

    /// `ln p(K)`; `-inf` outside the support.
    pub fn log_pmf(&self, k: usize) -> Result<f64> {
        if k == 0 {
            return Err(Error::invalid("K must be at least 1"));
        }
        Ok(self.log_pmf_unchecked(k))
    }

    pub(crate) fn log_pmf_unchecked(&self, k: usize) -> f64 {
        let km1 = (k - 1) as f64;
        match *self {
            Self::Poisson { lambda } => km1 * lambda.ln() - ln_gamma(k as f64) - lambda,
            Self::NegBin { a_lambda, beta } => {
                ln_gamma(a_lambda + km1) - ln_gamma(a_lambda) - ln_gamma(k as f64)
                    + a_lambda * (beta / (beta + 1.0)).ln()
                    - km1 * (beta + 1.0).ln()
            }
            Self::Geometric { pi } => {
                if k == 1 {
                    pi.ln()
                } else {
                    pi.ln() + km1 * (-pi).ln_1p()
                }
            }
            Self::BetaNegBin { a_lambda, a_pi, b_pi } => {
                ln_gamma(a_lambda + km1) + ln_beta(a_lambda + a_pi, km1 + b_pi)
                    - ln_gamma(a_lambda)
                    - ln_gamma(k as f64)
                    - ln_beta(a_pi, b_pi)
            }
            Self::Uniform { k_max } => {
                if k <= k_max {
                    -(k_max as f64).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            Self::PointMass { k: k0 } => {
                if k == k0 {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    pub fn pmf(&self, k: usize) -> Result<f64> {
        self.log_pmf(k).map(f64::exp)
    }

    /// Prior mean of `K`; `+inf` when it does not exist.
    pub fn mean(&self) -> f64 {
        match *self {
            Self::Poisson { lambda } => lambda + 1.0,
            Self::NegBin { a_lambda, beta } => 1.0 + a_lambda / beta,
            Self::Geometric { pi } => 1.0 / pi,
            Self::BetaNegBin { a_lambda, a_pi, b_pi } => {
                if a_pi > 1.0 {
                    1.0 + a_lambda * b_pi / (a_pi - 1.0)
                } else {
                    f64::INFINITY
                }
            }
            Self::Uniform { k_max } => (k_max as f64 + 1.0) / 2.0,
            Self::PointMass { k } => k as f64,
        }
    }

    /// `P(K > k)`.
    ///
    /// Families without a closed form use `1 - Σ_{j<=k} p(j)`, which is
    /// monotone in `k` and accurate to a few ulps in absolute terms.
    pub fn tail_mass(&self, k: usize) -> f64 {
        match *self {
            Self::Uniform { k_max } => {
                if k >= k_max {
                    0.0
                } else {
                    (k_max - k) as f64 / k_max as f64
                }
            }
            Self::PointMass { k: k0 } => {
                if k < k0 {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Geometric { pi } => ((-pi).ln_1p() * k as f64).exp(),
            _ => {
                let mut cum = 0.0;
                for j in 1..=k {
                    cum += self.log_pmf_unchecked(j).exp();
                }
                (1.0 - cum).max(0.0)
            }
        }
    }
}

impl TryFrom<PriorTag> for ComponentCountPrior {
    type Error = Error;

    fn try_from(tag: PriorTag) -> Result<Self> {
        Self::from_tag(&tag.family, &tag.params)
    }
}

impl From<ComponentCountPrior> for PriorTag {
    fn from(p: ComponentCountPrior) -> Self {
        p.tag()
    }
}

impl fmt::Display for ComponentCountPrior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = self.tag();
        let params: Vec<String> = tag.params.iter().map(|p| p.to_string()).collect();
        write!(f, "{}({})", tag.family, params.join(","))
    }
}

/// Walks `K` upward over the prior support and keeps the running tail mass,
/// so that truncated sums over `K` do not recompute cumulative probabilities.
pub(crate) struct SupportWalk<'a> {
    prior: &'a ComponentCountPrior,
    next: usize,
    last: usize,
    cum: f64,
}

impl<'a> SupportWalk<'a> {
    /// Starts at `max(k_min, support_min)`.
    pub(crate) fn new(prior: &'a ComponentCountPrior, k_min: usize) -> Self {
        let start = k_min.max(prior.support_min()).max(1);
        let last = prior.support_max().unwrap_or(HARD_K_CAP);
        let cum = match prior {
            ComponentCountPrior::BetaNegBin { .. }
            | ComponentCountPrior::Poisson { .. }
            | ComponentCountPrior::NegBin { .. } => (1..start)
                .map(|j| prior.log_pmf_unchecked(j).exp())
                .sum(),
            _ => 0.0,
        };
        Self {
            prior,
            next: start,
            last,
            cum,
        }
    }
}

impl Iterator for SupportWalk<'_> {
    /// `(K, ln p(K), P(K' > K))`.
    type Item = (usize, f64, f64);

    fn next(&mut self) -> Option<Self::Item> {
        if self.next > self.last {
            return None;
        }
        let k = self.next;
        self.next += 1;
        let lp = self.prior.log_pmf_unchecked(k);
        let tail = match self.prior {
            ComponentCountPrior::BetaNegBin { .. }
            | ComponentCountPrior::Poisson { .. }
            | ComponentCountPrior::NegBin { .. } => {
                self.cum += lp.exp();
                (1.0 - self.cum).max(0.0)
            }
            _ => self.prior.tail_mass(k),
        };
        Some((k, lp, tail))
    }
}

/// Prior on a concentration parameter (`γ` or `α`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Hyperprior {
    /// F distribution with `nu_l` numerator and `nu_r` denominator degrees
    /// of freedom.
    F { nu_l: f64, nu_r: f64 },
    /// Gamma distribution with shape/rate parameterization.
    Gamma { shape: f64, rate: f64 },
}

impl Hyperprior {
    pub fn f(nu_l: f64, nu_r: f64) -> Result<Self> {
        Ok(Self::F {
            nu_l: positive("nu_l", nu_l)?,
            nu_r: positive("nu_r", nu_r)?,
        })
    }

    pub fn gamma(shape: f64, rate: f64) -> Result<Self> {
        Ok(Self::Gamma {
            shape: positive("shape", shape)?,
            rate: positive("rate", rate)?,
        })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::F { nu_l, nu_r } => Self::f(nu_l, nu_r).map(|_| ()),
            Self::Gamma { shape, rate } => Self::gamma(shape, rate).map(|_| ()),
        }
    }

    /// Log density at `x > 0`.
    pub fn log_density(&self, x: f64) -> f64 {
        if !(x > 0.0) {
            return f64::NEG_INFINITY;
        }
        match *self {
            Self::F { nu_l, nu_r } => {
                let (h1, h2) = (0.5 * nu_l, 0.5 * nu_r);
                h1 * (nu_l / nu_r).ln() + (h1 - 1.0) * x.ln()
                    - (h1 + h2) * (nu_l * x / nu_r).ln_1p()
                    - ln_beta(h1, h2)
            }
            Self::Gamma { shape, rate } => {
                shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * x.ln() - rate * x
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Self::F { nu_r, .. } => {
                if nu_r > 2.0 {
                    nu_r / (nu_r - 2.0)
                } else {
                    f64::INFINITY
                }
            }
            Self::Gamma { shape, rate } => shape / rate,
        }
    }

    /// Starting value for samplers: the prior mean when finite, else 1.
    pub fn default_start(&self) -> f64 {
        let m = self.mean();
        if m.is_finite() {
            m
        } else {
            1.0
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::F { nu_l, nu_r } => {
                let a = gamma_variate(0.5 * nu_l, 0.5, rng) / nu_l;
                let b = gamma_variate(0.5 * nu_r, 0.5, rng) / nu_r;
                a / b
            }
            Self::Gamma { shape, rate } => gamma_variate(shape, rate, rng),
        }
    }
}

/// How the Dirichlet parameter `γ_K` depends on `K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightScheme {
    /// `γ_K = γ` for every `K`.
    Static,
    /// `γ_K = α / K`.
    Dynamic,
}

impl WeightScheme {
    #[inline]
    pub fn gamma_k(self, value: f64, k: usize) -> f64 {
        match self {
            Self::Static => value,
            Self::Dynamic => value / k as f64,
        }
    }
}

/// Concentration setting of a mixture-of-finite-mixtures model: the weight
/// scheme plus either a fixed value or a hyperprior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ConcentrationSpec {
    StaticFixed { gamma: f64 },
    StaticPrior {
        prior: Hyperprior,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        init: Option<f64>,
    },
    DynamicFixed { alpha: f64 },
    DynamicPrior {
        prior: Hyperprior,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        init: Option<f64>,
    },
}

impl ConcentrationSpec {
    pub fn static_fixed(gamma: f64) -> Result<Self> {
        Ok(Self::StaticFixed {
            gamma: positive("gamma", gamma)?,
        })
    }

    pub fn dynamic_fixed(alpha: f64) -> Result<Self> {
        Ok(Self::DynamicFixed {
            alpha: positive("alpha", alpha)?,
        })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::StaticFixed { gamma } => positive("gamma", gamma).map(|_| ()),
            Self::DynamicFixed { alpha } => positive("alpha", alpha).map(|_| ()),
            Self::StaticPrior { prior, init } | Self::DynamicPrior { prior, init } => {
                prior.validate()?;
                if let Some(x) = init {
                    positive("initial concentration", x)?;
                }
                Ok(())
            }
        }
    }

    pub fn scheme(&self) -> WeightScheme {
        match self {
            Self::StaticFixed { .. } | Self::StaticPrior { .. } => WeightScheme::Static,
            Self::DynamicFixed { .. } | Self::DynamicPrior { .. } => WeightScheme::Dynamic,
        }
    }

    pub fn hyperprior(&self) -> Option<&Hyperprior> {
        match self {
            Self::StaticPrior { prior, .. } | Self::DynamicPrior { prior, .. } => Some(prior),
            _ => None,
        }
    }

    /// The fixed value, or the starting value of a sampled concentration.
    pub fn initial_value(&self) -> f64 {
        match *self {
            Self::StaticFixed { gamma } => gamma,
            Self::DynamicFixed { alpha } => alpha,
            Self::StaticPrior { prior, init } | Self::DynamicPrior { prior, init } => {
                init.unwrap_or_else(|| prior.default_start())
            }
        }
    }

    pub fn fixed_value(&self) -> Option<f64> {
        match *self {
            Self::StaticFixed { gamma } => Some(gamma),
            Self::DynamicFixed { alpha } => Some(alpha),
            _ => None,
        }
    }

    /// `γ_K` under a fixed concentration.
    pub fn gamma_for(&self, k: usize) -> Result<f64> {
        if k == 0 {
            return Err(Error::invalid("K must be at least 1"));
        }
        let v = self
            .fixed_value()
            .ok_or_else(|| Error::invalid("concentration is not fixed"))?;
        Ok(self.scheme().gamma_k(v, k))
    }

    /// Log hyperprior density at `x`; fails for fixed concentrations.
    pub fn log_density_concentration(&self, x: f64) -> Result<f64> {
        self.hyperprior()
            .map(|h| h.log_density(x))
            .ok_or_else(|| Error::invalid("concentration has no hyperprior"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bnb_reference_values() {
        let p = ComponentCountPrior::beta_negbin(1.0, 4.0, 3.0).unwrap();
        assert!((p.pmf(1).unwrap() - 4.0 / 7.0).abs() < 1e-14);
        assert!((p.mean() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn heavy_bnb_has_infinite_mean() {
        let p = ComponentCountPrior::beta_negbin(1.0, 1.0, 1.0).unwrap();
        assert!(p.mean().is_infinite());
    }

    #[test]
    fn geometric_mean_and_tail() {
        let p = ComponentCountPrior::geometric(0.1).unwrap();
        assert!((p.mean() - 10.0).abs() < 1e-12);
        assert!((p.tail_mass(3) - 0.729).abs() < 1e-12);
        let q = ComponentCountPrior::geometric(1.0).unwrap();
        assert_eq!(q.pmf(1).unwrap(), 1.0);
        assert_eq!(q.pmf(2).unwrap(), 0.0);
    }

    #[test]
    fn k_zero_is_rejected() {
        let p = ComponentCountPrior::poisson(3.0).unwrap();
        assert!(matches!(p.log_pmf(0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(ComponentCountPrior::poisson(0.0).is_err());
        assert!(ComponentCountPrior::geometric(1.5).is_err());
        assert!(ComponentCountPrior::beta_negbin(1.0, -1.0, 3.0).is_err());
        assert!(ComponentCountPrior::from_tag("bnb", &[1.0, 4.0]).is_err());
        assert!(ComponentCountPrior::from_tag("zeta", &[1.0]).is_err());
        assert!(ComponentCountPrior::from_tag("uniform", &[2.5]).is_err());
    }

    #[test]
    fn tag_round_trip() {
        let p = ComponentCountPrior::from_tag("bnb", &[1.0, 4.0, 3.0]).unwrap();
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(json, r#"{"family":"bnb","params":[1.0,4.0,3.0]}"#);
        let back: ComponentCountPrior = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn f_hyperprior_mode_and_mean() {
        let h = Hyperprior::f(6.0, 3.0).unwrap();
        assert!((h.mean() - 3.0).abs() < 1e-15);
        let mode = 0.4;
        let d = h.log_density(mode);
        assert!(d > h.log_density(mode - 1e-3) && d > h.log_density(mode + 1e-3));
    }

    #[test]
    fn gamma_hyperprior_density_at_origin() {
        let h = Hyperprior::gamma(1.0, 20.0).unwrap();
        assert!((h.log_density(1e-12).exp() - 20.0).abs() < 1e-9);
    }

    #[test]
    fn gamma_for_dynamic() {
        let c = ConcentrationSpec::dynamic_fixed(2.0).unwrap();
        assert_eq!(c.gamma_for(4).unwrap(), 0.5);
        let s = ConcentrationSpec::static_fixed(2.0).unwrap();
        assert_eq!(s.gamma_for(4).unwrap(), 2.0);
        let p = ConcentrationSpec::DynamicPrior {
            prior: Hyperprior::f(6.0, 3.0).unwrap(),
            init: None,
        };
        assert!(p.gamma_for(2).is_err());
        assert!(s.log_density_concentration(1.0).is_err());
    }

    #[test]
    fn support_walk_tracks_tail() {
        let p = ComponentCountPrior::beta_negbin(1.0, 4.0, 3.0).unwrap();
        let mut walk = SupportWalk::new(&p, 3);
        let (k, lp, tail) = walk.next().unwrap();
        assert_eq!(k, 3);
        assert!((lp - p.log_pmf(3).unwrap()).abs() < 1e-15);
        assert!((tail - p.tail_mass(3)).abs() < 1e-15);
    }
}
