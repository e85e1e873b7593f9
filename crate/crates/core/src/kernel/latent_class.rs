use rand::Rng;
use serde_json::json;

use crate::cluster::kmodes;
use crate::error::{Error, Result};
use crate::special::ln_dirichlet_variate;

use super::ComponentKernel;

/// Category probabilities of one latent class: `log_probs[j][c]` is the log
/// probability that variable `j` takes category `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentClassTheta {
    pub log_probs: Vec<Vec<f64>>,
}

impl LatentClassTheta {
    pub fn probs(&self) -> Vec<Vec<f64>> {
        self.log_probs
            .iter()
            .map(|v| v.iter().map(|l| l.exp()).collect())
            .collect()
    }
}

/// Latent class components for multivariate categorical data with uniform
/// Dirichlet priors on every category distribution.
#[derive(Debug, Clone)]
pub struct LatentClassKernel {
    /// Number of categories of each variable.
    pub levels: Vec<usize>,
    pub prior_count: f64,
}

impl LatentClassKernel {
    pub fn new(levels: Vec<usize>) -> Result<Self> {
        if levels.is_empty() || levels.iter().any(|&l| l < 2 || l > u16::MAX as usize) {
            return Err(Error::Data(
                "every categorical variable needs between 2 and 65535 categories".into(),
            ));
        }
        Ok(Self {
            levels,
            prior_count: 1.0,
        })
    }

    /// Checks that records are 0-based codes within range.
    pub fn validate(&self, records: &[Vec<u16>]) -> Result<()> {
        for (i, r) in records.iter().enumerate() {
            if r.len() != self.levels.len() {
                return Err(Error::Data(format!(
                    "record {} has {} variables, expected {}",
                    i + 1,
                    r.len(),
                    self.levels.len()
                )));
            }
            if let Some((j, &c)) = r
                .iter()
                .enumerate()
                .find(|(j, &c)| c as usize >= self.levels[*j])
            {
                return Err(Error::Data(format!(
                    "record {}: category {} out of range for variable {}",
                    i + 1,
                    c as usize + 1,
                    j + 1
                )));
            }
        }
        Ok(())
    }

    fn counts(&self, data: &[&Vec<u16>]) -> Vec<Vec<f64>> {
        let mut counts: Vec<Vec<f64>> = self.levels.iter().map(|&l| vec![0.0; l]).collect();
        for y in data {
            for (c, &v) in counts.iter_mut().zip(y.iter()) {
                c[v as usize] += 1.0;
            }
        }
        counts
    }
}

impl ComponentKernel for LatentClassKernel {
    type Obs = Vec<u16>;
    type Theta = LatentClassTheta;
    type Phi = ();

    fn tag(&self) -> &'static str {
        "lca"
    }

    #[inline]
    fn log_density(&self, y: &Vec<u16>, t: &LatentClassTheta) -> f64 {
        y.iter()
            .zip(&t.log_probs)
            .map(|(&c, lp)| lp[c as usize])
            .sum()
    }

    fn draw_theta_prior<R: Rng + ?Sized>(&self, _phi: &(), rng: &mut R) -> LatentClassTheta {
        LatentClassTheta {
            log_probs: self
                .levels
                .iter()
                .map(|&l| ln_dirichlet_variate(&vec![self.prior_count; l], rng))
                .collect(),
        }
    }

    fn draw_theta_posterior<R: Rng + ?Sized>(
        &self,
        data: &[&Vec<u16>],
        _current: &LatentClassTheta,
        _phi: &(),
        rng: &mut R,
    ) -> LatentClassTheta {
        let counts = self.counts(data);
        LatentClassTheta {
            log_probs: counts
                .into_iter()
                .map(|c| {
                    let params: Vec<f64> = c.iter().map(|n| n + self.prior_count).collect();
                    ln_dirichlet_variate(&params, rng)
                })
                .collect(),
        }
    }

    fn draw_phi<R: Rng + ?Sized>(&self, _filled: &[LatentClassTheta], _phi: &(), _rng: &mut R) -> Result<()> {
        Ok(())
    }

    fn initial_phi(&self) {}

    fn initialize<R: Rng + ?Sized>(
        &self,
        data: &[Vec<u16>],
        k0: usize,
        rng: &mut R,
    ) -> Result<Vec<LatentClassTheta>> {
        let cl = kmodes(data, &self.levels, k0, rng)?;
        Ok((0..k0)
            .map(|j| {
                let members: Vec<&Vec<u16>> = data
                    .iter()
                    .zip(&cl.labels)
                    .filter(|(_, &l)| l == j)
                    .map(|(y, _)| y)
                    .collect();
                let counts = self.counts(&members);
                LatentClassTheta {
                    log_probs: counts
                        .into_iter()
                        .map(|c| {
                            let total: f64 = c.iter().map(|n| n + self.prior_count).sum();
                            c.iter().map(|n| ((n + self.prior_count) / total).ln()).collect()
                        })
                        .collect(),
                }
            })
            .collect())
    }

    fn features(&self, t: &LatentClassTheta) -> Vec<f64> {
        self.flatten(t)
    }

    fn flatten(&self, t: &LatentClassTheta) -> Vec<f64> {
        t.log_probs.iter().flatten().map(|l| l.exp()).collect()
    }

    fn constants(&self) -> serde_json::Value {
        json!({ "levels": self.levels, "prior_count": self.prior_count })
    }
}
