//! Post-processing that resolves label switching by clustering component
//! draws in a feature space.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cluster::kmeans;
use crate::diagnostics::DiscreteSummary;
use crate::error::{Error, Result};

/// Posterior draws needed for identification. Draw `m` has `k_plus[m]`
/// filled components labelled `0..k_plus[m]`.
#[derive(Debug, Clone, Default)]
pub struct DrawSet {
    pub n_obs: usize,
    pub k_plus: Vec<usize>,
    /// Row-major `draws × n_obs` labels; empty when not recorded.
    pub allocations: Vec<u16>,
    /// `features[m][j]` is the feature vector of component `j` in draw `m`.
    pub features: Vec<Vec<Vec<f64>>>,
    /// `params[m][j]` holds all parameters of component `j` in draw `m`.
    pub params: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IdentifyOptions {
    pub restarts: usize,
    pub seed: u64,
}

impl Default for IdentifyOptions {
    fn default() -> Self {
        Self { restarts: 10, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentifiedModel {
    /// Posterior mode of the number of filled components.
    pub k_plus_hat: usize,
    /// Draws with `K₊ = k_plus_hat`.
    pub qualifying: usize,
    /// Qualifying draws whose classification is a permutation.
    pub retained: usize,
    /// Indices (into the draw set) of the retained draws.
    pub retained_draws: Vec<usize>,
    /// 0-based cluster of every observation, labels in order of first
    /// appearance; empty when allocations were not supplied.
    pub map_partition: Vec<usize>,
    /// `relabeled_params[r][l]`: parameters of cluster `l` in retained draw `r`.
    pub relabeled_params: Vec<Vec<Vec<f64>>>,
    /// Posterior means of the relabeled parameters per cluster.
    pub param_means: Vec<Vec<f64>>,
    /// Relabeled allocations of the retained draws, row-major.
    pub relabeled_allocations: Vec<u16>,
}

impl IdentifiedModel {
    pub fn retention_rate(&self) -> f64 {
        if self.qualifying == 0 {
            0.0
        } else {
            self.retained as f64 / self.qualifying as f64
        }
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k_plus_hat];
        for &l in &self.map_partition {
            sizes[l] += 1;
        }
        sizes
    }
}

fn standardize(points: &mut [Vec<f64>]) {
    let Some(dim) = points.first().map(Vec::len) else {
        return;
    };
    let n = points.len() as f64;
    for j in 0..dim {
        let mean = points.iter().map(|p| p[j]).sum::<f64>() / n;
        let var = points.iter().map(|p| (p[j] - mean).powi(2)).sum::<f64>() / n;
        let sd = if var > 0.0 { var.sqrt() } else { 1.0 };
        for p in points.iter_mut() {
            p[j] = (p[j] - mean) / sd;
        }
    }
}

/// Identifies a mixture with `K̂₊` components from posterior draws.
pub fn identify(draws: &DrawSet, opts: &IdentifyOptions) -> Result<IdentifiedModel> {
    let m = draws.k_plus.len();
    if m == 0 {
        return Err(Error::invalid("no posterior draws"));
    }
    if draws.features.len() != m {
        return Err(Error::invalid("features missing for some draws"));
    }
    if !draws.params.is_empty() && draws.params.len() != m {
        return Err(Error::invalid("parameters missing for some draws"));
    }
    let with_alloc = !draws.allocations.is_empty();
    if with_alloc && draws.allocations.len() != m * draws.n_obs {
        return Err(Error::invalid("allocation matrix has the wrong size"));
    }
    let k_hat = DiscreteSummary::from_draws(&draws.k_plus)?.mode;
    let qualifying: Vec<usize> = (0..m).filter(|&i| draws.k_plus[i] == k_hat).collect();

    let mut points = Vec::with_capacity(qualifying.len() * k_hat);
    for &i in &qualifying {
        if draws.features[i].len() != k_hat {
            return Err(Error::invalid(format!("draw {i} has inconsistent features")));
        }
        points.extend(draws.features[i].iter().cloned());
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::invalid("feature vectors differ in length"));
    }
    standardize(&mut points);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let labels = kmeans(&points, k_hat, opts.restarts, &mut rng)?.labels;

    let mut retained = Vec::new();
    let mut perms = Vec::new();
    for (q, &i) in qualifying.iter().enumerate() {
        let rho = &labels[q * k_hat..(q + 1) * k_hat];
        let mut seen = vec![false; k_hat];
        rho.iter().for_each(|&l| seen[l] = true);
        if seen.iter().all(|&s| s) {
            retained.push(i);
            perms.push(rho.to_vec());
        }
    }
    if retained.is_empty() {
        return Err(Error::Runtime(
            "no posterior draw yields a permutation of the cluster labels".into(),
        ));
    }

    let n = draws.n_obs;
    let mut relabeled_alloc = Vec::new();
    let mut map_partition = Vec::new();
    // Canonical order: clusters sorted by first appearance in the MAP
    // partition (or kept as k-means labels without allocations).
    let mut canon: Vec<usize> = (0..k_hat).collect();
    if with_alloc {
        relabeled_alloc.reserve(retained.len() * n);
        let mut votes = vec![vec![0u32; k_hat]; n];
        for (&i, rho) in retained.iter().zip(&perms) {
            for (v, &a) in votes.iter_mut().zip(&draws.allocations[i * n..(i + 1) * n]) {
                v[rho[a as usize]] += 1;
            }
        }
        let raw: Vec<usize> = votes
            .iter()
            .map(|v| {
                let mut best = 0;
                for (l, &c) in v.iter().enumerate() {
                    if c > v[best] {
                        best = l;
                    }
                }
                best
            })
            .collect();
        let mut next = 0;
        let mut assigned = vec![false; k_hat];
        for &l in &raw {
            if !assigned[l] {
                assigned[l] = true;
                canon[l] = next;
                next += 1;
            }
        }
        for l in 0..k_hat {
            if !assigned[l] {
                canon[l] = next;
                next += 1;
            }
        }
        map_partition = raw.iter().map(|&l| canon[l]).collect();
        for (&i, rho) in retained.iter().zip(&perms) {
            relabeled_alloc.extend(
                draws.allocations[i * n..(i + 1) * n]
                    .iter()
                    .map(|&a| canon[rho[a as usize]] as u16),
            );
        }
    }

    let mut relabeled_params = Vec::new();
    let mut param_means = Vec::new();
    if !draws.params.is_empty() {
        for (&i, rho) in retained.iter().zip(&perms) {
            let mut slots = vec![Vec::new(); k_hat];
            for (j, p) in draws.params[i].iter().enumerate() {
                slots[canon[rho[j]]] = p.clone();
            }
            relabeled_params.push(slots);
        }
        let r = relabeled_params.len() as f64;
        param_means = (0..k_hat)
            .map(|l| {
                let len = relabeled_params[0][l].len();
                (0..len)
                    .map(|c| relabeled_params.iter().map(|d| d[l][c]).sum::<f64>() / r)
                    .collect()
            })
            .collect();
    }

    Ok(IdentifiedModel {
        k_plus_hat: k_hat,
        qualifying: qualifying.len(),
        retained: retained.len(),
        retained_draws: retained,
        map_partition,
        relabeled_params,
        param_means,
        relabeled_allocations: relabeled_alloc,
    })
}
