//! Exchangeable partition probability functions, the induced prior on the
//! number of filled components, and related quantities.

mod ctable;
mod eppf;
mod kplus;

pub use ctable::{c_table, clear_c_cache, CTable, CWeights};
pub use eppf::{
    log_eppf_conditional, log_eppf_marginal, log_ewens, log_r_factor, log_v, log_v_static,
    prob_new_cluster_dynamic, static_v_recursion_check,
};
pub use kplus::{
    expected_k_plus, log_conditional_eppf_given_k_plus, prior_k_plus, Regime,
};

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::prior::{ComponentCountPrior, SupportWalk};
use crate::special::LogAccumulator;

/// Stop summing over `K` once the prior tail is below this mass...
pub(crate) const TAIL_TOL: f64 = 1e-12;
/// ...and the latest summand is below this fraction of the running total.
pub(crate) const REL_TOL: f64 = 1e-14;

/// Cluster sizes of a partition of `N` observations, in order of first
/// appearance.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PartitionSummary {
    sizes: Vec<usize>,
    n: usize,
}

impl PartitionSummary {
    pub fn from_sizes(sizes: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::invalid("a partition needs at least one cluster"));
        }
        if sizes.contains(&0) {
            return Err(Error::invalid("cluster sizes must be positive"));
        }
        let n = sizes.iter().sum();
        Ok(Self { sizes, n })
    }

    /// Cluster sizes from an allocation vector with arbitrary labels.
    pub fn from_allocations<L: Copy + Eq + std::hash::Hash>(labels: &[L]) -> Result<Self> {
        let mut index: HashMap<L, usize> = HashMap::new();
        let mut sizes = Vec::new();
        for &l in labels {
            let next = index.len();
            let j = *index.entry(l).or_insert(next);
            if j == sizes.len() {
                sizes.push(0);
            }
            sizes[j] += 1;
        }
        Self::from_sizes(sizes)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k_plus(&self) -> usize {
        self.sizes.len()
    }
}

/// `ln Σ_{K >= k_min} p(K) exp(term(K))`, truncated when both the prior
/// tail and the latest summand are negligible.
pub(crate) fn truncated_k_sum(
    prior: &ComponentCountPrior,
    k_min: usize,
    mut term: impl FnMut(usize) -> f64,
) -> f64 {
    let mut acc = LogAccumulator::new();
    let rel = REL_TOL.ln();
    for (k, lp, tail) in SupportWalk::new(prior, k_min) {
        let s = if lp == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            lp + term(k)
        };
        acc.add(s);
        if tail < TAIL_TOL {
            let total = acc.value();
            if s == f64::NEG_INFINITY || (total > f64::NEG_INFINITY && s - total < rel) {
                break;
            }
        }
    }
    acc.value()
}
