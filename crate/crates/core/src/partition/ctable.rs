use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use crate::error::{Error, Result};
use crate::special::ln_gamma;

/// Per-size weights `w_n` entering the composition sums `C_{N,k}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CWeights {
    /// `w_n = Γ(n + γ) / Γ(n + 1)`.
    Gamma(f64),
    /// `w_n = 1 / n`, the Dirichlet-process limit.
    Dpm,
}

impl CWeights {
    fn log_weights(self, n: usize) -> Vec<f64> {
        let mut w = vec![f64::NEG_INFINITY; n + 1];
        for (m, slot) in w.iter_mut().enumerate().skip(1) {
            let mf = m as f64;
            *slot = match self {
                CWeights::Gamma(g) => ln_gamma(mf + g) - ln_gamma(mf + 1.0),
                CWeights::Dpm => -mf.ln(),
            };
        }
        w
    }

    fn key(self) -> Option<i128> {
        match self {
            CWeights::Gamma(g) => Some((g * 1e15).round() as i128),
            CWeights::Dpm => None,
        }
    }

    fn validate(self) -> Result<()> {
        match self {
            CWeights::Gamma(g) if !(g.is_finite() && g > 0.0) => {
                Err(Error::invalid(format!("gamma must be positive, got {g}")))
            }
            _ => Ok(()),
        }
    }
}

/// Table of `ln C_{n,k}` for `1 <= k <= n <= N`, where `C_{n,k}` sums
/// `Π_j w_{n_j}` over all compositions of `n` into `k` positive parts.
#[derive(Debug, Clone)]
pub struct CTable {
    n: usize,
    rows: Vec<Vec<f64>>,
}

impl CTable {
    pub fn n(&self) -> usize {
        self.n
    }

    /// `ln C_{n,k}`; `-inf` when `k > n` or `k == 0`.
    pub fn log_c(&self, n: usize, k: usize) -> f64 {
        if k == 0 || k > n || n > self.n {
            return f64::NEG_INFINITY;
        }
        self.rows[k - 1][n]
    }
}

/// Advances one row of the recursion
/// `ln C_{n,k} = LSE_{m=1}^{n-k+1} (ln w_m + ln C_{n-m,k-1})`.
fn next_row(prev: &[f64], logw: &[f64], k: usize, out: &mut [f64], terms: &mut Vec<f64>) {
    let n_max = prev.len() - 1;
    out.fill(f64::NEG_INFINITY);
    for n in k..=n_max {
        terms.clear();
        let mut max = f64::NEG_INFINITY;
        for m in 1..=(n + 1 - k) {
            let t = logw[m] + prev[n - m];
            max = max.max(t);
            terms.push(t);
        }
        if max == f64::NEG_INFINITY {
            continue;
        }
        let s: f64 = terms.iter().map(|&t| (t - max).exp()).sum();
        out[n] = max + s.ln();
    }
}

/// Full table of `ln C_{n,k}` up to `n = N`.
pub fn c_table(n: usize, weights: CWeights) -> Result<CTable> {
    weights.validate()?;
    if n == 0 {
        return Err(Error::invalid("N must be at least 1"));
    }
    let logw = weights.log_weights(n);
    let mut rows = Vec::with_capacity(n);
    let mut first = logw.clone();
    first[0] = f64::NEG_INFINITY;
    rows.push(first);
    let mut terms = Vec::with_capacity(n);
    for k in 2..=n {
        let mut row = vec![f64::NEG_INFINITY; n + 1];
        next_row(&rows[k - 2], &logw, k, &mut row, &mut terms);
        rows.push(row);
    }
    Ok(CTable { n, rows })
}

/// `ln C_{N,k}` for `k = 1..=k_max` (index `k - 1`), without caching.
pub(crate) fn c_column_uncached(n: usize, k_max: usize, weights: CWeights) -> Vec<f64> {
    let k_max = k_max.min(n);
    let logw = weights.log_weights(n);
    let mut out = Vec::with_capacity(k_max);
    let mut prev = logw.clone();
    prev[0] = f64::NEG_INFINITY;
    out.push(prev[n]);
    let mut cur = vec![f64::NEG_INFINITY; n + 1];
    let mut terms = Vec::with_capacity(n);
    for k in 2..=k_max {
        next_row(&prev, &logw, k, &mut cur, &mut terms);
        out.push(cur[n]);
        std::mem::swap(&mut prev, &mut cur);
    }
    out
}

type ColumnCache = RwLock<HashMap<(usize, Option<i128>), Arc<Vec<f64>>>>;

const CACHE_CAPACITY: usize = 256;

fn cache() -> &'static ColumnCache {
    static CACHE: OnceLock<ColumnCache> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// `ln C_{N,k}` for `k = 1..=N`, memoized on `(N, weights)`.
pub(crate) fn c_column(n: usize, weights: CWeights) -> Arc<Vec<f64>> {
    let key = (n, weights.key());
    if let Some(hit) = cache().read().ok().and_then(|c| c.get(&key).cloned()) {
        return hit;
    }
    let col = Arc::new(c_column_uncached(n, n, weights));
    if let Ok(mut c) = cache().write() {
        if c.len() >= CACHE_CAPACITY {
            c.clear();
        }
        c.insert(key, Arc::clone(&col));
    }
    col
}

/// Drops all memoized composition sums.
pub fn clear_c_cache() {
    if let Ok(mut c) = cache().write() {
        c.clear();
    }
}
