//! Independent reference implementations used only by tests.
//!
//! Everything here is computed by enumeration or by elementary products so
//! that it shares no code path with the library under test.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

/// All set partitions of `{0..n}` as restricted growth strings.
pub fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, max: usize, n: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for b in 0..=max + 1 {
            prefix.push(b);
            rec(prefix, max.max(b), n, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    let mut prefix = vec![0];
    rec(&mut prefix, 0, n, &mut out);
    out
}

/// Block sizes of a restricted growth string, in order of first appearance.
pub fn block_sizes(rgs: &[usize]) -> Vec<usize> {
    let k = rgs.iter().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0; k];
    for &b in rgs {
        sizes[b] += 1;
    }
    sizes
}

/// Multiset of block sizes (sorted descending) with the number of set
/// partitions of `{0..n}` having that multiset, found by enumeration.
pub fn size_classes(n: usize) -> BTreeMap<Vec<usize>, usize> {
    let mut out = BTreeMap::new();
    for p in set_partitions(n) {
        let mut s = block_sizes(&p);
        s.sort_unstable_by(|a, b| b.cmp(a));
        *out.entry(s).or_insert(0) += 1;
    }
    out
}

/// All compositions of `n` into `k` positive ordered parts.
pub fn compositions(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return if n == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in 1..=n.saturating_sub(k - 1) {
        for mut rest in compositions(n - first, k - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Lanczos approximation of `ln Γ(x)` for `x > 0` (g = 7, 9 terms).
pub fn lgamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - lgamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + G + 0.5;
    for (i, c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Reference prior on `K`, evaluated through pmf ratios.
#[derive(Debug, Clone, Copy)]
pub enum RefPrior {
    PointMass(usize),
    Geometric(f64),
    /// `(a_lambda, a_pi, b_pi)`.
    Bnb(f64, f64, f64),
    Uniform(usize),
}

impl RefPrior {
    /// `(K, p(K))` pairs until the remaining mass is below `tail`.
    pub fn support(&self, tail: f64) -> Vec<(usize, f64)> {
        match *self {
            RefPrior::PointMass(k) => vec![(k, 1.0)],
            RefPrior::Uniform(m) => (1..=m).map(|k| (k, 1.0 / m as f64)).collect(),
            RefPrior::Geometric(pi) => {
                let mut out = Vec::new();
                let mut p = pi;
                let mut cum = 0.0;
                let mut k = 1;
                while 1.0 - cum > tail {
                    out.push((k, p));
                    cum += p;
                    p *= 1.0 - pi;
                    k += 1;
                }
                out
            }
            RefPrior::Bnb(al, ap, bp) => {
                // p(1) = B(al + ap, bp) / B(ap, bp), then successive ratios.
                let mut p = (lgamma(al + ap) + lgamma(ap + bp) - lgamma(ap) - lgamma(al + ap + bp)).exp();
                let mut out = Vec::new();
                let mut cum = 0.0;
                let mut k = 1usize;
                while 1.0 - cum > tail && k < 200_000 {
                    out.push((k, p));
                    cum += p;
                    let kf = k as f64;
                    p *= (al + kf - 1.0) / kf * (kf - 1.0 + bp) / (al + ap + kf - 1.0 + bp);
                    k += 1;
                }
                out
            }
        }
    }
}

/// `ln` of the probability of a fixed set partition with the given block
/// sizes under `K` components and Dirichlet parameter `g`, computed from
/// the sequential Pólya urn: the number of injective labelings times the
/// probability of one labeled allocation sequence.
pub fn urn_log_prob(sizes: &[usize], k: usize, g: f64) -> f64 {
    let kp = sizes.len();
    if kp > k {
        return f64::NEG_INFINITY;
    }
    let n: usize = sizes.iter().sum();
    let mut l = 0.0;
    for j in 0..kp {
        l += ((k - j) as f64).ln();
    }
    for &s in sizes {
        for m in 0..s {
            l += (m as f64 + g).ln();
        }
    }
    for i in 0..n {
        l -= (i as f64 + k as f64 * g).ln();
    }
    l
}

#[derive(Debug, Clone, Copy)]
pub enum RefScheme {
    Static(f64),
    Dynamic(f64),
}

impl RefScheme {
    pub fn gamma_k(self, k: usize) -> f64 {
        match self {
            RefScheme::Static(g) => g,
            RefScheme::Dynamic(a) => a / k as f64,
        }
    }
}

/// `P(K₊ = k)` for `k = 1..=n` by summing urn probabilities over every set
/// partition of `n` items and over the prior support of `K`.
pub fn brute_prior_k_plus(n: usize, prior: RefPrior, scheme: RefScheme) -> Vec<f64> {
    let classes = size_classes(n);
    let mut out = vec![0.0; n];
    for (k, pk) in prior.support(1e-13) {
        let g = scheme.gamma_k(k);
        for (sizes, &count) in &classes {
            let lp = urn_log_prob(sizes, k, g);
            if lp > f64::NEG_INFINITY {
                out[sizes.len() - 1] += pk * count as f64 * lp.exp();
            }
        }
    }
    out
}

/// Directory holding the benchmark data files, if present.
pub fn data_dir() -> Option<PathBuf> {
    let dir = std::env::var_os("MFM_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data"));
    dir.is_dir().then_some(dir)
}

pub fn data_file(name: &str) -> Option<PathBuf> {
    data_dir().map(|d| d.join(name)).filter(|p| p.is_file())
}
