//! Hard clustering used for sampler initialization and for identifying
//! components after sampling.

use rand::Rng;

use crate::error::{Error, Result};

/// Outcome of a k-means or k-modes run.
#[derive(Debug, Clone)]
pub struct Clustering<C> {
    pub centers: Vec<C>,
    pub labels: Vec<usize>,
    pub cost: f64,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the nearest center; ties go to the lowest index.
fn nearest(point: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centers.iter().enumerate() {
        let d = sq_dist(point, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn kmeans_pp<R: Rng + ?Sized>(points: &[Vec<f64>], k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut centers = vec![points[rng.random_range(0..points.len())].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let idx = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut pick = d2.len() - 1;
            for (i, &w) in d2.iter().enumerate() {
                if u < w {
                    pick = i;
                    break;
                }
                u -= w;
            }
            pick
        } else {
            rng.random_range(0..points.len())
        };
        centers.push(points[idx].clone());
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, centers.last().unwrap()));
        }
    }
    centers
}

fn lloyd(points: &[Vec<f64>], mut centers: Vec<Vec<f64>>, max_iter: usize) -> Clustering<Vec<f64>> {
    let dim = points[0].len();
    let k = centers.len();
    let mut labels = vec![usize::MAX; points.len()];
    for _ in 0..max_iter {
        let mut changed = false;
        for (l, p) in labels.iter_mut().zip(points) {
            let (j, _) = nearest(p, &centers);
            if *l != j {
                *l = j;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (&l, p) in labels.iter().zip(points) {
            counts[l] += 1;
            for (s, x) in sums[l].iter_mut().zip(p) {
                *s += x;
            }
        }
        for j in 0..k {
            // An emptied cluster keeps its previous center.
            if counts[j] > 0 {
                for (c, s) in centers[j].iter_mut().zip(&sums[j]) {
                    *c = s / counts[j] as f64;
                }
            }
        }
    }
    let cost = labels
        .iter()
        .zip(points)
        .map(|(&l, p)| sq_dist(p, &centers[l]))
        .sum();
    Clustering {
        centers,
        labels,
        cost,
    }
}

/// Lloyd's k-means with k-means++ seeding; the run with the smallest
/// within-cluster sum of squares over `restarts` seedings is returned.
pub fn kmeans<R: Rng + ?Sized>(
    points: &[Vec<f64>],
    k: usize,
    restarts: usize,
    rng: &mut R,
) -> Result<Clustering<Vec<f64>>> {
    if k == 0 || points.len() < k {
        return Err(Error::invalid(format!(
            "k-means needs 1 <= k <= number of points, got k={k} for {} points",
            points.len()
        )));
    }
    let mut best: Option<Clustering<Vec<f64>>> = None;
    for _ in 0..restarts.max(1) {
        let run = lloyd(points, kmeans_pp(points, k, rng), 300);
        if best.as_ref().is_none_or(|b| run.cost < b.cost) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn hamming(a: &[u16], b: &[u16]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

/// Huang's k-modes for categorical records; `levels[j]` is the number of
/// categories of variable `j`. Ties are resolved towards the lowest cluster
/// index and the lowest category code.
pub fn kmodes<R: Rng + ?Sized>(
    records: &[Vec<u16>],
    levels: &[usize],
    k: usize,
    rng: &mut R,
) -> Result<Clustering<Vec<u16>>> {
    if k == 0 || records.len() < k {
        return Err(Error::invalid(format!(
            "k-modes needs 1 <= k <= number of records, got k={k} for {} records",
            records.len()
        )));
    }
    let mut modes = vec![records[rng.random_range(0..records.len())].clone()];
    let mut dist: Vec<usize> = records.iter().map(|r| hamming(r, &modes[0])).collect();
    while modes.len() < k {
        let total: usize = dist.iter().sum();
        let idx = if total > 0 {
            let mut u = rng.random_range(0..total);
            let mut pick = 0;
            for (i, &d) in dist.iter().enumerate() {
                if u < d {
                    pick = i;
                    break;
                }
                u -= d;
            }
            pick
        } else {
            rng.random_range(0..records.len())
        };
        modes.push(records[idx].clone());
        for (d, r) in dist.iter_mut().zip(records) {
            *d = (*d).min(hamming(r, &records[idx]));
        }
    }
    let mut labels = vec![usize::MAX; records.len()];
    for _ in 0..100 {
        let mut changed = false;
        for (l, r) in labels.iter_mut().zip(records) {
            let mut best = (0, usize::MAX);
            for (j, m) in modes.iter().enumerate() {
                let d = hamming(r, m);
                if d < best.1 {
                    best = (j, d);
                }
            }
            if *l != best.0 {
                *l = best.0;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        for (j, mode) in modes.iter_mut().enumerate() {
            for (v, &nlev) in levels.iter().enumerate() {
                let mut counts = vec![0usize; nlev];
                for (r, _) in records.iter().zip(&labels).filter(|(_, &l)| l == j) {
                    counts[r[v] as usize] += 1;
                }
                if counts.iter().any(|&c| c > 0) {
                    let mut arg = 0;
                    for (c, &n) in counts.iter().enumerate() {
                        if n > counts[arg] {
                            arg = c;
                        }
                    }
                    mode[v] = arg as u16;
                }
            }
        }
    }
    let cost = labels
        .iter()
        .zip(records)
        .map(|(&l, r)| hamming(r, &modes[l]) as f64)
        .sum();
    Ok(Clustering {
        centers: modes,
        labels,
        cost,
    })
}
