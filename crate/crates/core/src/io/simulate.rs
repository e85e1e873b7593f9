use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::special::standard_normal;

/// Number of components of the benchmark mixture.
pub const SIM_COMPONENTS: usize = 8;

/// Component means of the benchmark mixture in `r` dimensions.
///
/// The two-dimensional means lie on the grid `{2, 6, 10, 14} × {0, 5}`. For
/// larger even `r` the two-dimensional block is repeated `r / 2` times and
/// scaled by `1 / sqrt(r / 2)`, which keeps every pairwise distance equal to
/// its two-dimensional value.
pub fn benchmark_means(r: usize) -> Result<Vec<Vec<f64>>> {
    if r == 0 || r % 2 == 1 {
        return Err(Error::invalid(format!("dimension must be even and positive, got {r}")));
    }
    let reps = r / 2;
    let scale = 1.0 / (reps as f64).sqrt();
    let xs = [2.0, 6.0, 10.0, 14.0];
    let ys = [0.0, 5.0];
    Ok((0..SIM_COMPONENTS)
        .map(|l| {
            let (x, y) = (xs[l / 2], ys[l % 2]);
            (0..reps).flat_map(|_| [x * scale, y * scale]).collect()
        })
        .collect())
}

/// Draws `n` observations from the equally weighted benchmark mixture with
/// identity covariances. Returns the data and 0-based component labels.
pub fn simulate_benchmark(r: usize, n: usize, seed: u64) -> Result<(Vec<Vec<f64>>, Vec<usize>)> {
    let means = benchmark_means(r)?;
    if n == 0 {
        return Err(Error::invalid("sample size must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let l = rng.random_range(0..SIM_COMPONENTS);
        data.push(means[l].iter().map(|m| m + standard_normal(&mut rng)).collect());
        labels.push(l);
    }
    Ok((data, labels))
}
