/// Full state of the telescoping sampler.
///
/// Components `0..k_plus()` are filled after each relabeling; `counts`,
/// `log_weights` and `thetas` always have length `k`.
#[derive(Debug, Clone)]
pub struct MixtureState<T, P> {
    pub k: usize,
    /// 0-based component index of every observation.
    pub allocations: Vec<usize>,
    pub counts: Vec<usize>,
    pub log_weights: Vec<f64>,
    pub thetas: Vec<T>,
    pub phi: P,
    pub concentration: f64,
}

impl<T, P> MixtureState<T, P> {
    pub fn k_plus(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    /// Sizes of the filled components in index order.
    pub fn filled_sizes(&self) -> Vec<usize> {
        self.counts.iter().copied().filter(|&c| c > 0).collect()
    }

    /// Checks the structural invariants, returning a description of the
    /// first violation.
    pub fn check(&self) -> Result<(), String> {
        if self.k == 0 {
            return Err("K must be at least 1".into());
        }
        if self.counts.len() != self.k || self.log_weights.len() != self.k || self.thetas.len() != self.k {
            return Err(format!(
                "length mismatch: K={}, counts={}, weights={}, thetas={}",
                self.k,
                self.counts.len(),
                self.log_weights.len(),
                self.thetas.len()
            ));
        }
        let mut tally = vec![0usize; self.k];
        for &a in &self.allocations {
            if a >= self.k {
                return Err(format!("allocation {a} out of range for K={}", self.k));
            }
            tally[a] += 1;
        }
        if tally != self.counts {
            return Err("counts disagree with allocations".into());
        }
        let kp = self.k_plus();
        if self.counts[..kp].contains(&0) {
            return Err("filled components are not in front".into());
        }
        let total: f64 = self.log_weights.iter().map(|l| l.exp()).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(format!("weights sum to {total}"));
        }
        Ok(())
    }
}
