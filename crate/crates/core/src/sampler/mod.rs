//! Telescoping sampler for mixtures of finite mixtures.
//!
//! Each sweep updates allocations, component parameters, hyperparameters,
//! the number of components `K`, the concentration parameter, and the
//! component weights. `K` moves only through the conditional on the filled
//! components, so no reversible-jump moves are required.

mod state;
pub mod steps;

pub use state::MixtureState;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::ComponentKernel;
use crate::prior::{ComponentCountPrior, ConcentrationSpec, WeightScheme};
use crate::special::{ln_dirichlet_variate, sample_log_categorical, standard_normal};

use steps::{filled_first_permutation, log_k_posterior_weights, log_mh_ratio};

/// Target acceptance rate of the optional step-size adaptation.
const TARGET_ACCEPTANCE: f64 = 0.44;
const ADAPT_BATCH: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    /// Sweeps kept after burn-in (before thinning).
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    /// Largest number of components considered when sampling `K`.
    pub k_max: usize,
    /// Number of components at initialization.
    pub k0: usize,
    /// Standard deviation of the log-scale random walk on the concentration.
    pub mh_step: f64,
    /// Tune `mh_step` towards a 0.44 acceptance rate during burn-in.
    pub adapt_mh: bool,
    pub seed: u64,
    /// Independent stream index, so chains sharing a seed differ.
    pub chain: u64,
    pub record_allocations: bool,
    pub record_parameters: bool,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            iterations: 10_000,
            burn_in: 1_000,
            thin: 1,
            k_max: 100,
            k0: 15,
            mh_step: 1.0,
            adapt_mh: false,
            seed: 0,
            chain: 0,
            record_allocations: false,
            record_parameters: false,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.thin == 0 {
            return Err(Error::Config("thin must be at least 1".into()));
        }
        if self.k_max == 0 || self.k_max > u16::MAX as usize {
            return Err(Error::Config("k_max must lie in 1..=65535".into()));
        }
        if self.k0 == 0 || self.k0 > self.k_max {
            return Err(Error::Config(format!(
                "k0 must lie in 1..=k_max ({}), got {}",
                self.k_max, self.k0
            )));
        }
        if !(self.mh_step.is_finite() && self.mh_step > 0.0) {
            return Err(Error::Config("mh_step must be positive".into()));
        }
        Ok(())
    }
}

/// Summary of one retained sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrawRecord {
    /// 1-based sweep number counted from the first post-burn-in sweep.
    pub iteration: usize,
    pub k: usize,
    pub k_plus: usize,
    pub concentration: f64,
    pub accepted: bool,
}

/// Output of a sampler run.
#[derive(Debug, Clone)]
pub struct SamplerTrace<T> {
    pub n_obs: usize,
    pub records: Vec<DrawRecord>,
    /// Row-major `records.len() × n_obs` 0-based labels of filled
    /// components, when recorded.
    pub allocations: Vec<u16>,
    /// Parameters of the filled components per retained draw, when recorded.
    pub parameters: Vec<Vec<T>>,
    /// Acceptance rate of the concentration update over all sweeps.
    pub acceptance_rate: f64,
    /// Step size in effect after burn-in.
    pub mh_step: f64,
}

impl<T> SamplerTrace<T> {
    pub fn allocation_row(&self, draw: usize) -> Option<&[u16]> {
        let n = self.n_obs;
        self.allocations.get(draw * n..(draw + 1) * n)
    }
}

pub struct TelescopingSampler<'a, K: ComponentKernel> {
    kernel: &'a K,
    data: &'a [K::Obs],
    prior: ComponentCountPrior,
    concentration: ConcentrationSpec,
    config: SamplerConfig,
    log_prior: Vec<f64>,
    k_init: usize,
}

impl<'a, K: ComponentKernel> TelescopingSampler<'a, K> {
    pub fn new(
        kernel: &'a K,
        data: &'a [K::Obs],
        prior: ComponentCountPrior,
        concentration: ConcentrationSpec,
        config: SamplerConfig,
    ) -> Result<Self> {
        config.validate()?;
        concentration.validate()?;
        if data.is_empty() {
            return Err(Error::Data("no observations".into()));
        }
        if data.len() > u32::MAX as usize {
            return Err(Error::Data("too many observations".into()));
        }
        let log_prior: Vec<f64> = (1..=config.k_max).map(|k| prior.log_pmf_unchecked(k)).collect();
        if log_prior.iter().all(|&l| l == f64::NEG_INFINITY) {
            return Err(Error::Config(format!(
                "prior {prior} puts no mass on 1..={}",
                config.k_max
            )));
        }
        // Start inside the prior support.
        let mut k_init = config.k0;
        if log_prior[k_init - 1] == f64::NEG_INFINITY {
            k_init = (1..=config.k_max)
                .filter(|&k| log_prior[k - 1] > f64::NEG_INFINITY)
                .min_by_key(|&k| k.abs_diff(config.k0))
                .expect("support is non-empty");
        }
        Ok(Self {
            kernel,
            data,
            prior,
            concentration,
            config,
            log_prior,
            k_init,
        })
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.config
    }

    pub fn prior(&self) -> &ComponentCountPrior {
        &self.prior
    }

    pub fn concentration(&self) -> &ConcentrationSpec {
        &self.concentration
    }

    /// Random number generator for this chain.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_stream(self.config.chain);
        rng
    }

    /// Clusters the data into `k0` groups and sets equal weights.
    pub fn initialize<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<MixtureState<K::Theta, K::Phi>> {
        let k = self.k_init;
        let phi = self.kernel.initial_phi();
        let mut thetas = self.kernel.initialize(self.data, k.min(self.data.len()), rng)?;
        while thetas.len() < k {
            thetas.push(self.kernel.draw_theta_prior(&phi, rng));
        }
        Ok(MixtureState {
            k,
            allocations: vec![0; self.data.len()],
            counts: {
                let mut c = vec![0; k];
                c[0] = self.data.len();
                c
            },
            log_weights: vec![-(k as f64).ln(); k],
            thetas,
            phi,
            concentration: self.concentration.initial_value(),
        })
    }

    /// Step 1: allocations given weights and parameters, then relabeling so
    /// that filled components come first.
    pub fn update_allocations<R: Rng + ?Sized>(&self, s: &mut MixtureState<K::Theta, K::Phi>, rng: &mut R) {
        let mut lw = vec![0.0; s.k];
        s.counts.iter_mut().for_each(|c| *c = 0);
        for (y, a) in self.data.iter().zip(s.allocations.iter_mut()) {
            for ((w, t), slot) in s.log_weights.iter().zip(&s.thetas).zip(lw.iter_mut()) {
                *slot = w + self.kernel.log_density(y, t);
            }
            *a = sample_log_categorical(&lw, rng);
            s.counts[*a] += 1;
        }
        relabel(s);
    }

    /// Step 2: parameters of the filled components and hyperparameters.
    pub fn update_parameters<R: Rng + ?Sized>(
        &self,
        s: &mut MixtureState<K::Theta, K::Phi>,
        rng: &mut R,
    ) -> Result<()> {
        let kp = s.k_plus();
        let mut members: Vec<Vec<&K::Obs>> = s.counts[..kp].iter().map(|&c| Vec::with_capacity(c)).collect();
        for (y, &a) in self.data.iter().zip(&s.allocations) {
            members[a].push(y);
        }
        for (j, m) in members.iter().enumerate() {
            s.thetas[j] = self.kernel.draw_theta_posterior(m, &s.thetas[j], &s.phi, rng);
        }
        s.phi = self.kernel.draw_phi(&s.thetas[..kp], &s.phi, rng)?;
        Ok(())
    }

    /// Step 3a: `K` given the partition and the concentration.
    pub fn update_k<R: Rng + ?Sized>(&self, s: &mut MixtureState<K::Theta, K::Phi>, rng: &mut R) {
        let sizes = s.filled_sizes();
        let w = log_k_posterior_weights(&sizes, self.concentration.scheme(), s.concentration, &self.log_prior);
        s.k = sizes.len() + sample_log_categorical(&w, rng);
    }

    /// Step 3b: random-walk Metropolis–Hastings on the log concentration.
    /// Returns whether the proposal was accepted.
    pub fn update_concentration<R: Rng + ?Sized>(
        &self,
        s: &mut MixtureState<K::Theta, K::Phi>,
        step: f64,
        rng: &mut R,
    ) -> bool {
        let Some(hyper) = self.concentration.hyperprior() else {
            return false;
        };
        let current = s.concentration;
        let proposed = current * (step * standard_normal(rng)).exp();
        let sizes = s.filled_sizes();
        let log_ratio = log_mh_ratio(&sizes, s.k, self.concentration.scheme(), hyper, current, proposed);
        if rng.random::<f64>().ln() < log_ratio {
            s.concentration = proposed;
            true
        } else {
            false
        }
    }

    /// Step 4: fresh empty components from the prior and new weights.
    pub fn update_weights<R: Rng + ?Sized>(&self, s: &mut MixtureState<K::Theta, K::Phi>, rng: &mut R) {
        let kp = s.k_plus();
        s.thetas.truncate(kp);
        for _ in kp..s.k {
            s.thetas.push(self.kernel.draw_theta_prior(&s.phi, rng));
        }
        s.counts.resize(s.k, 0);
        let g = self.concentration.scheme().gamma_k(s.concentration, s.k);
        let params: Vec<f64> = s.counts.iter().map(|&c| g + c as f64).collect();
        s.log_weights = ln_dirichlet_variate(&params, rng);
    }

    /// One full sweep; returns whether the concentration move was accepted.
    pub fn sweep<R: Rng + ?Sized>(
        &self,
        s: &mut MixtureState<K::Theta, K::Phi>,
        step: f64,
        rng: &mut R,
    ) -> Result<bool> {
        self.update_allocations(s, rng);
        self.update_parameters(s, rng)?;
        self.update_k(s, rng);
        let accepted = self.update_concentration(s, step, rng);
        self.update_weights(s, rng);
        Ok(accepted)
    }

    /// Runs burn-in plus the configured number of sweeps.
    pub fn run(&self) -> Result<SamplerTrace<K::Theta>> {
        self.run_with(|_, _| {})
    }

    /// Like [`run`](Self::run) but calls `observe` with every retained state.
    pub fn run_with(
        &self,
        mut observe: impl FnMut(&DrawRecord, &MixtureState<K::Theta, K::Phi>),
    ) -> Result<SamplerTrace<K::Theta>> {
        let cfg = &self.config;
        let mut rng = self.rng();
        let mut state = self.initialize(&mut rng)?;
        let n = self.data.len();
        let kept = cfg.iterations / cfg.thin + usize::from(!cfg.iterations.is_multiple_of(cfg.thin));
        let mut trace = SamplerTrace {
            n_obs: n,
            records: Vec::with_capacity(kept),
            allocations: Vec::with_capacity(if cfg.record_allocations { kept * n } else { 0 }),
            parameters: Vec::new(),
            acceptance_rate: 0.0,
            mh_step: cfg.mh_step,
        };
        let mut step = cfg.mh_step;
        let (mut accepts, mut batch_accepts, mut batches) = (0usize, 0usize, 0usize);
        let sampled = self.concentration.hyperprior().is_some();

        for t in 0..cfg.burn_in + cfg.iterations {
            let accepted = self.sweep(&mut state, step, &mut rng)?;
            accepts += usize::from(accepted);
            if t < cfg.burn_in && cfg.adapt_mh && sampled {
                batch_accepts += usize::from(accepted);
                if (t + 1) % ADAPT_BATCH == 0 {
                    batches += 1;
                    let delta = (1.0 / (batches as f64).sqrt()).min(0.05);
                    let rate = batch_accepts as f64 / ADAPT_BATCH as f64;
                    step *= if rate > TARGET_ACCEPTANCE { delta.exp() } else { (-delta).exp() };
                    batch_accepts = 0;
                }
            }
            if t < cfg.burn_in || !(t - cfg.burn_in).is_multiple_of(cfg.thin) {
                continue;
            }
            let rec = DrawRecord {
                iteration: t - cfg.burn_in + 1,
                k: state.k,
                k_plus: state.k_plus(),
                concentration: state.concentration,
                accepted,
            };
            if cfg.record_allocations {
                trace.allocations.extend(state.allocations.iter().map(|&a| a as u16));
            }
            if cfg.record_parameters {
                trace.parameters.push(state.thetas[..rec.k_plus].to_vec());
            }
            observe(&rec, &state);
            trace.records.push(rec);
        }
        let total = cfg.burn_in + cfg.iterations;
        trace.acceptance_rate = if total > 0 { accepts as f64 / total as f64 } else { 0.0 };
        trace.mh_step = step;
        Ok(trace)
    }
}

/// Applies the filled-first permutation jointly to counts, weights,
/// parameters and allocations.
pub fn relabel<T, P>(s: &mut MixtureState<T, P>) {
    let new_index = filled_first_permutation(&s.counts);
    if new_index.iter().enumerate().all(|(i, &j)| i == j) {
        return;
    }
    let k = s.k;
    let mut order = vec![0; k];
    for (old, &new) in new_index.iter().enumerate() {
        order[new] = old;
    }
    s.counts = order.iter().map(|&o| s.counts[o]).collect();
    s.log_weights = order.iter().map(|&o| s.log_weights[o]).collect();
    let mut slots: Vec<Option<T>> = s.thetas.drain(..).map(Some).collect();
    s.thetas = order.iter().map(|&o| slots[o].take().expect("permutation")).collect();
    for a in &mut s.allocations {
        *a = new_index[*a];
    }
}

impl WeightScheme {
    /// Human-readable name used in reports.
    pub fn name(self) -> &'static str {
        match self {
            WeightScheme::Static => "static",
            WeightScheme::Dynamic => "dynamic",
        }
    }
}
