mod common;

use common::lgamma;
use mfm::kernel::{ConstantKernel, UnivariateNormalKernel, UvnTheta};
use mfm::partition::{prior_k_plus, Regime};
use mfm::prior::{ComponentCountPrior, ConcentrationSpec, Hyperprior};
use mfm::sampler::steps::{filled_first_permutation, log_mh_ratio};
use mfm::sampler::{relabel, MixtureState, SamplerConfig, TelescopingSampler};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn config(iterations: usize, burn_in: usize, seed: u64) -> SamplerConfig {
    SamplerConfig {
        iterations,
        burn_in,
        seed,
        ..SamplerConfig::default()
    }
}

fn constant_state(k: usize, allocations: Vec<usize>, concentration: f64) -> MixtureState<(), ()> {
    let mut counts = vec![0; k];
    for &a in &allocations {
        counts[a] += 1;
    }
    MixtureState {
        k,
        allocations,
        counts,
        log_weights: vec![-(k as f64).ln(); k],
        thetas: vec![(); k],
        phi: (),
        concentration,
    }
}

fn empirical_pmf(values: impl Iterator<Item = usize>, len: usize) -> Vec<f64> {
    let mut counts = vec![0usize; len + 1];
    let mut total = 0usize;
    for v in values {
        counts[v.min(len)] += 1;
        total += 1;
    }
    counts.iter().map(|&c| c as f64 / total as f64).collect()
}

#[test]
fn single_component_allocates_everything_together() {
    let y: Vec<f64> = (0..20).map(|i| i as f64).collect();
    let kernel = UnivariateNormalKernel::from_data(&y).unwrap();
    let prior = ComponentCountPrior::point_mass(1).unwrap();
    let spec = ConcentrationSpec::static_fixed(1.0).unwrap();
    let s = TelescopingSampler::new(&kernel, &y, prior, spec, config(200, 10, 1)).unwrap();
    let trace = s.run().unwrap();
    assert!(trace.records.iter().all(|r| r.k == 1 && r.k_plus == 1));
}

#[test]
fn zero_weight_components_are_never_selected() {
    let y: Vec<f64> = (0..50).map(|i| i as f64 * 0.3).collect();
    let kernel = UnivariateNormalKernel::from_data(&y).unwrap();
    let s = TelescopingSampler::new(
        &kernel,
        &y,
        ComponentCountPrior::uniform(5).unwrap(),
        ConcentrationSpec::static_fixed(1.0).unwrap(),
        config(1, 0, 2),
    )
    .unwrap();
    let mut rng = s.rng();
    let mut st = s.initialize(&mut rng).unwrap();
    st.log_weights = vec![f64::NEG_INFINITY; st.k];
    st.log_weights[0] = 0.0;
    s.update_allocations(&mut st, &mut rng);
    assert!(st.allocations.iter().all(|&a| a == 0));
    assert_eq!(st.k_plus(), 1);
}

#[test]
fn separated_components_capture_their_points() {
    let y: Vec<f64> = (0..40).map(|i| if i % 2 == 0 { -10.0 + 0.01 * i as f64 } else { 10.0 - 0.01 * i as f64 }).collect();
    let kernel = UnivariateNormalKernel::from_data(&y).unwrap();
    let s = TelescopingSampler::new(
        &kernel,
        &y,
        ComponentCountPrior::point_mass(2).unwrap(),
        ConcentrationSpec::static_fixed(1.0).unwrap(),
        config(1, 0, 3),
    )
    .unwrap();
    let mut rng = s.rng();
    let mut st = s.initialize(&mut rng).unwrap();
    for _ in 0..1000 {
        st.thetas = vec![UvnTheta::new(-10.0, 1.0), UvnTheta::new(10.0, 1.0)];
        st.log_weights = vec![0.5f64.ln(); 2];
        s.update_allocations(&mut st, &mut rng);
        for (yi, &a) in y.iter().zip(&st.allocations) {
            assert_eq!(st.thetas[a].mu.signum(), yi.signum());
        }
    }
}

#[test]
fn relabel_examples() {
    assert_eq!(filled_first_permutation(&[3, 1, 0, 0]), vec![0, 1, 2, 3]);
    let mut st = constant_state(3, vec![2, 2, 2], 1.0);
    st.log_weights = vec![0.1f64.ln(), 0.2f64.ln(), 0.7f64.ln()];
    relabel(&mut st);
    assert_eq!(st.counts, vec![3, 0, 0]);
    assert!(st.allocations.iter().all(|&a| a == 0));
    assert!((st.log_weights[0] - 0.7f64.ln()).abs() < 1e-15);
    assert_eq!(st.k_plus(), 1);

    let mut st = constant_state(5, vec![4, 1, 4, 3], 1.0);
    relabel(&mut st);
    assert_eq!(st.counts, vec![1, 1, 2, 0, 0]);
    assert_eq!(st.allocations, vec![2, 0, 2, 1]);
}

#[test]
fn point_mass_prior_pins_k() {
    let data = vec![(); 12];
    let s = TelescopingSampler::new(
        &ConstantKernel,
        &data,
        ComponentCountPrior::point_mass(7).unwrap(),
        ConcentrationSpec::dynamic_fixed(1.0).unwrap(),
        config(2000, 0, 4),
    )
    .unwrap();
    assert!(s.run().unwrap().records.iter().all(|r| r.k == 7));
}

#[test]
fn k_update_matches_direct_normalization() {
    let data = vec![(); 3];
    let prior = ComponentCountPrior::geometric(0.5).unwrap();
    let s = TelescopingSampler::new(
        &ConstantKernel,
        &data,
        prior.clone(),
        ConcentrationSpec::dynamic_fixed(1.0).unwrap(),
        config(1, 0, 5),
    )
    .unwrap();
    let sizes = [2.0, 1.0];
    let alpha = 1.0;
    let log_w: Vec<f64> = (2..=100usize)
        .map(|k| {
            let kf = k as f64;
            let g = alpha / kf;
            kf * 0.5f64.ln() + lgamma(kf + 1.0) - lgamma(kf - 1.0)
                + sizes.iter().map(|&n| lgamma(n + g) - lgamma(1.0 + g) - kf.ln()).sum::<f64>()
        })
        .collect();
    let m = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = log_w.iter().map(|l| (l - m).exp()).sum();
    let exact: Vec<f64> = log_w.iter().map(|l| (l - m).exp() / z).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let mut st = constant_state(2, vec![0, 0, 1], alpha);
    let draws: Vec<usize> = (0..100_000)
        .map(|_| {
            s.update_k(&mut st, &mut rng);
            st.k
        })
        .collect();
    let emp = empirical_pmf(draws.iter().copied(), 100);
    assert!(draws.iter().all(|&k| k >= 2));
    for (i, p) in exact.iter().enumerate() {
        assert!((emp[i + 2] - p).abs() < 0.005, "K={}: {} vs {p}", i + 2, emp[i + 2]);
    }
}

#[test]
fn uniform_prior_bounds_k_draws() {
    let data = vec![(); 6];
    let s = TelescopingSampler::new(
        &ConstantKernel,
        &data,
        ComponentCountPrior::uniform(30).unwrap(),
        ConcentrationSpec::static_fixed(0.5).unwrap(),
        config(5000, 0, 6),
    )
    .unwrap();
    let trace = s.run().unwrap();
    assert!(trace.records.iter().all(|r| r.k_plus <= r.k && r.k <= 30));
}

#[test]
fn mh_ratio_is_zero_for_identical_proposal() {
    let h = Hyperprior::f(6.0, 3.0).unwrap();
    for scheme in [mfm::prior::WeightScheme::Static, mfm::prior::WeightScheme::Dynamic] {
        assert_eq!(log_mh_ratio(&[3, 2], 4, scheme, &h, 1.7, 1.7), 0.0);
    }
}

/// Independent evaluation of the dynamic concentration target on the log
/// scale: `ln p(α) + ln α` plus the partition terms.
fn log_alpha_target_on_log_scale(u: f64, sizes: &[usize], k: usize) -> f64 {
    let a = u.exp();
    let n: usize = sizes.iter().sum();
    let (nu_l, nu_r) = (6.0f64, 3.0f64);
    let log_f = 0.5 * nu_l * (nu_l / nu_r).ln() + (0.5 * nu_l - 1.0) * a.ln()
        - 0.5 * (nu_l + nu_r) * (1.0 + nu_l * a / nu_r).ln()
        - (lgamma(0.5 * nu_l) + lgamma(0.5 * nu_r) - lgamma(0.5 * (nu_l + nu_r)));
    let g = a / k as f64;
    log_f + u + sizes.len() as f64 * a.ln() + lgamma(a) - lgamma(n as f64 + a)
        + sizes.iter().map(|&s| lgamma(s as f64 + g) - lgamma(1.0 + g)).sum::<f64>()
}

#[test]
fn concentration_update_matches_quadrature() {
    let data = vec![(); 5];
    let spec = ConcentrationSpec::DynamicPrior {
        prior: Hyperprior::f(6.0, 3.0).unwrap(),
        init: None,
    };
    let s = TelescopingSampler::new(
        &ConstantKernel,
        &data,
        ComponentCountPrior::point_mass(4).unwrap(),
        spec,
        config(1, 0, 7),
    )
    .unwrap();
    let sizes = [2, 2, 1];
    let mut st = constant_state(4, vec![0, 0, 1, 1, 2], 3.0);

    // Decile cut points of the exact marginal of ln α.
    let (lo, hi, m) = (-20.0, 20.0, 40_000);
    let du = (hi - lo) / m as f64;
    let dens: Vec<f64> = (0..m)
        .map(|i| log_alpha_target_on_log_scale(lo + (i as f64 + 0.5) * du, &sizes, 4).exp())
        .collect();
    let z: f64 = dens.iter().sum();
    let mut cuts = Vec::new();
    let mut cum = 0.0;
    for (i, d) in dens.iter().enumerate() {
        cum += d / z;
        if cuts.len() < 9 && cum >= (cuts.len() + 1) as f64 / 10.0 {
            cuts.push(lo + (i as f64 + 1.0) * du);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut bins = [0usize; 10];
    let n = 200_000;
    for _ in 0..n {
        s.update_concentration(&mut st, 1.0, &mut rng);
        let u = st.concentration.ln();
        bins[cuts.iter().filter(|&&c| u >= c).count()] += 1;
    }
    let tv: f64 = 0.5 * bins.iter().map(|&b| (b as f64 / n as f64 - 0.1).abs()).sum::<f64>();
    assert!(tv < 0.01, "total variation {tv}, bins {bins:?}");
}

#[test]
fn weight_update_matches_dirichlet_mean() {
    let data = vec![(); 10];
    let alpha = 1.5;
    let s = TelescopingSampler::new(
        &ConstantKernel,
        &data,
        ComponentCountPrior::point_mass(2).unwrap(),
        ConcentrationSpec::dynamic_fixed(alpha).unwrap(),
        config(1, 0, 8),
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let mut st = constant_state(2, vec![0; 10], alpha);
    let draws: Vec<f64> = (0..50_000)
        .map(|_| {
            s.update_weights(&mut st, &mut rng);
            assert!((st.log_weights.iter().map(|l| l.exp()).sum::<f64>() - 1.0).abs() < 1e-12);
            st.log_weights[0].exp()
        })
        .collect();
    let mean = draws.iter().sum::<f64>() / draws.len() as f64;
    let a1 = alpha / 2.0 + 10.0;
    let a0 = alpha + 10.0;
    let sd = (a1 * (a0 - a1) / (a0 * a0 * (a0 + 1.0))).sqrt();
    assert!((mean - a1 / a0).abs() < 4.0 * sd / (draws.len() as f64).sqrt());

    // K = K₊ keeps the component count but still redraws weights.
    let mut full = constant_state(2, vec![0, 1, 0, 1, 0, 1, 0, 1, 0, 1], alpha);
    let before = full.log_weights.clone();
    s.update_weights(&mut full, &mut rng);
    assert_eq!(full.k, 2);
    assert_ne!(full.log_weights, before);
}

#[test]
fn constant_likelihood_reproduces_prior() {
    let data = vec![(); 8];
    let prior = ComponentCountPrior::uniform(10).unwrap();
    let s = TelescopingSampler::new(
        &ConstantKernel,
        &data,
        prior.clone(),
        ConcentrationSpec::static_fixed(1.0).unwrap(),
        config(60_000, 1_000, 9),
    )
    .unwrap();
    let trace = s.run().unwrap();
    let exact = prior_k_plus(8, &prior, &Regime::Static { gamma: 1.0 }).unwrap();
    let emp = empirical_pmf(trace.records.iter().map(|r| r.k_plus), 8);
    for k in 1..=8 {
        assert!((emp[k] - exact[k - 1]).abs() < 0.02, "K+={k}: {} vs {}", emp[k], exact[k - 1]);
    }
    let emp_k = empirical_pmf(trace.records.iter().map(|r| r.k), 10);
    for k in 1..=10 {
        assert!((emp_k[k] - 0.1).abs() < 0.02, "K={k}: {}", emp_k[k]);
    }
}

#[test]
fn runs_are_reproducible_per_seed_and_chain() {
    let y: Vec<f64> = (0..30).map(|i| ((i * 37) % 11) as f64).collect();
    let kernel = UnivariateNormalKernel::from_data(&y).unwrap();
    let spec = ConcentrationSpec::DynamicPrior {
        prior: Hyperprior::f(6.0, 3.0).unwrap(),
        init: None,
    };
    let prior = ComponentCountPrior::beta_negbin(1.0, 4.0, 3.0).unwrap();
    let run = |chain: u64| {
        let cfg = SamplerConfig {
            chain,
            ..config(300, 50, 42)
        };
        TelescopingSampler::new(&kernel, &y, prior.clone(), spec, cfg)
            .unwrap()
            .run()
            .unwrap()
            .records
    };
    assert_eq!(run(0), run(0));
    assert_ne!(run(0), run(1));
}

#[test]
fn recorded_allocations_and_parameters_line_up() {
    let y: Vec<f64> = (0..25).map(|i| if i < 12 { i as f64 * 0.1 } else { 20.0 + i as f64 * 0.1 }).collect();
    let kernel = UnivariateNormalKernel::from_data(&y).unwrap();
    let cfg = SamplerConfig {
        record_allocations: true,
        record_parameters: true,
        thin: 3,
        ..config(100, 20, 10)
    };
    let s = TelescopingSampler::new(
        &kernel,
        &y,
        ComponentCountPrior::beta_negbin(1.0, 4.0, 3.0).unwrap(),
        ConcentrationSpec::dynamic_fixed(1.0).unwrap(),
        cfg,
    )
    .unwrap();
    let trace = s.run().unwrap();
    assert_eq!(trace.records.len(), 34);
    assert_eq!(trace.records[1].iteration, 4);
    assert_eq!(trace.allocations.len(), 34 * 25);
    for (d, rec) in trace.records.iter().enumerate() {
        let row = trace.allocation_row(d).unwrap();
        assert_eq!(*row.iter().max().unwrap() as usize + 1, rec.k_plus);
        assert_eq!(trace.parameters[d].len(), rec.k_plus);
    }
}

#[test]
fn invalid_configuration_is_rejected() {
    let data = vec![(); 3];
    let prior = ComponentCountPrior::point_mass(200).unwrap();
    let spec = ConcentrationSpec::static_fixed(1.0).unwrap();
    assert!(TelescopingSampler::new(&ConstantKernel, &data, prior, spec, config(1, 0, 0)).is_err());
    let bad = SamplerConfig {
        k0: 0,
        ..SamplerConfig::default()
    };
    let u = ComponentCountPrior::uniform(3).unwrap();
    assert!(TelescopingSampler::new(&ConstantKernel, &data, u.clone(), spec, bad).is_err());
    assert!(TelescopingSampler::new(&ConstantKernel, &[], u, spec, config(1, 0, 0)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn every_sweep_preserves_state_invariants(seed in any::<u64>(), dynamic in any::<bool>(), k_max in 3usize..40) {
        let y: Vec<f64> = (0..40).map(|i| ((i * 13) % 17) as f64 + if i % 3 == 0 { 30.0 } else { 0.0 }).collect();
        let kernel = UnivariateNormalKernel::from_data(&y).unwrap();
        let spec = if dynamic {
            ConcentrationSpec::DynamicPrior { prior: Hyperprior::f(6.0, 3.0).unwrap(), init: None }
        } else {
            ConcentrationSpec::StaticPrior { prior: Hyperprior::gamma(1.0, 20.0).unwrap(), init: None }
        };
        let cfg = SamplerConfig { k_max, k0: k_max.min(15), ..config(1, 0, seed) };
        let s = TelescopingSampler::new(&kernel, &y, ComponentCountPrior::beta_negbin(1.0, 4.0, 3.0).unwrap(), spec, cfg).unwrap();
        let mut rng = s.rng();
        let mut st = s.initialize(&mut rng).unwrap();
        for _ in 0..30 {
            s.sweep(&mut st, 1.0, &mut rng).unwrap();
            prop_assert!(st.check().is_ok(), "{:?}", st.check());
            prop_assert!(st.k_plus() <= st.k && st.k <= k_max);
            prop_assert!(st.concentration > 0.0);
        }
    }
}
