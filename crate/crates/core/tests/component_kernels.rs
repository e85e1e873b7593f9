use mfm::kernel::{
    ComponentKernel, ConstantKernel, LatentClassKernel, LatentClassTheta, MultivariateNormalKernel, MvnTheta,
    UnivariateNormalKernel, UvnTheta,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, v.sqrt())
}

/// Asserts that the sample mean of `xs` lies within four standard errors
/// of `target`.
fn assert_mc_mean(xs: &[f64], target: f64, what: &str) {
    let (m, sd) = mean_sd(xs);
    let se = sd / (xs.len() as f64).sqrt();
    assert!((m - target).abs() < 4.0 * se, "{what}: sample mean {m}, expected {target} (se {se})");
}

#[test]
fn log_density_examples() {
    let uvn = UnivariateNormalKernel::from_data(&[0.0, 10.0]).unwrap();
    assert!((uvn.log_density(&3.0, &UvnTheta::new(3.0, 1.0)) + 0.5 * LN_2PI).abs() < 1e-14);

    let mvn = MultivariateNormalKernel::from_data(&[vec![0.0, 0.0], vec![1.0, 2.0]]).unwrap();
    let t = MvnTheta::from_covariance(DVector::from_vec(vec![0.3, -1.0]), DMatrix::identity(2, 2)).unwrap();
    assert!((mvn.log_density(&vec![0.3, -1.0], &t) + LN_2PI).abs() < 1e-13);

    let lca = LatentClassKernel::new(vec![2, 2, 2]).unwrap();
    let half = LatentClassTheta {
        log_probs: vec![vec![0.5f64.ln(); 2]; 3],
    };
    assert!((lca.log_density(&vec![0, 1, 1], &half) - 0.125f64.ln()).abs() < 1e-14);

    assert_eq!(ConstantKernel.log_density(&(), &()), 0.0);
}

#[test]
fn data_scaled_constants() {
    let uvn = UnivariateNormalKernel::from_data(&[0.0, 10.0]).unwrap();
    assert_eq!((uvn.m, uvn.range), (5.0, 10.0));
    assert!((uvn.g0_rate - 0.1).abs() < 1e-15);
    assert!((uvn.initial_phi() - 2.0).abs() < 1e-14);

    let rows: Vec<Vec<f64>> = (0..11).map(|i| vec![i as f64; 5]).collect();
    let mvn = MultivariateNormalKernel::from_data(&rows).unwrap();
    assert!((mvn.c0 - 4.5).abs() < 1e-15);
    assert!((mvn.g0 - 2.5).abs() < 1e-15);
    assert!(mvn.b0.iter().all(|&b| (b - 5.0).abs() < 1e-15));
    // G0 = 100 g0/c0 diag(1/R²) with R = 10.
    assert!((mvn.g0_rate[(0, 0)] - 100.0 * 2.5 / 4.5 / 100.0).abs() < 1e-14);
}

#[test]
fn univariate_mean_update_matches_conjugate_formula() {
    let k = UnivariateNormalKernel::from_data(&[0.0, 4.0]).unwrap();
    let data = [1.0, 1.5, 2.5, 0.5, 3.0];
    let refs: Vec<&f64> = data.iter().collect();
    let current = UvnTheta::new(0.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let draws: Vec<f64> = (0..10_000)
        .map(|_| k.draw_theta_posterior(&refs, &current, &1.0, &mut rng).mu)
        .collect();
    let r2 = k.range * k.range;
    let n = data.len() as f64;
    let ybar = data.iter().sum::<f64>() / n;
    let analytic = (k.m / r2 + n * ybar) / (1.0 / r2 + n);
    assert_mc_mean(&draws, analytic, "posterior mean of mu");
    let (_, sd) = mean_sd(&draws);
    assert!((sd - (1.0 / (1.0 / r2 + n)).sqrt()).abs() < 0.02);
}

#[test]
fn empty_cluster_update_is_a_prior_draw() {
    let k = UnivariateNormalKernel::from_data(&[-2.0, 6.0]).unwrap();
    let current = UvnTheta::new(100.0, 0.01);
    let c0 = 1.5;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let post: Vec<UvnTheta> = (0..20_000).map(|_| k.draw_theta_posterior(&[], &current, &c0, &mut rng)).collect();
    let mus: Vec<f64> = post.iter().map(|t| t.mu).collect();
    let precs: Vec<f64> = post.iter().map(|t| 1.0 / t.sigma2).collect();
    assert_mc_mean(&mus, k.m, "mu");
    assert_mc_mean(&precs, k.e0 / c0, "precision");

    let lca = LatentClassKernel::new(vec![3]).unwrap();
    let firsts: Vec<f64> = (0..20_000)
        .map(|_| lca.draw_theta_posterior(&[], &lca.draw_theta_prior(&(), &mut rng), &(), &mut rng).probs()[0][0])
        .collect();
    assert_mc_mean(&firsts, 1.0 / 3.0, "empty latent class");
}

#[test]
fn univariate_hyperparameter_update_is_conjugate_gamma() {
    let k = UnivariateNormalKernel::from_data(&[0.0, 5.0]).unwrap();
    let filled = [UvnTheta::new(1.0, 0.5)];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let draws: Vec<f64> = (0..20_000).map(|_| k.draw_phi(&filled, &1.0, &mut rng).unwrap()).collect();
    let shape = 2.2;
    let rate = 10.0 / 25.0 + 2.0;
    assert_mc_mean(&draws, shape / rate, "C0 mean");
    let (_, sd) = mean_sd(&draws);
    assert!((sd / (shape.sqrt() / rate) - 1.0).abs() < 0.03);
}

#[test]
fn latent_class_update_matches_dirichlet_moments() {
    let lca = LatentClassKernel::new(vec![4]).unwrap();
    let data: Vec<Vec<u16>> = [0u16, 0, 1, 3, 3, 3, 3].iter().map(|&c| vec![c]).collect();
    let refs: Vec<&Vec<u16>> = data.iter().collect();
    let counts = [2.0, 1.0, 0.0, 4.0];
    let total: f64 = counts.iter().map(|c| c + 1.0).sum();
    let current = lca.draw_theta_prior(&(), &mut ChaCha8Rng::seed_from_u64(0));
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let draws: Vec<Vec<f64>> = (0..20_000)
        .map(|_| lca.draw_theta_posterior(&refs, &current, &(), &mut rng).probs()[0].clone())
        .collect();
    for (c, &n) in counts.iter().enumerate() {
        let xs: Vec<f64> = draws.iter().map(|d| d[c]).collect();
        let a = n + 1.0;
        assert_mc_mean(&xs, a / total, "Dirichlet mean");
        let var = a * (total - a) / (total * total * (total + 1.0));
        let (_, sd) = mean_sd(&xs);
        assert!((sd / var.sqrt() - 1.0).abs() < 0.03);
    }
    let unchanged = lca.draw_phi(&[current], &(), &mut rng);
    assert!(unchanged.is_ok());
}

#[test]
fn multivariate_hyperparameter_update_uses_pooled_shape() {
    let rows: Vec<Vec<f64>> = (0..20).map(|i| (0..5).map(|j| ((i * 7 + j * 3) % 11) as f64).collect()).collect();
    let k = MultivariateNormalKernel::from_data(&rows).unwrap();
    assert!((k.g0 - 2.5).abs() < 1e-15 && (k.c0 - 4.5).abs() < 1e-15);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let phi0 = k.initial_phi();
    let filled: Vec<MvnTheta> = (0..3).map(|_| k.draw_theta_prior(&phi0, &mut rng)).collect();
    let mut rate = k.g0_rate.clone();
    for t in &filled {
        rate += &t.precision;
    }
    let shape = k.g0 + 3.0 * k.c0;
    let expected = rate.clone().try_inverse().unwrap() * shape;
    let draws: Vec<DMatrix<f64>> = (0..20_000).map(|_| k.draw_phi(&filled, &phi0, &mut rng).unwrap()).collect();
    // Var(X_ii) = 2 shape V_ii² with V = (2 rate)⁻¹ for this parameterization.
    let v = (rate * 2.0).try_inverse().unwrap();
    for i in 0..5 {
        let xs: Vec<f64> = draws.iter().map(|d| d[(i, i)]).collect();
        assert_mc_mean(&xs, expected[(i, i)], "Wishart diagonal");
        let (_, sd) = mean_sd(&xs);
        let sd_exact = (2.0 * 2.0 * shape * v[(i, i)] * v[(i, i)]).sqrt();
        assert!((sd / sd_exact - 1.0).abs() < 0.05, "{sd} vs {sd_exact}");
    }
}

#[test]
fn multivariate_mean_update_matches_conjugate_formula() {
    let rows = vec![vec![0.0, 0.0], vec![4.0, 2.0], vec![1.0, 1.0], vec![2.0, 3.0]];
    let k = MultivariateNormalKernel::from_data(&rows).unwrap();
    let refs: Vec<&Vec<f64>> = rows.iter().take(3).collect();
    let sigma = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 0.5]);
    let current = MvnTheta::from_covariance(DVector::from_vec(vec![0.0, 0.0]), sigma.clone()).unwrap();
    let prec = sigma.try_inverse().unwrap();
    let b0_prec = DMatrix::from_diagonal(&k.ranges.map(|r| 1.0 / (r * r)));
    let sum = DVector::from_vec(vec![5.0, 3.0]);
    let post_cov = (&b0_prec + &prec * 3.0).try_inverse().unwrap();
    let post_mean = &post_cov * (&b0_prec * &k.b0 + &prec * sum);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let draws: Vec<DVector<f64>> = (0..10_000)
        .map(|_| k.draw_theta_posterior(&refs, &current, &k.initial_phi(), &mut rng).mu)
        .collect();
    for j in 0..2 {
        let xs: Vec<f64> = draws.iter().map(|d| d[j]).collect();
        assert_mc_mean(&xs, post_mean[j], "posterior mean of mu");
    }
}

#[test]
fn initialization_returns_requested_components() {
    let y: Vec<f64> = (0..60).map(|i| if i < 30 { i as f64 * 0.01 } else { 10.0 + i as f64 * 0.01 }).collect();
    let k = UnivariateNormalKernel::from_data(&y).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let init = k.initialize(&y, 2, &mut rng).unwrap();
    assert_eq!(init.len(), 2);
    let mut mus: Vec<f64> = init.iter().map(|t| t.mu).collect();
    mus.sort_by(f64::total_cmp);
    assert!((mus[0] - 0.145).abs() < 1e-9 && (mus[1] - 10.445).abs() < 1e-9);

    let lca = LatentClassKernel::new(vec![2, 3]).unwrap();
    let recs = vec![vec![0, 0], vec![0, 0], vec![1, 2], vec![1, 2]];
    let init = lca.initialize(&recs, 2, &mut rng).unwrap();
    for t in &init {
        for p in t.probs() {
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn bad_inputs_are_rejected() {
    assert!(UnivariateNormalKernel::from_data(&[1.0, f64::NAN]).is_err());
    assert!(MultivariateNormalKernel::from_data(&[vec![1.0, 2.0], vec![1.0, 3.0]]).is_err());
    assert!(LatentClassKernel::new(vec![1, 3]).is_err());
    let lca = LatentClassKernel::new(vec![2, 3]).unwrap();
    assert!(lca.validate(&[vec![1, 3]]).is_err());
    assert!(lca.validate(&[vec![1]]).is_err());
    assert!(lca.validate(&[vec![1, 2]]).is_ok());
}

proptest! {
    #[test]
    fn latent_class_probabilities_sum_to_one(levels in prop::collection::vec(2usize..8, 1..5), seed in any::<u64>()) {
        let k = LatentClassKernel::new(levels).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = k.draw_theta_prior(&(), &mut rng);
        for p in t.probs() {
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn variances_stay_positive(seed in any::<u64>(), n in 0usize..20) {
        let k = UnivariateNormalKernel::from_data(&[0.0, 1.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<f64> = (0..n).map(|i| i as f64 * 0.1).collect();
        let refs: Vec<&f64> = data.iter().collect();
        let t = k.draw_theta_posterior(&refs, &UvnTheta::new(0.5, 1.0), &k.initial_phi(), &mut rng);
        prop_assert!(t.sigma2 > 0.0 && t.sigma2.is_finite());
        let c0 = k.draw_phi(&[t], &1.0, &mut rng).unwrap();
        prop_assert!(c0 > 0.0);
    }

    #[test]
    fn mvn_density_is_translation_invariant(shift in -50.0f64..50.0, x in -3.0f64..3.0) {
        let k = MultivariateNormalKernel::from_data(&[vec![0.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let sigma = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let a = MvnTheta::from_covariance(DVector::from_vec(vec![0.0, 0.0]), sigma.clone()).unwrap();
        let b = MvnTheta::from_covariance(DVector::from_vec(vec![shift, shift]), sigma).unwrap();
        let la = k.log_density(&vec![x, -x], &a);
        let lb = k.log_density(&vec![x + shift, -x + shift], &b);
        prop_assert!((la - lb).abs() < 1e-9);
    }
}
