use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde_json::json;

use crate::cluster::kmeans;
use crate::error::{Error, Result};
use crate::special::{gamma_variate, standard_normal};

use super::ComponentKernel;

/// Mean and covariance of a multivariate normal component together with
/// the precision matrix and normalizing constant of its density.
#[derive(Debug, Clone)]
pub struct MvnTheta {
    pub mu: DVector<f64>,
    pub sigma: DMatrix<f64>,
    pub precision: DMatrix<f64>,
    log_norm: f64,
}

impl MvnTheta {
    /// Builds a component from its precision matrix, which must be
    /// symmetric positive definite.
    pub fn from_precision(mu: DVector<f64>, precision: DMatrix<f64>) -> Option<Self> {
        let chol = precision.clone().cholesky()?;
        let log_det_prec: f64 = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        let sigma = chol.inverse();
        let r = mu.len() as f64;
        Some(Self {
            mu,
            sigma,
            precision,
            log_norm: -0.5 * r * (2.0 * std::f64::consts::PI).ln() + 0.5 * log_det_prec,
        })
    }

    pub fn from_covariance(mu: DVector<f64>, sigma: DMatrix<f64>) -> Option<Self> {
        let prec = sigma.cholesky()?.inverse();
        Self::from_precision(mu, symmetrize(prec))
    }
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Draws from the Wishart distribution with density proportional to
/// `|X|^{c - (r+1)/2} exp(-tr(C X))`, i.e. `c` "shape" and `C` "rate"
/// parameters; its mean is `c C^{-1}`.
pub(crate) fn wishart_shape_rate<R: Rng + ?Sized>(
    c: f64,
    rate: &DMatrix<f64>,
    rng: &mut R,
) -> Option<DMatrix<f64>> {
    let r = rate.nrows();
    let df = 2.0 * c;
    let scale = (rate * 2.0).cholesky()?.inverse();
    let l = symmetrize(scale).cholesky()?.unpack();
    let mut a = DMatrix::<f64>::zeros(r, r);
    for i in 0..r {
        a[(i, i)] = (2.0 * gamma_variate(0.5 * (df - i as f64), 1.0, rng)).sqrt();
        for j in 0..i {
            a[(i, j)] = standard_normal(rng);
        }
    }
    let la = l * a;
    Some(symmetrize(&la * la.transpose()))
}

fn mvn_draw<R: Rng + ?Sized>(mean: &DVector<f64>, cov: &DMatrix<f64>, rng: &mut R) -> Option<DVector<f64>> {
    let l = cov.clone().cholesky()?.unpack();
    let z = DVector::from_fn(mean.len(), |_, _| standard_normal(rng));
    Some(mean + l * z)
}

/// Multivariate normal components with hierarchical priors
/// `μ ~ N(b0, B0)`, `Σ^{-1} ~ W(c0, C0)`, `C0 ~ W(g0, G0)`, where `b0` is
/// the coordinate-wise median, `B0 = diag(R_j²)` and
/// `G0 = (100 g0 / c0) diag(1 / R_j²)` for the per-coordinate ranges `R_j`.
#[derive(Debug, Clone)]
pub struct MultivariateNormalKernel {
    pub dim: usize,
    pub b0: DVector<f64>,
    pub ranges: DVector<f64>,
    pub c0: f64,
    pub g0: f64,
    pub g0_rate: DMatrix<f64>,
    b0_prec: DMatrix<f64>,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

impl MultivariateNormalKernel {
    pub fn from_data(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map(Vec::len).unwrap_or(0);
        if dim == 0 {
            return Err(Error::Data("no observations".into()));
        }
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Data("rows have different lengths".into()));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Data("observations must be finite".into()));
        }
        let mut b0 = DVector::zeros(dim);
        let mut ranges = DVector::zeros(dim);
        for j in 0..dim {
            let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if !(hi > lo) {
                return Err(Error::Data(format!("column {} is constant", j + 1)));
            }
            ranges[j] = hi - lo;
            b0[j] = median(col);
        }
        let r = dim as f64;
        let c0 = 2.5 + 0.5 * (r - 1.0);
        let g0 = 0.5 + 0.5 * (r - 1.0);
        let g0_rate = DMatrix::from_diagonal(&ranges.map(|x| 100.0 * g0 / c0 / (x * x)));
        let b0_prec = DMatrix::from_diagonal(&ranges.map(|x| 1.0 / (x * x)));
        Ok(Self {
            dim,
            b0,
            ranges,
            c0,
            g0,
            g0_rate,
            b0_prec,
        })
    }
}

impl ComponentKernel for MultivariateNormalKernel {
    type Obs = Vec<f64>;
    type Theta = MvnTheta;
    type Phi = DMatrix<f64>;

    fn tag(&self) -> &'static str {
        "mvn-hier"
    }

    fn log_density(&self, y: &Vec<f64>, t: &MvnTheta) -> f64 {
        let r = self.dim;
        let mut q = 0.0;
        for i in 0..r {
            let di = y[i] - t.mu[i];
            let mut row = 0.0;
            for j in 0..r {
                row += t.precision[(i, j)] * (y[j] - t.mu[j]);
            }
            q += di * row;
        }
        t.log_norm - 0.5 * q
    }

    fn draw_theta_prior<R: Rng + ?Sized>(&self, c0_rate: &DMatrix<f64>, rng: &mut R) -> MvnTheta {
        let b0_cov = DMatrix::from_diagonal(&self.ranges.map(|x| x * x));
        let mu = mvn_draw(&self.b0, &b0_cov, rng).expect("diagonal prior covariance");
        let prec = wishart_shape_rate(self.c0, c0_rate, rng).expect("positive definite rate");
        MvnTheta::from_precision(mu, prec).expect("Wishart draw is positive definite")
    }

    fn draw_theta_posterior<R: Rng + ?Sized>(
        &self,
        data: &[&Vec<f64>],
        current: &MvnTheta,
        c0_rate: &DMatrix<f64>,
        rng: &mut R,
    ) -> MvnTheta {
        let r = self.dim;
        let n = data.len() as f64;
        let mut sum = DVector::zeros(r);
        for y in data {
            for j in 0..r {
                sum[j] += y[j];
            }
        }
        let post_prec = &self.b0_prec + &current.precision * n;
        let post_cov = symmetrize(post_prec.cholesky().expect("positive definite").inverse());
        let post_mean = &post_cov * (&self.b0_prec * &self.b0 + &current.precision * sum);
        let mu = mvn_draw(&post_mean, &post_cov, rng).expect("positive definite");

        let mut scatter = DMatrix::zeros(r, r);
        for y in data {
            let d = DVector::from_fn(r, |j, _| y[j] - mu[j]);
            scatter += &d * d.transpose();
        }
        let rate = c0_rate + scatter * 0.5;
        let prec = wishart_shape_rate(self.c0 + 0.5 * n, &rate, rng).expect("positive definite");
        MvnTheta::from_precision(mu, prec).expect("Wishart draw is positive definite")
    }

    fn draw_phi<R: Rng + ?Sized>(
        &self,
        filled: &[MvnTheta],
        _phi: &DMatrix<f64>,
        rng: &mut R,
    ) -> Result<DMatrix<f64>> {
        let mut rate = self.g0_rate.clone();
        for t in filled {
            rate += &t.precision;
        }
        wishart_shape_rate(self.g0 + self.c0 * filled.len() as f64, &rate, rng)
            .ok_or_else(|| Error::Runtime("hyperparameter update lost positive definiteness".into()))
    }

    fn initial_phi(&self) -> DMatrix<f64> {
        self.g0_rate.clone().cholesky().expect("diagonal").inverse() * self.g0
    }

    fn initialize<R: Rng + ?Sized>(
        &self,
        data: &[Vec<f64>],
        k0: usize,
        rng: &mut R,
    ) -> Result<Vec<MvnTheta>> {
        let cl = kmeans(data, k0, 1, rng)?;
        let n = data.len() as f64;
        let var = DVector::from_fn(self.dim, |j, _| {
            let mean = data.iter().map(|y| y[j]).sum::<f64>() / n;
            data.iter().map(|y| (y[j] - mean).powi(2)).sum::<f64>() / n
        });
        let sigma = DMatrix::from_diagonal(&var);
        cl.centers
            .into_iter()
            .map(|c| {
                MvnTheta::from_covariance(DVector::from_vec(c), sigma.clone())
                    .ok_or_else(|| Error::Data("data variance is degenerate".into()))
            })
            .collect()
    }

    fn features(&self, t: &MvnTheta) -> Vec<f64> {
        t.mu.iter().copied().collect()
    }

    fn flatten(&self, t: &MvnTheta) -> Vec<f64> {
        t.mu.iter().chain(t.sigma.iter()).copied().collect()
    }

    fn constants(&self) -> serde_json::Value {
        json!({
            "b0": self.b0.as_slice(),
            "R": self.ranges.as_slice(),
            "c0": self.c0,
            "g0": self.g0,
            "G0_diagonal": self.g0_rate.diagonal().as_slice(),
        })
    }
}
