//! Component densities, their priors, and the conditional draws the
//! sampler needs.

mod constant;
mod latent_class;
mod multivariate;
mod univariate;

pub use constant::ConstantKernel;
pub use latent_class::{LatentClassKernel, LatentClassTheta};
pub use multivariate::{MultivariateNormalKernel, MvnTheta};
pub use univariate::{UnivariateNormalKernel, UvnTheta};

use std::fmt::Debug;

use rand::Rng;

use crate::error::Result;

/// A component family with hierarchical priors.
///
/// `Theta` holds component-specific parameters and `Phi` the
/// hyperparameters shared across components.
pub trait ComponentKernel: Send + Sync {
    type Obs: Send + Sync;
    type Theta: Clone + Debug + Send + Sync;
    type Phi: Clone + Debug + Send + Sync;

    /// Stable identifier used in configuration files.
    fn tag(&self) -> &'static str;

    fn log_density(&self, y: &Self::Obs, theta: &Self::Theta) -> f64;

    fn draw_theta_prior<R: Rng + ?Sized>(&self, phi: &Self::Phi, rng: &mut R) -> Self::Theta;

    /// One Gibbs update of a filled component given its observations and
    /// the current value of its parameters.
    fn draw_theta_posterior<R: Rng + ?Sized>(
        &self,
        data: &[&Self::Obs],
        current: &Self::Theta,
        phi: &Self::Phi,
        rng: &mut R,
    ) -> Self::Theta;

    /// Updates the hyperparameters from the filled components.
    fn draw_phi<R: Rng + ?Sized>(
        &self,
        filled: &[Self::Theta],
        phi: &Self::Phi,
        rng: &mut R,
    ) -> Result<Self::Phi>;

    fn initial_phi(&self) -> Self::Phi;

    /// Starting parameters for `k0` components obtained by clustering the
    /// data.
    fn initialize<R: Rng + ?Sized>(
        &self,
        data: &[Self::Obs],
        k0: usize,
        rng: &mut R,
    ) -> Result<Vec<Self::Theta>>;

    /// Coordinates used to cluster component draws during identification.
    fn features(&self, theta: &Self::Theta) -> Vec<f64>;

    /// All parameters of a component as a flat vector.
    fn flatten(&self, theta: &Self::Theta) -> Vec<f64>;

    /// Data-derived constants worth recording alongside a run.
    fn constants(&self) -> serde_json::Value;
}
