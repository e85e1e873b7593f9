use rand::Rng;

use crate::error::Result;

use super::ComponentKernel;

/// A likelihood that is identically one, so that the posterior equals the
/// prior. Useful for checking samplers against exact prior calculations.
#[derive(Debug, Clone, Copy, Default)]
pub struct ConstantKernel;

impl ComponentKernel for ConstantKernel {
    type Obs = ();
    type Theta = ();
    type Phi = ();

    fn tag(&self) -> &'static str {
        "constant"
    }

    fn log_density(&self, _y: &(), _theta: &()) -> f64 {
        0.0
    }

    fn draw_theta_prior<R: Rng + ?Sized>(&self, _phi: &(), _rng: &mut R) {}

    fn draw_theta_posterior<R: Rng + ?Sized>(
        &self,
        _data: &[&()],
        _current: &(),
        _phi: &(),
        _rng: &mut R,
    ) {
    }

    fn draw_phi<R: Rng + ?Sized>(&self, _filled: &[()], _phi: &(), _rng: &mut R) -> Result<()> {
        Ok(())
    }

    fn initial_phi(&self) {}

    fn initialize<R: Rng + ?Sized>(&self, _data: &[()], k0: usize, _rng: &mut R) -> Result<Vec<()>> {
        Ok(vec![(); k0])
    }

    fn features(&self, _theta: &()) -> Vec<f64> {
        Vec::new()
    }

    fn flatten(&self, _theta: &()) -> Vec<f64> {
        Vec::new()
    }

    fn constants(&self) -> serde_json::Value {
        serde_json::Value::Null
    }
}
