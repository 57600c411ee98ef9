use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{simulate_with, ControlPolicy, SystemModel};
use crate::error::{Error, Result};
use crate::semantics::Trajectory;

/// Additive i.i.d. Gaussian disturbance, one standard deviation per state.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    pub stddev: Vec<f64>,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(stddev: Vec<f64>, seed: u64) -> Result<Self> {
        if stddev.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return Err(Error::Config("noise standard deviations must be finite and >= 0".into()));
        }
        Ok(Self { stddev, seed })
    }

    /// Same standard deviation on every one of `dim` components, given a variance.
    pub fn isotropic_variance(dim: usize, variance: f64, seed: u64) -> Result<Self> {
        Self::new(vec![variance.sqrt(); dim], seed)
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            stddev: self.stddev.clone(),
            seed,
        }
    }

    /// Disturbance added after step `k`. Each step draws from its own
    /// ChaCha stream, so the value depends only on `(seed, k)`.
    pub fn sample(&self, k: usize, out: &mut [f64]) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(k as u64);
        for (w, s) in out.iter_mut().zip(&self.stddev) {
            let z: f64 = StandardNormal.sample(&mut rng);
            *w = s * z;
        }
    }
}

/// [`super::simulate`] with the disturbance added to every step.
pub fn simulate_noisy(system: &SystemModel, noise: &NoiseSpec, gamma: &[f64], policy: &ControlPolicy) -> Result<Trajectory> {
    if noise.stddev.len() != system.state_dim() {
        return Err(Error::Shape(format!(
            "noise has {} components, plant has {}",
            noise.stddev.len(),
            system.state_dim()
        )));
    }
    let mut w = vec![0.0; system.state_dim()];
    simulate_with(system, gamma, policy, |k, next| {
        noise.sample(k, &mut w);
        for (x, d) in next.iter_mut().zip(&w) {
            *x += d;
        }
    })
}
