//! Bayesian statistical model checking: estimate the probability that a
//! noisy closed loop satisfies a formula, stopping once the Beta posterior
//! puts enough mass on an interval around its mean.

use rayon::prelude::*;
use statrs::distribution::{Beta, ContinuousCDF};

use crate::error::{Error, Result};
use crate::mpc::{mpc_synthesize, MpcConfig};
use crate::plant::{simulate_noisy, ControlPolicy, CostFunction, NoiseSpec, SystemModel};
use crate::semantics::sat;
use crate::stl::Formula;

#[derive(Debug, Clone, PartialEq)]
pub struct SmcConfig {
    /// Half-width of the interval around the posterior mean.
    pub delta: f64,
    /// Posterior mass required on that interval.
    pub confidence: f64,
    /// Beta prior parameters `(a, b)`.
    pub prior: (f64, f64),
    pub max_samples: usize,
    pub seed: u64,
    /// Trials evaluated in parallel before the stopping rule scans them.
    pub batch: usize,
}

impl Default for SmcConfig {
    fn default() -> Self {
        Self {
            delta: 0.01,
            confidence: 0.95,
            prior: (1.0, 1.0),
            max_samples: 100_000,
            seed: 0,
            batch: 64,
        }
    }
}

impl SmcConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 0.5) {
            return Err(Error::Config(format!("margin {} outside (0, 0.5)", self.delta)));
        }
        if !(self.confidence > 0.5 && self.confidence < 1.0) {
            return Err(Error::Config(format!("confidence {} outside (0.5, 1)", self.confidence)));
        }
        let (a, b) = self.prior;
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::Config("prior parameters must be positive".into()));
        }
        if self.max_samples == 0 || self.batch == 0 {
            return Err(Error::Config("max_samples and batch must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmcStop {
    ConfidenceReached,
    MaxSamples,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmcResult {
    /// Posterior mean.
    pub estimate: f64,
    pub samples: usize,
    pub successes: usize,
    pub posterior: (f64, f64),
    pub stop: SmcStop,
}

/// Mass of `Beta(a, b)` on `[mean - delta, mean + delta]` clipped to `[0, 1]`.
pub fn posterior_mass(a: f64, b: f64, delta: f64) -> f64 {
    let beta = Beta::new(a, b).expect("positive shape parameters");
    let mean = a / (a + b);
    beta.cdf((mean + delta).min(1.0)) - beta.cdf((mean - delta).max(0.0))
}

/// Sub-seed of trial `index`; a trial's outcome depends only on `(seed, index)`.
pub fn trial_seed(seed: u64, index: usize) -> u64 {
    let mut z = seed ^ (index as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Draws trials until the posterior mass around its mean reaches the
/// confidence level. `sampler` receives each trial's sub-seed. Trials run
/// in parallel batches, and the stopping rule scans them in index order,
/// so the result does not depend on scheduling.
pub fn bayesian_estimate<F>(sampler: F, config: &SmcConfig) -> Result<SmcResult>
where
    F: Fn(u64) -> Result<bool> + Sync,
{
    config.validate()?;
    let (a, b) = config.prior;
    let (mut n, mut s) = (0usize, 0usize);
    while n < config.max_samples {
        let end = (n + config.batch).min(config.max_samples);
        let outcomes: Vec<bool> = (n..end)
            .into_par_iter()
            .map(|i| sampler(trial_seed(config.seed, i)))
            .collect::<Result<_>>()?;
        for ok in outcomes {
            n += 1;
            s += ok as usize;
            let post = (a + s as f64, b + (n - s) as f64);
            if posterior_mass(post.0, post.1, config.delta) >= config.confidence {
                return Ok(SmcResult {
                    estimate: post.0 / (post.0 + post.1),
                    samples: n,
                    successes: s,
                    posterior: post,
                    stop: SmcStop::ConfidenceReached,
                });
            }
        }
    }
    let post = (a + s as f64, b + (n - s) as f64);
    Ok(SmcResult {
        estimate: post.0 / (post.0 + post.1),
        samples: n,
        successes: s,
        posterior: post,
        stop: SmcStop::MaxSamples,
    })
}

/// One noisy replay of a fixed open-loop policy, judged by the exact
/// monitor at time 0. Inconclusive verdicts count as violations.
pub fn closed_loop_trial(
    system: &SystemModel,
    noise: &NoiseSpec,
    gamma: &[f64],
    policy: &ControlPolicy,
    phi: &Formula,
    sub_seed: u64,
) -> Result<bool> {
    if policy.len() < phi.horizon() {
        return Err(Error::TrajectoryTooShort {
            required: phi.horizon() + 1,
            available: policy.len() + 1,
        });
    }
    let traj = simulate_noisy(system, &noise.with_seed(sub_seed), gamma, policy)?;
    Ok(sat(phi, &traj, 0)?.is_true())
}

/// One noisy run with the receding-horizon planner in the loop; `check`
/// is judged on the resulting closed-loop trajectory. A planning failure
/// counts as a violation.
pub fn mpc_trial(
    plan_formula: &Formula,
    check: &Formula,
    system: &SystemModel,
    gamma: &[f64],
    cost: CostFunction,
    config: &MpcConfig,
    noise: &NoiseSpec,
    sub_seed: u64,
) -> Result<bool> {
    let cfg = MpcConfig {
        noise: Some(noise.with_seed(sub_seed)),
        ..config.clone()
    };
    let r = mpc_synthesize(plan_formula, system, gamma, cost, &cfg)?;
    if !r.is_complete() {
        return Ok(false);
    }
    Ok(sat(check, &r.trajectory, 0)?.is_true())
}
