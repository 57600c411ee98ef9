//! Receding-horizon synthesis and the search for periodic (loop) policies.
//!
//! At every step the planner re-solves the synthesis problem from the
//! current state, executes only the first input and advances the plant.
//! Starts whose windows are still open are kept as obligations: the step
//! formula is `G[0,k-j0] phi` evaluated from the oldest open start `j0`,
//! with the already visited states fixed as a prefix. A look-ahead of `L`
//! extends every plan to the starts `k+1..=k+L` as well.

mod loops;

pub use loops::{loop_search, unroll, LoopOutcome, LoopSearchConfig, LoopSolution};

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::plant::{total_cost, ControlPolicy, CostFunction, NoiseSpec, SystemModel};
use crate::semantics::Trajectory;
use crate::stl::{Formula, Interval};
use crate::synth::{optimize, smooth_optimization, with_state_constraint, Problem, SynthConfig, SynthReport};

#[derive(Debug, Clone, PartialEq)]
pub struct MpcConfig {
    /// Number of re-planning steps after the first; `steps + 1` inputs are
    /// executed.
    pub steps: usize,
    pub synth: SynthConfig,
    /// Start each plan from the previous one shifted by a step.
    pub warm_start: bool,
    /// Disturbance applied to the executed plant.
    pub noise: Option<NoiseSpec>,
    /// Future starts each plan must also satisfy.
    pub lookahead: usize,
}

impl MpcConfig {
    pub fn new(steps: usize, synth: SynthConfig) -> Self {
        Self {
            steps,
            synth,
            warm_start: true,
            noise: None,
            lookahead: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MpcStatus {
    Completed,
    /// Planning failed at this step; earlier inputs were executed.
    Infeasible { step: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MpcReport {
    pub status: MpcStatus,
    /// First input of every successful plan.
    pub executed: ControlPolicy,
    /// Executed inputs followed by the rest of the last plan.
    pub closed_loop_policy: ControlPolicy,
    /// Visited states followed by the states the last plan's tail reaches
    /// (disturbed too when noise is set).
    pub trajectory: Trajectory,
    /// One report per planning step, including a failed last one.
    pub plans: Vec<SynthReport>,
    pub cost: f64,
}

impl MpcReport {
    pub fn is_complete(&self) -> bool {
        self.status == MpcStatus::Completed
    }
}

/// `G[0,steps] phi`, or `phi` itself for zero steps.
pub fn always_over(phi: &Formula, steps: usize) -> Formula {
    if steps == 0 {
        phi.clone()
    } else {
        Formula::globally(Interval::new(0, steps).expect("steps > 0"), phi.clone())
    }
}

fn step_seed(seed: u64, k: usize) -> u64 {
    seed.wrapping_add((k as u64).wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// Receding-horizon control for `steps + 1` executed inputs.
pub fn mpc_synthesize(
    phi: &Formula,
    system: &SystemModel,
    gamma: &[f64],
    cost: CostFunction,
    config: &MpcConfig,
) -> Result<MpcReport> {
    let h = phi.horizon();
    if h == 0 {
        return Err(Error::Config("formula has horizon 0".into()));
    }
    if let Some(noise) = &config.noise {
        if noise.stddev.len() != system.state_dim() {
            return Err(Error::Shape(format!("noise has {} components", noise.stddev.len())));
        }
    }
    let n = system.state_dim();
    let mut visited: Vec<Vec<f64>> = vec![gamma.to_vec()];
    let mut executed: Vec<Vec<f64>> = Vec::with_capacity(config.steps + 1);
    let mut plans: Vec<SynthReport> = Vec::with_capacity(config.steps + 1);
    let mut status = MpcStatus::Completed;
    let mut w = vec![0.0; n];

    for k in 0..=config.steps {
        let x = visited[k].clone();
        let mut cfg = config.synth.clone();
        cfg.seed = step_seed(config.synth.seed, k);
        if k > 0 {
            cfg.initial = config.warm_start.then(|| plans[k - 1].policy.shifted());
        }
        let plan = if k == 0 {
            smooth_optimization(&always_over(phi, config.lookahead), system, &x, cost.clone(), &cfg)?
        } else {
            let j0 = (k + 1).saturating_sub(h);
            let obligation = always_over(phi, k - j0 + config.lookahead);
            let formula = if cfg.keep_in_state_box {
                with_state_constraint(&obligation, system.state_box())
            } else {
                obligation
            };
            let rows: Vec<f64> = visited[j0..k].iter().flatten().copied().collect();
            let prefix = Array2::from_shape_vec((k - j0, n), rows).expect("rows have the state width");
            let problem = Problem::new(system.clone(), formula, x.clone(), cost.clone())?.with_prefix(prefix)?;
            optimize(&problem, &cfg)?
        };
        let ok = plan.is_satisfied();
        let u = plan.policy.control(0).to_vec();
        plans.push(plan);
        if !ok {
            status = MpcStatus::Infeasible { step: k };
            break;
        }
        let mut next = system.step(&x, &u);
        if let Some(noise) = &config.noise {
            noise.sample(k, &mut w);
            next.iter_mut().zip(&w).for_each(|(a, d)| *a += d);
        }
        executed.push(u);
        visited.push(next);
    }

    let m = system.control_dim();
    let executed = if executed.is_empty() {
        ControlPolicy::zeros(0, m)
    } else {
        ControlPolicy::from_rows(&executed)?
    };
    let (closed_loop_policy, trajectory) = match status {
        MpcStatus::Completed => {
            let last = plans.last().expect("at least one plan");
            let tail = last.policy.slice(1..last.policy.len());
            let mut rows = visited;
            for i in 0..tail.len() {
                let mut next = system.step(rows.last().expect("non-empty"), tail.control(i));
                if let Some(noise) = &config.noise {
                    noise.sample(config.steps + 1 + i, &mut w);
                    next.iter_mut().zip(&w).for_each(|(a, d)| *a += d);
                }
                rows.push(next);
            }
            (executed.concat(&tail)?, Trajectory::from_rows(&rows, system.dt())?)
        }
        MpcStatus::Infeasible { .. } => (executed.clone(), Trajectory::from_rows(&visited, system.dt())?),
    };
    Ok(MpcReport {
        status,
        cost: total_cost(cost.as_ref(), &trajectory, &closed_loop_policy),
        executed,
        closed_loop_policy,
        trajectory,
        plans,
    })
}
