use std::ops::RangeInclusive;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::plant::{simulate, simulate_noisy, BoxSet, ControlPolicy, CostFunction, NoiseSpec, SystemModel};
use crate::semantics::{self, SmoothParams, Trajectory};
use crate::stl::Formula;
use crate::synth::{
    gradient_ascent, with_state_constraint, Closure, Objective, ObjectiveKind, Probe, Problem, Semantics,
    SynthConfig, Termination,
};

use super::always_over;

#[derive(Debug, Clone, PartialEq)]
pub struct LoopSearchConfig {
    /// Candidate loop starts `k`.
    pub starts: RangeInclusive<usize>,
    /// Candidate periods `K`; every one must exceed the formula horizon.
    pub periods: RangeInclusive<usize>,
    /// Closure penalty weights, tried in order with warm starts.
    pub weights: Vec<f64>,
    /// Largest accepted `||sigma[k+K] - sigma[k]||_inf`.
    pub eta: f64,
    /// Periods unrolled by the final check.
    pub unroll_periods: usize,
    /// Disturbance used when the candidate is re-simulated for acceptance.
    pub noise: Option<NoiseSpec>,
}

impl LoopSearchConfig {
    pub fn new(starts: RangeInclusive<usize>, periods: RangeInclusive<usize>) -> Self {
        Self {
            starts,
            periods,
            weights: vec![1.0, 10.0, 100.0, 1000.0],
            eta: 1e-3,
            unroll_periods: 3,
            noise: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoopSolution {
    pub start: usize,
    pub period: usize,
    /// `start + period` inputs; the last `period` of them repeat forever.
    pub policy: ControlPolicy,
    /// `||sigma[start+period] - sigma[start]||_inf` of the found plan.
    pub residual: f64,
    /// Exact robustness of `G[0,start+period-1] phi` on the unrolled run.
    pub rho: f64,
    /// The unrolled trajectory checked before acceptance.
    pub unrolled: Trajectory,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LoopOutcome {
    Found(LoopSolution),
    /// Every candidate failed; the smallest closure residual among
    /// candidates that reached exact satisfaction, if any did.
    NotFound { best_residual: Option<f64> },
}

/// `policy` with its loop segment repeated `periods` times after the
/// first pass, plus `extra` further loop inputs.
pub fn unroll(policy: &ControlPolicy, start: usize, period: usize, periods: usize, extra: usize) -> ControlPolicy {
    let total = start + period * periods + extra;
    let m = policy.control_dim();
    let mut u = Array2::zeros((total, m));
    for i in 0..total {
        let src = if i < start + period { i } else { start + (i - start) % period };
        u.row_mut(i).assign(&policy.values().row(src));
    }
    ControlPolicy::new(u)
}

/// Loop-shaped objective: the free inputs are `start + period` controls,
/// expanded to the problem horizon by repeating the loop segment.
struct LoopObjective<'a> {
    problem: &'a Problem,
    kind: ObjectiveKind,
    start: usize,
    period: usize,
    eta: f64,
    guarded: bool,
}

impl LoopObjective<'_> {
    fn expand(&self, u: &ControlPolicy) -> ControlPolicy {
        let extra = self.problem.steps() - (self.start + self.period);
        unroll(u, self.start, self.period, 1, extra)
    }

    fn source(&self, i: usize) -> usize {
        if i < self.start + self.period {
            i
        } else {
            self.start + (i - self.start) % self.period
        }
    }
}

impl Objective for LoopObjective<'_> {
    fn control_box(&self) -> &BoxSet {
        self.problem.system().control_box()
    }

    fn probe(&self, u: &ControlPolicy) -> Result<Probe> {
        let full_u = self.expand(u);
        let full = self.problem.rollout(&full_u)?;
        let value = self.problem.value_on(self.kind, &full, &full_u)?;
        let closed = self.problem.closure_gap(&full).is_some_and(|g| g <= self.eta);
        let robustness = self.problem.exact_rho(&full)?;
        let satisfied = closed && robustness > 0.0;
        Ok(Probe {
            value,
            admissible: satisfied || !self.guarded,
            satisfied,
            robustness,
        })
    }

    fn value_grad(&self, u: &ControlPolicy) -> Result<(f64, Array2<f64>)> {
        let (v, g) = self.problem.value_grad(self.kind, &self.expand(u))?;
        let mut folded = Array2::zeros(u.values().dim());
        for (i, row) in g.outer_iter().enumerate() {
            let mut dst = folded.row_mut(self.source(i));
            dst += &row;
        }
        Ok((v, folded))
    }
}

struct Attempt {
    solution: Option<LoopSolution>,
    residual: Option<f64>,
}

#[allow(clippy::too_many_arguments)]
fn try_candidate(
    phi: &Formula,
    system: &SystemModel,
    gamma: &[f64],
    cost: &CostFunction,
    config: &LoopSearchConfig,
    synth: &SynthConfig,
    start: usize,
    period: usize,
) -> Result<Attempt> {
    let covered = always_over(phi, start + period - 1);
    let formula = if synth.keep_in_state_box {
        with_state_constraint(&covered, system.state_box())
    } else {
        covered
    };
    let base = Problem::new(system.clone(), formula.clone(), gamma.to_vec(), cost.clone())?;
    let seed = synth.seed ^ ((start as u64) << 32 | period as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    let mut u = ControlPolicy::random(start + period, system.control_box(), &mut ChaCha8Rng::seed_from_u64(seed));
    let params = SmoothParams::new(synth.beta)?;
    let mut found = None;
    let mut residual = None;
    for &weight in &config.weights {
        let problem = base.clone().with_closure(Closure {
            from: start,
            to: start + period,
            weight,
        })?;
        let obj = LoopObjective {
            problem: &problem,
            kind: ObjectiveKind::SmoothRho(params),
            start,
            period,
            eta: config.eta,
            guarded: false,
        };
        let r = gradient_ascent(
            &obj,
            u,
            &[Termination::Satisfied],
            synth.max_iters[0],
            &synth.schedule,
        )?;
        u = r.policy;
        let full = problem.rollout(&obj.expand(&u))?;
        if problem.exact_rho(&full)? > 0.0 {
            let gap = problem.closure_gap(&full).expect("closure is set");
            residual = Some(residual.map_or(gap, |b: f64| b.min(gap)));
        }
        if r.last.satisfied {
            found = Some(problem);
            break;
        }
    }
    let Some(problem) = found else {
        return Ok(Attempt { solution: None, residual });
    };

    if synth.semantics == Semantics::Cumulative && synth.max_iters[1] > 0 {
        let climb = LoopObjective {
            problem: &problem,
            kind: ObjectiveKind::SmoothRhoPlus(synth.smooth_params(synth.beta)?),
            start,
            period,
            eta: config.eta,
            guarded: true,
        };
        let r = gradient_ascent(
            &climb,
            u.clone(),
            &[Termination::GradNormBelow(synth.epsilon)],
            synth.max_iters[1],
            &synth.schedule,
        )?;
        if r.last.satisfied {
            u = r.policy;
        }
    }

    let full = problem.rollout(&unroll(&u, start, period, 1, problem.steps() - start - period))?;
    let gap = problem.closure_gap(&full).expect("closure is set");
    let periods = config.unroll_periods.max(1);
    let h = phi.horizon();
    let inputs = unroll(&u, start, period, periods, h);
    let unrolled = match &config.noise {
        Some(noise) => simulate_noisy(system, noise, gamma, &inputs)?,
        None => simulate(system, gamma, &inputs)?,
    };
    let mut ok = gap <= config.eta;
    for p in 1..=periods {
        let (a, b) = (start + (p - 1) * period, start + p * period);
        let drift = unrolled
            .state(a)
            .iter()
            .zip(unrolled.state(b))
            .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        ok &= drift <= config.eta;
    }
    let last_start = start + periods * period - 1;
    let whole = always_over(phi, last_start);
    let whole = if synth.keep_in_state_box {
        with_state_constraint(&whole, system.state_box())
    } else {
        whole
    };
    ok &= semantics::sat(&whole, &unrolled, 0)?.is_true();
    let rho = semantics::rho(&formula, &unrolled, 0)?;
    Ok(Attempt {
        residual: Some(residual.map_or(gap, |b| b.min(gap))),
        solution: ok.then(|| LoopSolution {
            start,
            period,
            policy: u,
            residual: gap,
            rho,
            unrolled,
        }),
    })
}

/// Searches `(start, period)` pairs in lexicographic order for a plan whose
/// state returns to `sigma[start]` after `period` steps while every start
/// up to the end of the first period satisfies `phi`. Repeating the loop
/// inputs then keeps `phi` true at every later start. Candidates run in
/// parallel batches; the first success in order wins.
pub fn loop_search(
    phi: &Formula,
    system: &SystemModel,
    gamma: &[f64],
    cost: CostFunction,
    config: &LoopSearchConfig,
    synth: &SynthConfig,
) -> Result<LoopOutcome> {
    synth.validate()?;
    let h = phi.horizon();
    if *config.periods.start() <= h {
        return Err(Error::Config(format!("loop periods must exceed the formula horizon {h}")));
    }
    if config.weights.is_empty() || config.weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
        return Err(Error::Config("closure weights must be a non-empty list of finite values >= 0".into()));
    }
    if !(config.eta >= 0.0) {
        return Err(Error::Config("closure tolerance must be >= 0".into()));
    }
    if synth.semantics == Semantics::Cumulative {
        phi.validate_no_neg_finally()?;
    }
    let candidates: Vec<(usize, usize)> = config
        .starts
        .clone()
        .flat_map(|k| config.periods.clone().map(move |p| (k, p)))
        .collect();
    let mut best: Option<f64> = None;
    for batch in candidates.chunks(rayon::current_num_threads().max(1)) {
        let attempts: Vec<Result<Attempt>> = batch
            .par_iter()
            .map(|&(k, p)| try_candidate(phi, system, gamma, &cost, config, synth, k, p))
            .collect();
        for a in attempts {
            let a = a?;
            if let Some(s) = a.solution {
                return Ok(LoopOutcome::Found(s));
            }
            if let Some(r) = a.residual {
                best = Some(best.map_or(r, |b| b.min(r)));
            }
        }
    }
    Ok(LoopOutcome::NotFound { best_residual: best })
}
