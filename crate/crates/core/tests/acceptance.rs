//! End-to-end acceptance checks, one PASS/FAIL line per criterion.
//!
//! Run a subset with `cargo test --release --test acceptance -- 8 9`. The
//! process exits non-zero on a failure only when `ACCEPTANCE_STRICT` is set.

mod common;

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use common::{cumulative, cumulative_instance, holds, negatable_instance, random_formula, rho, LIMITS};
use cumstl::plant::{
    control_effort_cost, dubins_model, fleet_model, linear_model, quadratic_motion_cost, ControlPolicy, CostFunction,
    NoiseSpec, SystemModel,
};
use cumstl::mpc::{always_over, loop_search, mpc_synthesize, LoopOutcome, LoopSearchConfig, MpcConfig, MpcReport};
use cumstl::presets::{self, LOWER_BAND, OSCILLATION_MPC_STEPS, UPPER_BAND};
use cumstl::semantics::{self, smooth, SmoothParams, Trajectory};
use cumstl::smc::{bayesian_estimate, closed_loop_trial, SmcConfig};
use cumstl::stl::parse;
use cumstl::synth::{smooth_optimization, ObjectiveKind, Problem, Semantics};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

fn within(outcome: Outcome, elapsed: Duration, budget: Duration) -> Outcome {
    if elapsed <= budget {
        outcome
    } else {
        Outcome::new(false, format!("{} (over the {:?} budget)", outcome.detail, budget))
    }
}

const INSTANCES: u64 = 500;

fn semantics_match() -> Outcome {
    let (mut worst, mut bitwise, mut compared) = (0.0f64, 0usize, 0usize);
    for seed in 0..INSTANCES {
        let inst = cumulative_instance(seed, &LIMITS);
        let f = parse(&inst.formula.text(), inst.dim).unwrap();
        let traj = inst.signal.trajectory();
        let (p, m) = cumulative(&inst.formula, &inst.signal, 0);
        let pairs = [
            (semantics::rho(&f, &traj, 0).unwrap(), rho(&inst.formula, &inst.signal, 0)),
            (semantics::rho_plus(&f, &traj, 0).unwrap(), p),
            (semantics::rho_minus(&f, &traj, 0).unwrap(), m),
        ];
        for (got, want) in pairs {
            compared += 1;
            bitwise += usize::from(got.to_bits() == want.to_bits());
            worst = worst.max(if got.is_nan() || want.is_nan() { f64::INFINITY } else { (got - want).abs() });
        }
    }
    Outcome::new(
        worst <= 1e-12,
        format!("{compared} values on {INSTANCES} formulas, {bitwise} bitwise equal (the rest differ in the sign of zero), worst gap {worst:e}"),
    )
}

fn smooth_bound() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut violations = 0;
    for _ in 0..10_000 {
        let m = rng.random_range(1..=30);
        let values: Vec<f64> = (0..m).map(|_| rng.random_range(-100.0..100.0)).collect();
        let beta = 10f64.powf(rng.random_range(-2.0..3.0));
        let exact = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let gap = smooth::smooth_max(&values, beta) - exact;
        if !(gap >= 0.0 && gap <= (m as f64).ln() / beta) {
            violations += 1;
        }
    }
    Outcome::new(violations == 0, format!("{violations} violations in 10000 draws"))
}

fn soundness() -> Outcome {
    let (mut sign, mut monitor, mut positive) = (0, 0, 0);
    for seed in 0..INSTANCES {
        let inst = cumulative_instance(seed, &LIMITS);
        let f = parse(&inst.formula.text(), inst.dim).unwrap();
        let traj = inst.signal.trajectory();
        let r = semantics::rho(&f, &traj, 0).unwrap();
        let p = semantics::rho_plus(&f, &traj, 0).unwrap();
        if (p > 0.0) != (r > 0.0) {
            sign += 1;
        }
        if r > 0.0 {
            positive += 1;
            if !holds(&inst.formula, &inst.signal, 0) || !semantics::sat(&f, &traj, 0).unwrap().is_true() {
                monitor += 1;
            }
        }
    }
    Outcome::new(
        sign == 0 && monitor == 0,
        format!("{sign} sign mismatches, {monitor} monitor mismatches ({positive} satisfied instances)"),
    )
}

fn de_morgan() -> Outcome {
    let (mut failures, mut checked) = (0, 0);
    for seed in 0..INSTANCES {
        let a = negatable_instance(2 * seed, &LIMITS);
        let b = negatable_instance(2 * seed + 1, &LIMITS);
        let (dim, signal) = if a.dim >= b.dim { (a.dim, &a.signal) } else { (b.dim, &b.signal) };
        if signal.rows.len() <= a.formula.horizon().max(b.formula.horizon()) {
            continue;
        }
        let traj = signal.trajectory();
        let (ta, tb) = (a.formula.text(), b.formula.text());
        let eval = |text: String| semantics::rho_plus(&parse(&text, dim).unwrap(), &traj, 0).unwrap();
        checked += 1;
        let double = eval(format!("!!{ta}")).to_bits() == eval(ta.clone()).to_bits();
        let swapped = eval(format!("!({ta} && {tb})")).to_bits() == eval(format!("(!{ta} || !{tb})")).to_bits();
        if !(double && swapped) {
            failures += 1;
        }
    }
    Outcome::new(
        failures == 0 && checked > 0,
        format!("{failures} failures on {checked} evaluable pairs out of {INSTANCES}"),
    )
}

fn horizons() -> Outcome {
    let nested = parse("F[0,5] G[0,10] (x1 > 0)", 1).unwrap().horizon();
    let reach = presets::reach_avoid_formula().horizon();
    Outcome::new(nested == 15 && reach == 120, format!("nested {nested}, reach-avoid {reach}"))
}

/// Fourth-order central differences.
fn fd_gradient(problem: &Problem, kind: ObjectiveKind, u: &ControlPolicy) -> Array2<f64> {
    let mut g = Array2::zeros(u.values().dim());
    for (idx, &v) in u.values().indexed_iter() {
        let h = 1e-4 * v.abs().max(1.0);
        let at = |d: f64| {
            let mut w = u.clone();
            w.values_mut()[idx] = v + d;
            problem.value(kind, &w).unwrap()
        };
        g[idx] = (8.0 * (at(h) - at(-h)) - (at(2.0 * h) - at(-2.0 * h))) / (12.0 * h);
    }
    g
}

fn gradients() -> Outcome {
    let plants: [(&str, SystemModel, CostFunction); 3] = [
        ("dubins", dubins_model(presets::VEHICLE_DT).unwrap(), quadratic_motion_cost()),
        ("fleet", fleet_model(2, presets::VEHICLE_DT).unwrap(), quadratic_motion_cost()),
        ("linear", linear_model(10.0).unwrap(), control_effort_cost()),
    ];
    let mut worst = 0.0f64;
    let mut checked = 0;
    for (p, (_, system, cost)) in plants.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(60 + p as u64);
        let n = system.state_dim();
        for _ in 0..100 {
            let f = loop {
                let f = random_formula(&mut rng, n, &LIMITS);
                if f.horizon() > 0 && !f.has_negated_eventuality() {
                    break f;
                }
            };
            let formula = parse(&f.text(), n).unwrap();
            let gamma: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let problem = Problem::new(system.clone(), formula, gamma, cost.clone()).unwrap();
            let u = ControlPolicy::random(problem.steps(), system.control_box(), &mut rng);
            let params = SmoothParams::new(rng.random_range(2.0..20.0)).unwrap();
            for kind in [ObjectiveKind::SmoothRho(params), ObjectiveKind::SmoothRhoPlus(params), ObjectiveKind::NegCost] {
                let (_, g) = problem.value_grad(kind, &u).unwrap();
                let fd = fd_gradient(&problem, kind, &u);
                let scale = fd.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-6);
                let err = (&g - &fd).iter().fold(0.0f64, |m, v| m.max(v.abs())) / scale;
                worst = worst.max(err);
                checked += 1;
            }
        }
    }
    Outcome::new(
        worst < 1e-4,
        format!("{checked} gradients on dubins, fleet and linear plants, worst relative error {worst:.2e}"),
    )
}

fn dwell_contrast() -> Outcome {
    let f = presets::dwell_contrast_formula();
    let (brief, long) = presets::dwell_contrast_signals();
    let r = [semantics::rho(&f, &brief, 0).unwrap(), semantics::rho(&f, &long, 0).unwrap()];
    let p = [semantics::rho_plus(&f, &brief, 0).unwrap(), semantics::rho_plus(&f, &long, 0).unwrap()];
    Outcome::new(
        r == [1.0, 1.0] && p == [2.5, 7.5],
        format!("rho {:?}, rho+ {:?}", r, p),
    )
}

fn coin_stopping() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for p in [0.1, 0.5, 0.9] {
        let hits = (0..200u64)
            .filter(|&m| {
                let cfg = SmcConfig {
                    delta: 0.05,
                    confidence: 0.95,
                    seed: m,
                    ..SmcConfig::default()
                };
                let coin = |s: u64| Ok(ChaCha8Rng::seed_from_u64(s).random_bool(p));
                (bayesian_estimate(coin, &cfg).unwrap().estimate - p).abs() <= 0.05
            })
            .count();
        pass &= hits >= 180;
        parts.push(format!("p={p}: {hits}/200"));
    }
    Outcome::new(pass, parts.join(", "))
}

const GAMMA2: [f64; 2] = [0.0, 0.0];

/// Oscillation MPC runs for the cumulative and the traditional objective,
/// shared by the criteria that need them.
fn oscillation_runs() -> &'static [(MpcReport, f64); 2] {
    static RUNS: OnceLock<[(MpcReport, f64); 2]> = OnceLock::new();
    RUNS.get_or_init(|| {
        let system = linear_model(10.0).unwrap();
        [Semantics::Cumulative, Semantics::Traditional].map(|sem| {
            let start = Instant::now();
            let cfg = MpcConfig::new(OSCILLATION_MPC_STEPS, presets::oscillation_synth_config(sem, 0));
            let r = mpc_synthesize(&presets::oscillation_formula(), &system, &GAMMA2, control_effort_cost(), &cfg).unwrap();
            (r, start.elapsed().as_secs_f64())
        })
    })
}

fn oscillation_dwell(r: &MpcReport) -> usize {
    presets::band_dwell(&r.trajectory, UPPER_BAND, 0) + presets::band_dwell(&r.trajectory, LOWER_BAND, 0)
}

/// Starts in `0..=steps` at which `phi` is not verified true.
fn violations(r: &MpcReport) -> usize {
    let phi = presets::oscillation_formula();
    (0..=OSCILLATION_MPC_STEPS)
        .filter(|&k| !semantics::sat(&phi, &r.trajectory, k).is_ok_and(|v| v.is_true()))
        .count()
}

fn two_vehicles() -> Outcome {
    let system = fleet_model(2, presets::VEHICLE_DT).unwrap();
    let phi = presets::two_vehicle_formula(presets::VEHICLE_RADIUS);
    let mut solved = 0;
    let mut slower = Vec::new();
    let mut notes = Vec::new();
    let mut slowest = 0.0f64;
    for seed in 0..5u64 {
        let start = Instant::now();
        let runs = [Semantics::Cumulative, Semantics::Traditional].map(|sem| {
            let cfg = presets::two_vehicle_synth_config(sem, seed);
            let r = smooth_optimization(&phi, &system, &presets::TWO_VEHICLE_START, quadratic_motion_cost(), &cfg).unwrap();
            let ok = semantics::sat(&phi, &r.trajectory, 0).is_ok_and(|v| v.is_true());
            let dwell = presets::region_dwell(&r.trajectory, &presets::REGION_3, 0)
                + presets::region_dwell(&r.trajectory, &presets::REGION_3, 3);
            (ok, dwell)
        });
        let secs = start.elapsed().as_secs_f64();
        slowest = slowest.max(secs);
        let [(cum_ok, cum), (trad_ok, trad)] = runs;
        if cum_ok && trad_ok {
            solved += 1;
            if cum < trad {
                slower.push(seed);
            }
            notes.push(format!("seed {seed} dwell {cum}/{trad} ({secs:.0}s)"));
        } else {
            notes.push(format!("seed {seed} unsolved ({secs:.0}s)"));
        }
    }
    Outcome::new(
        solved >= 3 && slower.is_empty() && slowest <= 600.0,
        format!("{solved}/5 solved, shorter cumulative dwell on {slower:?}; {}", notes.join(", ")),
    )
}

fn oscillation_mpc() -> Outcome {
    let [(cum, tc), (trad, tt)] = oscillation_runs();
    let (vc, vt) = (violations(cum), violations(trad));
    let (dc, dt) = (oscillation_dwell(cum), oscillation_dwell(trad));
    Outcome::new(
        cum.is_complete() && trad.is_complete() && vc == 0 && vt == 0 && dc >= dt,
        format!(
            "cumulative {:?}, {vc} violations, dwell {dc} ({tc:.0}s); traditional {:?}, {vt} violations, dwell {dt} ({tt:.0}s)",
            cum.status, trad.status
        ),
    )
}

fn noisy_satisfaction() -> Outcome {
    let [(cum, _), (trad, _)] = oscillation_runs();
    if !(cum.is_complete() && trad.is_complete()) {
        return Outcome::new(false, "an MPC run did not complete");
    }
    let system = linear_model(10.0).unwrap();
    let checked = always_over(&presets::oscillation_formula(), OSCILLATION_MPC_STEPS);
    let noise = NoiseSpec::isotropic_variance(2, presets::OSCILLATION_NOISE_VARIANCE, 0).unwrap();
    let cfg = SmcConfig {
        delta: 0.01,
        confidence: 0.95,
        ..SmcConfig::default()
    };
    let [c, t] = [cum, trad].map(|r| {
        let policy = &r.closed_loop_policy;
        bayesian_estimate(|s| closed_loop_trial(&system, &noise, &GAMMA2, policy, &checked, s), &cfg).unwrap()
    });
    let gap = c.estimate - t.estimate;
    Outcome::new(
        gap >= 0.10,
        format!(
            "cumulative {:.3} (n={}), traditional {:.3} (n={}), gap {:+.1} points",
            c.estimate,
            c.samples,
            t.estimate,
            t.samples,
            100.0 * gap
        ),
    )
}

fn periodic_loop() -> Outcome {
    const PERIODS: usize = 10;
    let system = linear_model(10.0).unwrap();
    let phi = presets::oscillation_formula();
    let config = LoopSearchConfig::new(0..=3, 5..=8);
    let synth = presets::oscillation_synth_config(Semantics::Cumulative, 0);
    let outcome = loop_search(&phi, &system, &GAMMA2, control_effort_cost(), &config, &synth).unwrap();
    let LoopOutcome::Found(sol) = outcome else {
        return Outcome::new(false, format!("{outcome:?}"));
    };
    let (k, p) = (sol.start, sol.period);
    // Hand-rolled x+ = [[1, .5], [0, .8]] x + [0, 1] u with the loop inputs
    // repeated PERIODS times.
    let mut rows = vec![vec![0.0, 0.0]];
    for t in 0..k + PERIODS * p + phi.horizon() {
        let u = sol.policy.control(if t < k { t } else { k + (t - k) % p })[0];
        let x = rows.last().unwrap();
        rows.push(vec![x[0] + 0.5 * x[1], 0.8 * x[1] + u]);
    }
    let closure = |a: usize, b: usize| (0..2).fold(0.0f64, |m, i| m.max((rows[a][i] - rows[b][i]).abs()));
    let residual = closure(k, k + p);
    let drift = closure(k, k + PERIODS * p);
    let traj = Trajectory::from_rows(&rows, 1.0).unwrap();
    let failing = (0..k + PERIODS * p)
        .filter(|&j| !semantics::sat(&phi, &traj, j).is_ok_and(|v| v.is_true()))
        .count();
    Outcome::new(
        residual <= 1e-3 && failing == 0,
        format!(
            "k={k}, K={p}, residual {residual:.2e}, drift after {PERIODS} periods {drift:.2e}, {failing} violating starts"
        ),
    )
}

type Check = fn() -> Outcome;

fn main() {
    let criteria: [(usize, &str, Check, u64); 12] = [
        (1, "semantics match the reference evaluator", semantics_match, 60),
        (2, "smooth max error bound", smooth_bound, 60),
        (3, "cumulative sign soundness", soundness, 60),
        (4, "De Morgan and double negation", de_morgan, 60),
        (5, "horizon anchors", horizons, 60),
        (6, "adjoint gradients match finite differences", gradients, 120),
        (7, "dwell contrast of two equally robust signals", dwell_contrast, 60),
        (8, "two vehicles reach region 3 and dwell at least as long", two_vehicles, 3000),
        (9, "oscillation MPC satisfies every step and dwells longer", oscillation_mpc, 300),
        (10, "noisy replay favours the cumulative policy by 10 points", noisy_satisfaction, 600),
        (11, "Bayesian stopping on known coins", coin_stopping, 600),
        (12, "periodic loop closes and satisfies every period", periodic_loop, 600),
    ];
    let wanted: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, name, check, budget) in criteria {
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let outcome = within(check(), start.elapsed(), Duration::from_secs(budget));
        let verdict = if outcome.pass { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} {verdict}: {name}: {} [{:.1}s]", outcome.detail, start.elapsed().as_secs_f64());
        failed += usize::from(!outcome.pass);
    }
    if failed > 0 && std::env::var_os("ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
