mod output;
mod scenario;

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Mutex;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use cumstl::mpc::{mpc_synthesize, MpcReport, MpcStatus};
use cumstl::semantics::{self, Measure, SmoothParams, Trajectory};
use cumstl::smc::{bayesian_estimate, closed_loop_trial, mpc_trial, trial_seed, SmcConfig, SmcStop};
use cumstl::stl::parse;
use cumstl::synth::{smooth_optimization, SynthReport};

use output::{read_trace, write_policy, write_table, write_trajectory};
use scenario::{Scenario, SemanticsName, SmcMode};

#[derive(Parser)]
#[command(name = "cumstl", version, about = "STL monitoring and control synthesis with cumulative robustness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a formula on a CSV trace.
    Monitor {
        #[arg(long)]
        trace: PathBuf,
        /// Formula text; falls back to the scenario's formula.
        #[arg(long)]
        formula: Option<String>,
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Mode::Rho)]
        mode: Mode,
        #[arg(long, default_value_t = 10.0)]
        beta: f64,
        /// Start step of the printed value.
        #[arg(long, default_value_t = 0)]
        k: usize,
        /// Also write `robustness.csv` here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the three-stage optimizer once.
    Synthesize(RunArgs),
    /// Receding-horizon control over the scenario's MPC steps.
    Mpc(RunArgs),
    /// Estimate the satisfaction probability under noise.
    Smc {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        confidence: Option<f64>,
        /// Overrides the scenario's `smc.mode`.
        #[arg(long, value_enum)]
        smc_mode: Option<SmcModeArg>,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Overrides the scenario's `synth.semantics`.
    #[arg(long, value_enum)]
    semantics: Option<SemanticsName>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Bool,
    Rho,
    #[value(name = "rho+")]
    RhoPlus,
    #[value(name = "rho-")]
    RhoMinus,
    Srho,
    #[value(name = "srho+")]
    SrhoPlus,
    #[value(name = "srho-")]
    SrhoMinus,
}

#[derive(Clone, Copy, ValueEnum)]
enum SmcModeArg {
    OpenLoop,
    Mpc,
}

/// Successful run, or a run whose optimizer found no satisfying plan.
enum Outcome {
    Done,
    Infeasible,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Monitor {
            trace,
            formula,
            scenario,
            mode,
            beta,
            k,
            out,
        } => monitor(&trace, formula, scenario.as_deref(), mode, beta, k, out.as_deref()),
        Command::Synthesize(args) => synthesize(&args),
        Command::Mpc(args) => mpc(&args),
        Command::Smc {
            run,
            delta,
            confidence,
            smc_mode,
        } => smc(&run, delta, confidence, smc_mode),
    };
    match result {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Infeasible) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn monitor(
    trace: &Path,
    formula: Option<String>,
    scenario: Option<&Path>,
    mode: Mode,
    beta: f64,
    k: usize,
    out: Option<&Path>,
) -> Result<Outcome> {
    let traj = read_trace(trace)?;
    let text = match (formula, scenario) {
        (Some(t), _) => t,
        (None, Some(s)) => Scenario::load(s)?.formula_text()?,
        (None, None) => bail!("give --formula or --scenario"),
    };
    let f = parse(&text, traj.state_dim()).with_context(|| format!("formula `{text}`"))?;
    let params = SmoothParams::new(beta)?;
    match mode {
        Mode::Bool => println!("{:?}", semantics::sat(&f, &traj, k)?),
        Mode::Rho => println!("{}", semantics::rho(&f, &traj, k)?),
        Mode::RhoPlus => println!("{}", semantics::rho_plus(&f, &traj, k)?),
        Mode::RhoMinus => println!("{}", semantics::rho_minus(&f, &traj, k)?),
        Mode::Srho => println!("{}", semantics::rho_smooth(&f, &traj, k, params)?),
        Mode::SrhoPlus => println!("{}", semantics::rho_plus_smooth(&f, &traj, k, params)?),
        Mode::SrhoMinus => println!("{}", semantics::rho_minus_smooth(&f, &traj, k, params)?),
    }
    if let Some(dir) = out {
        write_robustness(dir, &f, &traj)?;
    }
    Ok(Outcome::Done)
}

/// `k, rho, rho_plus, rho_minus` at every start the trace covers; the
/// cumulative columns stay empty when the formula has no cumulative value.
fn write_robustness(dir: &Path, f: &cumstl::stl::Formula, traj: &Trajectory) -> Result<PathBuf> {
    let rho = semantics::series(f, traj, Measure::Rho)?;
    let plus = semantics::series(f, traj, Measure::RhoPlus).ok();
    let minus = semantics::series(f, traj, Measure::RhoMinus).ok();
    let cell = |v: &Option<Vec<f64>>, k: usize| v.as_ref().map_or(String::new(), |v| v[k].to_string());
    let rows: Vec<Vec<String>> = (0..rho.len())
        .map(|k| vec![k.to_string(), rho[k].to_string(), cell(&plus, k), cell(&minus, k)])
        .collect();
    write_table(dir, "robustness.csv", &["k", "rho", "rho_plus", "rho_minus"], &rows)
}

fn print_report(label: &str, r: &SynthReport) {
    println!(
        "{label}: {:?} rho {} rho+ {} cost {} ({:.2}s)",
        r.status,
        r.rho,
        r.rho_plus.map_or("n/a".into(), |v| v.to_string()),
        r.cost,
        r.wall_time.as_secs_f64()
    );
}

/// Values of the scenario formula itself, without the state constraint the
/// optimizer adds; `monitor` on the written trajectory reproduces them.
fn print_formula_values(phi: &cumstl::stl::Formula, traj: &Trajectory) -> Result<()> {
    let plus = semantics::rho_plus(phi, traj, 0).map_or("n/a".into(), |v| v.to_string());
    println!("formula: rho {} rho+ {plus}", semantics::rho(phi, traj, 0)?);
    Ok(())
}

fn synthesize(args: &RunArgs) -> Result<Outcome> {
    let s = Scenario::load(&args.scenario)?;
    let system = s.system()?;
    let cfg = s.synth_config(args.seed, args.beta, args.semantics);
    let phi = s.formula()?;
    let r = smooth_optimization(&phi, &system, &s.plant.initial, s.cost(), &cfg)?;
    print_report(s.label(), &r);
    print_formula_values(&phi, &r.trajectory)?;
    write_policy(&args.out, "policy.csv", &r.policy)?;
    write_trajectory(&args.out, "trajectory.csv", &r.trajectory)?;
    Ok(if r.is_satisfied() { Outcome::Done } else { Outcome::Infeasible })
}

fn run_mpc(s: &Scenario, args: &RunArgs) -> Result<MpcReport> {
    let cfg = s.mpc_config(s.synth_config(args.seed, args.beta, args.semantics));
    Ok(mpc_synthesize(&s.formula()?, &s.system()?, &s.plant.initial, s.cost(), &cfg)?)
}

fn mpc(args: &RunArgs) -> Result<Outcome> {
    let s = Scenario::load(&args.scenario)?;
    let r = run_mpc(&s, args)?;
    let rows: Vec<Vec<String>> = r
        .plans
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let iters: usize = p.stages.iter().map(|st| st.iterations()).sum();
            vec![k.to_string(), format!("{:?}", p.status), p.rho.to_string(), p.cost.to_string(), iters.to_string()]
        })
        .collect();
    write_table(&args.out, "plans.csv", &["k", "status", "rho", "cost", "iterations"], &rows)?;
    write_policy(&args.out, "policy.csv", &r.closed_loop_policy)?;
    write_trajectory(&args.out, "trajectory.csv", &r.trajectory)?;
    let checked = s.checked_formula()?;
    let verdict = match semantics::rho(&checked, &r.trajectory, 0) {
        Ok(v) => v.to_string(),
        Err(_) => "n/a".into(),
    };
    println!("{}: {:?} over {} plans, cost {}, rho of the run {verdict}", s.label(), r.status, r.plans.len(), r.cost);
    Ok(match r.status {
        MpcStatus::Completed => Outcome::Done,
        MpcStatus::Infeasible { .. } => Outcome::Infeasible,
    })
}

fn smc(args: &RunArgs, delta: Option<f64>, confidence: Option<f64>, mode: Option<SmcModeArg>) -> Result<Outcome> {
    let s = Scenario::load(&args.scenario)?;
    let seed = args.seed.unwrap_or(s.seed);
    let cfg = SmcConfig {
        delta: delta.unwrap_or(s.smc.delta),
        confidence: confidence.unwrap_or(s.smc.confidence),
        max_samples: s.smc.max_samples,
        seed,
        ..SmcConfig::default()
    };
    let mode = match mode {
        Some(SmcModeArg::OpenLoop) => SmcMode::OpenLoop,
        Some(SmcModeArg::Mpc) => SmcMode::Mpc,
        None => s.smc.mode,
    };
    let system = s.system()?;
    let noise = s.noise(seed)?;
    let phi = s.formula()?;
    let checked = s.checked_formula()?;
    let gamma = &s.plant.initial;
    let outcomes = Mutex::new(HashMap::new());
    let record = |sub: u64, ok: bool| {
        outcomes.lock().expect("no panics while holding the lock").insert(sub, ok);
        ok
    };
    let result = match mode {
        SmcMode::OpenLoop => {
            let plan = run_mpc(&s, args)?;
            if !plan.is_complete() {
                println!("{}: the noise-free plan failed ({:?})", s.label(), plan.status);
                return Ok(Outcome::Infeasible);
            }
            write_policy(&args.out, "policy.csv", &plan.closed_loop_policy)?;
            let policy = &plan.closed_loop_policy;
            bayesian_estimate(
                |sub| Ok(record(sub, closed_loop_trial(&system, &noise, gamma, policy, &checked, sub)?)),
                &cfg,
            )?
        }
        SmcMode::Mpc => {
            let mpc_cfg = s.mpc_config(s.synth_config(args.seed, args.beta, args.semantics));
            bayesian_estimate(
                |sub| {
                    let ok = mpc_trial(&phi, &checked, &system, gamma, s.cost(), &mpc_cfg, &noise, sub)?;
                    Ok(record(sub, ok))
                },
                &cfg,
            )?
        }
    };
    let outcomes = outcomes.into_inner().expect("no panics while holding the lock");
    let rows: Vec<Vec<String>> = (0..result.samples)
        .map(|i| {
            let sub = trial_seed(seed, i);
            vec![i.to_string(), sub.to_string(), u8::from(outcomes[&sub]).to_string()]
        })
        .collect();
    write_table(&args.out, "trials.csv", &["trial", "seed", "satisfied"], &rows)?;
    println!(
        "{}: estimate {:.4} from {} trials ({} satisfied), posterior Beta({}, {}){}",
        s.label(),
        result.estimate,
        result.samples,
        result.successes,
        result.posterior.0,
        result.posterior.1,
        if result.stop == SmcStop::MaxSamples { ", stopped at max_samples" } else { "" }
    );
    Ok(Outcome::Done)
}
