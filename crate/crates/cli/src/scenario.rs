//! Scenario files: plant, formula, optimizer settings and the optional MPC,
//! noise and SMC sections, in TOML.
//!
//! ```toml
//! [plant]
//! model = "linear"      # "dubins" | "fleet" | "linear"
//! umax = 10.0
//! initial = [0.0, 0.0]
//!
//! [formula]
//! preset = "oscillation"   # or text = "F[0,4] (x1 > 2)"
//!
//! [synth]
//! beta = 10.0
//! semantics = "cumulative"
//!
//! [mpc]
//! steps = 15
//! ```

use std::path::Path;

use anyhow::{bail, Context, Result};
use cumstl::mpc::{always_over, MpcConfig};
use cumstl::plant::{
    control_effort_cost, dubins_model, fleet_model, linear_model, quadratic_motion_cost, CostFunction, NoiseSpec,
    SystemModel,
};
use cumstl::presets;
use cumstl::smc::SmcConfig;
use cumstl::stl::{parse, Formula};
use cumstl::synth::{Floor, Semantics, SynthConfig};
use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub seed: u64,
    pub plant: PlantSection,
    pub formula: FormulaSection,
    #[serde(default)]
    pub synth: SynthSection,
    pub mpc: Option<MpcSection>,
    pub noise: Option<NoiseSection>,
    #[serde(default)]
    pub smc: SmcSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    Dubins,
    Fleet,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Cost {
    QuadraticMotion,
    ControlEffort,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantSection {
    pub model: Model,
    /// Number of vehicles of a fleet.
    #[serde(default = "default_vehicles")]
    pub vehicles: usize,
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Input bound of the linear plant.
    #[serde(default = "default_umax")]
    pub umax: f64,
    pub initial: Vec<f64>,
    /// Defaults to quadratic motion for vehicles and control effort for
    /// the linear plant.
    pub cost: Option<Cost>,
}

fn default_vehicles() -> usize {
    2
}

fn default_dt() -> f64 {
    presets::VEHICLE_DT
}

fn default_umax() -> f64 {
    10.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormulaSection {
    pub text: Option<String>,
    /// `reach-avoid`, `two-vehicle` or `oscillation`.
    pub preset: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSection {
    pub semantics: SemanticsName,
    pub beta: f64,
    pub stage_one_beta: Option<f64>,
    pub beta_max: Option<f64>,
    pub stage_one_margin: f64,
    pub guarded_climb: bool,
    pub epsilon: f64,
    /// Fraction of the stage-two value kept by stage three.
    pub floor: f64,
    pub max_iters: [usize; 3],
    pub restarts: usize,
    pub keep_in_state_box: bool,
}

impl Default for SynthSection {
    fn default() -> Self {
        let d = SynthConfig::default();
        Self {
            semantics: SemanticsName::Cumulative,
            beta: d.beta,
            stage_one_beta: d.stage_one_beta,
            beta_max: d.beta_max,
            stage_one_margin: d.stage_one_margin,
            guarded_climb: d.guarded_climb,
            epsilon: d.epsilon,
            floor: 0.5,
            max_iters: d.max_iters,
            restarts: d.restarts,
            keep_in_state_box: d.keep_in_state_box,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SemanticsName {
    Cumulative,
    Traditional,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MpcSection {
    pub steps: usize,
    #[serde(default)]
    pub lookahead: usize,
    #[serde(default = "yes")]
    pub warm_start: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    /// Per-component variance of the Gaussian disturbance.
    pub variance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SmcMode {
    /// Replay the synthesized inputs under noise.
    #[default]
    OpenLoop,
    /// Re-plan at every step on the disturbed state.
    Mpc,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SmcSection {
    pub delta: f64,
    pub confidence: f64,
    pub mode: SmcMode,
    pub max_samples: usize,
}

impl Default for SmcSection {
    fn default() -> Self {
        let d = SmcConfig::default();
        Self {
            delta: d.delta,
            confidence: d.confidence,
            mode: SmcMode::OpenLoop,
            max_samples: d.max_samples,
        }
    }
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let s: Scenario = toml::from_str(&text).with_context(|| format!("in scenario {}", path.display()))?;
        s.system()?;
        s.formula()?;
        Ok(s)
    }

    pub fn system(&self) -> Result<SystemModel> {
        let p = &self.plant;
        let sys = match p.model {
            Model::Dubins => dubins_model(p.dt)?,
            Model::Fleet => fleet_model(p.vehicles, p.dt)?,
            Model::Linear => linear_model(p.umax)?,
        };
        if p.initial.len() != sys.state_dim() {
            bail!(
                "plant.initial has {} entries; the {:?} model has {} states",
                p.initial.len(),
                p.model,
                sys.state_dim()
            );
        }
        Ok(sys)
    }

    pub fn cost(&self) -> CostFunction {
        let default = match self.plant.model {
            Model::Linear => Cost::ControlEffort,
            _ => Cost::QuadraticMotion,
        };
        match self.plant.cost.unwrap_or(default) {
            Cost::QuadraticMotion => quadratic_motion_cost(),
            Cost::ControlEffort => control_effort_cost(),
        }
    }

    pub fn formula_text(&self) -> Result<String> {
        match (&self.formula.text, &self.formula.preset) {
            (Some(t), None) => Ok(t.clone()),
            (None, Some(p)) => preset_text(p),
            _ => bail!("formula: give exactly one of `text` and `preset`"),
        }
    }

    pub fn formula(&self) -> Result<Formula> {
        let dim = self.system()?.state_dim();
        let text = self.formula_text()?;
        parse(&text, dim).with_context(|| format!("formula `{text}`"))
    }

    pub fn label(&self) -> &str {
        self.name.as_deref().unwrap_or("scenario")
    }

    pub fn synth_config(&self, seed: Option<u64>, beta: Option<f64>, semantics: Option<SemanticsName>) -> SynthConfig {
        let s = &self.synth;
        SynthConfig {
            beta: beta.unwrap_or(s.beta),
            stage_one_beta: s.stage_one_beta,
            beta_max: s.beta_max,
            stage_one_margin: s.stage_one_margin,
            guarded_climb: s.guarded_climb,
            epsilon: s.epsilon,
            floor: Floor::Relative(s.floor),
            max_iters: s.max_iters,
            semantics: match semantics.unwrap_or(s.semantics) {
                SemanticsName::Cumulative => Semantics::Cumulative,
                SemanticsName::Traditional => Semantics::Traditional,
            },
            keep_in_state_box: s.keep_in_state_box,
            seed: seed.unwrap_or(self.seed),
            restarts: s.restarts,
            ..SynthConfig::default()
        }
    }

    /// MPC settings; a missing `[mpc]` section means zero re-planning steps.
    pub fn mpc_config(&self, synth: SynthConfig) -> MpcConfig {
        let mut cfg = MpcConfig::new(self.mpc.as_ref().map_or(0, |m| m.steps), synth);
        if let Some(m) = &self.mpc {
            cfg.lookahead = m.lookahead;
            cfg.warm_start = m.warm_start;
        }
        cfg
    }

    pub fn noise(&self, seed: u64) -> Result<NoiseSpec> {
        let Some(n) = &self.noise else {
            bail!("the scenario has no [noise] section");
        };
        Ok(NoiseSpec::isotropic_variance(self.system()?.state_dim(), n.variance, seed)?)
    }

    /// Formula judged by SMC: `phi` at every executed MPC step.
    pub fn checked_formula(&self) -> Result<Formula> {
        Ok(always_over(&self.formula()?, self.mpc.as_ref().map_or(0, |m| m.steps)))
    }
}

fn preset_text(name: &str) -> Result<String> {
    Ok(match name {
        "reach-avoid" => presets::reach_avoid_text(0),
        "two-vehicle" => presets::two_vehicle_text(presets::VEHICLE_RADIUS),
        "oscillation" => presets::OSCILLATION_TEXT.to_string(),
        other => bail!("unknown formula preset `{other}` (reach-avoid, two-vehicle, oscillation)"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bundled(name: &str) -> Scenario {
        Scenario::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)).unwrap()
    }

    #[test]
    fn bundled_scenarios_mirror_presets() {
        for sem in [Semantics::Cumulative, Semantics::Traditional] {
            let name = match sem {
                Semantics::Cumulative => SemanticsName::Cumulative,
                Semantics::Traditional => SemanticsName::Traditional,
            };
            let osc = bundled("oscillation.toml");
            assert_eq!(osc.synth_config(None, None, Some(name)), presets::oscillation_synth_config(sem, osc.seed));
            let two = bundled("vehicle2.toml");
            assert_eq!(two.synth_config(None, None, Some(name)), presets::two_vehicle_synth_config(sem, two.seed));
        }
    }

    #[test]
    fn formula_needs_exactly_one_source() {
        let text = "[plant]\nmodel = \"linear\"\ninitial = [0.0, 0.0]\n[formula]\n";
        let s: Scenario = toml::from_str(text).unwrap();
        assert!(s.formula().is_err());
    }
}
