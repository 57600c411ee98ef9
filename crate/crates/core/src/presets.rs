//! Formulas, regions and initial conditions of the bundled scenarios.

use crate::semantics::Trajectory;
use crate::stl::{parse, Formula};
use crate::synth::{Floor, Semantics, SynthConfig};

/// Open axis-aligned rectangle in the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub x: (f64, f64),
    pub y: (f64, f64),
}

impl Region {
    pub const fn new(x: (f64, f64), y: (f64, f64)) -> Self {
        Self { x, y }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.x.0 < x && x < self.x.1 && self.y.0 < y && y < self.y.1
    }

    /// Membership predicate over `x{offset+1}`, `x{offset+2}`.
    pub fn formula_text(&self, offset: usize) -> String {
        let (a, b) = (offset + 1, offset + 2);
        format!(
            "((x{a} > {}) && (x{a} < {}) && (x{b} > {}) && (x{b} < {}))",
            self.x.0, self.x.1, self.y.0, self.y.1
        )
    }
}

/// First candidate waypoint.
pub const REGION_1: Region = Region::new((4.0, 7.0), (0.0, 2.0));
/// Second candidate waypoint.
pub const REGION_2: Region = Region::new((0.0, 2.0), (4.0, 7.0));
/// Destination.
pub const REGION_3: Region = Region::new((5.0, 7.0), (5.0, 7.0));
/// Obstacle.
pub const REGION_4: Region = Region::new((2.0, 5.0), (2.0, 5.0));

/// Dubins time step used by the vehicle scenarios.
pub const VEHICLE_DT: f64 = 0.1;

/// Initial states of the two vehicles, `(x, y, theta)` each.
pub const TWO_VEHICLE_START: [f64; 6] = [0.9, 0.9, std::f64::consts::FRAC_PI_4, 0.9, 2.0, 0.0];

/// Vehicle footprint radius; two vehicles collide when closer than twice this.
pub const VEHICLE_RADIUS: f64 = 0.3;

/// Avoid the obstacle for 4 s until reaching region 1 or 2 within 6 s, then
/// reach the destination within 4 s and stay there for 2 s.
pub fn reach_avoid_text(offset: usize) -> String {
    format!(
        "(G[0,40] !{}) U[0,60] (({} || {}) && F[0,40] G[0,20] {})",
        REGION_4.formula_text(offset),
        REGION_1.formula_text(offset),
        REGION_2.formula_text(offset),
        REGION_3.formula_text(offset),
    )
}

pub fn reach_avoid_formula() -> Formula {
    parse(&reach_avoid_text(0), 3).expect("bundled formula parses")
}

/// Both vehicles satisfy the reach-avoid task and keep their distance over
/// the whole horizon.
pub fn two_vehicle_text(radius: f64) -> String {
    let h = parse(&reach_avoid_text(0), 3).expect("bundled formula parses").horizon();
    let d = 4.0 * radius * radius;
    format!(
        "({}) && ({}) && G[0,{h}] ((((x1 - x4) ^ 2) + ((x2 - x5) ^ 2)) > {d})",
        reach_avoid_text(0),
        reach_avoid_text(3)
    )
}

pub fn two_vehicle_formula(radius: f64) -> Formula {
    parse(&two_vehicle_text(radius), 6).expect("bundled formula parses")
}

/// Band `2 < x1 < 4`.
pub const UPPER_BAND: (f64, f64) = (2.0, 4.0);
/// Band `-4 < x1 < -2`.
pub const LOWER_BAND: (f64, f64) = (-4.0, -2.0);

/// Visit both bands within the next four steps.
pub const OSCILLATION_TEXT: &str = "F[0,4] ((x1 > 2) && (x1 < 4)) && F[0,4] ((x1 > -4) && (x1 < -2))";

pub fn oscillation_formula() -> Formula {
    parse(OSCILLATION_TEXT, 2).expect("bundled formula parses")
}

/// Number of MPC steps in the oscillation scenario.
pub const OSCILLATION_MPC_STEPS: usize = 15;

/// Variance of each disturbance component in the noisy oscillation scenario.
pub const OSCILLATION_NOISE_VARIANCE: f64 = 0.1;

/// Optimizer settings of the two-vehicle scenario, mirrored by
/// `vehicle2.toml` in the CLI crate.
pub fn two_vehicle_synth_config(semantics: Semantics, seed: u64) -> SynthConfig {
    SynthConfig {
        beta: 10.0,
        stage_one_beta: Some(2.0),
        beta_max: Some(16.0),
        stage_one_margin: 0.1,
        floor: Floor::Relative(0.9),
        semantics,
        seed,
        ..SynthConfig::default()
    }
}

/// Optimizer settings of the oscillation scenario; `oscillation.toml` in
/// the CLI crate carries the same values.
pub fn oscillation_synth_config(semantics: Semantics, seed: u64) -> SynthConfig {
    SynthConfig {
        beta: 3.0,
        stage_one_beta: Some(1.0),
        beta_max: Some(16.0),
        floor: Floor::Relative(0.9),
        restarts: 8,
        semantics,
        seed,
        ..SynthConfig::default()
    }
}

/// Eventually inside `(1, 3)` within ten steps.
pub fn dwell_contrast_formula() -> Formula {
    parse("F[0,10] ((x1 > 1) && (x1 < 3))", 1).expect("bundled formula parses")
}

/// Two signals with identical traditional robustness (1) but different
/// time spent inside the band.
pub fn dwell_contrast_signals() -> (Trajectory, Trajectory) {
    let brief = [0.0, 0.4, 0.8, 1.5, 2.0, 2.0, 3.2, 3.5, 3.8, 4.0, 4.0];
    let long = [0.0, 1.5, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0, 0.8, 0.4];
    (
        Trajectory::scalar(&brief, 1.0).expect("finite samples"),
        Trajectory::scalar(&long, 1.0).expect("finite samples"),
    )
}

/// Steps at which the vehicle whose position is `(x{offset+1}, x{offset+2})`
/// is inside `region`.
pub fn region_dwell(traj: &Trajectory, region: &Region, offset: usize) -> usize {
    (0..traj.len())
        .filter(|&k| region.contains(traj.component(k, offset), traj.component(k, offset + 1)))
        .count()
}

/// Steps at which `x{index+1}` lies strictly inside `band`.
pub fn band_dwell(traj: &Trajectory, band: (f64, f64), index: usize) -> usize {
    (0..traj.len())
        .filter(|&k| {
            let v = traj.component(k, index);
            band.0 < v && v < band.1
        })
        .count()
}
