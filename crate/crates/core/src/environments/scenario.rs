//! Scenario description for the four arm tasks, with per-case defaults.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::Error;
use crate::interactions::{equidistant_knots, Obstacle, Shape, Shell, TargetLaw, TorqueDirection};
use crate::kinematics::{SectionProperties, Vec3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmConfig {
    /// [m]
    pub length: f64,
    /// [m]
    pub radius: f64,
    /// [kg/m³]
    pub density: f64,
    /// [Pa]
    pub young_modulus: f64,
    pub poisson_ratio: f64,
    pub elements: usize,
}

impl Default for ArmConfig {
    fn default() -> Self {
        ArmConfig { length: 1.0, radius: 0.025, density: 1000.0, young_modulus: 1e7, poisson_ratio: 0.5, elements: 50 }
    }
}

impl ArmConfig {
    pub fn properties(&self) -> Result<SectionProperties, Error> {
        Ok(SectionProperties::uniform(
            self.elements,
            self.length,
            self.radius,
            self.density,
            self.young_modulus,
            self.poisson_ratio,
        )?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActuationConfig {
    pub directions: Vec<TorqueDirection>,
    /// Material coordinates of the control points [m].
    pub knots: Vec<f64>,
    /// Couple density of a saturated control point [N·m/m].
    pub torque_scale: f64,
}

/// Bonus granted while the error is strictly below `threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BonusTier {
    pub threshold: f64,
    pub bonus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrientationReward {
    /// Penalty per radian of geodesic error.
    pub weight: f64,
    /// Coarse tier first, fine tier second [rad].
    pub tiers: [BonusTier; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardConfig {
    /// Penalty per metre of tip-target distance.
    pub distance_weight: f64,
    /// Coarse tier first, fine tier second [m].
    pub tiers: [BonusTier; 2],
    pub orientation: Option<OrientationReward>,
    /// Reward of a step that ends in a numerical instability.
    pub instability_penalty: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    pub law: TargetLaw,
    /// Sampling region, and reflecting bounds of the random walk.
    pub shell: Shell,
    /// Fixed initial position; sampled in `shell` on every reset when absent.
    pub position: Option<Vec3>,
    /// Rotate the target frame about the vertical by a uniform random angle
    /// on every reset.
    pub random_orientation: bool,
}

/// Fully resolved scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseScenario {
    pub case: u8,
    pub seed: u64,
    pub episode_control_steps: usize,
    pub substeps_per_control: usize,
    /// Physics time step [s].
    pub dt: f64,
    /// Velocity decay rate [1/s].
    pub damping: f64,
    /// Any node faster than this [m/s] counts as a numerical instability.
    pub instability_speed: f64,
    pub arm: ArmConfig,
    pub actuation: ActuationConfig,
    pub reward: RewardConfig,
    pub target: TargetConfig,
    pub obstacles: Vec<Obstacle>,
}

pub const DEFAULT_DT: f64 = 2.5e-5;
pub const DEFAULT_DAMPING: f64 = 10.0;
/// Couple density of a saturated control point for the default arm [N·m/m].
pub const DEFAULT_TORQUE_SCALE: f64 = 60.0;
/// Seed of the fixed Case 4 sphere layout.
pub const NEST_LAYOUT_SEED: u64 = 2021;

impl CaseScenario {
    /// Documented defaults for `case`.
    pub fn defaults(case: u8) -> Result<Self, Error> {
        Self::defaults_for_arm(case, ArmConfig::default())
    }

    /// Defaults with lengths scaled to `arm.length`.
    pub fn defaults_for_arm(case: u8, arm: ArmConfig) -> Result<Self, Error> {
        check_case(case)?;
        let l = arm.length;
        Ok(CaseScenario {
            case,
            seed: 0,
            episode_control_steps: 400,
            substeps_per_control: 100,
            dt: DEFAULT_DT,
            damping: DEFAULT_DAMPING,
            instability_speed: 100.0,
            actuation: default_actuation(case, l),
            reward: default_reward(case, l),
            target: default_target(case, l),
            obstacles: default_obstacles(case, l),
            arm,
        })
    }

    pub fn control_dt(&self) -> f64 {
        self.dt * self.substeps_per_control as f64
    }

    pub fn validate(&self) -> Result<(), Error> {
        check_case(self.case)?;
        for (path, v) in [
            ("episode_control_steps", self.episode_control_steps),
            ("substeps_per_control", self.substeps_per_control),
            ("arm.elements", self.arm.elements),
        ] {
            if v == 0 {
                return Err(Error::config(path, "must be positive"));
            }
        }
        if self.arm.elements < 2 {
            return Err(Error::config("arm.elements", "need at least 2 elements"));
        }
        let positive = [
            ("dt", self.dt),
            ("instability_speed", self.instability_speed),
            ("arm.length", self.arm.length),
            ("arm.radius", self.arm.radius),
            ("arm.density", self.arm.density),
            ("arm.young_modulus", self.arm.young_modulus),
        ];
        for (path, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(path, format!("must be positive and finite, got {v}")));
            }
        }
        if !(self.damping >= 0.0 && self.damping.is_finite()) {
            return Err(Error::config("damping", "must be non-negative"));
        }
        if !(self.arm.poisson_ratio > -1.0 && self.arm.poisson_ratio <= 0.5) {
            return Err(Error::config("arm.poisson_ratio", "must lie in (-1, 0.5]"));
        }
        let props = self.arm.properties()?;
        if self.dt > props.stable_dt() {
            return Err(Error::config("dt", format!("{} exceeds the stability bound {}", self.dt, props.stable_dt())));
        }
        crate::interactions::SplineActuation::new(
            &self.actuation.directions,
            &self.actuation.knots,
            self.actuation.torque_scale,
            &props,
        )
        .map_err(|e| match e {
            Error::Config { path, message } if !path.starts_with("actuation") => {
                Error::config(format!("actuation.{path}"), message)
            }
            e => e,
        })?;
        check_tiers("reward.tiers", &self.reward.tiers, self.reward.distance_weight)?;
        if !self.reward.instability_penalty.is_finite() {
            return Err(Error::config("reward.instability_penalty", "must be finite"));
        }
        if let Some(o) = &self.reward.orientation {
            check_tiers("reward.orientation.tiers", &o.tiers, o.weight)?;
        }
        self.target.law.validate("target.law")?;
        self.target.shell.validate("target.shell")?;
        if let Some(p) = self.target.position {
            if !p.iter().all(|c| c.is_finite()) {
                return Err(Error::config("target.position", "must be finite"));
            }
        }
        for (i, ob) in self.obstacles.iter().enumerate() {
            ob.validate(&format!("obstacles[{i}]"))?;
        }
        Ok(())
    }
}

fn check_case(case: u8) -> Result<(), Error> {
    if !(1..=4).contains(&case) {
        return Err(Error::config("case", format!("must be 1, 2, 3 or 4, got {case}")));
    }
    Ok(())
}

fn check_tiers(path: &str, tiers: &[BonusTier; 2], weight: f64) -> Result<(), Error> {
    let [coarse, fine] = tiers;
    let finite = [coarse.threshold, coarse.bonus, fine.threshold, fine.bonus, weight].iter().all(|v| v.is_finite());
    if !finite || !(fine.threshold < coarse.threshold && fine.bonus > coarse.bonus && coarse.bonus > 0.0) {
        return Err(Error::config(
            path,
            "bonus tiers must satisfy fine threshold < coarse threshold and fine bonus > coarse bonus > 0",
        ));
    }
    if weight < 0.0 {
        return Err(Error::config(path, "penalty weight must be non-negative"));
    }
    Ok(())
}

fn default_actuation(case: u8, l: f64) -> ActuationConfig {
    use TorqueDirection::*;
    let (directions, knots) = match case {
        1 => (vec![D1, D2], equidistant_knots(6, l)),
        2 => (vec![D1, D2, D3], equidistant_knots(6, l)),
        3 => (vec![D1], vec![0.4 * l, 0.9 * l]),
        _ => (vec![D1, D2], vec![0.4 * l, 0.9 * l]),
    };
    ActuationConfig { directions, knots, torque_scale: DEFAULT_TORQUE_SCALE }
}

fn default_reward(case: u8, l: f64) -> RewardConfig {
    let orientation = (case == 2).then(|| OrientationReward {
        weight: 0.5 / PI,
        tiers: [BonusTier { threshold: 0.2, bonus: 0.5 }, BonusTier { threshold: 0.1, bonus: 1.0 }],
    });
    RewardConfig {
        distance_weight: 1.0 / l,
        tiers: [BonusTier { threshold: 0.1 * l, bonus: 0.5 }, BonusTier { threshold: 0.05 * l, bonus: 1.0 }],
        orientation,
        instability_penalty: -10.0,
    }
}

/// Target position of the obstacle cases, beyond the wall / nest.
pub fn obstacle_case_target(case: u8, l: f64) -> Vec3 {
    match case {
        3 => Vec3::new(0.0, 0.6, 0.55) * l,
        _ => Vec3::new(0.4, 0.45, 0.5) * l,
    }
}

fn default_target(case: u8, l: f64) -> TargetConfig {
    match case {
        1 => TargetConfig {
            law: TargetLaw::RandomWalk { reversion_rate: 2.0, noise: 0.2 * l, max_speed: 0.3 * l },
            shell: Shell { inner: 0.3 * l, outer: 0.9 * l },
            position: None,
            random_orientation: false,
        },
        2 => TargetConfig {
            law: TargetLaw::Static,
            shell: Shell { inner: 0.5 * l, outer: 0.9 * l },
            position: None,
            random_orientation: true,
        },
        _ => TargetConfig {
            law: TargetLaw::Static,
            shell: Shell { inner: 0.3 * l, outer: 0.9 * l },
            position: Some(obstacle_case_target(case, l)),
            random_orientation: false,
        },
    }
}

fn default_obstacles(case: u8, l: f64) -> Vec<Obstacle> {
    match case {
        3 => wall(l),
        4 => nest(l, NEST_LAYOUT_SEED),
        _ => Vec::new(),
    }
}

/// Horizontal bars along x at y = 0.35 L, with an opening around z = 0.5 L.
/// The arm bends in the y–z plane, so the bars sit across its path.
fn wall(l: f64) -> Vec<Obstacle> {
    [0.12, 0.24, 0.36, 0.68, 0.8, 0.92]
        .iter()
        .map(|&z| {
            Obstacle::new(Shape::Capsule {
                start: Vec3::new(-0.3, 0.35, z) * l,
                end: Vec3::new(0.3, 0.35, z) * l,
                radius: 0.05 * l,
            })
        })
        .collect()
}

/// Ten non-overlapping spheres scattered about the segment from the middle of
/// the upright arm to the target, clear of the rest pose and of the target.
fn nest(l: f64, seed: u64) -> Vec<Obstacle> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let from = Vec3::new(0.0, 0.0, 0.5) * l;
    let to = obstacle_case_target(4, l);
    let clearance = 0.05 * l;
    let mut spheres: Vec<(Vec3, f64)> = Vec::new();
    while spheres.len() < 10 {
        let t: f64 = rng.random_range(0.15..0.85);
        let jitter = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let center = from + (to - from) * t + jitter * (0.2 * l);
        let radius = rng.random_range(0.04..0.07) * l;
        let off_axis = center.xy().norm();
        let clear_of_arm = off_axis > radius + clearance || center.z > l + radius + clearance;
        let clear_of_target = (center - to).norm() > radius + clearance;
        let clear_of_others = spheres.iter().all(|(c, r)| (center - c).norm() > radius + r + 0.02 * l);
        if clear_of_arm && clear_of_target && clear_of_others && center.z > radius {
            spheres.push((center, radius));
        }
    }
    spheres.into_iter().map(|(center, radius)| Obstacle::new(Shape::Sphere { center, radius })).collect()
}

/// Distinguishes an absent key (outer `None`) from an explicit `null`.
fn present<'de, D, T>(d: D) -> Result<Option<Option<T>>, D::Error>
where
    D: Deserializer<'de>,
    T: Deserialize<'de>,
{
    Option::<T>::deserialize(d).map(Some)
}

/// Scenario file contents: only `case` is required.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct ScenarioFile {
    case: u8,
    seed: Option<u64>,
    episode_control_steps: Option<usize>,
    substeps_per_control: Option<usize>,
    dt: Option<f64>,
    damping: Option<f64>,
    instability_speed: Option<f64>,
    arm: Option<ArmFile>,
    actuation: Option<ActuationFile>,
    reward: Option<RewardFile>,
    target: Option<TargetFile>,
    obstacles: Option<Vec<Obstacle>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArmFile {
    length: Option<f64>,
    radius: Option<f64>,
    density: Option<f64>,
    young_modulus: Option<f64>,
    poisson_ratio: Option<f64>,
    elements: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ActuationFile {
    directions: Option<Vec<TorqueDirection>>,
    knots: Option<Vec<f64>>,
    torque_scale: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RewardFile {
    distance_weight: Option<f64>,
    tiers: Option<[BonusTier; 2]>,
    #[serde(default, deserialize_with = "present")]
    orientation: Option<Option<OrientationReward>>,
    instability_penalty: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TargetFile {
    law: Option<TargetLaw>,
    shell: Option<Shell>,
    #[serde(default, deserialize_with = "present")]
    position: Option<Option<Vec3>>,
    random_orientation: Option<bool>,
}

impl ScenarioFile {
    /// Fills every absent field with the case default and validates.
    pub(crate) fn resolve(self) -> Result<CaseScenario, Error> {
        check_case(self.case)?;
        let mut arm = ArmConfig::default();
        if let Some(a) = self.arm {
            arm.length = a.length.unwrap_or(arm.length);
            arm.radius = a.radius.unwrap_or(arm.radius);
            arm.density = a.density.unwrap_or(arm.density);
            arm.young_modulus = a.young_modulus.unwrap_or(arm.young_modulus);
            arm.poisson_ratio = a.poisson_ratio.unwrap_or(arm.poisson_ratio);
            arm.elements = a.elements.unwrap_or(arm.elements);
        }
        if !(arm.length > 0.0 && arm.length.is_finite()) {
            return Err(Error::config("arm.length", format!("must be positive and finite, got {}", arm.length)));
        }
        let mut s = CaseScenario::defaults_for_arm(self.case, arm)?;
        s.seed = self.seed.unwrap_or(s.seed);
        s.episode_control_steps = self.episode_control_steps.unwrap_or(s.episode_control_steps);
        s.substeps_per_control = self.substeps_per_control.unwrap_or(s.substeps_per_control);
        s.dt = self.dt.unwrap_or(s.dt);
        s.damping = self.damping.unwrap_or(s.damping);
        s.instability_speed = self.instability_speed.unwrap_or(s.instability_speed);
        if let Some(a) = self.actuation {
            s.actuation.directions = a.directions.unwrap_or(s.actuation.directions);
            s.actuation.knots = a.knots.unwrap_or(s.actuation.knots);
            s.actuation.torque_scale = a.torque_scale.unwrap_or(s.actuation.torque_scale);
        }
        if let Some(r) = self.reward {
            s.reward.distance_weight = r.distance_weight.unwrap_or(s.reward.distance_weight);
            s.reward.tiers = r.tiers.unwrap_or(s.reward.tiers);
            s.reward.orientation = r.orientation.unwrap_or(s.reward.orientation);
            s.reward.instability_penalty = r.instability_penalty.unwrap_or(s.reward.instability_penalty);
        }
        if let Some(t) = self.target {
            s.target.law = t.law.unwrap_or(s.target.law);
            s.target.shell = t.shell.unwrap_or(s.target.shell);
            s.target.position = t.position.unwrap_or(s.target.position);
            s.target.random_orientation = t.random_orientation.unwrap_or(s.target.random_orientation);
        }
        s.obstacles = self.obstacles.unwrap_or(s.obstacles);
        s.validate()?;
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_for_every_case() {
        for case in 1..=4 {
            CaseScenario::defaults(case).unwrap().validate().unwrap();
        }
        assert!(CaseScenario::defaults(5).is_err());
    }

    #[test]
    fn nest_is_deterministic_and_clear_of_rest_pose() {
        let a = nest(1.0, NEST_LAYOUT_SEED);
        assert_eq!(a, nest(1.0, NEST_LAYOUT_SEED));
        assert_eq!(a.len(), 10);
        for ob in &a {
            let Shape::Sphere { center, radius } = ob.shape else { panic!() };
            assert!(center.xy().norm() > radius + 0.025);
        }
    }

    #[test]
    fn wall_is_symmetric_about_the_bending_plane() {
        for ob in wall(1.0) {
            let Shape::Capsule { start, end, .. } = ob.shape else { panic!() };
            assert_eq!(start.x, -end.x);
            assert_eq!((start.y, start.z), (end.y, end.z));
        }
    }
}
