//! Episodic arm-control tasks built on the rod engine.

pub mod scenario;

use std::cell::Cell;

use nalgebra::{Rotation3, UnitQuaternion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use scenario::{ActuationConfig, ArmConfig, BonusTier, CaseScenario, OrientationReward, RewardConfig, TargetConfig};

use crate::dynamics::{Boundary, Forcing, IntegratorConfig, LoadField, Stepper};
use crate::error::Error;
use crate::interactions::{accumulate_contact_forces, update_target, Obstacle, SplineActuation, TargetState};
use crate::kinematics::{RodState, SectionProperties, Vec3};

/// Observed points along the arm.
pub const SAMPLE_POINTS: usize = 11;
/// Below this speed a velocity direction is reported as zero.
pub const DIRECTION_EPS: f64 = 1e-8;

/// Distance penalty plus the two-tier proximity bonus.
pub fn reward_distance(tip: &Vec3, target: &Vec3, reward: &RewardConfig) -> f64 {
    let d = (tip - target).norm();
    -reward.distance_weight * d + tier_bonus(d, &reward.tiers)
}

fn tier_bonus(error: f64, tiers: &[BonusTier; 2]) -> f64 {
    tiers.iter().filter(|t| error < t.threshold).map(|t| t.bonus).sum()
}

/// Geodesic angle between two orientations, in `[0, π]`.
pub fn orientation_error(a: &UnitQuaternion<f64>, b: &UnitQuaternion<f64>) -> f64 {
    2.0 * a.coords.dot(&b.coords).abs().min(1.0).acos()
}

pub fn reward_orientation(tip: &UnitQuaternion<f64>, target: &UnitQuaternion<f64>, reward: &OrientationReward) -> f64 {
    let theta = orientation_error(tip, target);
    -reward.weight * theta + tier_bonus(theta, &reward.tiers)
}

/// Orientation of an element frame as a quaternion with `w ≥ 0`.
pub fn frame_quaternion(frame: &crate::kinematics::Mat3) -> UnitQuaternion<f64> {
    let q = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(frame.transpose()));
    if q.w < 0.0 {
        UnitQuaternion::new_unchecked(-q.into_inner())
    } else {
        q
    }
}

/// Flat observation layout for one scenario.
///
/// `[11 × sample position (33), tip velocity direction (3), tip speed (1),
///   target position (3), target velocity direction (3), target speed (1),
///   (Case 2) tip quaternion w x y z (4), target quaternion (4),
///   obstacle descriptors...]`
#[derive(Debug, Clone)]
pub struct ObservationLayout {
    /// Node index and weight of the following node for each sample.
    samples: Vec<(usize, f64)>,
    orientation: bool,
    size: usize,
}

impl ObservationLayout {
    pub fn new(scenario: &CaseScenario, props: &SectionProperties) -> Self {
        let coords = props.node_coordinates();
        let length = props.total_length();
        let n = props.elements();
        let samples = (0..SAMPLE_POINTS)
            .map(|j| {
                let s = j as f64 * length / (SAMPLE_POINTS - 1) as f64;
                let i = coords[1..n].partition_point(|&c| c <= s).min(n - 1);
                let w = ((s - coords[i]) / (coords[i + 1] - coords[i])).clamp(0.0, 1.0);
                (i, w)
            })
            .collect();
        let orientation = scenario.reward.orientation.is_some();
        let size = 3 * SAMPLE_POINTS
            + 11
            + if orientation { 8 } else { 0 }
            + scenario.obstacles.iter().map(|o| o.shape.descriptor_len()).sum::<usize>();
        ObservationLayout { samples, orientation, size }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn write(&self, state: &RodState, target: &TargetState, obstacles: &[Obstacle], out: &mut [f64]) {
        let mut k = 0;
        let mut put = |out: &mut [f64], v: &[f64]| {
            out[k..k + v.len()].copy_from_slice(v);
            k += v.len();
        };
        for &(i, w) in &self.samples {
            let p = state.positions[i] * (1.0 - w) + state.positions[i + 1] * w;
            put(out, p.as_slice());
        }
        let tip_velocity = state.velocities[state.positions.len() - 1];
        put(out, &split_velocity(&tip_velocity));
        put(out, target.position.as_slice());
        put(out, &split_velocity(&target.velocity));
        if self.orientation {
            let tip = frame_quaternion(&state.frames[state.frames.len() - 1]);
            let goal = target.orientation.unwrap_or_else(UnitQuaternion::identity);
            for q in [tip, goal] {
                put(out, &[q.w, q.i, q.j, q.k]);
            }
        }
        for ob in obstacles {
            let len = ob.shape.descriptor_len();
            ob.shape.write_descriptor(&mut out[k..k + len]);
            k += len;
        }
        debug_assert_eq!(k, self.size);
    }
}

fn split_velocity(v: &Vec3) -> [f64; 4] {
    let speed = v.norm();
    if speed < DIRECTION_EPS {
        [0.0; 4]
    } else {
        [v.x / speed, v.y / speed, v.z / speed, speed]
    }
}

/// Observation of `state` under `scenario`; allocates.
pub fn build_observation(state: &RodState, target: &TargetState, scenario: &CaseScenario) -> Result<Vec<f64>, Error> {
    let props = scenario.arm.properties()?;
    let layout = ObservationLayout::new(scenario, &props);
    let mut out = vec![0.0; layout.size()];
    layout.write(state, target, &scenario.obstacles, &mut out);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepInfo {
    pub tip_distance: f64,
    /// Geodesic tip-target angle when orientation is rewarded [rad].
    pub orientation_error: Option<f64>,
    /// Any node touched an obstacle during the control step.
    pub contact: bool,
    pub instability: bool,
}

/// Outcome of one control step. The new observation is available from
/// [`ArmEnv::observation`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepResult {
    pub reward: f64,
    /// The simulation became unstable; the state was rolled back to the start
    /// of the step.
    pub terminated: bool,
    /// The episode step limit was reached.
    pub truncated: bool,
    pub info: StepInfo,
}

struct ArmForcing<'a> {
    couples: &'a [Vec3],
    obstacles: &'a [Obstacle],
    contact: Cell<bool>,
}

impl Forcing for ArmForcing<'_> {
    fn accumulate(&self, state: &RodState, props: &SectionProperties, loads: &mut LoadField) {
        for (dst, c) in loads.couples.iter_mut().zip(self.couples) {
            *dst += c;
        }
        for ob in self.obstacles {
            if accumulate_contact_forces(state, props, ob, &mut loads.forces) {
                self.contact.set(true);
            }
        }
    }
}

fn copy_state(dst: &mut RodState, src: &RodState) {
    dst.positions.copy_from_slice(&src.positions);
    dst.velocities.copy_from_slice(&src.velocities);
    dst.frames.copy_from_slice(&src.frames);
    dst.angular_velocities.copy_from_slice(&src.angular_velocities);
}

/// One arm task. `reset` and `step` alternate; `step` performs no heap
/// allocation.
#[derive(Debug, Clone)]
pub struct ArmEnv {
    scenario: CaseScenario,
    props: SectionProperties,
    actuation: SplineActuation,
    layout: ObservationLayout,
    stepper: Stepper,
    state: RodState,
    backup: RodState,
    couples: Vec<Vec3>,
    target: TargetState,
    rng: ChaCha8Rng,
    observation: Vec<f64>,
    control_step: usize,
    done: bool,
}

impl ArmEnv {
    /// Builds the environment and resets it with the scenario seed.
    pub fn new(scenario: CaseScenario) -> Result<Self, Error> {
        scenario.validate()?;
        let props = scenario.arm.properties()?;
        let actuation = SplineActuation::new(
            &scenario.actuation.directions,
            &scenario.actuation.knots,
            scenario.actuation.torque_scale,
            &props,
        )?;
        let config = IntegratorConfig { dt: scenario.dt, damping: scenario.damping, boundary: Boundary::upright() };
        let stepper = Stepper::new(config, &props)?;
        let layout = ObservationLayout::new(&scenario, &props);
        let n = props.elements();
        let state = RodState::upright(n, props.total_length());
        let mut env = ArmEnv {
            props,
            actuation,
            stepper,
            backup: state.clone(),
            state,
            couples: vec![Vec3::zeros(); n],
            target: TargetState::at(Vec3::zeros()),
            rng: ChaCha8Rng::seed_from_u64(scenario.seed),
            observation: vec![0.0; layout.size()],
            layout,
            control_step: 0,
            done: false,
            scenario,
        };
        env.reset(env.scenario.seed);
        Ok(env)
    }

    pub fn observation_size(&self) -> usize {
        self.layout.size()
    }

    pub fn action_size(&self) -> usize {
        self.actuation.action_size()
    }

    pub fn scenario(&self) -> &CaseScenario {
        &self.scenario
    }

    pub fn properties(&self) -> &SectionProperties {
        &self.props
    }

    pub fn state(&self) -> &RodState {
        &self.state
    }

    pub fn target(&self) -> &TargetState {
        &self.target
    }

    pub fn observation(&self) -> &[f64] {
        &self.observation
    }

    pub fn control_step(&self) -> usize {
        self.control_step
    }

    pub fn time(&self) -> f64 {
        self.control_step as f64 * self.scenario.control_dt()
    }

    pub fn tip(&self) -> Vec3 {
        self.state.positions[self.state.positions.len() - 1]
    }

    /// Restarts the episode: upright rest pose, target placed per the
    /// scenario, RNG reseeded from `seed`.
    pub fn reset(&mut self, seed: u64) -> &[f64] {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        self.state = RodState::upright(self.props.elements(), self.props.total_length());
        self.stepper.invalidate();
        self.couples.iter_mut().for_each(|c| *c = Vec3::zeros());
        let t = &self.scenario.target;
        let position = match t.position {
            Some(p) => p,
            None => t.shell.sample(&mut self.rng),
        };
        let mut target = TargetState::at(position);
        if t.random_orientation {
            let angle = self.rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
            target.orientation = Some(UnitQuaternion::from_axis_angle(&Vec3::z_axis(), angle));
        } else if self.scenario.reward.orientation.is_some() {
            target.orientation = Some(UnitQuaternion::identity());
        }
        self.target = target;
        self.control_step = 0;
        self.done = false;
        self.layout.write(&self.state, &self.target, &self.scenario.obstacles, &mut self.observation);
        &self.observation
    }

    /// Applies `action` for one control interval.
    pub fn step(&mut self, action: &[f64]) -> Result<StepResult, Error> {
        if self.done {
            return Err(Error::EpisodeOver);
        }
        self.actuation.build_into(action, &mut self.couples)?;
        self.stepper.invalidate();
        copy_state(&mut self.backup, &self.state);

        let forcing = ArmForcing { couples: &self.couples, obstacles: &self.scenario.obstacles, contact: Cell::new(false) };
        let mut stable = true;
        for _ in 0..self.scenario.substeps_per_control {
            let ok = self.stepper.step(&mut self.state, &self.props, &forcing).is_ok();
            if !ok || !self.state_is_sane() {
                stable = false;
                break;
            }
        }
        let contact = forcing.contact.get();
        self.control_step += 1;

        if !stable {
            copy_state(&mut self.state, &self.backup);
            self.stepper.invalidate();
            self.done = true;
            self.layout.write(&self.state, &self.target, &self.scenario.obstacles, &mut self.observation);
            let tip_distance = (self.tip() - self.target.position).norm();
            return Ok(StepResult {
                reward: self.scenario.reward.instability_penalty,
                terminated: true,
                truncated: false,
                info: StepInfo { tip_distance, orientation_error: self.orientation_error(), contact, instability: true },
            });
        }

        update_target(
            &mut self.target,
            self.scenario.control_dt(),
            &mut self.rng,
            &self.scenario.target.law,
            &self.scenario.target.shell,
        );
        self.layout.write(&self.state, &self.target, &self.scenario.obstacles, &mut self.observation);

        let tip = self.tip();
        let mut reward = reward_distance(&tip, &self.target.position, &self.scenario.reward);
        let orientation_error = self.orientation_error();
        if let (Some(o), Some(goal)) = (&self.scenario.reward.orientation, &self.target.orientation) {
            reward += reward_orientation(&self.tip_orientation(), goal, o);
        }
        let truncated = self.control_step >= self.scenario.episode_control_steps;
        self.done = truncated;
        Ok(StepResult {
            reward,
            terminated: false,
            truncated,
            info: StepInfo { tip_distance: (tip - self.target.position).norm(), orientation_error, contact, instability: false },
        })
    }

    pub fn tip_orientation(&self) -> UnitQuaternion<f64> {
        frame_quaternion(&self.state.frames[self.state.frames.len() - 1])
    }

    fn orientation_error(&self) -> Option<f64> {
        self.scenario.reward.orientation.as_ref()?;
        Some(orientation_error(&self.tip_orientation(), self.target.orientation.as_ref()?))
    }

    fn state_is_sane(&self) -> bool {
        let limit2 = self.scenario.instability_speed.powi(2);
        let s = &self.state;
        s.velocities.iter().all(|v| v.norm_squared() <= limit2)
            && s.positions.iter().all(|x| x.iter().all(|c| c.is_finite()))
            && s.angular_velocities.iter().all(|w| w.iter().all(|c| c.is_finite()))
            && s.frames.iter().all(|q| q.iter().all(|c| c.is_finite()))
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    #[test]
    fn distance_reward_examples() {
        let r = CaseScenario::defaults(1).unwrap().reward;
        let t = Vec3::new(0.0, 0.1, 0.5);
        assert_eq!(reward_distance(&t, &t, &r), 1.5);
        // Exactly on the coarse radius: strict inequality, no bonus.
        assert_eq!(reward_distance(&Vec3::new(0.1, 0.1, 0.5), &t, &r), -r.distance_weight * 0.1);
        assert!((reward_distance(&(t + Vec3::new(0.0, 0.5, 0.0)), &t, &r) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn orientation_reward_examples() {
        let o = CaseScenario::defaults(2).unwrap().reward.orientation.unwrap();
        let q = UnitQuaternion::from_axis_angle(&Vec3::x_axis(), 0.7);
        let minus = UnitQuaternion::new_unchecked(-q.into_inner());
        assert_eq!(orientation_error(&q, &q), 0.0);
        assert_eq!(orientation_error(&q, &minus), 0.0);
        assert_eq!(reward_orientation(&q, &q, &o), 1.5);
        let quarter = UnitQuaternion::from_axis_angle(&Vec3::y_axis(), PI / 2.0);
        let id = UnitQuaternion::identity();
        assert!((orientation_error(&id, &quarter) - PI / 2.0).abs() < 1e-12);
        assert!((reward_orientation(&id, &quarter, &o) + o.weight * PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn rest_observation_samples_the_vertical_axis() {
        let mut s = CaseScenario::defaults(1).unwrap();
        s.target.position = Some(Vec3::new(0.5, 0.0, 0.5));
        s.target.law = crate::interactions::TargetLaw::Static;
        let env = ArmEnv::new(s).unwrap();
        let obs = env.observation();
        assert_eq!(obs.len(), 44);
        for j in 0..11 {
            assert_eq!(obs[3 * j], 0.0);
            assert_eq!(obs[3 * j + 1], 0.0);
            assert!((obs[3 * j + 2] - j as f64 / 10.0).abs() < 1e-12);
        }
        assert_eq!(&obs[33..37], &[0.0; 4]);
        assert_eq!(&obs[37..40], &[0.5, 0.0, 0.5]);
        assert_eq!(&obs[40..44], &[0.0; 4]);
    }

    #[test]
    fn sizes_per_case() {
        let sizes: Vec<_> = (1..=4)
            .map(|c| {
                let e = ArmEnv::new(CaseScenario::defaults(c).unwrap()).unwrap();
                (e.action_size(), e.observation_size())
            })
            .collect();
        assert_eq!(sizes, vec![(12, 44), (18, 52), (2, 44 + 7 * 6), (4, 44 + 4 * 10)]);
    }

    #[test]
    fn case2_rest_tip_is_identity() {
        let env = ArmEnv::new(CaseScenario::defaults(2).unwrap()).unwrap();
        assert_eq!(&env.observation()[44..48], &[1.0, 0.0, 0.0, 0.0]);
        let q = env.target().orientation.unwrap();
        assert!((q.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn wrong_action_length_is_rejected_before_stepping() {
        let mut env = ArmEnv::new(CaseScenario::defaults(1).unwrap()).unwrap();
        assert!(matches!(env.step(&[0.0; 3]), Err(Error::Dimension { expected: 12, got: 3 })));
        assert_eq!(env.control_step(), 0);
    }

    #[test]
    fn instability_terminates_with_penalty_and_finite_observation() {
        let mut s = CaseScenario::defaults(1).unwrap();
        s.actuation.torque_scale = 1e9;
        s.substeps_per_control = 5;
        let mut env = ArmEnv::new(s).unwrap();
        let before = env.observation().to_vec();
        let r = env.step(&[1.0; 12]).unwrap();
        assert!(r.terminated && r.info.instability);
        assert_eq!(r.reward, -10.0);
        assert_eq!(env.observation(), &before[..]);
        assert!(matches!(env.step(&[0.0; 12]), Err(Error::EpisodeOver)));
    }
}
