//! Observation → action maps used by the runner and the CLI.

use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::environments::{CaseScenario, SAMPLE_POINTS};
use crate::error::Error;
use crate::interactions::TorqueDirection;
use crate::kinematics::Vec3;

pub trait Policy {
    /// Writes the action for `observation` into `action`.
    fn act(&mut self, observation: &[f64], action: &mut [f64]) -> Result<(), Error>;

    /// Called at the start of every episode.
    fn reset(&mut self) {}

    /// Called once when an episode ends.
    fn finish(&mut self) -> Result<(), Error> {
        Ok(())
    }
}

pub struct ZeroPolicy;

impl Policy for ZeroPolicy {
    fn act(&mut self, _: &[f64], action: &mut [f64]) -> Result<(), Error> {
        action.fill(0.0);
        Ok(())
    }
}

/// Uniform actions in `[-1, 1]` from a seeded stream.
pub struct RandomPolicy {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RandomPolicy {
    pub fn new(seed: u64) -> Self {
        RandomPolicy { seed, rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

impl Policy for RandomPolicy {
    fn act(&mut self, _: &[f64], action: &mut [f64]) -> Result<(), Error> {
        action.iter_mut().for_each(|a| *a = self.rng.random_range(-1.0..=1.0));
        Ok(())
    }

    fn reset(&mut self) {
        self.rng = ChaCha8Rng::seed_from_u64(self.seed);
    }
}

/// Plays back a fixed action sequence, holding the last action once it runs out.
pub struct ReplayPolicy {
    actions: Vec<Vec<f64>>,
    next: usize,
}

impl ReplayPolicy {
    pub fn new(actions: Vec<Vec<f64>>) -> Self {
        ReplayPolicy { actions, next: 0 }
    }
}

impl Policy for ReplayPolicy {
    fn act(&mut self, _: &[f64], action: &mut [f64]) -> Result<(), Error> {
        let Some(a) = self.actions.get(self.next).or(self.actions.last()) else {
            return Err(Error::Policy("empty action sequence".into()));
        };
        if a.len() != action.len() {
            return Err(Error::Dimension { expected: action.len(), got: a.len() });
        }
        action.copy_from_slice(a);
        self.next += 1;
        Ok(())
    }

    fn reset(&mut self) {
        self.next = 0;
    }
}

/// Planar PI reach law. Works in the vertical plane through the target:
/// control points on the proximal half drive the polar angle of the tip
/// (measured from the base axis) toward that of the target, and those on
/// the distal half curl the arm until the tip's distance from the base
/// matches. Both loops bend about the horizontal axis normal to the plane.
pub struct ScriptedPolicy {
    gains: Gains,
    dt: f64,
    directions: Vec<TorqueDirection>,
    proximal: Vec<bool>,
    integral: [f64; 2],
}

/// `[angle loop, radius loop]`. The angle error is in radians, the radius
/// error in arm lengths; integral gains are per second.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gains {
    pub proportional: [f64; 2],
    pub integral: [f64; 2],
}

impl Default for Gains {
    fn default() -> Self {
        Gains { proportional: [2.0, 2.0], integral: [4.0, 4.0] }
    }
}

impl ScriptedPolicy {
    pub fn new(scenario: &CaseScenario, gains: Gains) -> Self {
        let l = scenario.arm.length;
        ScriptedPolicy {
            gains: Gains {
                proportional: [gains.proportional[0], gains.proportional[1] / l],
                integral: [gains.integral[0], gains.integral[1] / l],
            },
            dt: scenario.control_dt(),
            directions: scenario.actuation.directions.clone(),
            proximal: scenario.actuation.knots.iter().map(|&k| k < 0.5 * l).collect(),
            integral: [0.0; 2],
        }
    }
}

impl Policy for ScriptedPolicy {
    fn act(&mut self, obs: &[f64], action: &mut [f64]) -> Result<(), Error> {
        if obs.len() < 44 {
            return Err(Error::Dimension { expected: 44, got: obs.len() });
        }
        let v = |i: usize| Vec3::new(obs[i], obs[i + 1], obs[i + 2]);
        let tip = v(3 * (SAMPLE_POINTS - 1));
        let target = v(3 * SAMPLE_POINTS + 4);
        let toward = target.xy().try_normalize(1e-9).unwrap_or(nalgebra::Vector2::x());
        let axis = Vec3::new(-toward.y, toward.x, 0.0);

        let angle = tip.xy().dot(&toward).atan2(tip.z);
        let error = [target.xy().norm().atan2(target.z) - angle, tip.norm() - target.norm()];
        let mut u = [0.0; 2];
        for k in 0..2 {
            let (kp, ki) = (self.gains.proportional[k], self.gains.integral[k]);
            // Anti-windup: the integral alone never exceeds full actuation.
            let cap = if ki > 0.0 { 1.0 / ki } else { 0.0 };
            self.integral[k] = (self.integral[k] + error[k] * self.dt).clamp(-cap, cap);
            u[k] = (kp * error[k] + ki * self.integral[k]).clamp(-1.0, 1.0);
        }

        let n = self.proximal.len();
        for (j, &prox) in self.proximal.iter().enumerate() {
            let bend = axis * if prox { u[0] } else { u[1] };
            for (d, dir) in self.directions.iter().enumerate() {
                action[d * n + j] = match dir {
                    TorqueDirection::D1 => bend.x,
                    TorqueDirection::D2 => bend.y,
                    TorqueDirection::D3 => 0.0,
                };
            }
        }
        Ok(())
    }

    fn reset(&mut self) {
        self.integral = [0.0; 2];
    }
}

/// Line protocol over a pair of streams: each observation is written as one
/// line of space-separated decimals, and one line of actions is read back.
/// `end` is written after the last step of an episode.
pub struct StreamPolicy<R, W> {
    input: R,
    output: W,
    line: String,
}

impl<R: BufRead, W: Write> StreamPolicy<R, W> {
    pub fn new(input: R, output: W) -> Self {
        StreamPolicy { input, output, line: String::new() }
    }

    pub fn into_output(self) -> W {
        self.output
    }
}

fn io_error(e: std::io::Error) -> Error {
    Error::Policy(format!("stream: {e}"))
}

impl<R: BufRead, W: Write> Policy for StreamPolicy<R, W> {
    fn act(&mut self, observation: &[f64], action: &mut [f64]) -> Result<(), Error> {
        let mut first = true;
        for v in observation {
            if !first {
                self.output.write_all(b" ").map_err(io_error)?;
            }
            first = false;
            write!(self.output, "{v}").map_err(io_error)?;
        }
        self.output.write_all(b"\n").map_err(io_error)?;
        self.output.flush().map_err(io_error)?;

        self.line.clear();
        if self.input.read_line(&mut self.line).map_err(io_error)? == 0 {
            return Err(Error::Policy("end of input while waiting for an action".into()));
        }
        let mut count = 0;
        for token in self.line.split_whitespace() {
            if count < action.len() {
                action[count] = token
                    .parse()
                    .map_err(|_| Error::Policy(format!("cannot parse action value {token:?}")))?;
            }
            count += 1;
        }
        if count != action.len() {
            return Err(Error::Dimension { expected: action.len(), got: count });
        }
        Ok(())
    }

    fn finish(&mut self) -> Result<(), Error> {
        self.output.write_all(b"end\n").map_err(io_error)?;
        self.output.flush().map_err(io_error)
    }
}
