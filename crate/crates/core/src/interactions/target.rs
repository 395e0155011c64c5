//! Target motion.

use nalgebra::UnitQuaternion;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::kinematics::Vec3;

#[derive(Debug, Clone, PartialEq)]
pub struct TargetState {
    pub position: Vec3,
    pub velocity: Vec3,
    /// Only used when orientation is part of the task.
    pub orientation: Option<UnitQuaternion<f64>>,
}

impl TargetState {
    pub fn at(position: Vec3) -> Self {
        TargetState { position, velocity: Vec3::zeros(), orientation: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetLaw {
    Static,
    /// Ornstein–Uhlenbeck velocity: `v ← v e^{-θ dt} + σ √dt ξ`, then capped
    /// at `max_speed`.
    RandomWalk {
        /// θ [1/s]
        reversion_rate: f64,
        /// σ [m/s^1.5]
        noise: f64,
        /// [m/s]
        max_speed: f64,
    },
}

impl TargetLaw {
    pub fn validate(&self, path: &str) -> Result<(), Error> {
        if let TargetLaw::RandomWalk { reversion_rate, noise, max_speed } = *self {
            for (name, v) in [("reversion_rate", reversion_rate), ("noise", noise), ("max_speed", max_speed)] {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(Error::config(format!("{path}.{name}"), "must be finite and non-negative"));
                }
            }
        }
        Ok(())
    }
}

/// Region `inner ≤ |x| ≤ outer`, `z ≥ 0` around the arm base.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Shell {
    pub inner: f64,
    pub outer: f64,
}

impl Shell {
    pub fn validate(&self, path: &str) -> Result<(), Error> {
        if !(self.inner >= 0.0 && self.inner < self.outer && self.outer.is_finite()) {
            return Err(Error::config(path, format!("need 0 <= inner < outer, got [{}, {}]", self.inner, self.outer)));
        }
        Ok(())
    }

    pub fn contains(&self, x: &Vec3) -> bool {
        let r = x.norm();
        x.z >= 0.0 && r >= self.inner && r <= self.outer
    }

    /// Uniform direction on the upper hemisphere, uniform radius.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec3 {
        let z: f64 = rng.random_range(0.0..1.0);
        let phi: f64 = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
        let rho = (1.0 - z * z).sqrt();
        let r = rng.random_range(self.inner..=self.outer);
        Vec3::new(rho * phi.cos(), rho * phi.sin(), z) * r
    }

    /// Mirrors a point that left the shell back inside, flipping the
    /// velocity component along the crossed boundary normal.
    fn reflect(&self, x: &mut Vec3, v: &mut Vec3) {
        if x.z < 0.0 {
            x.z = -x.z;
            v.z = -v.z;
        }
        let r = x.norm();
        if r > self.outer || r < self.inner {
            let bound = if r > self.outer { self.outer } else { self.inner };
            let radial = if r > 0.0 { *x / r } else { Vec3::z() };
            let mirrored = (2.0 * bound - r).clamp(self.inner, self.outer);
            *x = radial * mirrored;
            let vr = v.dot(&radial);
            if (r > self.outer && vr > 0.0) || (r < self.inner && vr < 0.0) {
                *v -= radial * (2.0 * vr);
            }
        }
    }
}

/// Advances the target by `dt`.
pub fn update_target<R: Rng + ?Sized>(target: &mut TargetState, dt: f64, rng: &mut R, law: &TargetLaw, shell: &Shell) {
    let TargetLaw::RandomWalk { reversion_rate, noise, max_speed } = *law else {
        return;
    };
    let decay = (-reversion_rate * dt).exp();
    let kick = noise * dt.sqrt();
    let mut v = target.velocity * decay;
    if kick > 0.0 {
        for c in v.iter_mut() {
            let xi: f64 = rng.sample(StandardNormal);
            *c += kick * xi;
        }
    }
    let speed = v.norm();
    if speed > max_speed {
        v *= max_speed / speed;
    }
    let mut x = target.position + v * dt;
    shell.reflect(&mut x, &mut v);
    target.position = x;
    target.velocity = v;
}
