//! Penalty contact between rod nodes and rigid obstacles.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::kinematics::{RodState, SectionProperties, Vec3};

/// Penetration over which the damping term ramps in, so the force is
/// continuous at contact onset [m].
pub const DAMPING_RAMP_DEPTH: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum Shape {
    Sphere { center: Vec3, radius: f64 },
    Capsule { start: Vec3, end: Vec3, radius: f64 },
}

impl Shape {
    pub fn radius(&self) -> f64 {
        match self {
            Shape::Sphere { radius, .. } | Shape::Capsule { radius, .. } => *radius,
        }
    }

    /// Closest point of the shape's core (centre or axis segment) to `x`.
    pub fn core_point(&self, x: &Vec3) -> Vec3 {
        match self {
            Shape::Sphere { center, .. } => *center,
            Shape::Capsule { start, end, .. } => {
                let axis = end - start;
                let len2 = axis.norm_squared();
                let t = if len2 > 0.0 { ((x - start).dot(&axis) / len2).clamp(0.0, 1.0) } else { 0.0 };
                start + axis * t
            }
        }
    }

    /// Flat descriptor: sphere → centre, radius (4); capsule → start, end,
    /// radius (7).
    pub fn descriptor_len(&self) -> usize {
        match self {
            Shape::Sphere { .. } => 4,
            Shape::Capsule { .. } => 7,
        }
    }

    pub fn write_descriptor(&self, out: &mut [f64]) {
        match self {
            Shape::Sphere { center, radius } => {
                out[..3].copy_from_slice(center.as_slice());
                out[3] = *radius;
            }
            Shape::Capsule { start, end, radius } => {
                out[..3].copy_from_slice(start.as_slice());
                out[3..6].copy_from_slice(end.as_slice());
                out[6] = *radius;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Obstacle {
    pub shape: Shape,
    /// [N/m²]
    pub stiffness: f64,
    /// [N·s/m²]
    pub damping: f64,
}

impl Obstacle {
    pub const DEFAULT_STIFFNESS: f64 = 1e5;
    pub const DEFAULT_DAMPING: f64 = 1e2;

    pub fn new(shape: Shape) -> Self {
        Obstacle { shape, stiffness: Self::DEFAULT_STIFFNESS, damping: Self::DEFAULT_DAMPING }
    }

    pub fn validate(&self, path: &str) -> Result<(), Error> {
        let finite = |v: &Vec3| v.iter().all(|c| c.is_finite());
        let ok = match &self.shape {
            Shape::Sphere { center, .. } => finite(center),
            Shape::Capsule { start, end, .. } => finite(start) && finite(end),
        };
        if !ok {
            return Err(Error::config(format!("{path}.shape"), "coordinates must be finite"));
        }
        if !(self.shape.radius() > 0.0 && self.shape.radius().is_finite()) {
            return Err(Error::config(format!("{path}.shape.radius"), "must be positive"));
        }
        if !(self.stiffness > 0.0 && self.stiffness.is_finite()) {
            return Err(Error::config(format!("{path}.stiffness"), "must be positive"));
        }
        if !(self.damping >= 0.0 && self.damping.is_finite()) {
            return Err(Error::config(format!("{path}.damping"), "must be non-negative"));
        }
        Ok(())
    }
}

/// Normal force density magnitude at penetration `depth` and outward normal
/// velocity `normal_velocity` (negative while approaching). Never adhesive.
pub fn contact_force_density(depth: f64, normal_velocity: f64, stiffness: f64, damping: f64) -> f64 {
    if depth <= 0.0 {
        return 0.0;
    }
    let ramp = (depth / DAMPING_RAMP_DEPTH).min(1.0);
    (stiffness * depth - damping * normal_velocity * ramp).max(0.0)
}

fn node_radius(props: &SectionProperties, i: usize) -> f64 {
    let n = props.elements();
    let area = match i {
        0 => props.areas[0],
        i if i == n => props.areas[n - 1],
        i => props.areas[i - 1].max(props.areas[i]),
    };
    (area / std::f64::consts::PI).sqrt()
}

/// Adds the obstacle's contact force density [N/m] to `forces` (one per
/// node). Returns whether any node touches the obstacle.
pub fn accumulate_contact_forces(state: &RodState, props: &SectionProperties, obstacle: &Obstacle, forces: &mut [Vec3]) -> bool {
    let mut touching = false;
    for (i, (x, v)) in state.positions.iter().zip(&state.velocities).enumerate() {
        let core = obstacle.shape.core_point(x);
        let offset = x - core;
        let distance = offset.norm();
        let depth = obstacle.shape.radius() + node_radius(props, i) - distance;
        if depth <= 0.0 {
            continue;
        }
        touching = true;
        let normal = if distance > 0.0 { offset / distance } else { Vec3::z() };
        let magnitude = contact_force_density(depth, v.dot(&normal), obstacle.stiffness, obstacle.damping);
        forces[i] += normal * magnitude;
    }
    touching
}

/// Per-node contact force density from one obstacle.
pub fn obstacle_contact_force(state: &RodState, props: &SectionProperties, obstacle: &Obstacle) -> Vec<Vec3> {
    let mut forces = vec![Vec3::zeros(); state.positions.len()];
    accumulate_contact_forces(state, props, obstacle, &mut forces);
    forces
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rod() -> (RodState, SectionProperties) {
        (RodState::upright(10, 1.0), SectionProperties::uniform(10, 1.0, 0.025, 1000.0, 1e7, 0.5).unwrap())
    }

    #[test]
    fn rod_outside_feels_nothing() {
        let (state, props) = rod();
        let ob = Obstacle::new(Shape::Sphere { center: Vec3::new(0.5, 0.0, 0.5), radius: 0.1 });
        assert!(obstacle_contact_force(&state, &props, &ob).iter().all(|f| *f == Vec3::zeros()));
    }

    #[test]
    fn static_penetration_gives_spring_force() {
        let (state, props) = rod();
        // Node 5 sits at (0, 0, 0.5); place the sphere surface 1 mm past the rod surface.
        let r = 0.1;
        let center = Vec3::new(r + 0.025 - 1e-3, 0.0, 0.5);
        let mut ob = Obstacle::new(Shape::Sphere { center, radius: r });
        ob.damping = 0.0;
        let f = obstacle_contact_force(&state, &props, &ob);
        assert!((f[5] - Vec3::new(-100.0, 0.0, 0.0)).norm() < 1e-9, "{:?}", f[5]);
        assert_eq!(f[4], Vec3::zeros());
    }

    #[test]
    fn capsule_normal_is_perpendicular_to_axis() {
        let (state, props) = rod();
        let ob = Obstacle::new(Shape::Capsule {
            start: Vec3::new(-1.0, 0.04, 0.3),
            end: Vec3::new(1.0, 0.04, 0.3),
            radius: 0.02,
        });
        let f = obstacle_contact_force(&state, &props, &ob);
        assert!(f[3].y < 0.0 && f[3].x.abs() < 1e-12 && f[3].z.abs() < 1e-12);
        assert!((f[3].y + 1e5 * 0.005).abs() < 1e-9);
    }

    #[test]
    fn damping_resists_approach_and_vanishes_at_onset() {
        assert!(contact_force_density(0.01, -1.0, 1e5, 1e2) > contact_force_density(0.01, 0.0, 1e5, 1e2));
        assert_eq!(contact_force_density(0.0, -5.0, 1e5, 1e2), 0.0);
        assert!(contact_force_density(1e-12, -5.0, 1e5, 1e2) < 1e-6);
        assert_eq!(contact_force_density(1e-4, 50.0, 1e5, 1e2), 0.0);
    }

    #[test]
    fn shapes_round_trip_json() {
        let ob = Obstacle::new(Shape::Capsule { start: Vec3::zeros(), end: Vec3::x(), radius: 0.1 });
        let json = serde_json::to_string(&ob).unwrap();
        assert!(json.contains("\"type\":\"capsule\""));
        assert_eq!(serde_json::from_str::<Obstacle>(&json).unwrap(), ob);
    }
}
