//! External loads: actuation, obstacle contact and the moving target.

pub mod contact;
pub mod spline;
pub mod target;

pub use contact::{accumulate_contact_forces, contact_force_density, obstacle_contact_force, Obstacle, Shape};
pub use spline::{build_actuation_couples, equidistant_knots, evaluate_spline, NaturalSpline, SplineActuation, TorqueDirection};
pub use target::{update_target, Shell, TargetLaw, TargetState};
