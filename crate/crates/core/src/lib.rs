//! Cosserat rod engine and soft-arm control environments.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod environments;
pub mod error;
pub mod interactions;
pub mod kinematics;
pub mod scenario_io;
pub mod validation;

pub use dynamics::{
    apply_clamped_base, compute_accelerations, compute_energies, step, Accelerations, Boundary, Energies, Forcing,
    IntegratorConfig, LoadField, Stepper,
};
pub use error::Error;
pub use kinematics::{
    compute_curvature, compute_shear, compute_strains, compute_stretch, rotate_frame, Mat3, RodError, RodState,
    SectionProperties, StrainState, Vec3,
};
