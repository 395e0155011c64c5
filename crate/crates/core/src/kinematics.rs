//! Discrete rod representation and strain reductions.
//!
//! The rod is staggered: `n + 1` nodes carry position, velocity and lumped
//! mass; `n` elements carry a material frame, an angular velocity, the shear
//! vector and the stretch; the `n - 1` interior nodes carry curvature and
//! bend/twist stiffness.
//!
//! A frame `Q` maps lab-frame vectors to the local frame (`v_local = Q v_lab`),
//! so the directors `d1, d2, d3` are the rows of `Q`.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Tolerance on `‖QᵀQ − I‖∞` for a frame to count as a rotation.
pub const FRAME_TOLERANCE: f64 = 1e-10;

/// Timoshenko shear correction used for circular sections.
pub const SHEAR_CORRECTION: f64 = 4.0 / 3.0;

/// Relative rotations at or beyond this angle cannot be represented by a
/// unique rotation vector.
const MAX_RELATIVE_ANGLE: f64 = PI - 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RodError {
    #[error("zero-length element {element}")]
    ZeroLengthElement { element: usize },
    #[error("frame discontinuity at interior node {node}: relative rotation of {angle} rad")]
    FrameDiscontinuity { node: usize, angle: f64 },
    #[error("dynamics blow-up: non-finite value at {what} index {index}")]
    BlowUp { what: &'static str, index: usize },
    #[error("invalid rod: {0}")]
    Invalid(String),
}

/// Dynamic state of the discretized rod.
#[derive(Debug, Clone, PartialEq)]
pub struct RodState {
    pub positions: Vec<Vec3>,
    pub velocities: Vec<Vec3>,
    /// Lab-to-local rotation per element.
    pub frames: Vec<Mat3>,
    /// Angular velocity per element, local frame.
    pub angular_velocities: Vec<Vec3>,
}

impl RodState {
    /// Straight rod at rest starting at `base` and running along `d3`, with
    /// `d1` as the first director.
    pub fn straight(elements: usize, length: f64, base: Vec3, d1: Vec3, d3: Vec3) -> Self {
        let d3 = d3.normalize();
        let d1 = (d1 - d3 * d1.dot(&d3)).normalize();
        let d2 = d3.cross(&d1);
        let frame = frame_from_directors(&d1, &d2, &d3);
        let ds = length / elements as f64;
        Self {
            positions: (0..=elements).map(|i| base + d3 * (ds * i as f64)).collect(),
            velocities: vec![Vec3::zeros(); elements + 1],
            frames: vec![frame; elements],
            angular_velocities: vec![Vec3::zeros(); elements],
        }
    }

    /// Straight rod standing on the origin along +z with the identity frame.
    pub fn upright(elements: usize, length: f64) -> Self {
        Self::straight(elements, length, Vec3::zeros(), Vec3::x(), Vec3::z())
    }

    pub fn elements(&self) -> usize {
        self.frames.len()
    }

    pub fn validate(&self) -> Result<(), RodError> {
        let n = self.frames.len();
        if n < 3 {
            return Err(RodError::Invalid(format!("need at least 3 elements, got {n}")));
        }
        if self.positions.len() != n + 1
            || self.velocities.len() != n + 1
            || self.angular_velocities.len() != n
        {
            return Err(RodError::Invalid("inconsistent array lengths".into()));
        }
        let finite = |v: &Vec3| v.iter().all(|x| x.is_finite());
        if !self.positions.iter().chain(&self.velocities).chain(&self.angular_velocities).all(finite) {
            return Err(RodError::Invalid("non-finite coordinate".into()));
        }
        for (i, q) in self.frames.iter().enumerate() {
            let defect = orthonormality_defect(q);
            if !(defect <= FRAME_TOLERANCE) {
                return Err(RodError::Invalid(format!("frame {i} is not orthonormal (defect {defect:e})")));
            }
        }
        Ok(())
    }

    /// Applies a rigid motion `x -> R x + shift` to positions, velocities and
    /// frames. Local angular velocities are unaffected.
    pub fn transformed(&self, rotation: &Mat3, shift: &Vec3) -> Self {
        Self {
            positions: self.positions.iter().map(|x| rotation * x + shift).collect(),
            velocities: self.velocities.iter().map(|v| rotation * v).collect(),
            frames: self.frames.iter().map(|q| q * rotation.transpose()).collect(),
            angular_velocities: self.angular_velocities.clone(),
        }
    }
}

/// Rest-configuration constants of the rod. Diagonal 3×3 matrices are stored
/// as their diagonals.
#[derive(Debug, Clone, PartialEq)]
pub struct SectionProperties {
    pub rest_lengths: Vec<f64>,
    pub density: f64,
    pub areas: Vec<f64>,
    pub second_moments: Vec<Vec3>,
    /// Per interior node.
    pub bend_twist_stiffness: Vec<Vec3>,
    pub shear_stretch_stiffness: Vec<Vec3>,
    pub young_modulus: f64,
    pub shear_modulus: f64,
}

impl SectionProperties {
    /// Builds properties from per-element radii of circular sections.
    pub fn circular(
        rest_lengths: Vec<f64>,
        radii: &[f64],
        density: f64,
        young_modulus: f64,
        poisson_ratio: f64,
    ) -> Result<Self, RodError> {
        let n = rest_lengths.len();
        if radii.len() != n {
            return Err(RodError::Invalid("one radius per element required".into()));
        }
        if n < 3 {
            return Err(RodError::Invalid(format!("need at least 3 elements, got {n}")));
        }
        if !radii.iter().all(|r| r.is_finite() && *r > 0.0) {
            return Err(RodError::Invalid("radii must be positive".into()));
        }
        let shear_modulus = young_modulus / (2.0 * (1.0 + poisson_ratio));
        let areas: Vec<f64> = radii.iter().map(|r| PI * r * r).collect();
        let second_moments: Vec<Vec3> = radii
            .iter()
            .map(|r| {
                let i = PI * r.powi(4) / 4.0;
                Vec3::new(i, i, 2.0 * i)
            })
            .collect();
        let element_bend: Vec<Vec3> = second_moments
            .iter()
            .map(|i| Vec3::new(young_modulus * i.x, young_modulus * i.y, shear_modulus * i.z))
            .collect();
        let bend_twist_stiffness = element_bend.windows(2).map(|w| (w[0] + w[1]) * 0.5).collect();
        let shear_stretch_stiffness = areas
            .iter()
            .map(|a| {
                let shear = SHEAR_CORRECTION * shear_modulus * a;
                Vec3::new(shear, shear, young_modulus * a)
            })
            .collect();
        let props = Self {
            rest_lengths,
            density,
            areas,
            second_moments,
            bend_twist_stiffness,
            shear_stretch_stiffness,
            young_modulus,
            shear_modulus,
        };
        props.validate()?;
        Ok(props)
    }

    /// Uniform circular rod of `elements` equal elements.
    pub fn uniform(
        elements: usize,
        length: f64,
        radius: f64,
        density: f64,
        young_modulus: f64,
        poisson_ratio: f64,
    ) -> Result<Self, RodError> {
        Self::circular(
            vec![length / elements as f64; elements],
            &vec![radius; elements],
            density,
            young_modulus,
            poisson_ratio,
        )
    }

    pub fn elements(&self) -> usize {
        self.rest_lengths.len()
    }

    pub fn total_length(&self) -> f64 {
        self.rest_lengths.iter().sum()
    }

    /// Rest length of the Voronoi region around interior node `k + 1`.
    pub fn voronoi_length(&self, k: usize) -> f64 {
        0.5 * (self.rest_lengths[k] + self.rest_lengths[k + 1])
    }

    /// Lumped node masses, half an element at each end.
    pub fn node_masses(&self) -> Vec<f64> {
        let n = self.elements();
        let element_mass: Vec<f64> =
            (0..n).map(|i| self.density * self.areas[i] * self.rest_lengths[i]).collect();
        (0..=n)
            .map(|i| {
                let left = if i > 0 { element_mass[i - 1] } else { 0.0 };
                let right = if i < n { element_mass[i] } else { 0.0 };
                0.5 * (left + right)
            })
            .collect()
    }

    /// Diagonal mass moment of inertia `ρ I ℓ` per element.
    pub fn element_inertias(&self) -> Vec<Vec3> {
        self.second_moments
            .iter()
            .zip(&self.rest_lengths)
            .map(|(i, l)| i * (self.density * l))
            .collect()
    }

    /// Material coordinate of each element midpoint.
    pub fn element_midpoints(&self) -> Vec<f64> {
        let mut s = 0.0;
        self.rest_lengths
            .iter()
            .map(|l| {
                let mid = s + 0.5 * l;
                s += l;
                mid
            })
            .collect()
    }

    /// Material coordinate of each node.
    pub fn node_coordinates(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.elements() + 1);
        let mut s = 0.0;
        out.push(s);
        for l in &self.rest_lengths {
            s += l;
            out.push(s);
        }
        out
    }

    /// Largest stable explicit time step, `0.3 ℓ_min sqrt(ρ / E)`.
    pub fn stable_dt(&self) -> f64 {
        let min_len = self.rest_lengths.iter().cloned().fold(f64::INFINITY, f64::min);
        0.3 * min_len * (self.density / self.young_modulus).sqrt()
    }

    pub fn validate(&self) -> Result<(), RodError> {
        let n = self.elements();
        if n < 3 {
            return Err(RodError::Invalid(format!("need at least 3 elements, got {n}")));
        }
        let positive = |x: f64| x.is_finite() && x > 0.0;
        let diag_positive = |v: &Vec3| v.iter().all(|&x| positive(x));
        if self.areas.len() != n
            || self.second_moments.len() != n
            || self.shear_stretch_stiffness.len() != n
            || self.bend_twist_stiffness.len() != n - 1
        {
            return Err(RodError::Invalid("inconsistent property lengths".into()));
        }
        if !positive(self.density) || !positive(self.young_modulus) || !positive(self.shear_modulus) {
            return Err(RodError::Invalid("material constants must be positive".into()));
        }
        if !self.rest_lengths.iter().chain(&self.areas).all(|&x| positive(x))
            || !self
                .second_moments
                .iter()
                .chain(&self.bend_twist_stiffness)
                .chain(&self.shear_stretch_stiffness)
                .all(diag_positive)
        {
            return Err(RodError::Invalid("all diagonal entries must be strictly positive".into()));
        }
        Ok(())
    }
}

/// Stretch, shear and curvature of one configuration.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StrainState {
    pub stretch: Vec<f64>,
    pub shear: Vec<Vec3>,
    pub curvature: Vec<Vec3>,
}

impl StrainState {
    pub fn with_elements(n: usize) -> Self {
        Self {
            stretch: vec![1.0; n],
            shear: vec![Vec3::zeros(); n],
            curvature: vec![Vec3::zeros(); n.saturating_sub(1)],
        }
    }
}

pub fn frame_from_directors(d1: &Vec3, d2: &Vec3, d3: &Vec3) -> Mat3 {
    Mat3::from_rows(&[d1.transpose(), d2.transpose(), d3.transpose()])
}

pub fn orthonormality_defect(q: &Mat3) -> f64 {
    (q.transpose() * q - Mat3::identity()).amax()
}

#[inline]
pub fn skew(u: &Vec3) -> Mat3 {
    Mat3::new(0.0, -u.z, u.y, u.z, 0.0, -u.x, -u.y, u.x, 0.0)
}

/// `exp([u]×)` by the Rodrigues formula.
pub fn exp_map(u: &Vec3) -> Mat3 {
    let theta2 = u.norm_squared();
    let (a, b) = if theta2 < 1e-12 {
        (1.0 - theta2 / 6.0, 0.5 - theta2 / 24.0)
    } else {
        let theta = theta2.sqrt();
        (theta.sin() / theta, (1.0 - theta.cos()) / theta2)
    };
    let k = skew(u);
    Mat3::identity() + k * a + k * k * b
}

/// Rotation vector of `r`, the inverse of [`exp_map`]. Returns `None` when
/// the rotation angle is too close to π for the axis to be unique.
pub fn rotation_vector(r: &Mat3) -> Option<Vec3> {
    let w = 0.5 * Vec3::new(r[(2, 1)] - r[(1, 2)], r[(0, 2)] - r[(2, 0)], r[(1, 0)] - r[(0, 1)]);
    let cos = 0.5 * (r.trace() - 1.0);
    let sin = w.norm();
    let theta = sin.atan2(cos);
    if theta >= MAX_RELATIVE_ANGLE {
        return None;
    }
    let scale = if theta < 1e-6 { 1.0 + theta * theta / 6.0 } else { theta / sin };
    Some(w * scale)
}

/// One Newton–Schulz step towards the nearest rotation.
#[inline]
fn reorthonormalize(q: &Mat3) -> Mat3 {
    0.5 * q * (3.0 * Mat3::identity() - q.transpose() * q)
}

/// Advances a frame by the local rotation vector `u` (e.g. `dt ω`):
/// `∂t d = ω × d` integrates to `Q ← exp(−[u]×) Q`.
pub fn rotate_frame(q: &Mat3, u: &Vec3) -> Mat3 {
    reorthonormalize(&(exp_map(&-u) * q))
}

fn element_tangent(state: &RodState, i: usize) -> Vec3 {
    state.positions[i + 1] - state.positions[i]
}

pub fn compute_stretch(state: &RodState, props: &SectionProperties) -> Result<Vec<f64>, RodError> {
    let mut out = vec![0.0; state.elements()];
    stretch_into(state, props, &mut out)?;
    Ok(out)
}

pub(crate) fn stretch_into(state: &RodState, props: &SectionProperties, out: &mut [f64]) -> Result<(), RodError> {
    for (i, (e, l0)) in out.iter_mut().zip(&props.rest_lengths).enumerate() {
        let len = element_tangent(state, i).norm();
        if !(len > 0.0) {
            return Err(RodError::ZeroLengthElement { element: i });
        }
        *e = len / l0;
    }
    Ok(())
}

/// `σ = Q x_s − (0, 0, 1)` with `x_s = Δx / ℓ` per element.
pub fn compute_shear(state: &RodState, props: &SectionProperties, stretch: &[f64]) -> Result<Vec<Vec3>, RodError> {
    let mut out = vec![Vec3::zeros(); state.elements()];
    shear_into(state, props, stretch, &mut out)?;
    Ok(out)
}

pub(crate) fn shear_into(
    state: &RodState,
    props: &SectionProperties,
    stretch: &[f64],
    out: &mut [Vec3],
) -> Result<(), RodError> {
    for (i, sigma) in out.iter_mut().enumerate() {
        if !(stretch[i] > 0.0) {
            return Err(RodError::ZeroLengthElement { element: i });
        }
        let x_s = element_tangent(state, i) / props.rest_lengths[i];
        *sigma = state.frames[i] * x_s - Vec3::z();
    }
    Ok(())
}

/// Curvature at interior nodes: the rotation vector of `Q_i Q_{i+1}ᵀ` over
/// the Voronoi rest length, so that `∂s d = κ × d`.
pub fn compute_curvature(state: &RodState, props: &SectionProperties) -> Result<Vec<Vec3>, RodError> {
    let mut out = vec![Vec3::zeros(); state.elements().saturating_sub(1)];
    curvature_into(state, props, &mut out)?;
    Ok(out)
}

pub(crate) fn curvature_into(state: &RodState, props: &SectionProperties, out: &mut [Vec3]) -> Result<(), RodError> {
    for (k, kappa) in out.iter_mut().enumerate() {
        *kappa = relative_rotation(&state.frames[k], &state.frames[k + 1], k + 1)? / props.voronoi_length(k);
    }
    Ok(())
}

/// Rotation vector carrying frame `a` into frame `b` along the rod.
pub(crate) fn relative_rotation(a: &Mat3, b: &Mat3, node: usize) -> Result<Vec3, RodError> {
    let r = a * b.transpose();
    rotation_vector(&r).ok_or_else(|| RodError::FrameDiscontinuity {
        node,
        angle: (0.5 * (r.trace() - 1.0)).clamp(-1.0, 1.0).acos(),
    })
}

pub fn compute_strains(state: &RodState, props: &SectionProperties) -> Result<StrainState, RodError> {
    let mut strains = StrainState::with_elements(state.elements());
    compute_strains_into(state, props, &mut strains)?;
    Ok(strains)
}

pub(crate) fn compute_strains_into(
    state: &RodState,
    props: &SectionProperties,
    strains: &mut StrainState,
) -> Result<(), RodError> {
    stretch_into(state, props, &mut strains.stretch)?;
    shear_into(state, props, &strains.stretch, &mut strains.shear)?;
    curvature_into(state, props, &mut strains.curvature)
}
