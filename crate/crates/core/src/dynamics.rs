//! Discretized linear and angular momentum balance, the explicit
//! kick-drift-kick integrator and the clamped-base boundary.

use crate::kinematics::{
    compute_strains_into, relative_rotation, rotate_frame, Mat3, RodError, RodState, SectionProperties,
    StrainState, Vec3,
};

/// External loads on the rod.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadField {
    /// Force per unit length at each node, lab frame [N/m].
    pub forces: Vec<Vec3>,
    /// Couple per unit length on each element, local frame [N·m/m].
    pub couples: Vec<Vec3>,
}

impl LoadField {
    pub fn zeros(elements: usize) -> Self {
        Self { forces: vec![Vec3::zeros(); elements + 1], couples: vec![Vec3::zeros(); elements] }
    }

    pub fn clear(&mut self) {
        self.forces.iter_mut().for_each(|f| *f = Vec3::zeros());
        self.couples.iter_mut().for_each(|c| *c = Vec3::zeros());
    }

    pub fn validate(&self, elements: usize) -> Result<(), RodError> {
        if self.forces.len() != elements + 1 || self.couples.len() != elements {
            return Err(RodError::Invalid("load field does not match rod resolution".into()));
        }
        let finite = |v: &Vec3| v.iter().all(|x| x.is_finite());
        if !self.forces.iter().chain(&self.couples).all(finite) {
            return Err(RodError::Invalid("non-finite load".into()));
        }
        Ok(())
    }
}

/// Anything that contributes external loads given the current state. Called
/// on a cleared [`LoadField`] at every acceleration evaluation.
pub trait Forcing {
    fn accumulate(&self, state: &RodState, props: &SectionProperties, loads: &mut LoadField);
}

impl Forcing for LoadField {
    fn accumulate(&self, _state: &RodState, _props: &SectionProperties, loads: &mut LoadField) {
        for (dst, src) in loads.forces.iter_mut().zip(&self.forces) {
            *dst += src;
        }
        for (dst, src) in loads.couples.iter_mut().zip(&self.couples) {
            *dst += src;
        }
    }
}

/// No external loads.
impl Forcing for () {
    fn accumulate(&self, _: &RodState, _: &SectionProperties, _: &mut LoadField) {}
}

/// How the rod is held.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Boundary {
    Free,
    /// Node 0 is pinned at `position`; element 0 is tied to `frame` through a
    /// bend/twist spring spanning the half element between the base and the
    /// first element centre.
    Clamped { position: Vec3, frame: Mat3 },
}

impl Boundary {
    /// Clamped at the origin, pointing up the +z axis.
    pub fn upright() -> Self {
        Boundary::Clamped { position: Vec3::zeros(), frame: Mat3::identity() }
    }

    /// Elastic energy stored in the base spring.
    pub fn elastic_energy(&self, state: &RodState, props: &SectionProperties) -> Result<f64, RodError> {
        match self {
            Boundary::Free => Ok(0.0),
            Boundary::Clamped { frame, .. } => {
                let d = 0.5 * props.rest_lengths[0];
                let kappa = relative_rotation(frame, &state.frames[0], 0)? / d;
                let b = base_stiffness(props);
                Ok(0.5 * kappa.dot(&b.component_mul(&kappa)) * d)
            }
        }
    }
}

fn base_stiffness(props: &SectionProperties) -> Vec3 {
    let i = props.second_moments[0];
    Vec3::new(props.young_modulus * i.x, props.young_modulus * i.y, props.shear_modulus * i.z)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub dt: f64,
    /// Linear velocity decay rate γ [1/s], applied to both v and ω.
    pub damping: f64,
    pub boundary: Boundary,
}

impl IntegratorConfig {
    pub fn validate(&self, props: &SectionProperties) -> Result<(), RodError> {
        let bound = props.stable_dt();
        if !(self.dt > 0.0 && self.dt <= bound) {
            return Err(RodError::Invalid(format!("dt = {} outside (0, {bound:e}]", self.dt)));
        }
        if !(self.damping >= 0.0 && self.damping.is_finite()) {
            return Err(RodError::Invalid(format!("damping must be >= 0, got {}", self.damping)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Accelerations {
    pub linear: Vec<Vec3>,
    pub angular: Vec<Vec3>,
}

impl Accelerations {
    pub fn zeros(elements: usize) -> Self {
        Self { linear: vec![Vec3::zeros(); elements + 1], angular: vec![Vec3::zeros(); elements] }
    }
}

/// Per-rod buffers for the acceleration kernel.
#[derive(Debug, Clone)]
struct Scratch {
    masses: Vec<f64>,
    inertias: Vec<Vec3>,
    /// Lab-frame internal force carried by each element.
    element_forces: Vec<Vec3>,
    /// `Bκ / ε³` per interior node.
    couples: Vec<Vec3>,
    /// `κ × Bκ D / ε³` per interior node.
    couple_transport: Vec<Vec3>,
}

impl Scratch {
    fn new(props: &SectionProperties) -> Self {
        let n = props.elements();
        Self {
            masses: props.node_masses(),
            inertias: props.element_inertias(),
            element_forces: vec![Vec3::zeros(); n],
            couples: vec![Vec3::zeros(); n - 1],
            couple_transport: vec![Vec3::zeros(); n - 1],
        }
    }
}

/// Right-hand sides of the momentum balances divided by the lumped inertias.
pub fn compute_accelerations(
    state: &RodState,
    props: &SectionProperties,
    strains: &StrainState,
    loads: &LoadField,
    boundary: &Boundary,
) -> Result<Accelerations, RodError> {
    loads.validate(state.elements())?;
    let mut scratch = Scratch::new(props);
    let mut out = Accelerations::zeros(state.elements());
    accelerations_into(state, props, strains, loads, boundary, &mut scratch, &mut out)?;
    Ok(out)
}

fn accelerations_into(
    state: &RodState,
    props: &SectionProperties,
    strains: &StrainState,
    loads: &LoadField,
    boundary: &Boundary,
    scratch: &mut Scratch,
    out: &mut Accelerations,
) -> Result<(), RodError> {
    let n = state.elements();
    let e = &strains.stretch;

    // Internal force Qᵀ S σ / e per element.
    for i in 0..n {
        let n_local = props.shear_stretch_stiffness[i].component_mul(&strains.shear[i]);
        scratch.element_forces[i] = state.frames[i].tr_mul(&n_local) / e[i];
    }

    // Bend/twist couples at interior nodes.
    for k in 0..n - 1 {
        let voronoi = props.voronoi_length(k);
        let dilatation = 0.5 * (e[k] * props.rest_lengths[k] + e[k + 1] * props.rest_lengths[k + 1]) / voronoi;
        let kappa = strains.curvature[k];
        let tau = props.bend_twist_stiffness[k].component_mul(&kappa) / dilatation.powi(3);
        scratch.couples[k] = tau;
        scratch.couple_transport[k] = kappa.cross(&tau) * voronoi;
    }

    let (base_couple, base_transport) = match boundary {
        Boundary::Free => (Vec3::zeros(), Vec3::zeros()),
        Boundary::Clamped { frame, .. } => {
            let d = 0.5 * props.rest_lengths[0];
            let kappa = relative_rotation(frame, &state.frames[0], 0)? / d;
            let tau = base_stiffness(props).component_mul(&kappa) / e[0].powi(3);
            (tau, kappa.cross(&tau) * d)
        }
    };

    // Nodes: difference of element forces plus e·f̄ over the node's rest span.
    for i in 0..=n {
        let mut force = Vec3::zeros();
        let mut span = 0.0;
        let mut dilatation = 0.0;
        let mut count = 0.0;
        if i < n {
            force += scratch.element_forces[i];
            span += 0.5 * props.rest_lengths[i];
            dilatation += e[i];
            count += 1.0;
        }
        if i > 0 {
            force -= scratch.element_forces[i - 1];
            span += 0.5 * props.rest_lengths[i - 1];
            dilatation += e[i - 1];
            count += 1.0;
        }
        force += loads.forces[i] * (span * dilatation / count);
        out.linear[i] = force / scratch.masses[i];
    }
    if let Boundary::Clamped { .. } = boundary {
        out.linear[0] = Vec3::zeros();
    }

    // Elements.
    for j in 0..n {
        let q = &state.frames[j];
        let omega = state.angular_velocities[j];
        let l0 = props.rest_lengths[j];
        let ej = e[j];

        let (right, right_transport) = if j + 1 < n {
            (scratch.couples[j], scratch.couple_transport[j])
        } else {
            (Vec3::zeros(), Vec3::zeros())
        };
        let (left, left_transport) = if j > 0 {
            (scratch.couples[j - 1], scratch.couple_transport[j - 1])
        } else {
            (base_couple, base_transport)
        };
        let mut torque = right - left + 0.5 * (left_transport + right_transport);

        let tangent = state.positions[j + 1] - state.positions[j];
        let unit_tangent = tangent / (ej * l0);
        let n_local = props.shear_stretch_stiffness[j].component_mul(&strains.shear[j]);
        torque += (q * unit_tangent).cross(&n_local) * l0;

        let j_omega = scratch.inertias[j].component_mul(&omega) / ej;
        torque += j_omega.cross(&omega);
        let stretch_rate = unit_tangent.dot(&(state.velocities[j + 1] - state.velocities[j])) / l0;
        torque += j_omega * (stretch_rate / ej);

        torque += loads.couples[j] * (ej * l0);
        out.angular[j] = torque.component_div(&scratch.inertias[j]) * ej;
    }

    if let Some(index) = out.linear.iter().position(|a| !a.iter().all(|x| x.is_finite())) {
        return Err(RodError::BlowUp { what: "node", index });
    }
    if let Some(index) = out.angular.iter().position(|a| !a.iter().all(|x| x.is_finite())) {
        return Err(RodError::BlowUp { what: "element", index });
    }
    Ok(())
}

/// Resets the clamped node to its base position and zero velocity.
pub fn apply_clamped_base(state: &mut RodState, boundary: &Boundary) {
    if let Boundary::Clamped { position, .. } = boundary {
        state.positions[0] = *position;
        state.velocities[0] = Vec3::zeros();
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Energies {
    pub translational: f64,
    pub rotational: f64,
    pub shear_stretch: f64,
    pub bend_twist: f64,
}

impl Energies {
    pub fn kinetic(&self) -> f64 {
        self.translational + self.rotational
    }

    pub fn total(&self) -> f64 {
        self.translational + self.rotational + self.shear_stretch + self.bend_twist
    }
}

pub fn compute_energies(state: &RodState, props: &SectionProperties, strains: &StrainState) -> Energies {
    let masses = props.node_masses();
    let inertias = props.element_inertias();
    let translational = state.velocities.iter().zip(&masses).map(|(v, m)| 0.5 * m * v.norm_squared()).sum();
    let rotational = state
        .angular_velocities
        .iter()
        .zip(&inertias)
        .map(|(w, j)| 0.5 * w.dot(&j.component_mul(w)))
        .sum();
    let shear_stretch = (0..props.elements())
        .map(|i| {
            let s = strains.shear[i];
            0.5 * s.dot(&props.shear_stretch_stiffness[i].component_mul(&s)) * props.rest_lengths[i]
        })
        .sum();
    let bend_twist = strains
        .curvature
        .iter()
        .enumerate()
        .map(|(k, kappa)| 0.5 * kappa.dot(&props.bend_twist_stiffness[k].component_mul(kappa)) * props.voronoi_length(k))
        .sum();
    Energies { translational, rotational, shear_stretch, bend_twist }
}

/// Kick-drift-kick integrator with reusable buffers.
///
/// The accelerations computed at the end of a step are reused for the first
/// half-kick of the next one. Call [`Stepper::invalidate`] whenever the state
/// or the forcing changes outside of [`Stepper::step`].
#[derive(Debug, Clone)]
pub struct Stepper {
    config: IntegratorConfig,
    scratch: Scratch,
    strains: StrainState,
    loads: LoadField,
    accelerations: Accelerations,
    cached: bool,
}

impl Stepper {
    pub fn new(config: IntegratorConfig, props: &SectionProperties) -> Result<Self, RodError> {
        props.validate()?;
        config.validate(props)?;
        let n = props.elements();
        Ok(Self {
            config,
            scratch: Scratch::new(props),
            strains: StrainState::with_elements(n),
            loads: LoadField::zeros(n),
            accelerations: Accelerations::zeros(n),
            cached: false,
        })
    }

    pub fn config(&self) -> &IntegratorConfig {
        &self.config
    }

    pub fn invalidate(&mut self) {
        self.cached = false;
    }

    /// Strains of the state seen by the last acceleration evaluation.
    pub fn strains(&self) -> &StrainState {
        &self.strains
    }

    /// Loads seen by the last acceleration evaluation.
    pub fn loads(&self) -> &LoadField {
        &self.loads
    }

    fn evaluate<F: Forcing + ?Sized>(
        &mut self,
        state: &RodState,
        props: &SectionProperties,
        forcing: &F,
    ) -> Result<(), RodError> {
        compute_strains_into(state, props, &mut self.strains)?;
        self.loads.clear();
        forcing.accumulate(state, props, &mut self.loads);
        accelerations_into(
            state,
            props,
            &self.strains,
            &self.loads,
            &self.config.boundary,
            &mut self.scratch,
            &mut self.accelerations,
        )?;
        self.cached = true;
        Ok(())
    }

    fn half_kick(&self, state: &mut RodState) {
        let h = 0.5 * self.config.dt;
        let decay = (-self.config.damping * h).exp();
        for (v, a) in state.velocities.iter_mut().zip(&self.accelerations.linear) {
            *v = *v * decay + a * h;
        }
        for (w, a) in state.angular_velocities.iter_mut().zip(&self.accelerations.angular) {
            *w = *w * decay + a * h;
        }
    }

    /// Advances `state` by one time step. On error the state is left
    /// partially updated.
    pub fn step<F: Forcing + ?Sized>(
        &mut self,
        state: &mut RodState,
        props: &SectionProperties,
        forcing: &F,
    ) -> Result<(), RodError> {
        let dt = self.config.dt;
        let boundary = self.config.boundary;
        if !self.cached {
            apply_clamped_base(state, &boundary);
            self.evaluate(state, props, forcing)?;
        }
        self.half_kick(state);
        for (x, v) in state.positions.iter_mut().zip(&state.velocities) {
            *x += v * dt;
        }
        for (q, w) in state.frames.iter_mut().zip(&state.angular_velocities) {
            *q = rotate_frame(q, &(w * dt));
        }
        apply_clamped_base(state, &boundary);
        self.cached = false;
        self.evaluate(state, props, forcing)?;
        self.half_kick(state);
        apply_clamped_base(state, &boundary);
        Ok(())
    }
}

/// Single step from scratch; allocates. Prefer [`Stepper`] in loops.
pub fn step(
    state: &RodState,
    props: &SectionProperties,
    config: &IntegratorConfig,
    loads: &LoadField,
) -> Result<RodState, RodError> {
    loads.validate(state.elements())?;
    let mut stepper = Stepper::new(*config, props)?;
    let mut next = state.clone();
    stepper.step(&mut next, props, loads)?;
    Ok(next)
}
