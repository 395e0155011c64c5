//! Shared fixtures for the benchmarks in `benches/`.

use arm_lab_core::validation::{planar_arc, ArmGeometry};
use arm_lab_core::{Boundary, IntegratorConfig, RodState, SectionProperties, Stepper};

/// Clamped default arm at `elements` resolution, released from a gentle bend.
pub struct ArmFixture {
    pub props: SectionProperties,
    pub stepper: Stepper,
    pub rod: RodState,
}

impl ArmFixture {
    pub fn new(elements: usize) -> Self {
        let geometry = ArmGeometry::default();
        let props = geometry.properties(elements).expect("default arm is valid");
        let dt = (0.8 * props.stable_dt()).min(2.5e-5);
        let config = IntegratorConfig { dt, damping: 1.0, boundary: Boundary::upright() };
        let stepper = Stepper::new(config, &props).expect("stable step");
        ArmFixture { rod: planar_arc(elements, geometry.length, 0.5), props, stepper }
    }

    pub fn step(&mut self) {
        self.stepper.step(&mut self.rod, &self.props, &()).expect("finite state");
    }
}
