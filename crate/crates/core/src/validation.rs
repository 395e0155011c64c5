//! Numerical validation problems for the rod engine: a static cantilever,
//! a free oscillating rod, and analytic-helix/temporal convergence studies.

use crate::dynamics::{compute_energies, Boundary, Forcing, IntegratorConfig, LoadField, Stepper};
use crate::kinematics::{
    compute_strains, frame_from_directors, RodError, RodState, SectionProperties, Vec3, SHEAR_CORRECTION,
};

/// Material and geometry of the default arm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmGeometry {
    pub length: f64,
    pub radius: f64,
    pub density: f64,
    pub young_modulus: f64,
    pub poisson_ratio: f64,
}

impl Default for ArmGeometry {
    fn default() -> Self {
        Self { length: 1.0, radius: 0.025, density: 1000.0, young_modulus: 1e7, poisson_ratio: 0.5 }
    }
}

impl ArmGeometry {
    pub fn properties(&self, elements: usize) -> Result<SectionProperties, RodError> {
        SectionProperties::uniform(elements, self.length, self.radius, self.density, self.young_modulus, self.poisson_ratio)
    }
}

/// Point force on the last node, independent of the end element's stretch.
struct TipForce(Vec3);

impl Forcing for TipForce {
    fn accumulate(&self, state: &RodState, props: &SectionProperties, loads: &mut LoadField) {
        let n = props.elements();
        let stretch = (state.positions[n] - state.positions[n - 1]).norm() / props.rest_lengths[n - 1];
        loads.forces[n] += self.0 / (0.5 * props.rest_lengths[n - 1] * stretch);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamReport {
    pub elements: usize,
    pub force: f64,
    pub tip_deflection: f64,
    pub predicted: f64,
    pub relative_error: f64,
    pub settled: bool,
    pub simulated_time: f64,
    pub final_kinetic_energy: f64,
}

/// Settles an upright clamped arm under a lateral tip force and compares the
/// tip deflection with `F L³ / (3 E I) + F L / (αc G A)`.
pub fn timoshenko_cantilever(geometry: &ArmGeometry, elements: usize, force: f64) -> Result<BeamReport, RodError> {
    let props = geometry.properties(elements)?;
    let dt = (0.8 * props.stable_dt()).min(2.5e-5);
    // Critically damp the fundamental mode; an overdamped first mode creeps
    // toward equilibrium with kinetic energy already below the threshold.
    let l = geometry.length;
    let i = props.second_moments[0].x;
    let omega = 1.875f64.powi(2) * (props.young_modulus * i / (props.density * props.areas[0])).sqrt() / (l * l);
    let config = IntegratorConfig { dt, damping: 2.0 * omega, boundary: Boundary::upright() };
    let mut stepper = Stepper::new(config, &props)?;
    let mut rod = RodState::upright(elements, geometry.length);
    let forcing = TipForce(Vec3::new(force, 0.0, 0.0));

    let masses = props.node_masses();
    let inertias = props.element_inertias();
    let kinetic = |rod: &RodState| -> f64 {
        let t: f64 = rod.velocities.iter().zip(&masses).map(|(v, m)| 0.5 * m * v.norm_squared()).sum();
        let r: f64 = rod.angular_velocities.iter().zip(&inertias).map(|(w, j)| 0.5 * w.dot(&j.component_mul(w))).sum();
        t + r
    };

    let check_every = (1e-3 / dt).ceil() as usize;
    let max_steps = (20.0 / dt) as usize;
    let min_steps = (12.0 / omega / dt) as usize;
    let mut steps = 0;
    let mut settled = false;
    let mut ke = 0.0;
    while steps < max_steps {
        stepper.step(&mut rod, &props, &forcing)?;
        steps += 1;
        if steps % check_every == 0 {
            ke = kinetic(&rod);
            if steps >= min_steps && ke < 1e-10 {
                settled = true;
                break;
            }
        }
    }

    let predicted = force * l.powi(3) / (3.0 * props.young_modulus * i)
        + force * l / (SHEAR_CORRECTION * props.shear_modulus * props.areas[0]);
    let tip_deflection = rod.positions[elements].x;
    Ok(BeamReport {
        elements,
        force,
        tip_deflection,
        predicted,
        relative_error: (tip_deflection - predicted).abs() / predicted,
        settled,
        simulated_time: steps as f64 * dt,
        final_kinetic_energy: ke,
    })
}

/// Planar arc in the x–z plane through the origin, turning by `angle` over
/// `length`, with chords exactly at rest length and tangent-aligned frames.
pub fn planar_arc(elements: usize, length: f64, angle: f64) -> RodState {
    let mut rod = RodState::upright(elements, length);
    let h = length / elements as f64;
    // Turning per element is angle / n, so each chord direction is known exactly.
    let step = angle / elements as f64;
    let mut x = Vec3::zeros();
    for i in 0..elements {
        let heading = step * (i as f64 + 0.5);
        let d3 = Vec3::new(heading.sin(), 0.0, heading.cos());
        let d2 = Vec3::y();
        rod.frames[i] = frame_from_directors(&d2.cross(&d3), &d2, &d3);
        rod.positions[i] = x;
        x += d3 * h;
    }
    rod.positions[elements] = x;
    rod
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConservationReport {
    pub steps: usize,
    /// Largest per-step change of linear momentum relative to its magnitude.
    pub max_momentum_change: f64,
    /// Largest |E(t) − E(0)| / E(0) over the run.
    pub max_energy_drift: f64,
    pub final_energy_drift: f64,
}

/// Free, undamped, unloaded rod released from a bent shape while drifting.
pub fn free_rod_conservation(geometry: &ArmGeometry, elements: usize, steps: usize) -> Result<ConservationReport, RodError> {
    let props = geometry.properties(elements)?;
    let dt = (0.8 * props.stable_dt()).min(2.5e-5);
    let config = IntegratorConfig { dt, damping: 0.0, boundary: Boundary::Free };
    let mut stepper = Stepper::new(config, &props)?;
    let mut rod = planar_arc(elements, geometry.length, 1.0);
    rod.velocities.iter_mut().for_each(|v| *v = Vec3::new(0.01, -0.02, 0.005));

    let masses = props.node_masses();
    let momentum = |rod: &RodState| -> Vec3 { rod.velocities.iter().zip(&masses).map(|(v, m)| v * *m).sum() };
    let energy = |rod: &RodState| -> Result<f64, RodError> {
        Ok(compute_energies(rod, &props, &compute_strains(rod, &props)?).total())
    };

    let e0 = energy(&rod)?;
    let mut p_prev = momentum(&rod);
    let mut max_momentum_change: f64 = 0.0;
    let mut max_energy_drift: f64 = 0.0;
    let sample = 100;
    for k in 1..=steps {
        stepper.step(&mut rod, &props, &())?;
        let p = momentum(&rod);
        max_momentum_change = max_momentum_change.max((p - p_prev).norm() / p_prev.norm());
        p_prev = p;
        if k % sample == 0 || k == steps {
            max_energy_drift = max_energy_drift.max((energy(&rod)? - e0).abs() / e0);
        }
    }
    Ok(ConservationReport {
        steps,
        max_momentum_change,
        max_energy_drift,
        final_energy_drift: (energy(&rod)? - e0).abs() / e0,
    })
}

/// Helix of radius `radius` and pitch `pitch` parameterized by arc length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Helix {
    pub radius: f64,
    pub pitch: f64,
}

impl Helix {
    fn c(&self) -> f64 {
        (self.radius.powi(2) + (self.pitch / (2.0 * std::f64::consts::PI)).powi(2)).sqrt()
    }

    pub fn curvature(&self) -> f64 {
        self.radius / self.c().powi(2)
    }

    pub fn torsion(&self) -> f64 {
        self.pitch / (2.0 * std::f64::consts::PI) / self.c().powi(2)
    }

    pub fn point(&self, s: f64) -> Vec3 {
        let c = self.c();
        Vec3::new(
            self.radius * (s / c).cos(),
            self.radius * (s / c).sin(),
            self.pitch / (2.0 * std::f64::consts::PI) * s / c,
        )
    }

    /// Principal normal at arc length `s`.
    pub fn normal(&self, s: f64) -> Vec3 {
        let c = self.c();
        Vec3::new(-(s / c).cos(), -(s / c).sin(), 0.0)
    }

    /// Nodes sampled at equal arc length; each frame has `d3` along its chord
    /// and `d1` along the principal normal at the element's midpoint.
    pub fn discretize(&self, elements: usize, length: f64) -> (RodState, SectionProperties) {
        let props = ArmGeometry::default().properties(elements).expect("valid default arm");
        let props = SectionProperties { rest_lengths: vec![length / elements as f64; elements], ..props };
        let h = length / elements as f64;
        let mut rod = RodState::upright(elements, length);
        for i in 0..=elements {
            rod.positions[i] = self.point(h * i as f64);
        }
        for i in 0..elements {
            let d3 = (rod.positions[i + 1] - rod.positions[i]).normalize();
            let n = self.normal(h * (i as f64 + 0.5));
            let d1 = (n - d3 * n.dot(&d3)).normalize();
            rod.frames[i] = frame_from_directors(&d1, &d3.cross(&d1), &d3);
        }
        (rod, props)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrainErrors {
    pub curvature: f64,
    pub shear: f64,
}

/// Max-norm errors of the discrete curvature against `(0, k, τ)` and of the
/// shear against zero on a discretized helix.
pub fn helix_strain_errors(helix: &Helix, elements: usize, length: f64) -> Result<StrainErrors, RodError> {
    let (rod, props) = helix.discretize(elements, length);
    let strains = compute_strains(&rod, &props)?;
    let exact = Vec3::new(0.0, helix.curvature(), helix.torsion());
    Ok(StrainErrors {
        curvature: strains.curvature.iter().map(|k| (k - exact).norm()).fold(0.0, f64::max),
        shear: strains.shear.iter().map(|s| s.norm()).fold(0.0, f64::max),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceReport {
    pub coarse: StrainErrors,
    pub fine: StrainErrors,
    pub curvature_ratio: f64,
    pub shear_ratio: f64,
}

pub fn helix_convergence(helix: &Helix, elements: usize, length: f64) -> Result<ConvergenceReport, RodError> {
    let coarse = helix_strain_errors(helix, elements, length)?;
    let fine = helix_strain_errors(helix, 2 * elements, length)?;
    Ok(ConvergenceReport {
        coarse,
        fine,
        curvature_ratio: coarse.curvature / fine.curvature,
        shear_ratio: coarse.shear / fine.shear,
    })
}

/// Integrates a clamped, initially bent arm to `duration` at `dt`, `dt/2`
/// and `dt/4`, and returns the ratio of successive end-state differences.
pub fn temporal_convergence_ratio(geometry: &ArmGeometry, elements: usize, dt: f64, duration: f64) -> Result<f64, RodError> {
    let props = geometry.properties(elements)?;
    let run = |dt: f64| -> Result<RodState, RodError> {
        let config = IntegratorConfig { dt, damping: 2.0, boundary: Boundary::upright() };
        let mut stepper = Stepper::new(config, &props)?;
        let mut rod = planar_arc(elements, geometry.length, 0.5);
        let steps = (duration / dt).round() as usize;
        for _ in 0..steps {
            stepper.step(&mut rod, &props, &())?;
        }
        Ok(rod)
    };
    let a = run(dt)?;
    let b = run(dt / 2.0)?;
    let c = run(dt / 4.0)?;
    let diff = |x: &RodState, y: &RodState| -> f64 {
        x.positions.iter().zip(&y.positions).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max)
    };
    Ok(diff(&a, &b) / diff(&b, &c))
}

/// Best-of-`repeats` wall time per step of a clamped, damped arm released
/// from a bend, at `elements` resolution.
pub fn seconds_per_step(geometry: &ArmGeometry, elements: usize, steps: usize, repeats: usize) -> Result<f64, RodError> {
    let props = geometry.properties(elements)?;
    let dt = (0.8 * props.stable_dt()).min(2.5e-5);
    let mut best = f64::INFINITY;
    for _ in 0..repeats.max(1) {
        let config = IntegratorConfig { dt, damping: 1.0, boundary: Boundary::upright() };
        let mut stepper = Stepper::new(config, &props)?;
        let mut rod = planar_arc(elements, geometry.length, 0.5);
        let start = std::time::Instant::now();
        for _ in 0..steps {
            stepper.step(&mut rod, &props, &())?;
        }
        best = best.min(start.elapsed().as_secs_f64() / steps as f64);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arc_has_rest_length_chords_and_uniform_curvature() {
        let rod = planar_arc(10, 1.0, 1.0);
        let props = ArmGeometry::default().properties(10).unwrap();
        let strains = compute_strains(&rod, &props).unwrap();
        assert!(strains.stretch.iter().all(|e| (e - 1.0).abs() < 1e-14));
        assert!(strains.shear.iter().all(|s| s.norm() < 1e-14));
        assert!(strains.curvature.iter().all(|k| (k.y - 1.0).abs() < 1e-12 && k.x.abs() < 1e-12));
    }

    #[test]
    fn helix_frames_are_rotations() {
        let (rod, _) = Helix { radius: 0.2, pitch: 0.5 }.discretize(16, 1.0);
        rod.validate().unwrap();
    }
}
