//! Episode loop.

use crate::environments::{ArmEnv, SAMPLE_POINTS};
use crate::error::Error;
use crate::kinematics::Vec3;

use super::policy::Policy;
use super::trajectory::{TrajectoryRecord, TrajectoryRow};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeSummary {
    /// Sum of per-step rewards.
    pub score: f64,
    pub steps: usize,
    /// Ended by a numerical instability.
    pub terminated: bool,
    pub initial_distance: f64,
    pub final_distance: f64,
    pub final_tip: Vec3,
}

/// Resets `env` with `seed` and runs one full episode under `policy`.
/// An instability ends the episode early but is not an error.
pub fn run_episode(
    env: &mut ArmEnv,
    seed: u64,
    policy: &mut dyn Policy,
    mut recorder: Option<&mut TrajectoryRecord>,
) -> Result<EpisodeSummary, Error> {
    env.reset(seed);
    policy.reset();
    if let Some(rec) = recorder.as_deref_mut() {
        *rec = TrajectoryRecord::new(env.scenario().reward.orientation.is_some());
    }
    let initial_distance = (env.tip() - env.target().position).norm();
    let mut action = vec![0.0; env.action_size()];
    let mut score = 0.0;
    let mut steps = 0;
    let terminated = loop {
        policy.act(env.observation(), &mut action)?;
        let result = env.step(&action)?;
        steps += 1;
        score += result.reward;
        if let Some(rec) = recorder.as_deref_mut() {
            let obs = env.observation();
            let mut samples = [Vec3::zeros(); SAMPLE_POINTS];
            for (j, s) in samples.iter_mut().enumerate() {
                *s = Vec3::new(obs[3 * j], obs[3 * j + 1], obs[3 * j + 2]);
            }
            rec.rows.push(TrajectoryRow {
                step: env.control_step(),
                time: env.time(),
                samples,
                tip: env.tip(),
                target: env.target().position,
                target_velocity: env.target().velocity,
                tip_distance: result.info.tip_distance,
                reward: result.reward,
                cumulative_reward: score,
                contact: result.info.contact,
                orientation_error: result.info.orientation_error,
            });
        }
        if result.terminated || result.truncated {
            break result.terminated;
        }
    };
    policy.finish()?;
    Ok(EpisodeSummary {
        score,
        steps,
        terminated,
        initial_distance,
        final_distance: (env.tip() - env.target().position).norm(),
        final_tip: env.tip(),
    })
}

/// Shipped Case 3 demonstration: swing the arm toward the wall with the
/// 0.4 L control point, then curl the tip with the 0.9 L one.
pub fn case3_demonstration(steps: usize) -> Vec<Vec<f64>> {
    (0..steps)
        .map(|k| {
            let t = k as f64 / steps as f64;
            let ramp = |x: f64| if x <= 0.0 { 0.0 } else { -x.min(1.0) };
            vec![ramp(t / 0.25), ramp((t - 0.5) / 0.25)]
        })
        .collect()
}
