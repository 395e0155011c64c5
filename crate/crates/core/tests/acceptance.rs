//! Acceptance suite: one line per criterion. Exits non-zero if a criterion
//! fails that is not listed in `KNOWN_GAPS`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use arm_lab_core::environments::{ArmEnv, CaseScenario};
use arm_lab_core::interactions::TargetLaw;
use arm_lab_core::scenario_io::{
    load_actions, load_scenario, run_episode, Gains, RandomPolicy, ReplayPolicy, ScriptedPolicy, TrajectoryRecord,
    ZeroPolicy,
};
use arm_lab_core::validation::{
    free_rod_conservation, helix_convergence, seconds_per_step, timoshenko_cantilever, ArmGeometry, Helix,
};
use arm_lab_core::Vec3;

/// Criteria reported red with an explanation in the README.
const KNOWN_GAPS: &[&str] = &["conservation/energy"];

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn outcome(name: &'static str, pass: bool, detail: String) -> Outcome {
    Outcome { name, pass, detail }
}

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn timoshenko() -> Vec<Outcome> {
    let start = Instant::now();
    let r = timoshenko_cantilever(&ArmGeometry::default(), 100, 1e-3).expect("beam run");
    let secs = start.elapsed().as_secs_f64();
    vec![outcome(
        "timoshenko",
        r.settled && r.relative_error < 0.01 && secs < 60.0,
        format!(
            "n=100 tip {:.6e} m vs {:.6e} m, rel err {:.2e} (< 1e-2), settled {}, {secs:.1} s (< 60 s)",
            r.tip_deflection, r.predicted, r.relative_error, r.settled
        ),
    )]
}

fn conservation() -> Vec<Outcome> {
    let start = Instant::now();
    let r = free_rod_conservation(&ArmGeometry::default(), 50, 100_000).expect("free rod run");
    let secs = start.elapsed().as_secs_f64();
    vec![
        outcome(
            "conservation/momentum",
            r.max_momentum_change < 1e-12 && secs < 120.0,
            format!("max per-step relative change {:.2e} (< 1e-12), {secs:.1} s (< 120 s)", r.max_momentum_change),
        ),
        outcome(
            "conservation/energy",
            r.max_energy_drift < 0.01,
            format!(
                "max drift {:.3}% final {:.3}% over {} steps (< 1%)",
                100.0 * r.max_energy_drift,
                100.0 * r.final_energy_drift,
                r.steps
            ),
        ),
    ]
}

fn convergence() -> Vec<Outcome> {
    let r = helix_convergence(&Helix { radius: 0.2, pitch: 0.5 }, 50, 1.0).expect("helix");
    let ok = |x: f64| (3.5..=4.5).contains(&x);
    vec![outcome(
        "spatial-convergence",
        ok(r.curvature_ratio) && ok(r.shear_ratio),
        format!("n=50/100 error ratios: curvature {:.4}, shear {:.4} (in [3.5, 4.5])", r.curvature_ratio, r.shear_ratio),
    )]
}

fn scaling() -> Vec<Outcome> {
    let g = ArmGeometry::default();
    let t100 = seconds_per_step(&g, 100, 4000, 5).expect("timing");
    let t400 = seconds_per_step(&g, 400, 1000, 5).expect("timing");
    let ratio = t400 / t100;
    vec![outcome(
        "linear-scaling",
        (3.0..=5.0).contains(&ratio),
        format!("t(400) {:.2} us, t(100) {:.2} us, ratio {ratio:.2} (in [3, 5])", t400 * 1e6, t100 * 1e6),
    )]
}

fn contracts() -> Vec<Outcome> {
    let expected = [(1u8, 12usize, 44usize), (2, 18, 52), (3, 2, 86), (4, 4, 84)];
    let mut sizes = Vec::new();
    let mut ok = true;
    for (case, act, obs) in expected {
        let env = ArmEnv::new(CaseScenario::defaults(case).unwrap()).unwrap();
        ok &= env.action_size() == act && env.observation_size() == obs && env.observation().len() == obs;
        sizes.push(format!("case {case}: {}/{}", env.action_size(), env.observation_size()));
    }

    let fixed_target = |position: Vec3| {
        let mut s = CaseScenario::defaults(1).unwrap();
        s.target.law = TargetLaw::Static;
        s.target.position = Some(position);
        ArmEnv::new(s).unwrap()
    };
    let held = run_episode(&mut fixed_target(Vec3::new(0.0, 0.0, 1.0)), 0, &mut ZeroPolicy, None).unwrap();
    let far = run_episode(&mut fixed_target(Vec3::new(0.8, 0.0, 0.2)), 0, &mut ZeroPolicy, None).unwrap();
    vec![
        outcome("contracts/sizes", ok, format!("action/observation {} (12/44, 18/52, 2/86, 4/84)", sizes.join(", "))),
        outcome(
            "contracts/reward-sign",
            held.score > 0.0 && far.score < 0.0,
            format!("held at target {:.2} (> 0), never near {:.2} (< 0)", held.score, far.score),
        ),
    ]
}

fn obstacle_witness() -> Vec<Outcome> {
    let with = load_scenario(scenarios().join("case3.json")).unwrap();
    let actions = load_actions(scenarios().join("case3_demo_actions.txt")).unwrap();
    let mut without = with.clone();
    without.obstacles.clear();
    let length = with.arm.length;
    let tip = |s: CaseScenario| {
        let seed = s.seed;
        let mut env = ArmEnv::new(s).unwrap();
        run_episode(&mut env, seed, &mut ReplayPolicy::new(actions.clone()), None).unwrap()
    };
    let (a, b) = (tip(with), tip(without));
    let gap = (a.final_tip - b.final_tip).norm();
    vec![outcome(
        "obstacle-witness",
        gap > 0.05 * length && !a.terminated && !b.terminated,
        format!(
            "case 3 demo end tip with {:.3?} vs without {:.3?}: {gap:.3} m apart (> {:.3} m)",
            a.final_tip.as_slice(),
            b.final_tip.as_slice(),
            0.05 * length
        ),
    )]
}

fn robustness() -> Vec<Outcome> {
    let mut ok = true;
    let mut notes = Vec::new();
    for case in 1..=4u8 {
        let mut s = CaseScenario::defaults(case).unwrap();
        s.episode_control_steps = 10_000;
        let mut env = ArmEnv::new(s).unwrap();
        let mut policy = RandomPolicy::new(100 + case as u64);
        let summary = run_episode(&mut env, case as u64, &mut policy, None);
        let finite = env.observation().iter().all(|v| v.is_finite());
        match summary {
            Ok(s) => {
                ok &= finite && s.score.is_finite() && (s.terminated || s.steps == 10_000);
                notes.push(format!(
                    "case {case}: {} steps{}",
                    s.steps,
                    if s.terminated { " (instability flag)" } else { "" }
                ));
            }
            Err(e) => {
                ok = false;
                notes.push(format!("case {case}: error {e}"));
            }
        }
    }
    vec![outcome("robustness", ok, format!("10000 random control steps, finite observations; {}", notes.join(", ")))]
}

fn determinism() -> Vec<Outcome> {
    let mut ok = true;
    for case in 1..=4u8 {
        let scenario = load_scenario(scenarios().join(format!("case{case}.json"))).unwrap();
        let run = || {
            let mut env = ArmEnv::new(scenario.clone()).unwrap();
            let mut rec = TrajectoryRecord::default();
            let s = run_episode(&mut env, 17, &mut RandomPolicy::new(5), Some(&mut rec)).unwrap();
            (s, rec, env.state().clone())
        };
        let (a, b) = (run(), run());
        ok &= a.0 == b.0 && a.1 == b.1 && a.2 == b.2;
    }
    vec![outcome("determinism", ok, "cases 1-4, 400 random steps twice: summaries, records and states identical".into())]
}

fn scripted() -> Vec<Outcome> {
    let scenario = load_scenario(scenarios().join("case1_static.json")).unwrap();
    let mut env = ArmEnv::new(scenario.clone()).unwrap();
    let mut policy = ScriptedPolicy::new(&scenario, Gains::default());
    let ratios: Vec<f64> = (0..10)
        .map(|seed| {
            let s = run_episode(&mut env, seed, &mut policy, None).unwrap();
            if s.terminated { f64::INFINITY } else { s.final_distance / s.initial_distance }
        })
        .collect();
    let worst = ratios.iter().cloned().fold(0.0, f64::max);
    vec![outcome(
        "scripted-policy",
        worst < 0.5,
        format!("static-target case 1, seeds 0-9: worst final/initial distance {worst:.3} (< 0.5)"),
    )]
}

fn main() -> ExitCode {
    let suites: [fn() -> Vec<Outcome>; 9] = [
        timoshenko,
        conservation,
        convergence,
        scaling,
        contracts,
        obstacle_witness,
        robustness,
        determinism,
        scripted,
    ];
    let mut unexpected = 0;
    for suite in suites {
        for o in suite() {
            let known = KNOWN_GAPS.contains(&o.name);
            let tag = match (o.pass, known) {
                (true, _) => "PASS",
                (false, true) => "FAIL (known gap)",
                (false, false) => "FAIL",
            };
            println!("{tag} {}: {}", o.name, o.detail);
            unexpected += usize::from(!o.pass && !known);
        }
    }
    if unexpected > 0 {
        println!("{unexpected} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
