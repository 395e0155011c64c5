use arm_lab_core::environments::{ArmEnv, CaseScenario, SAMPLE_POINTS};
use arm_lab_core::interactions::{contact_force_density, equidistant_knots, evaluate_spline};
use arm_lab_core::scenario_io::{
    load_scenario, read_trajectory, run_episode, write_trajectory, TrajectoryRecord, TrajectoryRow, ZeroPolicy,
};
use arm_lab_core::Vec3;
use proptest::prelude::*;

fn env(case: u8, seed: u64) -> ArmEnv {
    let mut s = CaseScenario::defaults(case).unwrap();
    s.seed = seed;
    ArmEnv::new(s).unwrap()
}

fn actions(size: usize, steps: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-1.0..=1.0f64, size), steps)
}

fn vec3() -> impl Strategy<Value = Vec3> {
    prop::array::uniform3(-1e3..1e3f64).prop_map(Vec3::from)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spline_is_linear_in_control_points(
        a in prop::collection::vec(-1.0..=1.0f64, 6),
        b in prop::collection::vec(-1.0..=1.0f64, 6),
        alpha in -2.0..2.0f64,
        beta in -2.0..2.0f64,
    ) {
        let knots = equidistant_knots(6, 1.0);
        let grid: Vec<f64> = (0..=40).map(|i| i as f64 / 40.0).collect();
        let sa = evaluate_spline(&a, &knots, 1.0, &grid).unwrap();
        let sb = evaluate_spline(&b, &knots, 1.0, &grid).unwrap();
        let mix: Vec<f64> = a.iter().zip(&b).map(|(x, y)| alpha * x + beta * y).collect();
        let sm = evaluate_spline(&mix, &knots, 1.0, &grid).unwrap();
        for i in 0..grid.len() {
            prop_assert!((sm[i] - (alpha * sa[i] + beta * sb[i])).abs() < 1e-12);
        }
        prop_assert!(sm[0] == 0.0 && sm[grid.len() - 1].abs() < 1e-12);
    }

    #[test]
    fn contact_force_vanishes_outside_and_grows_with_depth(
        d in -0.05..0.05f64,
        extra in 0.0..0.01f64,
        approach in 0.0..2.0f64,
        k in 1.0..1e6f64,
        c in 0.0..1e3f64,
    ) {
        let v = -approach;
        let f = contact_force_density(d, v, k, c);
        prop_assert!(f >= 0.0);
        if d <= 0.0 {
            prop_assert_eq!(f, 0.0);
        } else {
            prop_assert!(f > 0.0);
        }
        prop_assert!(contact_force_density(d + extra, v, k, c) >= f);
        prop_assert_eq!(contact_force_density(d, 0.0, k, c), (k * d).max(0.0));
    }

    #[test]
    fn trajectory_csv_round_trips(
        rows in prop::collection::vec((vec3(), vec3(), -1e3..1e3f64, any::<bool>(), prop::option::of(0.0..3.2f64)), 1..8),
        orientation in any::<bool>(),
    ) {
        let mut rec = TrajectoryRecord::new(orientation);
        let mut cumulative = 0.0;
        for (k, (tip, target, reward, contact, err)) in rows.into_iter().enumerate() {
            cumulative += reward;
            let mut samples = [Vec3::zeros(); SAMPLE_POINTS];
            for (j, s) in samples.iter_mut().enumerate() {
                *s = tip * (j as f64 / 10.0);
            }
            rec.rows.push(TrajectoryRow {
                step: k + 1,
                time: 0.0025 * (k + 1) as f64,
                samples,
                tip,
                target,
                target_velocity: (target - tip) * 1e-3,
                tip_distance: (tip - target).norm(),
                reward,
                cumulative_reward: cumulative,
                contact,
                orientation_error: if orientation { Some(err.unwrap_or(0.0)) } else { None },
            });
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_trajectory(&rec, &path).unwrap();
        let back = read_trajectory(&path).unwrap();
        prop_assert_eq!(back.rows.len(), rec.rows.len());
        prop_assert_eq!(back.orientation, orientation);
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * b.abs().max(1e-300);
        for (x, y) in back.rows.iter().zip(&rec.rows) {
            prop_assert_eq!(x.step, y.step);
            prop_assert_eq!(x.contact, y.contact);
            let xs = x.samples.iter().chain([&x.tip, &x.target, &x.target_velocity]).flat_map(|v| v.iter());
            let ys = y.samples.iter().chain([&y.tip, &y.target, &y.target_velocity]).flat_map(|v| v.iter());
            for (a, b) in xs.zip(ys) {
                prop_assert!(close(*a, *b), "{} vs {}", a, b);
            }
            for (a, b) in [(x.time, y.time), (x.tip_distance, y.tip_distance), (x.reward, y.reward), (x.cumulative_reward, y.cumulative_reward)] {
                prop_assert!(close(a, b), "{} vs {}", a, b);
            }
            prop_assert_eq!(x.orientation_error.is_some(), y.orientation_error.is_some());
            if let (Some(a), Some(b)) = (x.orientation_error, y.orientation_error) {
                prop_assert!(close(a, b));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn observations_stay_finite_under_random_actions(case in 1..=4u8, seed in any::<u64>(), acts in actions(18, 15)) {
        let mut e = env(case, seed);
        prop_assert!(e.observation().iter().all(|v| v.is_finite()));
        for a in &acts {
            let r = e.step(&a[..e.action_size()]).unwrap();
            prop_assert!(r.reward.is_finite());
            prop_assert!(e.observation().iter().all(|v| v.is_finite()));
            prop_assert_eq!(e.observation().len(), e.observation_size());
            if r.terminated {
                break;
            }
        }
    }

    #[test]
    fn identical_inputs_give_bit_identical_steps(case in 1..=4u8, seed in any::<u64>(), acts in actions(18, 10)) {
        let (mut a, mut b) = (env(case, seed), env(case, seed));
        prop_assert_eq!(a.observation(), b.observation());
        for act in &acts {
            let act = &act[..a.action_size()];
            prop_assert_eq!(a.step(act).unwrap(), b.step(act).unwrap());
            prop_assert_eq!(a.observation(), b.observation());
        }
        prop_assert_eq!(a.state(), b.state());
    }

    #[test]
    fn case3_arm_moves_in_its_bending_plane(seed in any::<u64>(), acts in actions(2, 20)) {
        let mut e = env(3, seed);
        for a in &acts {
            e.step(a).unwrap();
            prop_assert!(e.state().positions.iter().all(|p| p.x.abs() < 1e-9));
        }
    }

    #[test]
    fn tip_orientation_is_a_unit_quaternion(seed in any::<u64>(), acts in actions(18, 10)) {
        let mut e = env(2, seed);
        for a in &acts {
            e.step(a).unwrap();
            let q = e.tip_orientation();
            prop_assert!((q.coords.norm() - 1.0).abs() < 1e-12);
            prop_assert!(q.w >= 0.0);
            // Tip then target quaternion follow the 44 base entries.
            for quat in e.observation()[44..52].chunks(4) {
                prop_assert!((quat.iter().map(|v| v * v).sum::<f64>().sqrt() - 1.0).abs() < 1e-12);
            }
            prop_assert_eq!(&e.observation()[44..48], &[q.w, q.i, q.j, q.k][..]);
        }
    }
}

#[test]
fn shipped_scenarios_load_and_run_a_zero_episode() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            let scenario = load_scenario(&path).unwrap();
            let mut e = ArmEnv::new(scenario).unwrap();
            let summary = run_episode(&mut e, 0, &mut ZeroPolicy, None).unwrap();
            assert!(!summary.terminated, "{}", path.display());
            assert!(summary.score.is_finite());
            seen += 1;
        }
    }
    assert!(seen >= 4);
}

#[test]
fn empty_and_single_row_trajectory_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    let mut rec = TrajectoryRecord::new(false);
    write_trajectory(&rec, &path).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 1);
    assert!(read_trajectory(&path).unwrap().rows.is_empty());

    let mut e = env(1, 2);
    run_episode(&mut e, 2, &mut ZeroPolicy, Some(&mut rec)).unwrap();
    rec.rows.truncate(1);
    write_trajectory(&rec, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines.iter().all(|l| l.split(',').count() == 48));
}

#[test]
fn zero_policy_episode_scores_negative_and_repeats() {
    let mut e = env(1, 4);
    let mut rec_a = TrajectoryRecord::default();
    let mut rec_b = TrajectoryRecord::default();
    let a = run_episode(&mut e, 4, &mut ZeroPolicy, Some(&mut rec_a)).unwrap();
    let b = run_episode(&mut e, 4, &mut ZeroPolicy, Some(&mut rec_b)).unwrap();
    assert!(a.score.is_finite() && a.score < 0.0);
    assert_eq!(a, b);
    assert_eq!(rec_a, rec_b);
    assert_eq!(rec_a.rows.len(), 400);
    rec_a.validate().unwrap();
}
