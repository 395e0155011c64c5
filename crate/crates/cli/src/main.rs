use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use arm_lab_core::environments::{ArmEnv, CaseScenario};
use arm_lab_core::scenario_io::{
    load_actions, load_scenario, run_episode, write_trajectory, EpisodeSummary, Gains, Policy, RandomPolicy,
    ReplayPolicy, ScriptedPolicy, StreamPolicy, TrajectoryRecord, ZeroPolicy,
};
use arm_lab_core::validation::{
    free_rod_conservation, helix_convergence, seconds_per_step, timoshenko_cantilever, ArmGeometry, Helix,
};
use arm_lab_core::Error;
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

const EXIT_CONFIG: u8 = 2;
const EXIT_INSTABILITY: u8 = 3;

#[derive(Parser)]
#[command(name = "arm-lab", version, about = "Soft continuum arm simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run episodes of a scenario under a policy.
    Run(RunArgs),
    /// Time one integrator step at several resolutions; prints JSON.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "50,100,200,400")]
        resolutions: Vec<usize>,
        #[arg(long, default_value_t = 2000)]
        steps: usize,
        /// Also write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a numerical validation suite; exits 1 if it misses its tolerance.
    Validate {
        #[arg(long, value_enum)]
        suite: Suite,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// First episode seed; defaults to the scenario's seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "zero")]
    policy: PolicyKind,
    /// Action file for `--policy replay`.
    #[arg(long)]
    actions: Option<PathBuf>,
    /// Trajectory CSV; with several episodes, `-<seed>` is added to the stem.
    #[arg(long)]
    record: Option<PathBuf>,
    /// Episodes, run with seeds `seed, seed+1, ...`.
    #[arg(long, default_value_t = 1)]
    episodes: u64,
    /// Worker threads for independent episodes.
    #[arg(long, default_value_t = 1)]
    parallel: usize,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum PolicyKind {
    Zero,
    Scripted,
    Random,
    Replay,
    /// Observation lines on stdout, action lines on stdin.
    Stdin,
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Beams,
    Conservation,
    Convergence,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Bench { resolutions, steps, out } => bench(&resolutions, steps, out.as_deref()),
        Command::Validate { suite } => validate(suite),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            let config = e.chain().any(|c| {
                matches!(c.downcast_ref::<Error>(), Some(Error::Config { .. } | Error::Io { .. } | Error::Dimension { .. }))
            });
            ExitCode::from(if config { EXIT_CONFIG } else { 1 })
        }
    }
}

fn record_path(base: &Path, seed: u64, episodes: u64) -> PathBuf {
    if episodes == 1 {
        return base.to_path_buf();
    }
    let stem = base.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match base.extension() {
        Some(ext) => format!("{stem}-{seed}.{}", ext.to_string_lossy()),
        None => format!("{stem}-{seed}"),
    };
    base.with_file_name(name)
}

fn summary_json(seed: u64, s: &EpisodeSummary) -> serde_json::Value {
    json!({
        "seed": seed,
        "score": s.score,
        "steps": s.steps,
        "terminated": s.terminated,
        "initial_distance": s.initial_distance,
        "final_distance": s.final_distance,
        "final_tip": [s.final_tip.x, s.final_tip.y, s.final_tip.z],
    })
}

fn make_policy(kind: PolicyKind, scenario: &CaseScenario, seed: u64, actions: &Option<Vec<Vec<f64>>>) -> Box<dyn Policy> {
    match kind {
        PolicyKind::Zero => Box::new(ZeroPolicy),
        PolicyKind::Scripted => Box::new(ScriptedPolicy::new(scenario, Gains::default())),
        PolicyKind::Random => Box::new(RandomPolicy::new(seed)),
        PolicyKind::Replay => Box::new(ReplayPolicy::new(actions.clone().unwrap_or_default())),
        PolicyKind::Stdin => unreachable!("stdin policy is built by the caller"),
    }
}

fn episode(
    scenario: &CaseScenario,
    env: &mut ArmEnv,
    seed: u64,
    policy: &mut dyn Policy,
    record: Option<&Path>,
    episodes: u64,
) -> anyhow::Result<EpisodeSummary> {
    let mut rec = TrajectoryRecord::new(scenario.reward.orientation.is_some());
    let summary = run_episode(env, seed, policy, record.map(|_| &mut rec))?;
    if let Some(base) = record {
        write_trajectory(&rec, record_path(base, seed, episodes))?;
    }
    Ok(summary)
}

fn run(args: RunArgs) -> anyhow::Result<ExitCode> {
    let scenario = load_scenario(&args.scenario)?;
    let first = args.seed.unwrap_or(scenario.seed);
    if args.episodes == 0 {
        bail!(Error::config("episodes", "must be at least 1"));
    }
    let actions = match (args.policy, &args.actions) {
        (PolicyKind::Replay, Some(path)) => {
            let actions = load_actions(path)?;
            let env = ArmEnv::new(scenario.clone())?;
            match actions.first() {
                None => bail!(Error::config("actions", format!("{} holds no actions", path.display()))),
                Some(a) if a.len() != env.action_size() => {
                    bail!(Error::Dimension { expected: env.action_size(), got: a.len() })
                }
                _ => Some(actions),
            }
        }
        (PolicyKind::Replay, None) => bail!(Error::config("actions", "--policy replay needs --actions <file>")),
        _ => None,
    };
    let seeds: Vec<u64> = (0..args.episodes).map(|k| first + k).collect();
    let record = args.record.as_deref();

    let results: Vec<(u64, EpisodeSummary)> = if args.policy == PolicyKind::Stdin {
        let mut env = ArmEnv::new(scenario.clone())?;
        let stdout = io::stdout();
        let mut policy = StreamPolicy::new(io::stdin().lock(), BufWriter::new(stdout.lock()));
        let mut out = Vec::new();
        for &seed in &seeds {
            out.push((seed, episode(&scenario, &mut env, seed, &mut policy, record, args.episodes)?));
        }
        out
    } else {
        let workers = args.parallel.clamp(1, seeds.len());
        let chunks: Vec<Vec<u64>> = (0..workers).map(|w| seeds.iter().copied().skip(w).step_by(workers).collect()).collect();
        let per_worker = std::thread::scope(|scope| {
            let handles: Vec<_> = chunks
                .iter()
                .map(|chunk| {
                    let scenario = &scenario;
                    let actions = &actions;
                    scope.spawn(move || -> anyhow::Result<Vec<(u64, EpisodeSummary)>> {
                        let mut env = ArmEnv::new(scenario.clone())?;
                        let mut out = Vec::new();
                        for &seed in chunk {
                            let mut policy = make_policy(args.policy, scenario, seed, actions);
                            out.push((seed, episode(scenario, &mut env, seed, policy.as_mut(), record, args.episodes)?));
                        }
                        Ok(out)
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("worker panicked")).collect::<Vec<_>>()
        });
        let mut all = Vec::new();
        for r in per_worker {
            all.extend(r?);
        }
        all.sort_by_key(|(seed, _)| *seed);
        all
    };

    // Under the stdin policy stdout carries the protocol.
    let mut sink: Box<dyn Write> =
        if args.policy == PolicyKind::Stdin { Box::new(io::stderr()) } else { Box::new(io::stdout()) };
    for (seed, s) in &results {
        writeln!(sink, "{}", summary_json(*seed, s))?;
    }
    Ok(if results.iter().all(|(_, s)| s.terminated) { ExitCode::from(EXIT_INSTABILITY) } else { ExitCode::SUCCESS })
}

fn bench(resolutions: &[usize], steps: usize, out: Option<&Path>) -> anyhow::Result<ExitCode> {
    let geometry = ArmGeometry::default();
    let mut rows = Vec::new();
    for &n in resolutions {
        let t = seconds_per_step(&geometry, n, steps, 3).with_context(|| format!("resolution {n}"))?;
        rows.push(json!({ "elements": n, "seconds_per_step": t }));
    }
    let report = json!({ "steps": steps, "repeats": 3, "timings": rows });
    let text = serde_json::to_string_pretty(&report)?;
    println!("{text}");
    if let Some(path) = out {
        std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn validate(suite: Suite) -> anyhow::Result<ExitCode> {
    let geometry = ArmGeometry::default();
    let (report, pass) = match suite {
        Suite::Beams => {
            let r = timoshenko_cantilever(&geometry, 100, 1e-3)?;
            let pass = r.settled && r.relative_error < 0.01;
            (
                json!({
                    "suite": "beams", "elements": r.elements, "force": r.force,
                    "tip_deflection": r.tip_deflection, "predicted": r.predicted,
                    "relative_error": r.relative_error, "settled": r.settled,
                    "simulated_time": r.simulated_time, "tolerance": 0.01,
                }),
                pass,
            )
        }
        Suite::Conservation => {
            let r = free_rod_conservation(&geometry, 50, 100_000)?;
            let pass = r.max_momentum_change < 1e-12 && r.max_energy_drift < 0.01;
            (
                json!({
                    "suite": "conservation", "steps": r.steps,
                    "max_momentum_change": r.max_momentum_change,
                    "max_energy_drift": r.max_energy_drift, "final_energy_drift": r.final_energy_drift,
                    "momentum_tolerance": 1e-12, "energy_tolerance": 0.01,
                }),
                pass,
            )
        }
        Suite::Convergence => {
            let r = helix_convergence(&Helix { radius: 0.2, pitch: 0.5 }, 50, 1.0)?;
            let ok = |x: f64| (3.5..=4.5).contains(&x);
            (
                json!({
                    "suite": "convergence", "elements": [50, 100],
                    "curvature_errors": [r.coarse.curvature, r.fine.curvature],
                    "shear_errors": [r.coarse.shear, r.fine.shear],
                    "curvature_ratio": r.curvature_ratio, "shear_ratio": r.shear_ratio,
                }),
                ok(r.curvature_ratio) && ok(r.shear_ratio),
            )
        }
    };
    let mut report = report;
    report["pass"] = json!(pass);
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(if pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
}
