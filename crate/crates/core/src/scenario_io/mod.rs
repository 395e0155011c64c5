//! Scenario files, trajectory recording, policies and the episode runner.

pub mod policy;
pub mod runner;
pub mod trajectory;

use std::path::Path;

pub use policy::{Gains, Policy, RandomPolicy, ReplayPolicy, ScriptedPolicy, StreamPolicy, ZeroPolicy};
pub use runner::{case3_demonstration, run_episode, EpisodeSummary};
pub use trajectory::{read_trajectory, write_trajectory, TrajectoryRecord, TrajectoryRow};

use crate::environments::scenario::ScenarioFile;
use crate::environments::CaseScenario;
use crate::error::Error;

/// Parses scenario JSON, fills defaults and validates. Parse errors carry
/// the path of the offending field.
pub fn parse_scenario(json: &str) -> Result<CaseScenario, Error> {
    let de = &mut serde_json::Deserializer::from_str(json);
    let file: ScenarioFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::config(if path == "." { String::new() } else { path }, e.into_inner().to_string())
    })?;
    file.resolve()
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<CaseScenario, Error> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    parse_scenario(&text).map_err(|e| match e {
        Error::Config { path: field, message } => {
            Error::config(field, format!("{message} (in {})", path.display()))
        }
        e => e,
    })
}

/// Fully expanded JSON of a scenario; loads back to an identical value.
pub fn scenario_to_json(scenario: &CaseScenario) -> String {
    serde_json::to_string_pretty(scenario).expect("scenario serializes")
}

pub fn save_scenario(scenario: &CaseScenario, path: impl AsRef<Path>) -> Result<(), Error> {
    let path = path.as_ref();
    std::fs::write(path, scenario_to_json(scenario) + "\n").map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

/// Action sequence file: one control step per line, space-separated values.
/// Blank lines and lines starting with `#` are skipped.
pub fn load_actions(path: impl AsRef<Path>) -> Result<Vec<Vec<f64>>, Error> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    let mut actions = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| Error::config(format!("line {}", i + 1), format!("{e} (in {})", path.display())))?;
        if let Some(first) = actions.first().map(Vec::len).filter(|&n| n != row.len()) {
            return Err(Error::Dimension { expected: first, got: row.len() });
        }
        actions.push(row);
    }
    Ok(actions)
}

pub fn save_actions(actions: &[Vec<f64>], path: impl AsRef<Path>) -> Result<(), Error> {
    let path = path.as_ref();
    let mut text = String::new();
    for a in actions {
        let line: Vec<String> = a.iter().map(f64::to_string).collect();
        text.push_str(&line.join(" "));
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}
