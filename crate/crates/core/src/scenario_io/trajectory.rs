//! Per-control-step trajectory records and their CSV form.

use std::path::Path;

use crate::environments::SAMPLE_POINTS;
use crate::error::Error;
use crate::kinematics::Vec3;

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub step: usize,
    pub time: f64,
    pub samples: [Vec3; SAMPLE_POINTS],
    pub tip: Vec3,
    pub target: Vec3,
    pub target_velocity: Vec3,
    pub tip_distance: f64,
    pub reward: f64,
    pub cumulative_reward: f64,
    pub contact: bool,
    pub orientation_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrajectoryRecord {
    /// Adds an `orientation_error` column.
    pub orientation: bool,
    pub rows: Vec<TrajectoryRow>,
}

impl TrajectoryRecord {
    pub fn new(orientation: bool) -> Self {
        TrajectoryRecord { orientation, rows: Vec::new() }
    }

    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["step".to_string(), "time".to_string()];
        for j in 0..SAMPLE_POINTS {
            for c in ["x", "y", "z"] {
                h.push(format!("p{j}_{c}"));
            }
        }
        for prefix in ["tip", "target", "target_v"] {
            for c in ["x", "y", "z"] {
                h.push(format!("{prefix}_{c}"));
            }
        }
        h.extend(["tip_distance", "reward", "cumulative_reward", "contact"].map(String::from));
        if self.orientation {
            h.push("orientation_error".into());
        }
        h
    }

    pub fn validate(&self) -> Result<(), Error> {
        for (i, pair) in self.rows.windows(2).enumerate() {
            if !(pair[1].time > pair[0].time) {
                return Err(Error::Trajectory(format!("row {} is not later than row {i}", i + 1)));
            }
        }
        if let Some(i) = self.rows.iter().position(|r| r.orientation_error.is_some() != self.orientation) {
            return Err(Error::Trajectory(format!("row {i} does not match the orientation column layout")));
        }
        Ok(())
    }
}

/// Ten significant digits: enough for values to read back within 1e-9.
fn fmt(v: f64) -> String {
    format!("{v:.9e}")
}

pub fn write_trajectory(record: &TrajectoryRecord, path: impl AsRef<Path>) -> Result<(), Error> {
    let path = path.as_ref();
    record.validate()?;
    let csv_err = |source| Error::Csv { path: path.to_path_buf(), source };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(record.header()).map_err(csv_err)?;
    let mut fields = Vec::with_capacity(record.header().len());
    for r in &record.rows {
        fields.clear();
        fields.push(r.step.to_string());
        fields.push(fmt(r.time));
        for v in r.samples.iter().chain([&r.tip, &r.target, &r.target_velocity]) {
            fields.extend(v.iter().map(|&c| fmt(c)));
        }
        fields.extend([fmt(r.tip_distance), fmt(r.reward), fmt(r.cumulative_reward)]);
        fields.push(u8::from(r.contact).to_string());
        if let Some(e) = r.orientation_error {
            fields.push(fmt(e));
        }
        w.write_record(&fields).map_err(csv_err)?;
    }
    w.flush().map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

pub fn read_trajectory(path: impl AsRef<Path>) -> Result<TrajectoryRecord, Error> {
    let path = path.as_ref();
    let csv_err = |source| Error::Csv { path: path.to_path_buf(), source };
    let mut rd = csv::Reader::from_path(path).map_err(csv_err)?;
    let header: Vec<String> = rd.headers().map_err(csv_err)?.iter().map(String::from).collect();
    let orientation = header.last().is_some_and(|h| h == "orientation_error");
    let record = TrajectoryRecord::new(orientation);
    if header != record.header() {
        return Err(Error::Trajectory(format!("{}: unexpected header", path.display())));
    }
    let mut record = record;
    for (line, row) in rd.records().enumerate() {
        let row = row.map_err(csv_err)?;
        let bad = |what: &str| Error::Trajectory(format!("{}: data row {}: bad {what}", path.display(), line + 1));
        let num = |i: usize| row[i].parse::<f64>().map_err(|_| bad(&header[i]));
        let vec = |i: usize| -> Result<Vec3, Error> { Ok(Vec3::new(num(i)?, num(i + 1)?, num(i + 2)?)) };
        let mut samples = [Vec3::zeros(); SAMPLE_POINTS];
        for (j, s) in samples.iter_mut().enumerate() {
            *s = vec(2 + 3 * j)?;
        }
        let k = 2 + 3 * SAMPLE_POINTS;
        record.rows.push(TrajectoryRow {
            step: row[0].parse().map_err(|_| bad("step"))?,
            time: num(1)?,
            samples,
            tip: vec(k)?,
            target: vec(k + 3)?,
            target_velocity: vec(k + 6)?,
            tip_distance: num(k + 9)?,
            reward: num(k + 10)?,
            cumulative_reward: num(k + 11)?,
            contact: match &row[k + 12] {
                "0" => false,
                "1" => true,
                _ => return Err(bad("contact")),
            },
            orientation_error: if orientation { Some(num(k + 13)?) } else { None },
        });
    }
    Ok(record)
}
