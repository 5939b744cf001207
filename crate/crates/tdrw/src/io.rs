//! CSV and JSON artifacts.
//!
//! Floats are written with `Display`, which prints the shortest decimal
//! string that parses back to the same `f64`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use tdrw_core::kernel::KernelSnapshot;
use tdrw_core::walkers::{classify_state, Trajectory};
use tdrw_core::{Environment, Geometry, Vertex};

use crate::error::{CliError, Result};

pub fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn coordinate_header(geometry: Geometry) -> &'static [&'static str] {
    match geometry {
        Geometry::HalfSpace => &["x", "y", "z"],
        _ => &["x"],
    }
}

fn coordinates(geometry: Geometry, v: Vertex) -> Vec<String> {
    match geometry {
        Geometry::HalfSpace => vec![v.x().to_string(), v.y().to_string(), v.z().to_string()],
        _ => vec![v.x().to_string()],
    }
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    let file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

/// Columns `time`, coordinates and, when the environment has labelled
/// states, `state`.
pub fn write_trajectory_csv(path: &Path, env: &Environment, traj: &Trajectory) -> Result<()> {
    let labelled = classify_state(env, traj.start_time(), traj.start).is_ok();
    let mut w = writer(path)?;
    let mut header = vec!["time"];
    header.extend_from_slice(coordinate_header(traj.geometry));
    if labelled {
        header.push("state");
    }
    w.write_record(&header)?;
    for e in &traj.events {
        let mut row = vec![e.time.to_string()];
        row.extend(coordinates(traj.geometry, e.vertex));
        if labelled {
            row.push(classify_state(env, e.time, e.vertex)?.name().to_string());
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Columns: coordinates and `mass`, zero masses skipped.
pub fn write_snapshot_csv(path: &Path, snap: &KernelSnapshot) -> Result<()> {
    let geometry = snap.domain.geometry;
    let mut w = writer(path)?;
    let mut header = coordinate_header(geometry).to_vec();
    header.push("mass");
    w.write_record(&header)?;
    for (v, m) in snap.sites().filter(|s| s.1 > 0.0) {
        let mut row = coordinates(geometry, v);
        row.push(m.to_string());
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SnapshotSummary {
    pub time: f64,
    pub total_mass: f64,
    pub truncation_loss: f64,
    pub series_error: f64,
    pub loss_bound: f64,
    pub mean: [f64; 3],
    pub variance: [f64; 3],
    pub file: PathBuf,
}

impl SnapshotSummary {
    pub fn of(snap: &KernelSnapshot, file: PathBuf) -> Self {
        SnapshotSummary {
            time: snap.time,
            total_mass: snap.total_mass(),
            truncation_loss: snap.truncation_loss,
            series_error: snap.series_error,
            loss_bound: snap.loss_bound,
            mean: snap.mean(),
            variance: snap.variance(),
            file,
        }
    }
}

/// Prints one JSON line to standard error.
pub fn emit_error<T: Serialize>(report: &T) {
    let line = serde_json::to_string(&serde_json::json!({ "error": report })).unwrap_or_default();
    let _ = writeln!(std::io::stderr(), "{line}");
}

#[cfg(test)]
mod tests {
    use super::*;
    use tdrw_core::environments::{zigzag_1d, ZigzagParams};
    use tdrw_core::rng::StreamSeed;
    use tdrw_core::walkers::simulate_discrete;

    #[test]
    fn floats_round_trip_through_csv() {
        let dir = tempfile::tempdir().unwrap();
        let env = tdrw_core::environments::constant_env(Geometry::Line, 1.0).unwrap();
        let cfg = tdrw_core::kernel::PropagationConfig::new(30, 1e-12);
        let snap = tdrw_core::kernel::csrw_kernel(&env, Vertex::ORIGIN, 7.3, &cfg).unwrap().pop().unwrap();
        let path = dir.path().join("k.csv");
        write_snapshot_csv(&path, &snap).unwrap();
        let mut r = csv::Reader::from_path(&path).unwrap();
        for rec in r.records() {
            let rec = rec.unwrap();
            let x: i64 = rec[0].parse().unwrap();
            let m: f64 = rec[1].parse().unwrap();
            assert_eq!(m.to_bits(), snap.mass_at(Vertex::line(x)).to_bits());
        }
    }

    #[test]
    fn trajectory_rows_carry_state_labels() {
        let dir = tempfile::tempdir().unwrap();
        let env = zigzag_1d(&ZigzagParams::from_laziness(0.5, 0.25, 0.5).unwrap()).unwrap();
        let traj = simulate_discrete(&env, Vertex::ORIGIN, 0, 50, StreamSeed::walk(1, 0)).unwrap();
        let path = dir.path().join("t.csv");
        write_trajectory_csv(&path, &env, &traj).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("time,x,state\n"));
        assert_eq!(text.lines().count(), 52);
    }
}
