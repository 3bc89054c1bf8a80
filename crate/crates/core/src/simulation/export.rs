//! CSV and JSON outputs of runs and sweeps.

use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use super::engine::RunResult;
use super::sweep::SweepRow;

pub const TRAJECTORY_HEADER: [&str; 8] = [
    "tick",
    "agent_id",
    "x",
    "y",
    "heading_rad",
    "pred_route",
    "pred_conf",
    "committed_route",
];

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("cannot write {path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("cannot serialize {path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> ExportError + '_ {
    move |source| ExportError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> ExportError + '_ {
    move |source| ExportError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn route_code(r: Option<usize>) -> i64 {
    r.map_or(-1, |r| r as i64)
}

#[derive(Debug, Serialize)]
struct Metrics<'a> {
    route_counts: &'a [usize],
    route_percent: &'a [f64],
    evac_time_s: f64,
    mean_prediction_entropy: Option<f64>,
    uncommitted: usize,
    seed: u64,
    config_echo: &'a serde_json::Value,
}

/// Writes `trajectories.csv` and `metrics.json` into `dir`, creating it if
/// needed. Rows are ordered by tick, then agent id.
pub fn export_run(result: &RunResult, dir: &Path) -> Result<Vec<PathBuf>, ExportError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let traj = dir.join("trajectories.csv");
    write_trajectories(result, File::create(&traj).map_err(io_err(&traj))?).map_err(csv_err(&traj))?;

    let metrics = dir.join("metrics.json");
    let body = Metrics {
        route_counts: &result.route_counts,
        route_percent: &result.route_percent,
        evac_time_s: result.evac_time_s,
        mean_prediction_entropy: result.mean_prediction_entropy,
        uncommitted: result.uncommitted.len(),
        seed: result.seed,
        config_echo: &result.config_echo,
    };
    let mut text = serde_json::to_string_pretty(&body).map_err(|source| ExportError::Json {
        path: metrics.clone(),
        source,
    })?;
    text.push('\n');
    fs::write(&metrics, text).map_err(io_err(&metrics))?;
    Ok(vec![traj, metrics])
}

pub fn write_trajectories(result: &RunResult, out: impl Write) -> Result<(), csv::Error> {
    let mut rows: Vec<_> = result.agents.iter().flat_map(|a| a.trajectory.iter()).collect();
    rows.sort_by_key(|r| (r.tick, r.agent_id));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRAJECTORY_HEADER)?;
    for r in rows {
        w.write_record([
            r.tick.to_string(),
            r.agent_id.to_string(),
            r.x.to_string(),
            r.y.to_string(),
            r.heading_rad.to_string(),
            route_code(r.pred_route).to_string(),
            r.pred_conf.to_string(),
            route_code(r.committed_route).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `sweep.csv` with columns `W,mean_entropy,std_entropy,n_seeds`.
pub fn export_sweep(rows: &[SweepRow], dir: &Path) -> Result<PathBuf, ExportError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let path = dir.join("sweep.csv");
    write_csv(rows, &path)?;
    Ok(path)
}

/// Serializes any row type into a headed CSV file.
pub fn write_csv<T: Serialize>(rows: &[T], path: &Path) -> Result<(), ExportError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = csv::Writer::from_writer(file);
    for r in rows {
        w.serialize(r).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}
