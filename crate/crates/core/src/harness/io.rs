//! CSV output for runs, summaries, observability sweeps and raw streams.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::observability::WindowDiagnostics;
use crate::sim::{SensorStreams, TruthSample};

use super::{Campaign, RunResult, SummaryRow};

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::InvalidConfig(format!("{}: {e}", path.display()))
}

fn write_rows<W: Write, T: Serialize>(out: W, rows: &[T], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

fn write_file<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    write_rows(std::io::BufWriter::new(file), rows, path)
}

/// Writes with an explicit header so that empty inputs still produce one.
fn write_file_with_header<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(std::io::BufWriter::new(file));
    w.write_record(header).map_err(|e| io_err(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub const RUN_HEADER: [&str; 19] = [
    "t",
    "h",
    "hdot",
    "h_hat",
    "hdot_hat",
    "z1",
    "z2",
    "z3",
    "zhat1",
    "zhat2",
    "zhat3",
    "roll",
    "pitch",
    "yaw",
    "roll_hat",
    "pitch_hat",
    "yaw_hat",
    "tilt_err",
    "att_err",
];

pub const SUMMARY_HEADER: [&str; 7] = [
    "t", "tilt_q05", "tilt_q50", "tilt_q95", "att_q05", "att_q50", "att_q95",
];

pub const GRAMIAN_HEADER: [&str; 5] = [
    "t0",
    "delta",
    "gramian_min_eig",
    "pe_metric",
    "uniformly_observable",
];

pub fn write_run_csv(path: &Path, run: &RunResult) -> Result<()> {
    write_file_with_header(path, &RUN_HEADER, &run.rows)
}

pub fn write_summary_csv(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    write_file_with_header(path, &SUMMARY_HEADER, rows)
}

pub fn write_gramian_csv(path: &Path, windows: &[WindowDiagnostics]) -> Result<()> {
    write_file_with_header(path, &GRAMIAN_HEADER, windows)
}

#[derive(Serialize)]
struct TruthRow {
    t: f64,
    h: f64,
    hdot: f64,
    r11: f64,
    r12: f64,
    r13: f64,
    r21: f64,
    r22: f64,
    r23: f64,
    r31: f64,
    r32: f64,
    r33: f64,
    omega1: f64,
    omega2: f64,
    omega3: f64,
    a1: f64,
    a2: f64,
    a3: f64,
}

#[derive(Serialize)]
struct ImuRow {
    t: f64,
    a1: f64,
    a2: f64,
    a3: f64,
    omega1: f64,
    omega2: f64,
    omega3: f64,
}

#[derive(Serialize)]
struct BaroRow {
    t: f64,
    altitude: f64,
}

#[derive(Serialize)]
struct MagRow {
    t: f64,
    m1: f64,
    m2: f64,
    m3: f64,
}

/// Truth (every `stride`-th sample) and sensor streams, one CSV each.
pub fn write_streams(
    dir: &Path,
    prefix: &str,
    truth: &[TruthSample],
    stride: usize,
    streams: &SensorStreams,
) -> Result<()> {
    let truth_rows: Vec<TruthRow> = truth
        .iter()
        .step_by(stride.max(1))
        .map(|s| {
            let r = s.rotation.matrix();
            TruthRow {
                t: s.t,
                h: s.h,
                hdot: s.hdot,
                r11: r[(0, 0)],
                r12: r[(0, 1)],
                r13: r[(0, 2)],
                r21: r[(1, 0)],
                r22: r[(1, 1)],
                r23: r[(1, 2)],
                r31: r[(2, 0)],
                r32: r[(2, 1)],
                r33: r[(2, 2)],
                omega1: s.omega.x,
                omega2: s.omega.y,
                omega3: s.omega.z,
                a1: s.accel.x,
                a2: s.accel.y,
                a3: s.accel.z,
            }
        })
        .collect();
    write_file(&dir.join(format!("{prefix}truth.csv")), &truth_rows)?;
    let imu: Vec<ImuRow> = streams
        .imu
        .iter()
        .map(|s| ImuRow {
            t: s.t,
            a1: s.accel.x,
            a2: s.accel.y,
            a3: s.accel.z,
            omega1: s.omega.x,
            omega2: s.omega.y,
            omega3: s.omega.z,
        })
        .collect();
    write_file(&dir.join(format!("{prefix}imu.csv")), &imu)?;
    let baro: Vec<BaroRow> = streams
        .baro
        .iter()
        .map(|s| BaroRow {
            t: s.t,
            altitude: s.altitude,
        })
        .collect();
    write_file(&dir.join(format!("{prefix}baro.csv")), &baro)?;
    let mag: Vec<MagRow> = streams
        .mag
        .iter()
        .map(|s| MagRow {
            t: s.t,
            m1: s.field.x,
            m2: s.field.y,
            m3: s.field.z,
        })
        .collect();
    write_file(&dir.join(format!("{prefix}mag.csv")), &mag)
}

pub fn run_file_name(index: usize) -> String {
    format!("run_{index:03}.csv")
}

/// Writes `run_NNN.csv` for every run plus `summary.csv`. Returns the paths written.
pub fn write_campaign(dir: &Path, campaign: &Campaign) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut written = Vec::with_capacity(campaign.runs.len() + 1);
    for run in &campaign.runs {
        let path = dir.join(run_file_name(run.run_index));
        write_run_csv(&path, run)?;
        written.push(path);
    }
    let path = dir.join("summary.csv");
    write_summary_csv(&path, &campaign.summary.rows)?;
    written.push(path);
    Ok(written)
}
