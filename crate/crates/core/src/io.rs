//! CSV and JSON artifacts.
//!
//! Every CSV is comma-separated with a header row; numbers are written with
//! 17 significant digits (`{:.16e}`), which round-trips `f64` exactly. Column
//! layouts:
//!
//! | file        | columns                                           |
//! |-------------|---------------------------------------------------|
//! | STCF        | `t, C_00, C_0x, …, C_zz` (row-major in μν)         |
//! | trajectory  | `t, re_00, im_00, re_01, im_01, re_10, …, im_11`  |
//! | kernel      | `s, K_00, …, K_zz`                                 |
//! | distance    | `t, d_max`                                         |
//! | volume      | `t, v`                                             |
//! | rates       | `t, gamma_1, gamma_2, gamma_3`                     |

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::diagnostics::{RateTrajectory, VolumeTrajectory};
use crate::error::{Error, Result};
use crate::gqme::KernelTrajectory;
use crate::heom::{HeomConfig, SystemTrajectory};
use crate::model::ModelParams;
use crate::stcf::StcfTrajectory;

const LABELS: [&str; 4] = ["0", "x", "y", "z"];

/// Relative tolerance on the spacing of a grid read back from CSV.
const GRID_TOLERANCE: f64 = 1e-9;

pub fn format_value(x: f64) -> String {
    format!("{x:.16e}")
}

fn matrix_header(first: &str, symbol: &str) -> Vec<String> {
    let mut h = vec![first.to_string()];
    for mu in LABELS {
        for nu in LABELS {
            h.push(format!("{symbol}_{mu}{nu}"));
        }
    }
    h
}

/// Writes a header and rows of numbers.
pub fn write_csv<W: Write>(w: &mut W, header: &[String], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        let line: Vec<String> = row.iter().map(|&x| format_value(x)).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

/// Reads a numeric CSV with a header row.
pub fn read_csv<R: BufRead>(r: R) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = r.lines();
    let header: Vec<String> = match lines.next() {
        Some(h) => h?.split(',').map(|s| s.trim().to_string()).collect(),
        None => return Err(Error::Csv { line: 1, reason: "empty file".into() }),
    };
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Csv { line: i + 2, reason: format!("not a number: `{}`", s.trim()) })
            })
            .collect::<Result<Vec<f64>>>()?;
        if row.len() != header.len() {
            return Err(Error::Csv {
                line: i + 2,
                reason: format!("{} fields, header has {}", row.len(), header.len()),
            });
        }
        rows.push(row);
    }
    Ok((header, rows))
}

/// Start and spacing of the first column, which must be uniform.
fn uniform_grid(rows: &[Vec<f64>]) -> Result<(f64, f64)> {
    if rows.len() < 2 {
        return Err(Error::TooShort(format!("{} rows, need at least 2", rows.len())));
    }
    let t0 = rows[0][0];
    let dt = rows[1][0] - t0;
    if !(dt > 0.0) {
        return Err(Error::Csv { line: 3, reason: "time column must increase".into() });
    }
    for (i, row) in rows.iter().enumerate() {
        let expected = t0 + i as f64 * dt;
        if (row[0] - expected).abs() > GRID_TOLERANCE * expected.abs().max(dt) {
            return Err(Error::Csv { line: i + 2, reason: format!("time {} is off the uniform grid", row[0]) });
        }
    }
    Ok((t0, dt))
}

pub fn write_stcf_csv<W: Write>(w: &mut W, traj: &StcfTrajectory) -> Result<()> {
    let rows = traj.c.iter().enumerate().map(|(i, m)| {
        let mut row = vec![traj.time(i)];
        for mu in 0..4 {
            for nu in 0..4 {
                row.push(m[(mu, nu)]);
            }
        }
        row
    });
    write_csv(w, &matrix_header("t", "C"), rows)
}

/// Reads the 17-column STCF layout. The time column must be uniform.
pub fn read_stcf_csv<R: BufRead>(r: R) -> Result<StcfTrajectory> {
    let (header, rows) = read_csv(r)?;
    if header.len() != 17 {
        return Err(Error::Csv { line: 1, reason: format!("expected 17 columns, found {}", header.len()) });
    }
    let (t0, dt) = uniform_grid(&rows)?;
    let c = rows.iter().map(|row| nalgebra::Matrix4::from_row_slice(&row[1..])).collect();
    Ok(StcfTrajectory::from_matrices(t0, dt, c))
}

pub fn write_trajectory_csv<W: Write>(w: &mut W, traj: &SystemTrajectory) -> Result<()> {
    let mut header = vec!["t".to_string()];
    for (r, c) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
        header.push(format!("re_{r}{c}"));
        header.push(format!("im_{r}{c}"));
    }
    let rows = traj.states.iter().enumerate().map(|(i, m)| {
        let mut row = vec![traj.time(i)];
        for (r, c) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            row.push(m[(r, c)].re);
            row.push(m[(r, c)].im);
        }
        row
    });
    write_csv(w, &header, rows)
}

pub fn write_kernel_csv<W: Write>(w: &mut W, kernel: &KernelTrajectory) -> Result<()> {
    let rows = kernel.k.iter().enumerate().map(|(i, m)| {
        let mut row = vec![kernel.lag(i)];
        row.extend(m.transpose().iter());
        row
    });
    write_csv(w, &matrix_header("s", "K"), rows)
}

/// `(t, d_max)` for the trace distance of the maximizing pair.
pub fn write_distance_csv<W: Write>(w: &mut W, start_time: f64, dt: f64, d: &[f64]) -> Result<()> {
    let rows = d.iter().enumerate().map(|(i, &x)| vec![start_time + i as f64 * dt, x]);
    write_csv(w, &["t".into(), "d_max".into()], rows)
}

pub fn write_volume_csv<W: Write>(w: &mut W, vol: &VolumeTrajectory) -> Result<()> {
    let rows = vol.v.iter().enumerate().map(|(i, &x)| vec![vol.time(i), x]);
    write_csv(w, &["t".into(), "v".into()], rows)
}

pub fn write_rates_csv<W: Write>(w: &mut W, rates: &RateTrajectory) -> Result<()> {
    let rows = rates.gamma.iter().enumerate().map(|(i, g)| vec![rates.time(i), g[0], g[1], g[2]]);
    write_csv(w, &["t".into(), "gamma_1".into(), "gamma_2".into(), "gamma_3".into()], rows)
}

/// JSON sidecar of a simulated trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySidecar {
    pub params: ModelParams,
    pub heom: HeomConfig,
    pub version: String,
}

impl TrajectorySidecar {
    pub fn new(params: ModelParams, heom: HeomConfig) -> Self {
        Self { params, heom, version: crate::VERSION.to_string() }
    }
}

/// Non-Markovianity summary of one parameter point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsSummary {
    pub n_blp: Option<f64>,
    pub n_v: Option<f64>,
    pub tau_th: Option<f64>,
    pub eternal_nm: Option<bool>,
    pub seed: Option<u64>,
    pub n_samples: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelReport {
    /// `None` when the kernel vanishes identically.
    pub tau_k: Option<f64>,
    pub delta: f64,
    pub residual: f64,
    /// `[re, im]` pairs of the spatial Born–Markov generator.
    pub bm_eigenvalues: Option<Vec<[f64; 2]>>,
    /// Why the Born–Markov reduction was refused, if it was.
    pub bm_error: Option<String>,
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}
