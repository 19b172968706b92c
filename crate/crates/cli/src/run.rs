//! Task dispatch. Every output is rendered in memory first; files are only
//! written once the whole pipeline succeeded, and anything written before a
//! failure is removed again.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use driven_qubit::diagnostics::{blp_measure, canonical_rates, eternal_nm_detector, nv_measure, volume_traj};
use driven_qubit::gqme::{bm_generator, drift_matrix, extract_kernel, gqme_residual, kernel_timescale};
use driven_qubit::heom::{propagate, InitialCondition};
use driven_qubit::io::{self, DiagnosticsSummary, KernelReport, TrajectorySidecar};
use driven_qubit::model::{bath_expansion, ModelParams};
use driven_qubit::stcf::{compute_stcf, StcfTrajectory};
use driven_qubit::{Error, Result, VERSION};

use crate::config::{RunConfig, Task};

pub const MANIFEST: &str = "manifest.json";

#[derive(Clone, Debug, Serialize)]
pub struct OutputEntry {
    pub file: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub version: String,
    pub task: String,
    /// Canonical `key = value` echo of the effective configuration.
    pub config: String,
    pub wall_time_s: f64,
    pub outputs: Vec<OutputEntry>,
}

/// Named file contents produced by a task.
type Rendered = Vec<(String, Vec<u8>)>;

fn csv(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    Ok(io::to_json(value)?.into_bytes())
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn run(cfg: &RunConfig) -> Result<RunManifest> {
    let start = Instant::now();
    let rendered = match cfg.task {
        Task::Simulate => simulate(cfg)?,
        Task::Stcf => stcf(cfg)?,
        Task::Blp => blp(cfg)?,
        Task::Volume => volume(cfg)?,
        Task::Rates => rates(cfg)?,
        Task::Kernel => kernel(cfg)?,
        Task::Sweep => sweep(cfg)?,
    };
    let outputs = write_all(&cfg.output_dir, &rendered)?;
    let manifest = RunManifest {
        version: VERSION.to_string(),
        task: cfg.task.name().to_string(),
        config: cfg.to_kv().to_text(),
        wall_time_s: start.elapsed().as_secs_f64(),
        outputs,
    };
    let path = cfg.output_dir.join(MANIFEST);
    if let Err(e) = fs::write(&path, json(&manifest)?) {
        remove(&cfg.output_dir, rendered.iter().map(|(n, _)| n.as_str()));
        return Err(e.into());
    }
    Ok(manifest)
}

fn remove<'a>(dir: &Path, names: impl Iterator<Item = &'a str>) {
    for name in names {
        let _ = fs::remove_file(dir.join(name));
    }
}

fn write_all(dir: &Path, rendered: &Rendered) -> Result<Vec<OutputEntry>> {
    fs::create_dir_all(dir)?;
    let mut entries = Vec::with_capacity(rendered.len());
    for (name, bytes) in rendered {
        if let Err(e) = fs::write(dir.join(name), bytes) {
            remove(dir, entries.iter().map(|e: &OutputEntry| e.file.as_str()));
            return Err(e.into());
        }
        entries.push(OutputEntry { file: name.clone(), sha256: hex(&Sha256::digest(bytes)), bytes: bytes.len() });
    }
    Ok(entries)
}

fn summary() -> DiagnosticsSummary {
    DiagnosticsSummary { n_blp: None, n_v: None, tau_th: None, eternal_nm: None, seed: None, n_samples: None }
}

fn simulate(cfg: &RunConfig) -> Result<Rendered> {
    let bath = bath_expansion(&cfg.model, cfg.heom.n_matsubara)?;
    let traj = propagate(&InitialCondition::bloch(cfg.initial_bloch), &cfg.model, &bath, &cfg.heom)?;
    Ok(vec![
        ("trajectory.csv".into(), csv(|w| io::write_trajectory_csv(w, &traj))?),
        ("trajectory.json".into(), json(&TrajectorySidecar::new(cfg.model, cfg.heom))?),
    ])
}

fn stcf(cfg: &RunConfig) -> Result<Rendered> {
    let traj = compute_stcf(&cfg.model, &cfg.heom)?;
    Ok(vec![
        ("stcf.csv".into(), csv(|w| io::write_stcf_csv(w, &traj))?),
        ("stcf.json".into(), json(&TrajectorySidecar::new(cfg.model, cfg.heom))?),
    ])
}

fn seed(cfg: &RunConfig) -> u64 {
    cfg.mc.seed.expect("validated: Monte Carlo tasks carry a seed")
}

fn blp(cfg: &RunConfig) -> Result<Rendered> {
    let traj = compute_stcf(&cfg.model, &cfg.heom)?;
    let res = blp_measure(&traj, cfg.mc.n_samples, seed(cfg))?;
    let s = DiagnosticsSummary {
        n_blp: Some(res.n_blp),
        seed: Some(res.seed),
        n_samples: Some(res.n_samples),
        ..summary()
    };
    Ok(vec![
        ("distance.csv".into(), csv(|w| io::write_distance_csv(w, traj.start_time, traj.dt, &res.d_max))?),
        ("summary.json".into(), json(&s)?),
    ])
}

fn volume(cfg: &RunConfig) -> Result<Rendered> {
    let traj = compute_stcf(&cfg.model, &cfg.heom)?;
    let vol = volume_traj(&traj);
    let s = DiagnosticsSummary { n_v: Some(nv_measure(&vol)), tau_th: vol.tau_th, ..summary() };
    Ok(vec![("volume.csv".into(), csv(|w| io::write_volume_csv(w, &vol))?), ("summary.json".into(), json(&s)?)])
}

fn rates(cfg: &RunConfig) -> Result<Rendered> {
    let traj = compute_stcf(&cfg.model, &cfg.heom)?;
    let rates = canonical_rates(&traj, cfg.differencing)?;
    let report = eternal_nm_detector(&rates, cfg.eternal_t_min, cfg.eternal_tolerance);
    let s = DiagnosticsSummary { tau_th: rates.tau_th, eternal_nm: Some(report.eternal), ..summary() };
    Ok(vec![("rates.csv".into(), csv(|w| io::write_rates_csv(w, &rates))?), ("summary.json".into(), json(&s)?)])
}

fn kernel_report(cfg: &RunConfig, p: &ModelParams, traj: &StcfTrajectory) -> Result<(KernelReport, Vec<u8>)> {
    let x = drift_matrix(p, 0.0);
    let kernel = extract_kernel(traj, &x)?;
    let residual = gqme_residual(traj, &x, &kernel)?;
    let tau = kernel_timescale(&kernel, cfg.kernel_delta)?;
    let (bm_eigenvalues, bm_error) = match bm_generator(&x, &kernel) {
        Ok(bm) => (Some(bm.spatial_eigenvalues().iter().map(|z| [z.re, z.im]).collect()), None),
        Err(e @ Error::KernelNotDecayed { .. }) => (None, Some(e.to_string())),
        Err(e) => return Err(e),
    };
    let report =
        KernelReport { tau_k: tau.map(|t| t.tau_k), delta: cfg.kernel_delta, residual, bm_eigenvalues, bm_error };
    Ok((report, csv(|w| io::write_kernel_csv(w, &kernel))?))
}

fn kernel(cfg: &RunConfig) -> Result<Rendered> {
    let traj = compute_stcf(&cfg.model, &cfg.heom)?;
    let (report, kernel_csv) = kernel_report(cfg, &cfg.model, &traj)?;
    Ok(vec![("kernel.csv".into(), kernel_csv), ("kernel.json".into(), json(&report)?)])
}

#[derive(Clone, Debug, Serialize)]
struct SweepRow {
    value: f64,
    n_blp: Option<f64>,
    n_v: Option<f64>,
    tau_th: Option<f64>,
    tau_k: Option<f64>,
    eternal_nm: Option<bool>,
    error: Option<String>,
}

/// One sweep point. Diagnostics are evaluated independently so a failure in
/// one (say, a singular map for the rates) keeps the others.
fn sweep_point(cfg: &RunConfig, value: f64) -> (SweepRow, Option<Vec<u8>>) {
    let p = cfg.sweep.as_ref().expect("validated").axis.apply(&cfg.model, value);
    let mut row = SweepRow { value, n_blp: None, n_v: None, tau_th: None, tau_k: None, eternal_nm: None, error: None };
    let mut errors = Vec::new();
    let traj = match compute_stcf(&p, &cfg.heom) {
        Ok(t) => t,
        Err(e) => {
            row.error = Some(e.to_string());
            return (row, None);
        }
    };
    let vol = volume_traj(&traj);
    row.n_v = Some(nv_measure(&vol));
    row.tau_th = vol.tau_th;
    if cfg.mc.n_samples > 0 {
        match blp_measure(&traj, cfg.mc.n_samples, seed(cfg)) {
            Ok(r) => row.n_blp = Some(r.n_blp),
            Err(e) => errors.push(format!("blp: {e}")),
        }
    }
    match canonical_rates(&traj, cfg.differencing) {
        Ok(r) => row.eternal_nm = Some(eternal_nm_detector(&r, cfg.eternal_t_min, cfg.eternal_tolerance).eternal),
        Err(e) => errors.push(format!("rates: {e}")),
    }
    if cfg.sweep_kernel {
        match kernel_report(cfg, &p, &traj) {
            Ok((rep, _)) => row.tau_k = rep.tau_k,
            Err(e) => errors.push(format!("kernel: {e}")),
        }
    }
    if !errors.is_empty() {
        row.error = Some(errors.join("; "));
    }
    let stcf_csv = if cfg.save_stcf { csv(|w| io::write_stcf_csv(w, &traj)).ok() } else { None };
    (row, stcf_csv)
}

fn field(x: Option<f64>) -> String {
    x.map(io::format_value).unwrap_or_default()
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

fn sweep(cfg: &RunConfig) -> Result<Rendered> {
    let sw = cfg.sweep.as_ref().expect("validated");
    let points: Vec<(SweepRow, Option<Vec<u8>>)> = sw.values.par_iter().map(|&v| sweep_point(cfg, v)).collect();
    let mut table = format!("{},n_blp,n_v,tau_th,tau_k,eternal_nm,error\n", sw.axis.name());
    for (row, _) in &points {
        table.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            io::format_value(row.value),
            field(row.n_blp),
            field(row.n_v),
            field(row.tau_th),
            field(row.tau_k),
            row.eternal_nm.map(|b| b.to_string()).unwrap_or_default(),
            row.error.as_deref().map(quote).unwrap_or_default(),
        ));
    }
    let rows: Vec<&SweepRow> = points.iter().map(|(r, _)| r).collect();
    let mut out: Rendered = vec![("sweep.csv".into(), table.into_bytes()), ("sweep.json".into(), json(&rows)?)];
    for (i, (_, stcf)) in points.into_iter().enumerate() {
        if let Some(bytes) = stcf {
            out.push((format!("stcf_{i:03}.csv"), bytes));
        }
    }
    Ok(out)
}

/// Paths of every file a manifest lists, plus the manifest itself.
pub fn manifest_files(dir: &Path, manifest: &RunManifest) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = manifest.outputs.iter().map(|o| dir.join(&o.file)).collect();
    v.push(dir.join(MANIFEST));
    v
}
