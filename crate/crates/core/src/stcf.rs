//! Spin time-correlation matrix `C_{μν}(t) = tr[ρ^{(μ)}(t) σ_ν]`, where
//! `ρ^{(μ)}` evolves from `½σ_μ ⊗ ρ_b`. Its transpose propagates the Bloch
//! vector, `v(t) = Cᵀ(t) v(0)`.

use nalgebra::{Matrix4, Vector4};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heom::{Heom, HeomConfig, InitialCondition, SystemTrajectory};
use crate::model::{bath_expansion, ModelParams};
use crate::numerics::grid_index;
use crate::operator::{pauli, TwoLevelOperator};

/// Bloch coefficients `(v_0, v_x, v_y, v_z)` of `ρ = ½ Σ_μ v_μ σ_μ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub v: [f64; 4],
}

impl BlochVector {
    /// Normalised state with spatial part `(x, y, z)`.
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { v: [1.0, x, y, z] }
    }

    pub fn spatial(&self) -> [f64; 3] {
        [self.v[1], self.v[2], self.v[3]]
    }

    pub fn spatial_norm(&self) -> f64 {
        self.spatial().iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn to_operator(&self) -> TwoLevelOperator {
        TwoLevelOperator::from_pauli_coefficients(self.v.map(|x| 0.5 * x))
    }

    pub fn from_operator(op: &TwoLevelOperator) -> Self {
        let t = crate::operator::pauli_traces(&op.matrix);
        Self { v: [t[0].re, t[1].re, t[2].re, t[3].re] }
    }
}

/// Provenance of a simulated trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StcfMeta {
    pub params: ModelParams,
    pub heom: HeomConfig,
}

/// `C(t)` on the uniform grid `start_time + i·dt`.
#[derive(Clone, Debug, PartialEq)]
pub struct StcfTrajectory {
    pub start_time: f64,
    pub dt: f64,
    pub c: Vec<Matrix4<f64>>,
    pub meta: Option<StcfMeta>,
    /// Largest dropped imaginary part of any entry.
    pub imag_residue: f64,
}

impl StcfTrajectory {
    /// Wraps externally supplied matrices (toy models, files).
    pub fn from_matrices(start_time: f64, dt: f64, c: Vec<Matrix4<f64>>) -> Self {
        Self { start_time, dt, c, meta: None, imag_residue: 0.0 }
    }

    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.start_time + i as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.time(i)).collect()
    }

    pub fn index_of(&self, t: f64) -> Result<usize> {
        grid_index(t, self.start_time, self.dt, self.len()).ok_or(Error::OffGrid { time: t })
    }

    pub fn at(&self, t: f64) -> Result<&Matrix4<f64>> {
        Ok(&self.c[self.index_of(t)?])
    }

    /// Series of one entry `C_{μν}(t_i)`.
    pub fn entry(&self, mu: usize, nu: usize) -> Vec<f64> {
        self.c.iter().map(|m| m[(mu, nu)]).collect()
    }

    /// First `n` grid points.
    pub fn truncated(&self, n: usize) -> Self {
        Self { c: self.c[..n.min(self.len())].to_vec(), ..self.clone() }
    }

    /// Every `k`-th grid point.
    pub fn decimated(&self, k: usize) -> Self {
        Self { c: self.c.iter().step_by(k).copied().collect(), dt: self.dt * k as f64, ..self.clone() }
    }

    /// Max-abs entry difference over the common grid prefix.
    pub fn max_deviation(&self, other: &StcfTrajectory) -> f64 {
        self.c.iter().zip(&other.c).map(|(a, b)| (a - b).amax()).fold(0.0, f64::max)
    }
}

/// Assembles `C` from the four tier-0 trajectories started at `½σ_μ`.
pub fn assemble(runs: &[SystemTrajectory; 4]) -> (Vec<Matrix4<f64>>, f64) {
    let n = runs[0].states.len();
    let mut residue: f64 = 0.0;
    let c = (0..n)
        .map(|i| {
            Matrix4::from_fn(|mu, nu| {
                let z = (runs[mu].states[i] * pauli(nu)).trace();
                residue = residue.max(z.im.abs());
                z.re
            })
        })
        .collect();
    (c, residue)
}

/// Four HEOM runs from `t = 0`.
pub fn compute_stcf(p: &ModelParams, cfg: &HeomConfig) -> Result<StcfTrajectory> {
    two_time_stcf(p, cfg, 0.0)
}

/// Four HEOM runs from absolute time `tau`; the grid is `tau + i·dt`.
pub fn two_time_stcf(p: &ModelParams, cfg: &HeomConfig, tau: f64) -> Result<StcfTrajectory> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::invalid("tau", "must be >= 0"));
    }
    let bath = bath_expansion(p, cfg.n_matsubara)?;
    let heom = Heom::new(p, &bath, cfg)?;
    let runs: Vec<SystemTrajectory> = (0..4)
        .into_par_iter()
        .map(|mu| {
            heom.propagate_from(&InitialCondition::half_pauli(mu), tau)
                .map_err(|e| Error::Propagation { mu, source: Box::new(e) })
        })
        .collect::<Result<_>>()?;
    let runs: [SystemTrajectory; 4] = runs.try_into().expect("four runs");
    let (c, imag_residue) = assemble(&runs);
    Ok(StcfTrajectory { start_time: tau, dt: cfg.dt, c, meta: Some(StcfMeta { params: *p, heom: *cfg }), imag_residue })
}

/// `v(t) = Cᵀ(t) v(0)` at a grid time.
pub fn bloch_propagate(v0: &BlochVector, traj: &StcfTrajectory, t: f64) -> Result<BlochVector> {
    let c = traj.at(t)?;
    let v = c.transpose() * Vector4::from(v0.v);
    Ok(BlochVector { v: [v[0], v[1], v[2], v[3]] })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationarityReport {
    pub window_start: f64,
    pub window_end: f64,
    /// `max |C_{iν}|` over the window for `i ∈ {x, y, z}`.
    pub max_tail: f64,
    pub tolerance: f64,
    pub passed: bool,
}

pub const DEFAULT_STATIONARITY_TOLERANCE: f64 = 0.02;

/// Checks `C_{iν}(t) → 0` (`i ≠ 0`) over the last `window` time units; `None`
/// takes the last 20% of the trajectory.
pub fn stationarity_check(traj: &StcfTrajectory, window: Option<f64>, tolerance: f64) -> Result<StationarityReport> {
    let n = traj.len();
    if n < 2 {
        return Err(Error::TooShort("need at least two samples".into()));
    }
    let span = traj.time(n - 1) - traj.start_time;
    let window = window.unwrap_or(0.2 * span);
    if window > span {
        return Err(Error::TooShort(format!("window {window} exceeds trajectory span {span}")));
    }
    let first = ((span - window) / traj.dt).floor() as usize;
    let max_tail = traj.c[first..]
        .iter()
        .flat_map(|m| (1..4).flat_map(move |i| (0..4).map(move |nu| m[(i, nu)].abs())))
        .fold(0.0, f64::max);
    Ok(StationarityReport {
        window_start: traj.time(first),
        window_end: traj.time(n - 1),
        max_tail,
        tolerance,
        passed: max_tail < tolerance,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WashoutReport {
    pub omegas: Vec<f64>,
    /// `max_{t,μν} |C^{(Ω)} − C^{(ε_d=0)}|` per frequency.
    pub deviations: Vec<f64>,
    pub strictly_decreasing: bool,
}

/// Compares driven trajectories at each `Ω` with the undriven one.
pub fn washout_check(p: &ModelParams, cfg: &HeomConfig, omegas: &[f64]) -> Result<WashoutReport> {
    if omegas.is_empty() || omegas.iter().any(|&w| !(w > 0.0)) {
        return Err(Error::invalid("omega", "washout frequencies must be positive"));
    }
    if omegas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("omega", "washout frequencies must be ascending"));
    }
    let undriven = compute_stcf(&ModelParams { epsd: 0.0, ..*p }, cfg)?;
    let deviations = omegas
        .iter()
        .map(|&w| Ok(compute_stcf(&ModelParams { omega: w, ..*p }, cfg)?.max_deviation(&undriven)))
        .collect::<Result<Vec<f64>>>()?;
    let strictly_decreasing = deviations.windows(2).all(|d| d[1] < d[0]);
    Ok(WashoutReport { omegas: omegas.to_vec(), deviations, strictly_decreasing })
}
