//! Hierarchical equations of motion for the driven spin-boson model.
//!
//! With coupling operator `V = σ_z` and `C(t) = Σ_k c_k e^{−ν_k t}`, the
//! auxiliary density operators (ADOs) `ρ_n` obey
//!
//! ```text
//! ∂_t ρ_n = −i[H_s(t), ρ_n] − (n·ν) ρ_n
//!           − i Σ_k √((n_k+1) s_k) [V, ρ_{n+e_k}]
//!           − i Σ_k √(n_k / s_k) (c_k V ρ_{n−e_k} − c_k* ρ_{n−e_k} V)
//!           − Δ_K [V, [V, ρ_n]]                     (optional closure)
//! ```
//!
//! where `s_k = |c_k|` rescales the ADOs so that deep tiers stay O(1).
//! The tier-0 operator is the reduced density matrix (or, for operator-valued
//! initial conditions, the propagated operator).

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kv::{format_f64, KeyValues};
use crate::model::{drive_bias, BathExpansion, ModelParams};
use crate::operator::{Matrix2c, TwoLevelOperator};
use crate::C64;

/// Row-major 2×2 block: `[ρ00, ρ01, ρ10, ρ11]`.
pub type Block = [C64; 4];

const ZERO: C64 = C64::new(0.0, 0.0);
const PAR_THRESHOLD: usize = 2048;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Terminator {
    /// Couplings to tier L+1 are dropped.
    Drop,
    /// Dropped Matsubara terms are folded into a white-noise term on every ADO.
    MarkovianClosure,
}

impl std::str::FromStr for Terminator {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "drop" => Ok(Terminator::Drop),
            "closure" | "markovian_closure" => Ok(Terminator::MarkovianClosure),
            other => Err(format!("unknown terminator `{other}` (drop|closure)")),
        }
    }
}

impl std::fmt::Display for Terminator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Terminator::Drop => "drop",
            Terminator::MarkovianClosure => "closure",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeomConfig {
    /// Truncation tier L.
    pub max_tier: usize,
    /// Number of Matsubara terms K.
    pub n_matsubara: usize,
    /// Output (and nominal integration) step.
    pub dt: f64,
    pub t_final: f64,
    pub terminator: Terminator,
    /// Upper bound on the number of ADOs.
    pub max_ados: usize,
}

impl Default for HeomConfig {
    fn default() -> Self {
        Self { max_tier: 8, n_matsubara: 1, dt: 0.01, t_final: 10.0, terminator: Terminator::Drop, max_ados: 2_000_000 }
    }
}

impl HeomConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_tier < 1 {
            return Err(Error::invalid("max_tier", "must be >= 1"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid("dt", "must be > 0"));
        }
        if !(self.t_final >= self.dt && self.t_final.is_finite()) {
            return Err(Error::invalid("t_final", "must be >= dt"));
        }
        Ok(())
    }

    /// Number of output intervals, `round(t_final/dt)`.
    pub fn n_steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    pub fn from_kv(kv: &KeyValues) -> Result<Self> {
        let d = Self::default();
        let terminator = match kv.get("terminator") {
            None => d.terminator,
            Some(s) => s.parse().map_err(|e: String| Error::invalid("terminator", e))?,
        };
        let cfg = Self {
            max_tier: kv.parse_or("max_tier", d.max_tier)?,
            n_matsubara: kv.parse_or("n_matsubara", d.n_matsubara)?,
            dt: kv.parse_or("dt", d.dt)?,
            t_final: kv.parse_or("t_final", d.t_final)?,
            terminator,
            max_ados: kv.parse_or("max_ados", d.max_ados)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn write_kv(&self, kv: &mut KeyValues) {
        kv.set("max_tier", self.max_tier);
        kv.set("n_matsubara", self.n_matsubara);
        kv.set("dt", format_f64(self.dt));
        kv.set("t_final", format_f64(self.t_final));
        kv.set("terminator", self.terminator);
        kv.set("max_ados", self.max_ados);
    }
}

/// Occupation numbers of one ADO, one entry per exponential bath term.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HierarchyIndex {
    pub occupations: Vec<u16>,
    pub tier: usize,
}

fn binomial(n: usize, k: usize) -> Option<usize> {
    let k = k.min(n - k.min(n));
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > usize::MAX as u128 {
            return None;
        }
    }
    Some(acc as usize)
}

/// All multi-indices over `n_matsubara + 1` terms with tier ≤ `max_tier`,
/// lexicographically ordered. The count is `C(L + K + 1, K + 1)`.
pub fn enumerate_hierarchy(cfg: &HeomConfig, bath: &BathExpansion) -> Result<Vec<HierarchyIndex>> {
    cfg.validate()?;
    let modes = bath.terms.len();
    let count = binomial(cfg.max_tier + modes, modes).unwrap_or(usize::MAX);
    if count > cfg.max_ados {
        return Err(Error::HierarchyTooLarge { count, budget: cfg.max_ados });
    }
    let mut out = Vec::with_capacity(count);
    let mut current = vec![0u16; modes];
    fill(&mut current, 0, cfg.max_tier, &mut out);
    debug_assert_eq!(out.len(), count);
    Ok(out)
}

fn fill(current: &mut Vec<u16>, pos: usize, budget: usize, out: &mut Vec<HierarchyIndex>) {
    if pos == current.len() {
        let tier = current.iter().map(|&n| n as usize).sum();
        out.push(HierarchyIndex { occupations: current.clone(), tier });
        return;
    }
    for n in 0..=budget {
        current[pos] = n as u16;
        fill(current, pos + 1, budget - n, out);
    }
    current[pos] = 0;
}

/// Operator-valued initial condition `A ⊗ ρ_b` with all ADOs at tier ≥ 1 zero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialCondition {
    pub system_operator: TwoLevelOperator,
}

impl InitialCondition {
    pub fn new(op: TwoLevelOperator) -> Self {
        Self { system_operator: op }
    }

    /// `(1/2)σ_μ ⊗ ρ_b`.
    pub fn half_pauli(mu: usize) -> Self {
        Self::new(TwoLevelOperator::half_pauli(mu))
    }

    /// `(1/2)(𝟙 + v·σ) ⊗ ρ_b`.
    pub fn bloch(v: [f64; 3]) -> Self {
        Self::new(TwoLevelOperator::from_bloch(v))
    }
}

/// Full hierarchy state at one time.
#[derive(Clone, Debug, PartialEq)]
pub struct AdoState {
    pub time: f64,
    pub ados: Vec<Block>,
}

impl AdoState {
    pub fn tier0(&self) -> Matrix2c {
        to_matrix(&self.ados[0])
    }
}

pub fn to_matrix(b: &Block) -> Matrix2c {
    Matrix2c::new(b[0], b[1], b[2], b[3])
}

pub fn to_block(m: &Matrix2c) -> Block {
    [m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]]
}

/// Tier-0 operator sampled on the uniform grid `t0 + i·dt`.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemTrajectory {
    pub t0: f64,
    pub dt: f64,
    pub states: Vec<Matrix2c>,
}

impl SystemTrajectory {
    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.states.len()).map(|i| self.time(i)).collect()
    }

    /// `tr[σ_μ ρ(t_i)]` for every grid point.
    pub fn expectation(&self, mu: usize) -> Vec<C64> {
        let s = crate::operator::pauli(mu);
        self.states.iter().map(|r| (s * r).trace()).collect()
    }

    /// Largest element-wise deviation from another trajectory on the same grid.
    pub fn max_deviation(&self, other: &SystemTrajectory) -> f64 {
        self.states
            .iter()
            .zip(&other.states)
            .flat_map(|(a, b)| (a - b).iter().map(|z| z.norm()).collect::<Vec<_>>())
            .fold(0.0, f64::max)
    }
}

/// Precomputed hierarchy: layout, damping and neighbour couplings.
#[derive(Clone, Debug)]
pub struct Heom {
    params: ModelParams,
    bath: BathExpansion,
    cfg: HeomConfig,
    indices: Vec<HierarchyIndex>,
    damping: Vec<f64>,
    closure: f64,
    up_start: Vec<u32>,
    up: Vec<(u32, f64)>,
    down_start: Vec<u32>,
    /// (neighbour, 2a·Re c, 2a·Im c)
    down: Vec<(u32, f64, f64)>,
    substeps: usize,
}

impl Heom {
    pub fn new(params: &ModelParams, bath: &BathExpansion, cfg: &HeomConfig) -> Result<Self> {
        params.validate()?;
        let indices = enumerate_hierarchy(cfg, bath)?;
        let lookup: HashMap<&[u16], usize> =
            indices.iter().enumerate().map(|(i, h)| (h.occupations.as_slice(), i)).collect();

        let scale: Vec<f64> =
            bath.terms.iter().map(|t| if t.amplitude.norm() > 0.0 { t.amplitude.norm() } else { 1.0 }).collect();
        let closure = match cfg.terminator {
            Terminator::Drop => 0.0,
            Terminator::MarkovianClosure => bath.delta_term,
        };

        let n = indices.len();
        let mut damping = Vec::with_capacity(n);
        let mut up_start = Vec::with_capacity(n + 1);
        let mut down_start = Vec::with_capacity(n + 1);
        let mut up = Vec::new();
        let mut down = Vec::new();
        let mut neighbour = Vec::new();
        for idx in &indices {
            up_start.push(up.len() as u32);
            down_start.push(down.len() as u32);
            damping.push(idx.occupations.iter().zip(&bath.terms).map(|(&nk, t)| nk as f64 * t.rate).sum());
            for (k, term) in bath.terms.iter().enumerate() {
                let nk = idx.occupations[k] as f64;
                if idx.tier < cfg.max_tier {
                    neighbour.clear();
                    neighbour.extend_from_slice(&idx.occupations);
                    neighbour[k] += 1;
                    let j = lookup[neighbour.as_slice()];
                    up.push((j as u32, ((nk + 1.0) * scale[k]).sqrt()));
                }
                if idx.occupations[k] > 0 {
                    neighbour.clear();
                    neighbour.extend_from_slice(&idx.occupations);
                    neighbour[k] -= 1;
                    let j = lookup[neighbour.as_slice()];
                    let a = (nk / scale[k]).sqrt();
                    down.push((j as u32, 2.0 * a * term.amplitude.re, 2.0 * a * term.amplitude.im));
                }
            }
        }
        up_start.push(up.len() as u32);
        down_start.push(down.len() as u32);

        let mut heom = Self {
            params: *params,
            bath: bath.clone(),
            cfg: *cfg,
            indices,
            damping,
            closure,
            up_start,
            up,
            down_start,
            down,
            substeps: 1,
        };
        heom.substeps = heom.stable_substeps();
        Ok(heom)
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[HierarchyIndex] {
        &self.indices
    }

    pub fn config(&self) -> &HeomConfig {
        &self.cfg
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn bath(&self) -> &BathExpansion {
        &self.bath
    }

    /// RK4 sub-steps per output step.
    pub fn substeps(&self) -> usize {
        self.substeps
    }

    /// Gershgorin-style bound on the generator norm, used to keep `h·bound`
    /// inside the RK4 stability region.
    fn stable_substeps(&self) -> usize {
        let h_norm = (self.params.delta.powi(2) + self.params.max_bias().powi(2)).sqrt();
        let mut bound: f64 = 0.0;
        for i in 0..self.len() {
            let up: f64 =
                self.up[self.up_start[i] as usize..self.up_start[i + 1] as usize].iter().map(|&(_, c)| 2.0 * c).sum();
            let down: f64 = self.down[self.down_start[i] as usize..self.down_start[i + 1] as usize]
                .iter()
                .map(|&(_, re, im)| re.hypot(im))
                .sum();
            let b = self.damping[i] + 2.0 * h_norm + up + down + 4.0 * self.closure.abs();
            bound = bound.max(b);
        }
        let mut m = (self.cfg.dt * bound / 2.5).ceil().max(1.0) as usize;
        // Resolve the drive: at least 16 sub-steps per period.
        if self.params.epsd > 0.0 && self.params.omega > 0.0 {
            let period = 2.0 * std::f64::consts::PI / self.params.omega;
            m = m.max((16.0 * self.cfg.dt / period).ceil() as usize);
        }
        m
    }

    pub fn initial_state(&self, ic: &InitialCondition, t0: f64) -> AdoState {
        let mut ados = vec![[ZERO; 4]; self.len()];
        ados[0] = to_block(&ic.system_operator.matrix);
        AdoState { time: t0, ados }
    }

    /// Time derivative of the whole hierarchy.
    pub fn rhs(&self, t: f64, state: &AdoState) -> AdoState {
        let mut out = vec![[ZERO; 4]; self.len()];
        self.rhs_into(t, &state.ados, &mut out);
        AdoState { time: t, ados: out }
    }

    fn rhs_into(&self, t: f64, ados: &[Block], out: &mut [Block]) {
        let eps = drive_bias(t, &self.params);
        let delta = self.params.delta;
        let kernel = |i: usize, d: &mut Block| {
            let r = &ados[i];
            // −i[H, r] with H = [[ε, Δ], [Δ, −ε]]
            let c00 = (r[2] - r[1]) * delta;
            let c01 = r[1] * (2.0 * eps) + (r[3] - r[0]) * delta;
            let c10 = r[2] * (-2.0 * eps) + (r[0] - r[3]) * delta;
            let c11 = (r[1] - r[2]) * delta;
            let g = self.damping[i];
            let mut d00 = C64::new(c00.im, -c00.re) - r[0] * g;
            let mut d01 = C64::new(c01.im, -c01.re) - r[1] * (g + 4.0 * self.closure);
            let mut d10 = C64::new(c10.im, -c10.re) - r[2] * (g + 4.0 * self.closure);
            let mut d11 = C64::new(c11.im, -c11.re) - r[3] * g;

            // −i c [V, ρ_up] only touches the coherences.
            let mut u01 = ZERO;
            let mut u10 = ZERO;
            for &(j, c) in &self.up[self.up_start[i] as usize..self.up_start[i + 1] as usize] {
                let rj = &ados[j as usize];
                u01 += rj[1] * c;
                u10 += rj[2] * c;
            }
            d01 += C64::new(2.0 * u01.im, -2.0 * u01.re);
            d10 += C64::new(-2.0 * u10.im, 2.0 * u10.re);

            for &(j, re2, im2) in &self.down[self.down_start[i] as usize..self.down_start[i + 1] as usize] {
                let rj = &ados[j as usize];
                d00 += rj[0] * im2;
                d11 -= rj[3] * im2;
                d01 += C64::new(rj[1].im * re2, -rj[1].re * re2);
                d10 += C64::new(-rj[2].im * re2, rj[2].re * re2);
            }
            *d = [d00, d01, d10, d11];
        };
        if self.len() >= PAR_THRESHOLD {
            out.par_iter_mut().enumerate().for_each(|(i, d)| kernel(i, d));
        } else {
            out.iter_mut().enumerate().for_each(|(i, d)| kernel(i, d));
        }
    }

    /// Fixed-step RK4 from `t = 0`; see [`Heom::propagate_from`].
    pub fn propagate(&self, ic: &InitialCondition) -> Result<SystemTrajectory> {
        self.propagate_from(ic, 0.0)
    }

    /// Fixed-step RK4 starting at absolute time `t0` (the drive phase `Ωt0`
    /// enters the Hamiltonian). The tier-0 operator is recorded every `dt` on
    /// `[t0, t0 + t_final]`; each output step is split into
    /// [`Heom::substeps`] equal RK4 steps.
    pub fn propagate_from(&self, ic: &InitialCondition, t0: f64) -> Result<SystemTrajectory> {
        let n_out = self.cfg.n_steps();
        let mut state = self.initial_state(ic, t0);
        let mut states = Vec::with_capacity(n_out + 1);
        states.push(state.tier0());
        let n = self.len();
        let m = self.substeps;
        let h = self.cfg.dt / m as f64;
        let mut k1 = vec![[ZERO; 4]; n];
        let mut k2 = vec![[ZERO; 4]; n];
        let mut k3 = vec![[ZERO; 4]; n];
        let mut k4 = vec![[ZERO; 4]; n];
        let mut tmp = vec![[ZERO; 4]; n];
        let y = &mut state.ados;
        for step in 0..n_out {
            for sub in 0..m {
                let t = t0 + (step * m + sub) as f64 * h;
                self.rhs_into(t, y, &mut k1);
                axpy_into(&mut tmp, y, &k1, 0.5 * h);
                self.rhs_into(t + 0.5 * h, &tmp, &mut k2);
                axpy_into(&mut tmp, y, &k2, 0.5 * h);
                self.rhs_into(t + 0.5 * h, &tmp, &mut k3);
                axpy_into(&mut tmp, y, &k3, h);
                self.rhs_into(t + h, &tmp, &mut k4);
                let w = h / 6.0;
                for i in 0..n {
                    for e in 0..4 {
                        y[i][e] += (k1[i][e] + (k2[i][e] + k3[i][e]) * 2.0 + k4[i][e]) * w;
                    }
                }
            }
            let t_now = t0 + (step + 1) as f64 * self.cfg.dt;
            if let Some(bad) = y.iter().position(|b| b.iter().any(|z| !z.re.is_finite() || !z.im.is_finite())) {
                return Err(Error::NonFinite { tier: self.indices[bad].tier, index: bad, time: t_now });
            }
            states.push(to_matrix(&y[0]));
        }
        Ok(SystemTrajectory { t0, dt: self.cfg.dt, states })
    }
}

fn axpy_into(out: &mut [Block], y: &[Block], k: &[Block], a: f64) {
    for ((o, yi), ki) in out.iter_mut().zip(y).zip(k) {
        for e in 0..4 {
            o[e] = yi[e] + ki[e] * a;
        }
    }
}

/// Builds the bath expansion and hierarchy, then propagates.
pub fn propagate(
    ic: &InitialCondition,
    params: &ModelParams,
    bath: &BathExpansion,
    cfg: &HeomConfig,
) -> Result<SystemTrajectory> {
    Heom::new(params, bath, cfg)?.propagate(ic)
}

/// One `(L, K)` setting in a convergence scan and its deviation from the
/// following setting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceEntry {
    pub max_tier: usize,
    pub n_matsubara: usize,
    pub n_ados: usize,
    /// Max-over-time deviation of the tier-0 trajectory from the next setting.
    pub deviation_to_next: Option<f64>,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub tolerance: f64,
    pub entries: Vec<ConvergenceEntry>,
}

impl ConvergenceReport {
    /// First setting whose deviation to the next one is below tolerance.
    pub fn first_converged(&self) -> Option<&ConvergenceEntry> {
        self.entries.iter().find(|e| e.converged)
    }

    pub fn deviations(&self) -> Vec<f64> {
        self.entries.iter().filter_map(|e| e.deviation_to_next).collect()
    }
}

pub const CONVERGENCE_TOLERANCE: f64 = 1e-6;

/// Propagates `ic` for each `(L, K)` in `settings` and reports the
/// max-over-time deviation between consecutive settings.
pub fn convergence_scan(
    ic: &InitialCondition,
    params: &ModelParams,
    base: &HeomConfig,
    settings: &[(usize, usize)],
) -> Result<ConvergenceReport> {
    let runs: Vec<(usize, SystemTrajectory)> = settings
        .iter()
        .map(|&(l, k)| {
            let cfg = HeomConfig { max_tier: l, n_matsubara: k, ..*base };
            let bath = crate::model::bath_expansion(params, k)?;
            let heom = Heom::new(params, &bath, &cfg)?;
            Ok((heom.len(), heom.propagate(ic)?))
        })
        .collect::<Result<_>>()?;
    let entries = settings
        .iter()
        .enumerate()
        .map(|(i, &(l, k))| {
            let deviation_to_next = runs.get(i + 1).map(|(_, next)| runs[i].1.max_deviation(next));
            ConvergenceEntry {
                max_tier: l,
                n_matsubara: k,
                n_ados: runs[i].0,
                deviation_to_next,
                converged: deviation_to_next.is_some_and(|d| d < CONVERGENCE_TOLERANCE),
            }
        })
        .collect();
    Ok(ConvergenceReport { tolerance: CONVERGENCE_TOLERANCE, entries })
}
