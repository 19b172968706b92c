//! Damping matrix `Ξ = Ċᵀ (Cᵀ)⁻¹`, decoherence matrix `ξ` and the canonical
//! form of the time-local generator.
//!
//! `ξ_{νλ} = ¼ tr[σ_κ σ_ν σ_ρ σ_λ] Ξ_{ρκ}`. The rates are the eigenvalues of
//! the spatial block; with this normalisation `tr Ξ = −2 Σ γ_i`. The
//! generator itself is `Λρ = a_{νλ} σ_ν ρ σ_λ` with `a = ξ/2`, so the
//! canonical form reads
//!
//! ```text
//! Λρ = −i[H_c, ρ] + Σ_k (γ_k/2) (L_k ρ L_k† − ½{L_k† L_k, ρ}),
//! L_k = Σ_j U_{jk} σ_j,   H_c = −Σ_i Im(a_{i0}) σ_i,
//! ```
//!
//! where column `k` of `U` is the eigenvector belonging to `γ_k`.

use std::sync::OnceLock;

use nalgebra::{Matrix3, Matrix4, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Differencing;
use crate::operator::{pauli, pauli_traces, Matrix2c, TwoLevelOperator};
use crate::stcf::StcfTrajectory;
use crate::C64;

/// Largest accepted condition number of `Cᵀ(t)`.
pub const CONDITION_LIMIT: f64 = 1e8;
pub const DEFAULT_NEGATIVITY_TOLERANCE: f64 = 1e-4;
const HERMITIAN_LIMIT: f64 = 1e-6;
const DEGENERACY_GAP: f64 = 1e-8;

fn condition(m: &Matrix4<f64>) -> f64 {
    let s = m.singular_values();
    let max = s.max();
    let min = s.min();
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

fn damping_at(c: &Matrix4<f64>, cdot: &Matrix4<f64>, time: f64) -> Result<Matrix4<f64>> {
    let ct = c.transpose();
    let cond = condition(&ct);
    if !(cond <= CONDITION_LIMIT) {
        return Err(Error::NotInvertible { time, condition: cond });
    }
    let inv = ct.try_inverse().ok_or(Error::NotInvertible { time, condition: cond })?;
    Ok(cdot.transpose() * inv)
}

fn check_len(traj: &StcfTrajectory, scheme: Differencing) -> Result<()> {
    if traj.len() < scheme.min_samples() {
        return Err(Error::TooShort(format!("{} samples, differencing needs {}", traj.len(), scheme.min_samples())));
    }
    Ok(())
}

/// `Ξ(t_i)` for every grid point. Fails at the first non-invertible `Cᵀ`.
pub fn damping_series(traj: &StcfTrajectory, scheme: Differencing) -> Result<Vec<Matrix4<f64>>> {
    check_len(traj, scheme)?;
    let cdot = scheme.apply(&traj.c, traj.dt);
    traj.c.iter().zip(&cdot).enumerate().map(|(i, (c, d))| damping_at(c, d, traj.time(i))).collect()
}

/// `Ξ(t)` at one grid time.
pub fn damping_matrix(traj: &StcfTrajectory, t: f64, scheme: Differencing) -> Result<Matrix4<f64>> {
    check_len(traj, scheme)?;
    let i = traj.index_of(t)?;
    let cdot = scheme.apply(&traj.c, traj.dt);
    damping_at(&traj.c[i], &cdot[i], t)
}

/// `T[κ][ν][ρ][λ] = ¼ tr[σ_κ σ_ν σ_ρ σ_λ]`.
fn trace_table() -> &'static [[[[C64; 4]; 4]; 4]; 4] {
    static TABLE: OnceLock<[[[[C64; 4]; 4]; 4]; 4]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [[[[C64::new(0.0, 0.0); 4]; 4]; 4]; 4];
        for (k, tk) in t.iter_mut().enumerate() {
            for (n, tn) in tk.iter_mut().enumerate() {
                for (r, tr) in tn.iter_mut().enumerate() {
                    for (l, v) in tr.iter_mut().enumerate() {
                        *v = (pauli(k) * pauli(n) * pauli(r) * pauli(l)).trace() * 0.25;
                    }
                }
            }
        }
        t
    })
}

/// 4×4 `ξ_{νλ}` including the identity components.
pub fn full_decoherence_matrix(xi_damp: &Matrix4<f64>) -> Matrix4<C64> {
    let t = trace_table();
    Matrix4::from_fn(|n, l| {
        let mut acc = C64::new(0.0, 0.0);
        for k in 0..4 {
            for r in 0..4 {
                acc += t[k][n][r][l] * xi_damp[(r, k)];
            }
        }
        acc
    })
}

/// Spatial block of `ξ`, symmetrised after the Hermiticity check.
pub fn decoherence_matrix(xi_damp: &Matrix4<f64>, time: f64) -> Result<Matrix3<C64>> {
    let full = full_decoherence_matrix(xi_damp);
    let s: Matrix3<C64> = full.fixed_view::<3, 3>(1, 1).into_owned();
    let residual = (s - s.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if residual > HERMITIAN_LIMIT {
        return Err(Error::NotHermitian { time, residual });
    }
    Ok((s + s.adjoint()) * C64::new(0.5, 0.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateTrajectory {
    pub start_time: f64,
    pub dt: f64,
    /// `γ_1 ≤ γ_2 ≤ γ_3` per grid point, up to `valid_until`.
    pub gamma: Vec<[f64; 3]>,
    /// `tr Ξ(t)` on the same grid.
    pub trace_damping: Vec<f64>,
    /// Volume threshold time, if reached on the trajectory.
    pub tau_th: Option<f64>,
    /// Last grid time with computed rates.
    pub valid_until: f64,
}

impl RateTrajectory {
    pub fn len(&self) -> usize {
        self.gamma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gamma.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.start_time + i as f64 * self.dt
    }

    pub fn min_rate(&self) -> Vec<f64> {
        self.gamma.iter().map(|g| g[0]).collect()
    }

    /// `max_t |tr Ξ + 2 Σ γ_i|`.
    pub fn sum_rule_residual(&self) -> f64 {
        self.gamma
            .iter()
            .zip(&self.trace_damping)
            .map(|(g, tr)| (tr + 2.0 * (g[0] + g[1] + g[2])).abs())
            .fold(0.0, f64::max)
    }
}

/// Eigen-decomposition with ascending eigenvalues, phase fixed so that the
/// largest component of each eigenvector is real positive, and near-degenerate
/// pairs ordered by overlap with `previous`.
fn sorted_eigen(xi: &Matrix3<C64>, previous: Option<&Matrix3<C64>>) -> ([f64; 3], Matrix3<C64>) {
    let eig = SymmetricEigen::new(*xi);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut vals = order.map(|k| eig.eigenvalues[k]);
    let mut vecs = Matrix3::from_columns(&order.map(|k| {
        let v: Vector3<C64> = eig.eigenvectors.column(k).into_owned();
        let big = v.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap();
        v * (big.conj() / big.norm())
    }));
    if let Some(prev) = previous {
        for a in 0..2 {
            if vals[a + 1] - vals[a] < DEGENERACY_GAP {
                let keep = prev.column(a).dotc(&vecs.column(a)).norm();
                let swap = prev.column(a).dotc(&vecs.column(a + 1)).norm();
                if swap > keep {
                    vecs.swap_columns(a, a + 1);
                    vals.swap(a, a + 1);
                }
            }
        }
    }
    (vals, vecs)
}

struct WindowData {
    damping: Vec<Matrix4<f64>>,
    tau_th: Option<f64>,
}

/// Damping matrices on `t ≤ τ_th`, stopping at the first invertibility loss.
#[allow(clippy::needless_range_loop)]
fn window(traj: &StcfTrajectory, scheme: Differencing) -> Result<WindowData> {
    check_len(traj, scheme)?;
    let vol = super::volume_traj(traj);
    let n = vol.window_len();
    let cdot = scheme.apply(&traj.c, traj.dt);
    let mut damping = Vec::with_capacity(n);
    for i in 0..n {
        match damping_at(&traj.c[i], &cdot[i], traj.time(i)) {
            Ok(x) => damping.push(x),
            Err(Error::NotInvertible { .. }) if i > 0 => break,
            Err(e) => return Err(e),
        }
    }
    Ok(WindowData { damping, tau_th: vol.tau_th })
}

/// Canonical rates on the invertibility window.
pub fn canonical_rates(traj: &StcfTrajectory, scheme: Differencing) -> Result<RateTrajectory> {
    Ok(canonical_decomposition(traj, scheme)?.rates)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CanonicalDecomposition {
    pub start_time: f64,
    pub dt: f64,
    pub h_c: Vec<TwoLevelOperator>,
    /// `L_1, L_2, L_3` matching `rates.gamma` order.
    pub lindblad_ops: Vec<[TwoLevelOperator; 3]>,
    pub rates: RateTrajectory,
    /// Max deviation of the reconstructed generator from `Ξ` acting on `σ_λ`.
    pub reconstruction_error: f64,
}

fn commutator(a: &Matrix2c, b: &Matrix2c) -> Matrix2c {
    a * b - b * a
}

fn apply_canonical(h: &Matrix2c, ls: &[Matrix2c; 3], gamma: &[f64; 3], x: &Matrix2c) -> Matrix2c {
    let mut out = commutator(h, x) * C64::new(0.0, -1.0);
    for (l, &g) in ls.iter().zip(gamma) {
        let ld = l.adjoint();
        let ldl = ld * l;
        out += (l * x * ld - (ldl * x + x * ldl) * C64::new(0.5, 0.0)) * C64::new(0.5 * g, 0.0);
    }
    out
}

/// Canonical Hamiltonian, Lindblad operators and rates on the invertibility
/// window.
pub fn canonical_decomposition(traj: &StcfTrajectory, scheme: Differencing) -> Result<CanonicalDecomposition> {
    let win = window(traj, scheme)?;
    let n = win.damping.len();
    let mut gamma = Vec::with_capacity(n);
    let mut trace_damping = Vec::with_capacity(n);
    let mut h_c = Vec::with_capacity(n);
    let mut lindblad_ops = Vec::with_capacity(n);
    let mut previous: Option<Matrix3<C64>> = None;
    let mut reconstruction_error: f64 = 0.0;
    for (i, x) in win.damping.iter().enumerate() {
        let time = traj.time(i);
        let xi = decoherence_matrix(x, time)?;
        let full = full_decoherence_matrix(x);
        let (vals, vecs) = sorted_eigen(&xi, previous.as_ref());

        let mut h = Matrix2c::zeros();
        for j in 1..4 {
            h -= pauli(j) * C64::new(0.5 * full[(j, 0)].im, 0.0);
        }
        let ls: [Matrix2c; 3] =
            std::array::from_fn(|k| (0..3).fold(Matrix2c::zeros(), |acc, j| acc + pauli(j + 1) * vecs[(j, k)]));

        for lam in 0..4 {
            let got = pauli_traces(&apply_canonical(&h, &ls, &vals, &pauli(lam)));
            for rho in 0..4 {
                // Pauli coefficient of Λ[σ_λ] is Ξ_{ρλ}; traces carry a factor 2.
                let err = (got[rho] * 0.5 - C64::new(x[(rho, lam)], 0.0)).norm();
                reconstruction_error = reconstruction_error.max(err);
            }
        }

        gamma.push(vals);
        trace_damping.push(x.trace());
        h_c.push(TwoLevelOperator::new(h));
        lindblad_ops.push(ls.map(TwoLevelOperator::new));
        previous = Some(vecs);
    }
    let valid_until = traj.time(n.saturating_sub(1));
    Ok(CanonicalDecomposition {
        start_time: traj.start_time,
        dt: traj.dt,
        h_c,
        lindblad_ops,
        rates: RateTrajectory {
            start_time: traj.start_time,
            dt: traj.dt,
            gamma,
            trace_damping,
            tau_th: win.tau_th,
            valid_until,
        },
        reconstruction_error,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EternalReport {
    pub eternal: bool,
    pub t_min: f64,
    pub t_max: f64,
    pub n_points: usize,
    /// `max_t min_i γ_i(t)` over the window.
    pub largest_min_rate: f64,
    /// First window time where the lowest rate is not below `−tolerance`.
    pub first_violation: Option<f64>,
    pub tolerance: f64,
}

/// True iff `min_i γ_i(t) < −tolerance` at every grid time in
/// `[t_min, valid_until]`. An empty window is reported as not eternal.
pub fn eternal_nm_detector(rates: &RateTrajectory, t_min: f64, tolerance: f64) -> EternalReport {
    let window: Vec<(f64, f64)> = (0..rates.len())
        .map(|i| (rates.time(i), rates.gamma[i][0]))
        .filter(|&(t, _)| t >= t_min - 1e-12 * t_min.abs().max(1.0))
        .collect();
    let largest_min_rate = window.iter().map(|&(_, g)| g).fold(f64::NEG_INFINITY, f64::max);
    let first_violation = window.iter().find(|&&(_, g)| !(g < -tolerance)).map(|&(t, _)| t);
    EternalReport {
        eternal: !window.is_empty() && first_violation.is_none(),
        t_min,
        t_max: rates.valid_until,
        n_points: window.len(),
        largest_min_rate,
        first_violation,
        tolerance,
    }
}
