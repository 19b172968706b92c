//! Nakajima–Zwanzig memory kernel of the undriven dynamics, extracted from
//! the correlation matrix alone:
//!
//! ```text
//! K3(s) = −Ċ(s) + X C(s)
//! K1(s) = dK3/ds − K3(s) X
//! K(s)  = K1(s) + ∫₀ˢ K3(u) K(s − u) du
//! ```
//!
//! so that `Ċ(t) = C(t) X − ∫₀ᵗ C(τ) K(t − τ) dτ`.

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{system_hamiltonian, ModelParams};
use crate::numerics::{derivative, trapezoid};
use crate::operator::pauli;
use crate::stcf::StcfTrajectory;
use crate::C64;

/// `X_{μν}(t) = (i/2) tr[σ_μ [H_s(t), σ_ν]]`.
pub fn drift_matrix(p: &ModelParams, t: f64) -> Matrix4<f64> {
    let h = system_hamiltonian(t, p).matrix;
    Matrix4::from_fn(|mu, nu| {
        let s = pauli(nu);
        ((pauli(mu) * (h * s - s * h)).trace() * C64::new(0.0, 0.5)).re
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelTrajectory {
    pub dt: f64,
    pub x: Matrix4<f64>,
    pub k: Vec<Matrix4<f64>>,
    pub k1: Vec<Matrix4<f64>>,
    pub k3: Vec<Matrix4<f64>>,
    /// Max-abs entry of `K` per lag.
    pub norm_series: Vec<f64>,
    /// The first and last lag use one-sided differences. The two lags at
    /// each end then carry an O(dt) error, against O(dt²) in the interior.
    pub one_sided_ends: bool,
}

impl KernelTrajectory {
    /// Wraps a kernel given directly on a grid (auxiliary kernels left empty).
    pub fn from_kernel(dt: f64, x: Matrix4<f64>, k: Vec<Matrix4<f64>>) -> Self {
        let norm_series = k.iter().map(|m| m.amax()).collect();
        Self { dt, x, k, k1: Vec::new(), k3: Vec::new(), norm_series, one_sided_ends: false }
    }

    pub fn len(&self) -> usize {
        self.k.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k.is_empty()
    }

    pub fn lag(&self, i: usize) -> f64 {
        i as f64 * self.dt
    }

    pub fn peak(&self) -> f64 {
        self.norm_series.iter().copied().fold(0.0, f64::max)
    }

    /// Series of one entry `K_{μν}(s_i)`.
    pub fn entry(&self, mu: usize, nu: usize) -> Vec<f64> {
        self.k.iter().map(|m| m[(mu, nu)]).collect()
    }
}

fn require_stationary(traj: &StcfTrajectory) -> Result<()> {
    if let Some(meta) = &traj.meta {
        if !meta.params.is_stationary() {
            return Err(Error::Unsupported("kernel extraction requires epsd = 0".into()));
        }
    }
    if traj.start_time != 0.0 {
        return Err(Error::Unsupported("kernel extraction expects a trajectory starting at t = 0".into()));
    }
    if traj.len() < 3 {
        return Err(Error::TooShort(format!("{} samples, need at least 3", traj.len())));
    }
    Ok(())
}

/// `K3(s) = −Ċ(s) + X C(s)`.
pub fn kernel_k3(traj: &StcfTrajectory, x: &Matrix4<f64>) -> Result<Vec<Matrix4<f64>>> {
    require_stationary(traj)?;
    let cdot = derivative(&traj.c, traj.dt);
    Ok(traj.c.iter().zip(&cdot).map(|(c, d)| x * c - d).collect())
}

/// `K1(s) = dK3/ds − K3(s) X`.
pub fn kernel_k1(k3: &[Matrix4<f64>], x: &Matrix4<f64>, dt: f64) -> Vec<Matrix4<f64>> {
    derivative(k3, dt).iter().zip(k3).map(|(d, k)| d - k * x).collect()
}

/// Trapezoidal time stepping of `K = K1 + ∫ K3 K`; each lag needs one 4×4
/// solve against `I − (h/2) K3(0)`.
pub fn solve_volterra(k1: &[Matrix4<f64>], k3: &[Matrix4<f64>], dt: f64) -> Result<Vec<Matrix4<f64>>> {
    assert_eq!(k1.len(), k3.len(), "auxiliary kernels on different grids");
    let n = k1.len();
    let mut k: Vec<Matrix4<f64>> = Vec::with_capacity(n);
    if n == 0 {
        return Ok(k);
    }
    let lhs = Matrix4::identity() - k3[0] * (0.5 * dt);
    let s = lhs.singular_values();
    let cond = if s.min() > 0.0 { s.max() / s.min() } else { f64::INFINITY };
    if !(cond <= 1e10) {
        return Err(Error::IllConditioned { lag: 0.0, condition: cond });
    }
    let lu = lhs.lu();
    k.push(k1[0]);
    for i in 1..n {
        let mut rhs = k1[i] + k3[i] * k[0] * (0.5 * dt);
        for j in 1..i {
            rhs += k3[j] * k[i - j] * dt;
        }
        let ki = lu.solve(&rhs).ok_or(Error::IllConditioned { lag: i as f64 * dt, condition: cond })?;
        k.push(ki);
    }
    Ok(k)
}

/// Full extraction pipeline for an undriven trajectory.
pub fn extract_kernel(traj: &StcfTrajectory, x: &Matrix4<f64>) -> Result<KernelTrajectory> {
    let k3 = kernel_k3(traj, x)?;
    let k1 = kernel_k1(&k3, x, traj.dt);
    let k = solve_volterra(&k1, &k3, traj.dt)?;
    let norm_series = k.iter().map(|m| m.amax()).collect();
    Ok(KernelTrajectory { dt: traj.dt, x: *x, k, k1, k3, norm_series, one_sided_ends: true })
}

/// `max_t max_{μν} |Ċ(t) − C(t) X + ∫₀ᵗ C(τ) K(t − τ) dτ|`, trapezoidal.
#[allow(clippy::needless_range_loop)]
pub fn gqme_residual(traj: &StcfTrajectory, x: &Matrix4<f64>, kernel: &KernelTrajectory) -> Result<f64> {
    require_stationary(traj)?;
    let n = traj.len().min(kernel.len());
    let h = traj.dt;
    let cdot = derivative(&traj.c, h);
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let mut mem = Matrix4::zeros();
        if i > 0 {
            mem += (traj.c[0] * kernel.k[i] + traj.c[i] * kernel.k[0]) * 0.5;
            for j in 1..i {
                mem += traj.c[j] * kernel.k[i - j];
            }
            mem *= h;
        }
        let r = cdot[i] - traj.c[i] * x + mem;
        worst = worst.max(r.amax());
    }
    Ok(worst)
}

/// Fraction of the peak kernel norm allowed in the tail.
pub const TAIL_FRACTION: f64 = 0.01;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BmGenerator {
    pub m: Matrix4<f64>,
    /// Max kernel norm over the last 10% of lags.
    pub tail_norm: f64,
    pub peak_norm: f64,
    /// Estimate of the neglected `∫_T^∞ |K|`.
    pub truncation_bound: f64,
}

impl BmGenerator {
    /// Eigenvalues of the spatial 3×3 block of `M_BM`.
    pub fn spatial_eigenvalues(&self) -> Vec<C64> {
        let s = self.m.fixed_view::<3, 3>(1, 1).into_owned();
        s.complex_eigenvalues().iter().copied().collect()
    }

    /// `lim_{t→∞} exp(t M)`: row 0 is `(1, −m_0ᵀ M_s⁻¹)`, the rest vanish.
    pub fn stationary(&self) -> Result<Matrix4<f64>> {
        let ms = self.m.fixed_view::<3, 3>(1, 1).into_owned();
        let m0 = self.m.fixed_view::<1, 3>(0, 1).into_owned();
        let inv = ms.try_inverse().ok_or_else(|| Error::Unsupported("BM spatial generator is singular".into()))?;
        let w = -(m0 * inv);
        let mut out = Matrix4::zeros();
        out[(0, 0)] = 1.0;
        for j in 0..3 {
            out[(0, j + 1)] = w[j];
        }
        Ok(out)
    }
}

/// `M_BM = X − ∫₀^T K(s) ds`. Refuses kernels whose tail (last 10% of lags)
/// exceeds 1% of the peak.
pub fn bm_generator(x: &Matrix4<f64>, kernel: &KernelTrajectory) -> Result<BmGenerator> {
    let n = kernel.len();
    if n < 2 {
        return Err(Error::TooShort("kernel needs at least two lags".into()));
    }
    let peak = kernel.peak();
    let tail_start = n - (n / 10).max(1);
    let tail = kernel.norm_series[tail_start..].iter().copied().fold(0.0, f64::max);
    let span = kernel.lag(n - 1);
    // Decay rate of the norm between mid-grid and the end.
    let mid = kernel.norm_series[n / 2];
    let last = kernel.norm_series[n - 1];
    let rate = if mid > 0.0 && last > 0.0 && mid > last { (mid / last).ln() / (span - kernel.lag(n / 2)) } else { 0.0 };
    if peak > 0.0 && tail >= TAIL_FRACTION * peak {
        let extension = if rate > 0.0 { (tail / (TAIL_FRACTION * peak)).ln() / rate } else { span };
        return Err(Error::KernelNotDecayed { tail, peak, extension });
    }
    let integral = Matrix4::from_fn(|mu, nu| trapezoid(&kernel.entry(mu, nu), kernel.dt));
    let remaining = if rate > 0.0 { 1.0 / rate } else { span };
    Ok(BmGenerator { m: x - integral, tail_norm: tail, peak_norm: peak, truncation_bound: tail * remaining })
}

/// `C_BM(t_i) = exp(t_i M)` on `i·dt`, `i < n`.
pub fn bm_propagate(m: &Matrix4<f64>, dt: f64, n: usize) -> StcfTrajectory {
    let c = (0..n).map(|i| (m * (i as f64 * dt)).exp()).collect();
    StcfTrajectory::from_matrices(0.0, dt, c)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelTimescale {
    pub tau_k: f64,
    /// Channel `(μ, ν)` attaining the maximum.
    pub channel: (usize, usize),
}

/// Relative weight below which a channel counts as empty. Channels this weak
/// are dominated by the O(dt²) extraction noise in the tail.
pub const EMPTY_CHANNEL: f64 = 0.05;

/// `τ_K`: per channel the lag where `∫₀^τ |K_{μν}|` reaches `delta` of
/// `∫₀^T |K_{μν}|` (linear interpolation within a step), maximised over
/// channels. Channels carrying less than [`EMPTY_CHANNEL`] of the largest
/// total are skipped; `None` when the kernel vanishes.
pub fn kernel_timescale(kernel: &KernelTrajectory, delta: f64) -> Result<Option<KernelTimescale>> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid("delta", "must lie in (0, 1)"));
    }
    if kernel.len() < 2 {
        return Err(Error::TooShort("kernel needs at least two lags".into()));
    }
    let cumulative: Vec<((usize, usize), Vec<f64>)> = (0..16)
        .map(|c| {
            let (mu, nu) = (c / 4, c % 4);
            let abs: Vec<f64> = kernel.entry(mu, nu).iter().map(|v| v.abs()).collect();
            ((mu, nu), crate::numerics::cumulative_trapezoid(&abs, kernel.dt))
        })
        .collect();
    let max_total = cumulative.iter().map(|(_, c)| *c.last().unwrap()).fold(0.0, f64::max);
    if max_total == 0.0 {
        return Ok(None);
    }
    let mut best: Option<KernelTimescale> = None;
    for (channel, cum) in &cumulative {
        let total = *cum.last().unwrap();
        if total < EMPTY_CHANNEL * max_total {
            continue;
        }
        let target = delta * total;
        let i = cum.iter().position(|&v| v >= target).unwrap();
        let tau = if i == 0 {
            0.0
        } else {
            let frac = (target - cum[i - 1]) / (cum[i] - cum[i - 1]);
            kernel.lag(i - 1) + frac * kernel.dt
        };
        if best.is_none_or(|b| tau > b.tau_k) {
            best = Some(KernelTimescale { tau_k: tau, channel: *channel });
        }
    }
    Ok(best)
}
