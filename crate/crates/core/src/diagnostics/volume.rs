use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::numerics::{positive_variation, Differencing};
use crate::stcf::StcfTrajectory;

/// `V(t)` level that ends the invertibility window.
pub const VOLUME_THRESHOLD: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeTrajectory {
    pub start_time: f64,
    pub dt: f64,
    pub v: Vec<f64>,
    /// First crossing of [`VOLUME_THRESHOLD`], linearly interpolated.
    pub tau_th: Option<f64>,
}

impl VolumeTrajectory {
    pub fn time(&self, i: usize) -> f64 {
        self.start_time + i as f64 * self.dt
    }

    /// Number of leading grid points with `t ≤ τ_th`.
    pub fn window_len(&self) -> usize {
        match self.tau_th {
            None => self.v.len(),
            Some(tau) => self.v.iter().enumerate().take_while(|&(i, _)| self.time(i) <= tau).count(),
        }
    }
}

/// `V(t) = |det Cᵀ(t)|`.
pub fn volume_traj(traj: &StcfTrajectory) -> VolumeTrajectory {
    let v: Vec<f64> = traj.c.iter().map(|c| c.determinant().abs()).collect();
    let tau_th = v.windows(2).enumerate().find_map(|(i, w)| {
        (w[0] > VOLUME_THRESHOLD && w[1] <= VOLUME_THRESHOLD).then(|| {
            let frac = (w[0] - VOLUME_THRESHOLD) / (w[0] - w[1]);
            traj.time(i) + frac * traj.dt
        })
    });
    let tau_th = if v.first().is_some_and(|&v0| v0 <= VOLUME_THRESHOLD) { Some(traj.start_time) } else { tau_th };
    VolumeTrajectory { start_time: traj.start_time, dt: traj.dt, v, tau_th }
}

/// `(1/V(0)) Σ max(0, V(t_{i+1}) − V(t_i))`.
pub fn nv_measure(vol: &VolumeTrajectory) -> f64 {
    match vol.v.first() {
        Some(&v0) if v0 > 0.0 => positive_variation(&vol.v) / v0,
        _ => 0.0,
    }
}

/// `V(0)·exp(∫₀ᵗ tr Ξ)` on the invertibility window, trapezoidal.
pub fn volume_from_damping(traj: &StcfTrajectory, scheme: Differencing) -> Result<Vec<f64>> {
    let vol = volume_traj(traj);
    let n = vol.window_len();
    let xi = super::damping_series(&traj.truncated(n.max(scheme.min_samples())), scheme)?;
    let tr: Vec<f64> = xi.iter().map(|m| m.trace()).collect();
    let v0 = vol.v[0];
    Ok(scheme.integrate(&tr, traj.dt).into_iter().take(n).map(|s| v0 * s.exp()).collect())
}
