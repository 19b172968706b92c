use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::positive_variation;
use crate::stcf::{BlochVector, StcfTrajectory};

fn spatial(c: &nalgebra::Matrix4<f64>) -> Matrix3<f64> {
    c.fixed_view::<3, 3>(1, 1).into_owned()
}

/// `D(t) = ½ |Σ_i (v1_i − v2_i) C_ij(t)|` over spatial indices.
pub fn trace_distance_traj(v1: &BlochVector, v2: &BlochVector, traj: &StcfTrajectory) -> Vec<f64> {
    let d = Vector3::from(v1.spatial()) - Vector3::from(v2.spatial());
    traj.c.iter().map(|c| 0.5 * (spatial(c).transpose() * d).norm()).collect()
}

/// `n` uniformly distributed unit vectors: normalised Gaussian triples drawn
/// in order from ChaCha8 seeded with `seed`, so smaller sample sets are
/// prefixes of larger ones.
pub fn sample_unit_vectors(n: usize, seed: u64) -> Vec<[f64; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let g: [f64; 3] = [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
        let r = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
        if r > 1e-12 {
            out.push([g[0] / r, g[1] / r, g[2] / r]);
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlpResult {
    pub n_blp: f64,
    /// Maximising unit vector; the pair is `(v, −v)`.
    pub argmax: BlochVector,
    /// `D^v(t)` of the maximising pair.
    pub d_max: Vec<f64>,
    pub n_samples: usize,
    pub seed: u64,
}

/// Monte Carlo maximisation of the total positive variation of
/// `D^v(t) = |Σ_i v_i C_ij(t)|` over unit vectors `v`. Ties go to the
/// lowest sample index.
pub fn blp_measure(traj: &StcfTrajectory, n_samples: usize, seed: u64) -> Result<BlpResult> {
    if n_samples == 0 {
        return Err(Error::invalid("n_samples", "must be >= 1"));
    }
    // D^v(t)² = vᵀ G(t) v with G = C_s C_sᵀ.
    let gram: Vec<[f64; 6]> = traj
        .c
        .iter()
        .map(|c| {
            let s = spatial(c);
            let g = s * s.transpose();
            [g[(0, 0)], g[(1, 1)], g[(2, 2)], g[(0, 1)], g[(0, 2)], g[(1, 2)]]
        })
        .collect();
    let distance = |v: &[f64; 3]| -> Vec<f64> {
        gram.iter()
            .map(|g| {
                let q = g[0] * v[0] * v[0]
                    + g[1] * v[1] * v[1]
                    + g[2] * v[2] * v[2]
                    + 2.0 * (g[3] * v[0] * v[1] + g[4] * v[0] * v[2] + g[5] * v[1] * v[2]);
                q.max(0.0).sqrt()
            })
            .collect()
    };
    let samples = sample_unit_vectors(n_samples, seed);
    let scores: Vec<f64> = samples.par_iter().map(|v| positive_variation(&distance(v))).collect();
    let (best, n_blp) =
        scores.iter().enumerate().fold((0, f64::NEG_INFINITY), |acc, (i, &s)| if s > acc.1 { (i, s) } else { acc });
    let v = samples[best];
    Ok(BlpResult { n_blp, argmax: BlochVector::new(v[0], v[1], v[2]), d_max: distance(&v), n_samples, seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Matrix4;

    fn toy(f: impl Fn(f64) -> Matrix4<f64>, n: usize, dt: f64) -> StcfTrajectory {
        StcfTrajectory::from_matrices(0.0, dt, (0..n).map(|i| f(i as f64 * dt)).collect())
    }

    #[test]
    fn antipodal_start_is_one() {
        let traj = toy(|_| Matrix4::identity(), 3, 0.1);
        let d = trace_distance_traj(&BlochVector::new(0.0, 0.0, 1.0), &BlochVector::new(0.0, 0.0, -1.0), &traj);
        assert_eq!(d[0], 1.0);
    }

    #[test]
    fn monotone_decay_has_no_backflow() {
        let traj = toy(
            |t| {
                let mut m = Matrix4::identity() * (-t).exp();
                m[(0, 0)] = 1.0;
                m
            },
            200,
            0.05,
        );
        let r = blp_measure(&traj, 100, 3).unwrap();
        assert_eq!(r.n_blp, 0.0);
        assert!((r.argmax.spatial_norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn recurrence_is_detected() {
        // Coherence along x revives, z decays.
        let traj = toy(
            |t| Matrix4::from_diagonal(&nalgebra::Vector4::new(1.0, (2.0 * t).cos().abs(), 0.0, (-t).exp())),
            400,
            0.01,
        );
        let r = blp_measure(&traj, 500, 11).unwrap();
        assert!(r.n_blp > 0.9, "{}", r.n_blp);
        assert!(r.argmax.v[1].abs() > 0.9);
    }

    #[test]
    fn samples_are_unit_and_nested() {
        let a = sample_unit_vectors(10, 42);
        let b = sample_unit_vectors(50, 42);
        assert_eq!(a[..], b[..10]);
        for v in &b {
            assert!(((v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt() - 1.0).abs() < 1e-14);
        }
        assert_ne!(sample_unit_vectors(5, 43), b[..5]);
    }

    #[test]
    fn zero_samples_rejected() {
        let traj = toy(|_| Matrix4::identity(), 3, 0.1);
        assert!(blp_measure(&traj, 0, 1).is_err());
    }
}
