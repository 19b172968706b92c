//! Independent reference solutions shared by the integration tests and the
//! acceptance harness. Nothing here calls into the HEOM code.
#![allow(dead_code)]

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use driven_qubit::model::{spectral_density, DiscreteBath, ModelParams};
use driven_qubit::operator::{pauli, Matrix2c};
use driven_qubit::C64;
use gauss_quad::GaussLegendre;
use nalgebra::Matrix4;

fn gl(n: usize) -> GaussLegendre {
    GaussLegendre::new(NonZeroUsize::new(n).unwrap())
}

/// Repeated averaging of partial sums of an alternating series.
fn accelerate(mut s: Vec<f64>) -> f64 {
    while s.len() > 1 {
        s = s.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    }
    s[0]
}

/// `∫₀^∞ f(ω) dω` for an integrand oscillating like `cos ωt` or `sin ωt`,
/// summed over half-period panels with the last partial sums averaged.
fn oscillatory_integral(f: impl Fn(f64) -> f64, t: f64) -> f64 {
    let rule = gl(24);
    let width = PI / t;
    let (panels, tail_terms) = (600, 40);
    let mut sum = 0.0;
    let mut partial = Vec::with_capacity(tail_terms);
    for k in 0..panels {
        sum += rule.integrate(k as f64 * width, (k + 1) as f64 * width, &f);
        if k >= panels - tail_terms {
            partial.push(sum);
        }
    }
    accelerate(partial)
}

/// `C(t) = (1/π) ∫₀^∞ J(ω)[coth(βω/2) cos ωt − i sin ωt] dω` by quadrature.
pub fn correlation_quadrature(p: &ModelParams, t: f64) -> C64 {
    assert!(t > 0.0, "the real part diverges at t = 0");
    let coth = |w: f64| 1.0 / (0.5 * p.beta * w).tanh();
    let re = oscillatory_integral(|w| spectral_density(w, p) * coth(w) * (w * t).cos(), t) / PI;
    let im = -oscillatory_integral(|w| spectral_density(w, p) * (w * t).sin(), t) / PI;
    C64::new(re, im)
}

/// Pure-dephasing exponent `Γ(t) = (4/π) ∫ J coth(βω/2)(1 − cos ωt)/ω² dω`.
pub fn dephasing_exponent(p: &ModelParams, t: f64) -> f64 {
    let rule = gl(16);
    let f = |w: f64| {
        if w == 0.0 {
            return 0.0;
        }
        spectral_density(w, p) / (0.5 * p.beta * w).tanh() * (1.0 - (w * t).cos()) / (w * w)
    };
    let cutoff = 2000.0;
    let width = (PI / t).min(0.5);
    let n = (cutoff / width).ceil() as usize;
    let body: f64 = (0..n).map(|k| rule.integrate(k as f64 * width, (k + 1) as f64 * width, f)).sum();
    // Beyond the cutoff J coth/ω² → (η ω_c/π)/ω³ and the cosine averages out.
    let tail = p.eta * p.omega_c / PI / (2.0 * (n as f64 * width).powi(2));
    4.0 / PI * (body + tail)
}

fn expm(a: Matrix2c) -> Matrix2c {
    a.exp()
}

fn hamiltonian(p: &ModelParams, t: f64) -> Matrix2c {
    let eps = p.eps0 + p.epsd * (p.omega * t).cos();
    pauli(1) * C64::from(p.delta) + pauli(3) * C64::from(eps)
}

/// Time-ordered propagator of `H_s(t)` by fourth-order Magnus steps.
pub fn unitary_propagators(p: &ModelParams, dt: f64, n: usize, substeps: usize) -> Vec<Matrix2c> {
    let h = dt / substeps as f64;
    let (c1, c2) = (0.5 - 3f64.sqrt() / 6.0, 0.5 + 3f64.sqrt() / 6.0);
    let mi = C64::new(0.0, -1.0);
    let mut u = Matrix2c::identity();
    let mut out = vec![u];
    for i in 1..n {
        for s in 0..substeps {
            let t = (i - 1) as f64 * dt + s as f64 * h;
            let a1 = hamiltonian(p, t + c1 * h) * mi;
            let a2 = hamiltonian(p, t + c2 * h) * mi;
            let omega = (a1 + a2) * C64::from(0.5 * h) + (a2 * a1 - a1 * a2) * C64::from(3f64.sqrt() * h * h / 12.0);
            u = expm(omega) * u;
        }
        out.push(u);
    }
    out
}

/// `C_{μν}(t) = tr[U ½σ_μ U† σ_ν]` from a list of propagators.
pub fn unitary_stcf(props: &[Matrix2c]) -> Vec<Matrix4<f64>> {
    props
        .iter()
        .map(|u| Matrix4::from_fn(|mu, nu| (u * pauli(mu) * u.adjoint() * pauli(nu)).trace().re * 0.5))
        .collect()
}

/// `⟨σ_z⟩(t)` from the second-order time-convolutionless master equation
/// driven by the correlation function of a discretised bath:
///
/// ```text
/// ρ̇ = −i[H, ρ] − [σ_z, Λ(t)ρ] + [σ_z, ρΛ(t)†],  Λ(t) = ∫₀ᵗ C(s) σ_z(−s) ds
/// ```
///
/// Undriven Hamiltonian only. Returns samples on `i·dt`, `i < n`.
pub fn tcl2_sigma_z(
    p: &ModelParams,
    bath: &DiscreteBath,
    rho0: Matrix2c,
    dt: f64,
    n: usize,
    substeps: usize,
) -> Vec<f64> {
    assert_eq!(p.epsd, 0.0);
    let h = dt / substeps as f64;
    let hs = hamiltonian(p, 0.0);
    let sz = pauli(3);
    let heis = |s: f64| {
        let u = expm(hs * C64::new(0.0, -s));
        u * sz * u.adjoint()
    };
    // Λ on the half-step grid.
    let rule = gl(8);
    let n_half = 2 * (n - 1) * substeps + 1;
    let mut lambda = Vec::with_capacity(n_half);
    let mut acc = Matrix2c::zeros();
    lambda.push(acc);
    for j in 1..n_half {
        let (a, b) = ((j - 1) as f64 * 0.5 * h, j as f64 * 0.5 * h);
        for comp in 0..4 {
            let (r, c) = (comp / 2, comp % 2);
            let re = rule.integrate(a, b, |s| (bath.correlation(s) * heis(s)[(r, c)]).re);
            let im = rule.integrate(a, b, |s| (bath.correlation(s) * heis(s)[(r, c)]).im);
            acc[(r, c)] += C64::new(re, im);
        }
        lambda.push(acc);
    }
    let mi = C64::new(0.0, -1.0);
    let rhs = |j: usize, rho: &Matrix2c| {
        let l = lambda[j];
        (hs * rho - rho * hs) * mi - (sz * l * rho - l * rho * sz) + (sz * rho * l.adjoint() - rho * l.adjoint() * sz)
    };
    let mut rho = rho0;
    let mut out = vec![(rho * sz).trace().re];
    for i in 1..n {
        for s in 0..substeps {
            let j = 2 * ((i - 1) * substeps + s);
            let k1 = rhs(j, &rho);
            let k2 = rhs(j + 1, &(rho + k1 * C64::from(0.5 * h)));
            let k3 = rhs(j + 1, &(rho + k2 * C64::from(0.5 * h)));
            let k4 = rhs(j + 2, &(rho + k3 * C64::from(h)));
            rho += (k1 + k2 * C64::from(2.0) + k3 * C64::from(2.0) + k4) * C64::from(h / 6.0);
        }
        out.push((rho * sz).trace().re);
    }
    out
}

/// `exp(A)` for a 2×2 matrix via `A = a₀𝟙 + a·σ`.
fn expm2(a: &Matrix2c) -> Matrix2c {
    let a0 = (a[(0, 0)] + a[(1, 1)]) * 0.5;
    let az = (a[(0, 0)] - a[(1, 1)]) * 0.5;
    let ax = (a[(0, 1)] + a[(1, 0)]) * 0.5;
    let ay = (a[(1, 0)] - a[(0, 1)]) * C64::new(0.0, -0.5);
    let s = (ax * ax + ay * ay + az * az).sqrt();
    let (ch, sh) = if s.norm() < 1e-8 {
        (C64::from(1.0) + s * s * 0.5, C64::from(1.0) + s * s / 6.0)
    } else {
        (s.cosh(), s.sinh() / s)
    };
    let e = a0.exp();
    let m = pauli(1) * ax + pauli(2) * ay + pauli(3) * az;
    (Matrix2c::identity() * ch + m * sh) * e
}

/// `⟨σ_z⟩(t)` for the undriven qubit coupled to a discretised bath, as the
/// average over a stochastic Liouville equation that is exact for Gaussian
/// baths:
///
/// ```text
/// ρ̇ = −i[H, ρ] + i x(t)[σ_z, ρ] + (i/2) ν(t){σ_z, ρ}
/// E[x(t)x(s)] = Re C(t − s),  E[x(t)ν(s)] = 2iθ(t − s) Im C(t − s),  E[νν] = 0
/// ```
///
/// `Re C` comes from thermally sampled mode amplitudes. `ν = a(W₁ + iW₂)` is
/// circular white noise, `x` picks up the causal filter of `W₂` and an
/// imaginary copy of the same filter applied to independent noise, which
/// cancels its contribution to `E[xx]`.
#[allow(clippy::too_many_arguments)]
pub fn stochastic_sigma_z(
    p: &ModelParams,
    bath: &DiscreteBath,
    rho0: Matrix2c,
    dt: f64,
    n: usize,
    substeps: usize,
    samples: usize,
    seed: u64,
) -> Vec<f64> {
    use rand::{Rng, SeedableRng};
    use rand_distr::StandardNormal;
    assert_eq!(p.epsd, 0.0);
    let h = dt / substeps as f64;
    let steps = (n - 1) * substeps;
    let scale = 0.25;
    let f = bath.frequencies.len();
    let thermal: Vec<f64> = bath
        .frequencies
        .iter()
        .zip(&bath.couplings)
        .map(|(&w, &c)| c * (1.0 / (0.5 * bath.beta * w).tanh()).sqrt())
        .collect();
    let c2: Vec<f64> = bath.couplings.iter().map(|c| c * c).collect();
    // Step averages of cos/sin, and midpoint values.
    let mut cos_avg = vec![0.0; steps * f];
    let mut sin_avg = vec![0.0; steps * f];
    let mut cos_mid = vec![0.0; steps * f];
    let mut sin_mid = vec![0.0; steps * f];
    for k in 0..steps {
        let (t0, t1) = (k as f64 * h, (k + 1) as f64 * h);
        for (a, &w) in bath.frequencies.iter().enumerate() {
            cos_avg[k * f + a] = ((w * t1).sin() - (w * t0).sin()) / (w * h);
            sin_avg[k * f + a] = ((w * t0).cos() - (w * t1).cos()) / (w * h);
            let tm = 0.5 * (t0 + t1);
            cos_mid[k * f + a] = (w * tm).cos();
            sin_mid[k * f + a] = (w * tm).sin();
        }
    }
    let hs = hamiltonian(p, 0.0);
    let sz = pauli(3);
    let i = C64::new(0.0, 1.0);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut acc = vec![0.0; n];
    let (mut xs, mut ys) = (vec![0.0; f], vec![0.0; f]);
    let (mut s2, mut t2, mut s3, mut t3) = (vec![0.0; f], vec![0.0; f], vec![0.0; f], vec![0.0; f]);
    for _ in 0..samples {
        for a in 0..f {
            xs[a] = rng.sample::<f64, _>(StandardNormal) * thermal[a];
            ys[a] = rng.sample::<f64, _>(StandardNormal) * thermal[a];
        }
        s2.fill(0.0);
        t2.fill(0.0);
        s3.fill(0.0);
        t3.fill(0.0);
        let mut rho = rho0;
        acc[0] += (rho * sz).trace().re;
        for k in 0..steps {
            let (cm, sm) = (&cos_mid[k * f..(k + 1) * f], &sin_mid[k * f..(k + 1) * f]);
            let (ca, sa) = (&cos_avg[k * f..(k + 1) * f], &sin_avg[k * f..(k + 1) * f]);
            let (mut u, mut x2, mut v) = (0.0, 0.0, 0.0);
            for a in 0..f {
                u += xs[a] * ca[a] + ys[a] * sa[a];
                // Im C(τ) = −Σ c² sin ωτ, so x₂ = −(2/a) Σ c² [sin ωt S − cos ωt T].
                x2 -= c2[a] * (sm[a] * s2[a] - cm[a] * t2[a]);
                v -= c2[a] * (sm[a] * s3[a] - cm[a] * t3[a]);
            }
            x2 *= 2.0 / scale;
            v *= 2.0 / scale;
            let sq = h.sqrt();
            let (w1, w2, w3): (f64, f64, f64) =
                (rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal));
            let (dw1, dw2, dw3) = (w1 * sq, w2 * sq, w3 * sq);
            let x = C64::new(u + x2, v);
            let nu = C64::new(dw1, dw2) * (scale / h);
            let a_left = (hs * (-i) + sz * (i * x) + sz * (i * nu * 0.5)) * C64::from(h);
            let a_right = (hs * i - sz * (i * x) + sz * (i * nu * 0.5)) * C64::from(h);
            rho = expm2(&a_left) * rho * expm2(&a_right);
            for a in 0..f {
                s2[a] += cm[a] * dw2;
                t2[a] += sm[a] * dw2;
                s3[a] += cm[a] * dw3;
                t3[a] += sm[a] * dw3;
            }
            if (k + 1) % substeps == 0 {
                acc[(k + 1) / substeps] += (rho * sz).trace().re;
            }
        }
    }
    acc.iter().map(|s| s / samples as f64).collect()
}
