//! Driven spin-boson Hamiltonian, Drude spectral density and the exponential
//! expansion of the bath correlation function.
//!
//! Units: ħ = 1 and every energy/frequency is measured in units of the
//! tunnelling constant Δ.
//!
//! The spectral density is `J(ω) = (η/π) ω_c ω / (ω_c² + ω²)` and the bath
//! correlation function of `B = Σ_α c_α (a_α + a_α†)` is
//!
//! ```text
//! C(t) = (1/π) ∫₀^∞ dω J(ω) [coth(βω/2) cos ωt − i sin ωt]
//! ```
//!
//! With `λ = η/(2π)` this has the Drude–Lorentz form and decomposes into
//! decaying exponentials `C(t) = Σ_k c_k e^{−ν_k t}`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kv::{format_f64, KeyValues};
use crate::operator::{pauli, TwoLevelOperator};
use crate::C64;

/// Physical constants of the driven spin-boson model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Tunnelling (state-state) coupling Δ.
    pub delta: f64,
    /// Static bias ε₀.
    pub eps0: f64,
    /// Drive amplitude ε_d.
    pub epsd: f64,
    /// Drive frequency Ω.
    pub omega: f64,
    /// System-bath coupling η.
    pub eta: f64,
    /// Drude cutoff ω_c.
    pub omega_c: f64,
    /// Inverse temperature β.
    pub beta: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self { delta: 1.0, eps0: 0.0, epsd: 0.0, omega: 0.0, eta: 0.0, omega_c: 1.0, beta: 1.0 }
    }
}

pub const MODEL_KEYS: [&str; 7] = ["delta", "eps0", "epsd", "omega", "eta", "omega_c", "beta"];

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let finite = |key: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(key, "must be finite"))
            }
        };
        finite("delta", self.delta)?;
        finite("eps0", self.eps0)?;
        finite("epsd", self.epsd)?;
        finite("omega", self.omega)?;
        finite("eta", self.eta)?;
        finite("omega_c", self.omega_c)?;
        finite("beta", self.beta)?;
        if self.delta < 0.0 {
            return Err(Error::invalid("delta", "must be >= 0"));
        }
        if self.epsd < 0.0 {
            return Err(Error::invalid("epsd", "must be >= 0"));
        }
        if self.omega < 0.0 {
            return Err(Error::invalid("omega", "must be >= 0"));
        }
        if self.eta < 0.0 {
            return Err(Error::invalid("eta", "must be >= 0"));
        }
        if self.omega_c <= 0.0 {
            return Err(Error::invalid("omega_c", "must be > 0"));
        }
        if self.beta <= 0.0 {
            return Err(Error::invalid("beta", "must be > 0"));
        }
        Ok(())
    }

    /// Reads the model keys from a config, falling back to defaults for
    /// missing ones.
    pub fn from_kv(kv: &KeyValues) -> Result<Self> {
        let d = Self::default();
        let p = Self {
            delta: kv.parse_or("delta", d.delta)?,
            eps0: kv.parse_or("eps0", d.eps0)?,
            epsd: kv.parse_or("epsd", d.epsd)?,
            omega: kv.parse_or("omega", d.omega)?,
            eta: kv.parse_or("eta", d.eta)?,
            omega_c: kv.parse_or("omega_c", d.omega_c)?,
            beta: kv.parse_or("beta", d.beta)?,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn write_kv(&self, kv: &mut KeyValues) {
        kv.set("delta", format_f64(self.delta));
        kv.set("eps0", format_f64(self.eps0));
        kv.set("epsd", format_f64(self.epsd));
        kv.set("omega", format_f64(self.omega));
        kv.set("eta", format_f64(self.eta));
        kv.set("omega_c", format_f64(self.omega_c));
        kv.set("beta", format_f64(self.beta));
    }

    pub fn to_kv_text(&self) -> String {
        let mut kv = KeyValues::new();
        self.write_kv(&mut kv);
        kv.to_text()
    }

    /// True when the Hamiltonian does not depend on time.
    pub fn is_stationary(&self) -> bool {
        self.epsd == 0.0 || self.omega == 0.0
    }

    /// Upper bound on `|ε(t)|`.
    pub fn max_bias(&self) -> f64 {
        self.eps0.abs() + self.epsd
    }
}

/// `ε(t) = ε₀ + ε_d cos(Ωt)`.
pub fn drive_bias(t: f64, p: &ModelParams) -> f64 {
    p.eps0 + p.epsd * (p.omega * t).cos()
}

/// `H_s(t) = Δσ_x + ε(t)σ_z`.
pub fn system_hamiltonian(t: f64, p: &ModelParams) -> TwoLevelOperator {
    let eps = drive_bias(t, p);
    let m = pauli(1) * C64::new(p.delta, 0.0) + pauli(3) * C64::new(eps, 0.0);
    TwoLevelOperator { matrix: m, hermitian: true }
}

/// `J(ω) = (η/π) ω_c ω / (ω_c² + ω²)`.
pub fn spectral_density(omega: f64, p: &ModelParams) -> f64 {
    p.eta / PI * p.omega_c * omega / (p.omega_c * p.omega_c + omega * omega)
}

/// Reorganisation-like prefactor λ of the Drude–Lorentz form, `λ = η/(2π)`.
fn drude_lambda(p: &ModelParams) -> f64 {
    p.eta / (2.0 * PI)
}

/// One exponential term `c e^{−ν t}` of the bath correlation function.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpTerm {
    pub amplitude: C64,
    pub rate: f64,
}

/// Drude pole plus `n_matsubara` Matsubara terms, with the white-noise
/// residue of the dropped Matsubara tail.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BathExpansion {
    pub terms: Vec<ExpTerm>,
    pub n_matsubara: usize,
    /// `Σ_{k>K} c_k/ν_k`; the dropped tail acts as `2·delta_term·δ(t)`.
    pub delta_term: f64,
}

impl BathExpansion {
    /// `Σ_k c_k e^{−ν_k t}` (the closure residue is a δ at t=0 and is not
    /// included).
    pub fn correlation(&self, t: f64) -> C64 {
        self.terms.iter().map(|term| term.amplitude * (-term.rate * t).exp()).sum()
    }

    pub fn max_rate(&self) -> f64 {
        self.terms.iter().map(|t| t.rate).fold(0.0, f64::max)
    }

    pub fn is_decoupled(&self) -> bool {
        self.terms.iter().all(|t| t.amplitude == C64::new(0.0, 0.0)) && self.delta_term == 0.0
    }
}

/// Matsubara decomposition of the Drude correlation function.
///
/// Terms, with `λ = η/(2π)` and `ν_k = 2πk/β`:
///
/// ```text
/// c_0 = λ ω_c [cot(βω_c/2) − i],            ν_0 = ω_c
/// c_k = (4λω_c/β) ν_k / (ν_k² − ω_c²),       k = 1..K
/// ```
///
/// The tail `k > K` is summed in closed form,
/// `Σ_{k≥1} c_k/ν_k = λ[2/(βω_c) − cot(βω_c/2)]`.
pub fn bath_expansion(p: &ModelParams, n_matsubara: usize) -> Result<BathExpansion> {
    p.validate()?;
    let lambda = drude_lambda(p);
    let wc = p.omega_c;
    let beta = p.beta;
    let half = 0.5 * beta * wc;
    let cot = half.cos() / half.sin();

    let mut terms = Vec::with_capacity(n_matsubara + 1);
    terms.push(ExpTerm { amplitude: C64::new(lambda * wc * cot, -lambda * wc), rate: wc });
    let mut partial = 0.0;
    for k in 1..=n_matsubara {
        let nu = 2.0 * PI * k as f64 / beta;
        if (nu - wc).abs() < 1e-8 * wc {
            return Err(Error::invalid("beta", format!("Matsubara frequency {k} coincides with omega_c")));
        }
        let c = 4.0 * lambda * wc / beta * nu / (nu * nu - wc * wc);
        partial += c / nu;
        terms.push(ExpTerm { amplitude: C64::new(c, 0.0), rate: nu });
    }
    let delta_term = if p.eta == 0.0 { 0.0 } else { lambda * (2.0 / (beta * wc) - cot) - partial };

    let drude = terms[0].amplitude.norm();
    if p.eta > 0.0 && (delta_term * wc).abs() > 0.1 * drude {
        return Err(Error::InsufficientMatsubara { residue: delta_term * wc, drude });
    }
    Ok(BathExpansion { terms, n_matsubara, delta_term })
}

/// Finite set of harmonic modes sampled from the Drude spectral density.
///
/// Mode `α = 1..F` sits at `ω_α = ω_c tan(π(α − ½)/(2F))`, which spaces the
/// modes uniformly in `∫ J(ω)/ω dω`, and carries `c_α² = η ω_α/(2πF)` so that
/// `Σ_α c_α² δ(ω − ω_α)` approximates `J(ω)/π`. Used only as an independent
/// reference for weak-coupling checks.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteBath {
    pub frequencies: Vec<f64>,
    pub couplings: Vec<f64>,
    pub beta: f64,
}

impl DiscreteBath {
    pub fn drude(p: &ModelParams, n_modes: usize) -> Self {
        let f = n_modes as f64;
        let frequencies: Vec<f64> =
            (1..=n_modes).map(|a| p.omega_c * (PI * (a as f64 - 0.5) / (2.0 * f)).tan()).collect();
        let couplings = frequencies.iter().map(|w| (p.eta * w / (2.0 * PI * f)).sqrt()).collect();
        Self { frequencies, couplings, beta: p.beta }
    }

    /// `Σ_α c_α² [coth(βω_α/2) cos ω_α t − i sin ω_α t]`.
    pub fn correlation(&self, t: f64) -> C64 {
        self.frequencies
            .iter()
            .zip(&self.couplings)
            .map(|(&w, &c)| {
                let coth = 1.0 / (0.5 * self.beta * w).tanh();
                C64::new(coth * (w * t).cos(), -(w * t).sin()) * (c * c)
            })
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params() -> ModelParams {
        ModelParams { beta: 0.3, eta: 1.0, omega_c: 1.0, ..Default::default() }
    }

    #[test]
    fn drive_bias_examples() {
        let p = ModelParams { eps0: 0.0, epsd: 1.0, omega: 3.7, ..Default::default() };
        assert_eq!(drive_bias(0.0, &p), 1.0);
        let p = ModelParams { eps0: 1.0, epsd: 1.0, omega: 1.0, ..Default::default() };
        assert_relative_eq!(drive_bias(PI / 2.0, &p), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn hamiltonian_limits() {
        let p = ModelParams { delta: 1.0, ..Default::default() };
        assert!((system_hamiltonian(0.3, &p).matrix - pauli(1)).norm() < 1e-15);
        let p = ModelParams { delta: 0.0, eps0: 1.0, ..Default::default() };
        assert!((system_hamiltonian(0.3, &p).matrix - pauli(3)).norm() < 1e-15);
    }

    #[test]
    fn hamiltonian_eigenvalues() {
        let p = ModelParams { delta: 0.7, eps0: 0.4, epsd: 1.2, omega: 2.0, ..Default::default() };
        for &t in &[0.0, 0.4, 1.9] {
            let h = system_hamiltonian(t, &p);
            assert!(h.hermitian);
            let e = (p.delta.powi(2) + drive_bias(t, &p).powi(2)).sqrt();
            let [lo, hi] = h.hermitian_eigenvalues();
            assert_relative_eq!(lo, -e, epsilon = 1e-14);
            assert_relative_eq!(hi, e, epsilon = 1e-14);
        }
    }

    #[test]
    fn spectral_density_examples() {
        let p = ModelParams { eta: 1.0, omega_c: 1.0, ..Default::default() };
        assert_eq!(spectral_density(0.0, &p), 0.0);
        assert_relative_eq!(spectral_density(1.0, &p), 1.0 / (2.0 * PI), epsilon = 1e-15);
        let p = ModelParams { eta: 0.8, omega_c: 2.5, ..Default::default() };
        let peak = spectral_density(2.5, &p);
        assert_relative_eq!(peak, 0.8 / (2.0 * PI), epsilon = 1e-15);
        for &w in &[0.1, 1.0, 2.4, 2.6, 10.0] {
            assert!(spectral_density(w, &p) < peak);
        }
    }

    #[test]
    fn decoupled_bath_has_zero_amplitudes() {
        let p = ModelParams { eta: 0.0, ..params() };
        let bath = bath_expansion(&p, 2).unwrap();
        assert!(bath.is_decoupled());
        assert_eq!(bath.terms.len(), 3);
    }

    #[test]
    fn matsubara_frequencies() {
        for &beta in &[0.3, 1.6, 5.0] {
            let p = ModelParams { beta, ..params() };
            let bath = bath_expansion(&p, 4).unwrap();
            assert_eq!(bath.terms[0].rate, 1.0);
            assert_relative_eq!(bath.terms[1].rate, 2.0 * PI / beta, epsilon = 1e-14);
            // cot(βω_c/2) changes sign at βω_c = π.
            assert_eq!(bath.terms[0].amplitude.re > 0.0, beta < PI);
        }
    }

    #[test]
    fn imaginary_part_is_single_exponential() {
        let p = ModelParams { eta: 0.6, omega_c: 1.7, beta: 1.1, ..Default::default() };
        let bath = bath_expansion(&p, 3).unwrap();
        for &t in &[0.0, 0.5, 3.0] {
            let im = bath.correlation(t).im;
            assert_relative_eq!(im, -p.eta / (2.0 * PI) * 1.7 * (-1.7 * t).exp(), epsilon = 1e-14);
        }
    }

    #[test]
    fn tail_residue_shrinks_with_depth() {
        let p = ModelParams { beta: 1.6, eta: 1.0, ..Default::default() };
        let r: Vec<f64> = (1..6).map(|k| bath_expansion(&p, k).unwrap().delta_term.abs()).collect();
        assert!(r.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn deep_cold_bath_needs_more_matsubara_terms() {
        let p = ModelParams { beta: 40.0, eta: 1.0, omega_c: 1.0, ..Default::default() };
        assert!(matches!(bath_expansion(&p, 0), Err(Error::InsufficientMatsubara { .. })));
    }

    #[test]
    fn config_roundtrip() {
        let p = ModelParams { delta: 1.0, eps0: 0.25, epsd: 1.0, omega: 7.5, eta: 0.1, omega_c: 1.0, beta: 1.6 };
        let kv = KeyValues::parse(&p.to_kv_text()).unwrap();
        assert_eq!(ModelParams::from_kv(&kv).unwrap(), p);
    }

    #[test]
    fn invalid_params_name_key() {
        let kv = KeyValues::parse("beta = -1").unwrap();
        let err = ModelParams::from_kv(&kv).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter { ref key, .. } if key == "beta"));
    }

    #[test]
    fn discrete_bath_reorganisation() {
        // Σ c_α²/ω_α must equal (1/π)∫ J(ω)/ω dω = η/(2π).
        let p = ModelParams { eta: 0.3, ..params() };
        let bath = DiscreteBath::drude(&p, 80);
        let s: f64 = bath.frequencies.iter().zip(&bath.couplings).map(|(w, c)| c * c / w).sum();
        assert_relative_eq!(s, 0.3 / (2.0 * PI), epsilon = 1e-12);
    }
}
