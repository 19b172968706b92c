//! 2×2 operators on the qubit Hilbert space and the Pauli basis.

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::C64;

pub type Matrix2c = Matrix2<C64>;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Pauli matrix `σ_μ`, `μ ∈ {0, x, y, z} = {0, 1, 2, 3}`; `σ_0` is the identity.
pub fn pauli(mu: usize) -> Matrix2c {
    match mu {
        0 => Matrix2c::new(ONE, ZERO, ZERO, ONE),
        1 => Matrix2c::new(ZERO, ONE, ONE, ZERO),
        2 => Matrix2c::new(ZERO, -I, I, ZERO),
        3 => Matrix2c::new(ONE, ZERO, ZERO, -ONE),
        _ => panic!("Pauli index {mu} out of range"),
    }
}

/// Largest element of `|A − A†|`.
pub fn anti_hermitian_residual(a: &Matrix2c) -> f64 {
    (a - a.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Pauli coefficients `tr[σ_μ A]` for μ = 0..4.
pub fn pauli_traces(a: &Matrix2c) -> [C64; 4] {
    std::array::from_fn(|mu| (pauli(mu) * a).trace())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoLevelOperator {
    pub matrix: Matrix2c,
    pub hermitian: bool,
}

impl TwoLevelOperator {
    /// Wraps a matrix, setting the Hermitian flag when `|A − A†| < 1e-12`.
    pub fn new(matrix: Matrix2c) -> Self {
        let hermitian = anti_hermitian_residual(&matrix) < 1e-12;
        Self { matrix, hermitian }
    }

    /// `(1/2)·σ_μ`, the operator whose propagation yields row μ of the STCF.
    pub fn half_pauli(mu: usize) -> Self {
        Self::new(pauli(mu) * C64::new(0.5, 0.0))
    }

    /// `(1/2)(𝟙 + v·σ)`.
    pub fn from_bloch(v: [f64; 3]) -> Self {
        let mut m = pauli(0);
        for (i, &vi) in v.iter().enumerate() {
            m += pauli(i + 1) * C64::new(vi, 0.0);
        }
        Self::new(m * C64::new(0.5, 0.0))
    }

    /// Real-linear combination `Σ_μ w_μ σ_μ`.
    pub fn from_pauli_coefficients(w: [f64; 4]) -> Self {
        let mut m = Matrix2c::zeros();
        for (mu, &wm) in w.iter().enumerate() {
            m += pauli(mu) * C64::new(wm, 0.0);
        }
        Self::new(m)
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// Eigenvalues of a Hermitian operator, ascending.
    pub fn hermitian_eigenvalues(&self) -> [f64; 2] {
        let m = &self.matrix;
        let mean = 0.5 * (m[(0, 0)].re + m[(1, 1)].re);
        let diff = 0.5 * (m[(0, 0)].re - m[(1, 1)].re);
        let r = (diff * diff + m[(0, 1)].norm_sqr()).sqrt();
        [mean - r, mean + r]
    }
}
