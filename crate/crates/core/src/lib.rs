//! Driven spin-boson qubit: numerically exact HEOM propagation and a set of
//! non-Markovianity diagnostics computed from the spin time-correlation matrix.
//!
//! The pipeline is
//!
//! 1. [`model`]: Hamiltonian, Drude spectral density and its exponential
//!    bath-correlation expansion.
//! 2. [`heom`]: hierarchical equations of motion for the reduced density
//!    matrix and its auxiliary density operators.
//! 3. [`stcf`]: the 4×4 correlation matrix `C_{μν}(t)` assembled from four
//!    HEOM runs, plus Bloch-vector propagation and long-time checks.
//! 4. [`diagnostics`]: trace distance / BLP measure, accessible volume,
//!    damping and decoherence matrices, canonical rates.
//! 5. [`gqme`]: Nakajima–Zwanzig memory-kernel extraction, closure residual,
//!    Born–Markov reduction and kernel timescale.

// `!(x <= limit)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod gqme;
pub mod heom;
pub mod io;
pub mod kv;
pub mod model;
pub mod numerics;
pub mod operator;
pub mod stcf;

pub use error::{Error, Result};
pub use heom::{HeomConfig, InitialCondition, Terminator};
pub use model::{BathExpansion, ModelParams};
pub use operator::TwoLevelOperator;
pub use stcf::{BlochVector, StcfTrajectory};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;

/// Version string echoed into metadata sidecars and manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
