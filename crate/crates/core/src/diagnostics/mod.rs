//! Non-Markovianity witnesses computed from an [`StcfTrajectory`]:
//! trace distance and the BLP measure, accessible volume, and the canonical
//! (time-local Lindblad) decomposition.
//!
//! [`StcfTrajectory`]: crate::stcf::StcfTrajectory

mod canonical;
mod distance;
mod volume;

pub use canonical::{
    canonical_decomposition, canonical_rates, damping_matrix, damping_series, decoherence_matrix, eternal_nm_detector,
    full_decoherence_matrix, CanonicalDecomposition, EternalReport, RateTrajectory, CONDITION_LIMIT,
    DEFAULT_NEGATIVITY_TOLERANCE,
};
pub use distance::{blp_measure, sample_unit_vectors, trace_distance_traj, BlpResult};
pub use volume::{nv_measure, volume_from_damping, volume_traj, VolumeTrajectory, VOLUME_THRESHOLD};
