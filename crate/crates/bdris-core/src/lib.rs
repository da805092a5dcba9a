//! Physics-compliant modeling and optimization of active beyond-diagonal
//! reconfigurable intelligent surfaces (BD-RIS).
//!
//! An active BD-RIS is an `N_I`-element surface whose elements are joined
//! through a reconfigurable impedance network and backed by reflection-type
//! amplifiers, so its scattering matrix `Θ` need not be diagonal and may have
//! gain larger than one. The crate covers the full stack needed for
//! link-level studies:
//!
//! * [`netcore`] — multiport scattering algebra: assembly of `Θ` from the
//!   impedance-network blocks, architecture constraint sets
//!   (single/group/fully-connected, reciprocal or not), Takagi factorization,
//!   and the general and simplified end-to-end channel models.
//! * [`channel`] — seeded Rayleigh/Rician fading with 3GPP-style distance
//!   path loss and reproducible per-(seed, trial, link) random streams.
//! * [`siso`] — closed-form SISO optimizers for active D-RIS and BD-RIS,
//!   asymptotic SNR scaling laws and active/passive crossover element counts.
//! * [`mimo`] — the iterative WMMSE + QCQP spectral-efficiency maximizer for
//!   active BD-RIS aided MIMO links.
//! * [`baselines`] — passive RIS baselines driven by Riemannian
//!   conjugate-gradient optimization on block-unitary manifolds.
//!
//! All operations are pure functions of their inputs; values are immutable
//! after construction and safe to share across threads.

pub mod baselines;
pub mod channel;
pub mod error;
pub mod linalg;
pub mod mimo;
pub mod netcore;
pub mod siso;
#[cfg(test)]
pub(crate) mod testutil;
pub mod units;

pub use error::{Error, Result};

/// Dense complex matrix used throughout the crate.
pub type CMat = nalgebra::DMatrix<num_complex::Complex64>;
/// Dense complex column vector.
pub type CVec = nalgebra::DVector<num_complex::Complex64>;
/// Dense complex row vector.
pub type CRowVec = nalgebra::RowDVector<num_complex::Complex64>;
/// Complex scalar.
pub type C64 = num_complex::Complex64;
