//! Volumetric CRF refinement on regular voxel grids.
//!
//! The crate implements a pairwise conditional random field over 3D label
//! fields with Gaussian edge potentials on bounded 6/18/26 neighborhoods,
//! mean-field inference, separable Gaussian filtering for blurred label
//! masks, masked weighted cross-entropy with per-class precision metrics,
//! and an exact Gibbs-enumeration oracle for validating the inference on
//! tiny grids.
//!
//! Modules:
//! - [`volume`]: grid types, file I/O, synthetic nodule volumes
//! - [`kernel`]: neighborhood systems and precomputed edge kernels
//! - [`meanfield`]: the inference loop
//! - [`gaussian`]: separable Gaussian filtering and label masks
//! - [`metrics`]: losses and precision metrics
//! - [`gibbs`]: exact enumeration oracle

pub mod error;
pub mod gaussian;
pub mod gibbs;
pub mod kernel;
pub mod meanfield;
pub mod metrics;
pub mod volume;

pub use error::{Error, Result};
