//! Numerical core for beamforming ultrasound channel data that was sampled
//! below the Nyquist rate in time and on a sparse subset of array elements.
//!
//! The crate covers the delay geometry of a phased array, a point/speckle
//! channel-data simulator, time-domain delay-and-sum and minimum-variance
//! beamforming, exact Fourier-domain alignment through precomputed
//! distortion coefficients, assembly of degraded training cubes, a small
//! encoder-decoder network trained from scratch, and image-quality metrics.
//! Everything here is pure computation; file formats and the command line
//! live in the `snb` crate.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beamform;
pub mod error;
pub mod fft;
pub mod geometry;
pub mod metrics;
pub mod neural;
pub mod rng;
pub mod sampling;
pub mod simulate;

pub use error::{Error, Result};
pub use geometry::{AcquisitionConfig, ArrayGeometry, BeamLine, RfFrame};
