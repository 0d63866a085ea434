//! Design, simulation, reconstruction and evaluation toolkit for
//! multi-level green-noise phase masks in coded-diffraction-pattern
//! Fourier phase retrieval.
//!
//! - [`mask_design`]: bandpass templates and the two-stage optimization
//!   (augmented-Lagrangian gradient descent, then raster-order codebook
//!   quantization).
//! - [`baseline`]: white-noise and binary green-noise comparison schemes.
//! - [`optics_sim`]: exact discrete CDP measurements and a supersampled
//!   optical emulation with out-of-band energy loss, SLM dead zones,
//!   photon noise and sensor quantization.
//! - [`reconstruct`]: TV-MAP ADMM phase retrieval and phase alignment.
//! - [`metrics`]: η, power spectra, local entropy, phase PSNR/SSIM.
//! - [`io`]: OMSK/OMSI containers, PGM images, raw arrays, sidecars.

pub mod baseline;
pub mod error;
pub mod fft;
pub mod field;
pub mod images;
pub mod io;
pub mod mask_design;
pub mod metrics;
pub mod optics_sim;
pub mod reconstruct;

pub use error::{Error, Result};
pub use field::{ComplexField, PhaseField};
