//! Correlated spiral imaging engine: Laguerre-Gauss mode decomposition of
//! opaque objects, joint OAM coincidence spectra, mutual information, and
//! image reconstruction from the transition-amplitude table alone.

pub mod amplitudes;
pub mod detection;
pub mod error;
pub mod experiments;
pub mod imaging;
pub mod modes;
pub mod pgm;
pub mod scene;
pub mod spectra;

pub use error::{Error, Result};
