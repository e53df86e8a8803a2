//! Frequency crystals: inverse square mean shift clustering of image spectra.
//!
//! The point cloud of a centered 2-D spectrum (two signed frequency axes plus
//! log-magnitude or phase) is clustered with a feedback-distorted absorption
//! criterion. The resulting crystals drive sparse magnitude dictionaries,
//! spectral denoising and keyed steganography.

pub mod cli;
pub mod codec;
pub mod config;
pub mod denoise;
pub mod dictionary;
pub mod error;
pub mod image;
pub mod isms;
pub mod quality;
pub mod render;
pub mod spectral;
pub mod stego;
pub mod topology;
mod wire;

pub use error::{Error, Result};
pub use image::{Channel, Grid, Image};
