//! Particle image velocimetry toolkit.
//!
//! Turns a pair of particle images into a validated displacement field and
//! derived scalar fields:
//!
//! * [`preprocess`]: CLAHE, Gaussian high-pass, intensity capping
//! * [`correlate`]: direct and FFT cross-correlation, Gaussian sub-pixel
//!   peaks, multi-pass evaluation with window deformation
//! * [`postprocess`]: outlier detection, Laplace hole filling, median smoothing
//! * [`derive`]: magnitude, vorticity, divergence, shear, line profiles
//! * [`synth`]: synthetic image pairs with analytic ground truth
//! * [`pipeline`]: the end-to-end runner behind the `piv` command

pub mod colormap;
pub mod config;
pub mod correlate;
pub mod csv_io;
pub mod derive;
pub mod error;
pub mod field;
pub mod image_io;
pub mod pipeline;
pub mod postprocess;
pub mod preprocess;
pub mod synth;

pub use error::{PivError, Result};
pub use field::{make_grid, GrayImage, GridSpec, NodeStatus, Quantity, ScalarField, VectorField};
