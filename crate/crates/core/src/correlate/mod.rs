//! Displacement estimation per interrogation window: direct and FFT
//! cross-correlation, peak location, Gaussian sub-pixel refinement, and
//! single/multi-pass evaluation with window deformation.

mod deform;
mod fft;
mod pass;
mod plane;
mod subpixel;

pub use deform::deform_window;
pub use fft::{fft_correlate, fft_correlate_circular, FftCorrelator};
pub use pass::{multipass, pass_displacements, refine_pass, single_pass, Deform, Method, PassSpec};
pub use plane::{dcc, find_peak, find_peak_within, CorrelationPlane, Peak};
pub use subpixel::{gauss3_offset, subpixel_gauss3, Displacement};
