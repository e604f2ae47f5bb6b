use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::deform::{deform_window, negated};
use super::fft::FftCorrelator;
use super::plane::{dcc, find_peak_within, CorrelationPlane};
use super::subpixel::{subpixel_gauss3, Displacement};
use crate::error::{PivError, Result};
use crate::field::{make_grid, GrayImage, GridSpec, NodeStatus, VectorField};
use crate::postprocess::{validate_pipeline, PostprocessConfig};

/// Correlation backend.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Dcc,
    #[default]
    Fft,
}

impl Method {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "dcc" => Some(Method::Dcc),
            "fft" => Some(Method::Fft),
            _ => None,
        }
    }
}

/// How a pass uses the predictor from the previous pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Deform {
    /// Integer window offset by the rounded predictor.
    None,
    /// Second frame warped by the bilinearly interpolated predictor.
    #[default]
    Linear,
}

/// One correlation pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PassSpec {
    pub window: usize,
    pub step: usize,
    #[serde(default)]
    pub method: Method,
    #[serde(default)]
    pub deform: Deform,
    /// Largest shift evaluated by the direct correlator; defaults to
    /// `window / 3`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_width: Option<usize>,
    /// Largest shift considered when locating the peak; defaults to the
    /// direct half width, or `window / 4` for the FFT backend.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search_radius: Option<usize>,
}

impl PassSpec {
    pub fn new(window: usize, step: usize, method: Method) -> Self {
        Self {
            window,
            step,
            method,
            deform: Deform::Linear,
            half_width: None,
            search_radius: None,
        }
    }

    /// Four FFT passes of 64, 32, 16 and 16 px with 50% overlap and linear
    /// window deformation.
    pub fn default_schedule() -> Vec<PassSpec> {
        [64, 32, 16, 16]
            .into_iter()
            .map(|w| PassSpec::new(w, w / 2, Method::Fft))
            .collect()
    }

    /// Single direct-correlation pass: 24 px windows every 12 px, searching
    /// up to 8 px.
    pub fn dcc_24() -> PassSpec {
        PassSpec {
            half_width: Some(8),
            ..PassSpec::new(24, 12, Method::Dcc)
        }
    }

    pub fn effective_half_width(&self) -> usize {
        self.half_width.unwrap_or(self.window / 3).max(1)
    }

    pub fn effective_search_radius(&self) -> usize {
        match self.method {
            Method::Dcc => {
                let hw = self.effective_half_width();
                self.search_radius.unwrap_or(hw).min(hw)
            }
            Method::Fft => self
                .search_radius
                .unwrap_or(self.window / 4)
                .clamp(1, self.window - 1),
        }
    }

    /// Checks the pass against a frame size and returns its grid.
    pub fn grid(&self, width: usize, height: usize) -> Result<GridSpec> {
        let grid = make_grid(width, height, self.window, self.step)?;
        if self.method == Method::Dcc && self.effective_half_width() > self.window / 2 {
            return Err(PivError::Parameter(format!(
                "dcc half width {} exceeds window/2 for window {}",
                self.effective_half_width(),
                self.window
            )));
        }
        Ok(grid)
    }
}

enum Backend {
    Dcc(usize),
    Fft(FftCorrelator),
}

impl Backend {
    fn for_pass(spec: &PassSpec) -> Self {
        match spec.method {
            Method::Dcc => Backend::Dcc(spec.effective_half_width()),
            Method::Fft => Backend::Fft(FftCorrelator::new(spec.window)),
        }
    }

    fn correlate(&self, a: &[f64], b: &[f64], side: usize) -> Result<CorrelationPlane> {
        match self {
            Backend::Dcc(hw) => dcc(a, b, side, *hw),
            Backend::Fft(c) => c.correlate(a, b),
        }
    }
}

/// Correlates every node of `grid`. With `offsets`, the window in `b` is
/// moved by the given integer shift (clamped to stay inside the frame) and
/// the shift actually applied is added to the result.
fn run_pass(
    a: &GrayImage,
    b: &GrayImage,
    grid: &GridSpec,
    spec: &PassSpec,
    offsets: Option<&[(isize, isize)]>,
) -> Result<Vec<Displacement>> {
    let backend = Backend::for_pass(spec);
    let radius = spec.effective_search_radius();
    let side = grid.window;
    let max_x = (a.width() - side) as isize;
    let max_y = (a.height() - side) as isize;
    (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let (ox, oy) = grid.origin(i % grid.nx, i / grid.nx);
            let wa = a.window(ox, oy, side);
            let (sx, sy) = match offsets {
                Some(off) => {
                    let (dx, dy) = off[i];
                    let bx = (ox as isize + dx).clamp(0, max_x);
                    let by = (oy as isize + dy).clamp(0, max_y);
                    (bx - ox as isize, by - oy as isize)
                }
                None => (0, 0),
            };
            let wb = b.window(
                (ox as isize + sx) as usize,
                (oy as isize + sy) as usize,
                side,
            );
            let plane = backend.correlate(&wa, &wb, side)?;
            let peak = find_peak_within(&plane, radius);
            let mut d = subpixel_gauss3(&plane, &peak);
            d.dx += sx as f64;
            d.dy += sy as f64;
            Ok(d)
        })
        .collect()
}

fn check_pair(a: &GrayImage, b: &GrayImage) -> Result<()> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(PivError::Dimension(format!(
            "frames differ in size: {}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    Ok(())
}

fn to_field(grid: GridSpec, disps: &[Displacement]) -> VectorField {
    VectorField {
        grid,
        u: disps.iter().map(|d| d.dx).collect(),
        v: disps.iter().map(|d| d.dy).collect(),
        status: vec![NodeStatus::Measured; disps.len()],
    }
}

/// Per-node correlation results of a single pass, without building a field.
pub fn pass_displacements(
    a: &GrayImage,
    b: &GrayImage,
    spec: &PassSpec,
) -> Result<Vec<Displacement>> {
    check_pair(a, b)?;
    let grid = spec.grid(a.width(), a.height())?;
    run_pass(a, b, &grid, spec, None)
}

/// One correlation pass over the whole frame; every node is `measured`.
pub fn single_pass(a: &GrayImage, b: &GrayImage, spec: &PassSpec) -> Result<VectorField> {
    check_pair(a, b)?;
    let grid = spec.grid(a.width(), a.height())?;
    let disps = run_pass(a, b, &grid, spec, None)?;
    Ok(to_field(grid, &disps))
}

/// Refines a predictor field with one more pass.
pub fn refine_pass(
    a: &GrayImage,
    b: &GrayImage,
    spec: &PassSpec,
    predictor: &VectorField,
) -> Result<VectorField> {
    check_pair(a, b)?;
    let grid = spec.grid(a.width(), a.height())?;
    let guess = predictor.resample(grid);
    let mut field = match spec.deform {
        Deform::Linear => {
            let warped = deform_window(b, &negated(predictor))?;
            let disps = run_pass(a, &warped, &grid, spec, None)?;
            let mut f = to_field(grid, &disps);
            for i in 0..f.len() {
                f.u[i] += guess.u[i];
                f.v[i] += guess.v[i];
            }
            f
        }
        Deform::None => {
            let offsets: Vec<(isize, isize)> = guess
                .u
                .iter()
                .zip(&guess.v)
                .map(|(u, v)| (u.round() as isize, v.round() as isize))
                .collect();
            let disps = run_pass(a, b, &grid, spec, Some(&offsets))?;
            to_field(grid, &disps)
        }
    };
    field.status.fill(NodeStatus::Measured);
    Ok(field)
}

/// Multi-pass evaluation. The first pass runs plainly; before each later
/// pass the previous field is validated and hole-filled with `post`, then
/// used as predictor. The returned field is the raw result of the last pass.
pub fn multipass(
    a: &GrayImage,
    b: &GrayImage,
    passes: &[PassSpec],
    post: &PostprocessConfig,
) -> Result<VectorField> {
    let (first, rest) = passes
        .split_first()
        .ok_or_else(|| PivError::Parameter("at least one pass is required".into()))?;
    if passes.windows(2).any(|p| p[1].window > p[0].window) {
        return Err(PivError::Parameter(
            "pass window sizes must be non-increasing".into(),
        ));
    }
    for p in passes {
        p.grid(a.width(), a.height())?;
    }
    let mut field = single_pass(a, b, first)?;
    for spec in rest {
        let (predictor, _) = validate_pipeline(&field, post)?;
        if !predictor.is_complete() {
            return Err(PivError::Numeric(
                "predictor field has no valid nodes".into(),
            ));
        }
        field = refine_pass(a, b, spec, &predictor)?;
    }
    Ok(field)
}
