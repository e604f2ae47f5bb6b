//! Piecewise-linear color scales and colormapped PPM output for scalar
//! fields.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{PivError, Result};
use crate::field::{Quantity, ScalarField};
use crate::image_io::save_ppm;

pub const DARK_BLUE: [u8; 3] = [0, 0, 140];
pub const LIGHT_BLUE: [u8; 3] = [96, 200, 250];
pub const GREEN: [u8; 3] = [0, 200, 0];
pub const YELLOW: [u8; 3] = [255, 255, 0];
pub const RED: [u8; 3] = [255, 0, 0];

const PALETTE: [[u8; 3]; 5] = [DARK_BLUE, LIGHT_BLUE, GREEN, YELLOW, RED];

/// Ordered `(value, rgb)` breakpoints. Values between breakpoints blend
/// linearly; values outside clamp to the end colors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColorScale {
    breakpoints: Vec<(f64, [u8; 3])>,
}

impl ColorScale {
    pub fn new(breakpoints: Vec<(f64, [u8; 3])>) -> Result<Self> {
        if breakpoints.is_empty() {
            return Err(PivError::Parameter("color scale needs a breakpoint".into()));
        }
        if breakpoints.iter().any(|(v, _)| !v.is_finite())
            || breakpoints.windows(2).any(|w| !(w[0].0 < w[1].0))
        {
            return Err(PivError::Parameter(
                "color breakpoints must be finite and strictly increasing".into(),
            ));
        }
        Ok(Self { breakpoints })
    }

    /// Vorticity levels: 0.00 dark blue, 0.10 light blue, 0.20 green,
    /// 0.30 yellow, 0.40 red.
    pub fn vorticity_default() -> Self {
        Self {
            breakpoints: [0.0, 0.1, 0.2, 0.3, 0.4].into_iter().zip(PALETTE).collect(),
        }
    }

    /// The five-color palette spread evenly over `[lo, hi]`.
    pub fn spread(lo: f64, hi: f64) -> Self {
        let hi = if hi > lo { hi } else { lo + 1.0 };
        let breakpoints = PALETTE
            .iter()
            .enumerate()
            .map(|(i, &c)| (lo + (hi - lo) * i as f64 / 4.0, c))
            .collect();
        Self { breakpoints }
    }

    /// Fixed vorticity scale, or a spread over the field's range for other
    /// quantities.
    pub fn for_field(s: &ScalarField) -> Self {
        match s.quantity {
            Quantity::Vorticity => Self::vorticity_default(),
            _ => {
                let (lo, hi) = s
                    .values
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
                        (a.min(v), b.max(v))
                    });
                Self::spread(lo, hi)
            }
        }
    }

    pub fn breakpoints(&self) -> &[(f64, [u8; 3])] {
        &self.breakpoints
    }

    pub fn color(&self, value: f64) -> [u8; 3] {
        let bp = &self.breakpoints;
        let first = bp[0];
        let last = bp[bp.len() - 1];
        if !(value > first.0) {
            // NaN lands here too
            return first.1;
        }
        if value >= last.0 {
            return last.1;
        }
        let upper = bp.partition_point(|(v, _)| *v <= value);
        let (v0, c0) = bp[upper - 1];
        let (v1, c1) = bp[upper];
        let t = (value - v0) / (v1 - v0);
        let mut out = [0u8; 3];
        for k in 0..3 {
            let a = f64::from(c0[k]);
            let b = f64::from(c1[k]);
            out[k] = (a + t * (b - a)).round().clamp(0.0, 255.0) as u8;
        }
        out
    }
}

/// One RGB triple per node, row-major.
pub fn colorize(s: &ScalarField, scale: &ColorScale) -> Vec<[u8; 3]> {
    s.values.iter().map(|&v| scale.color(v)).collect()
}

/// Writes a binary PPM with a `cell x cell` block of pixels per node.
pub fn render_colormap(
    s: &ScalarField,
    scale: &ColorScale,
    out: impl AsRef<Path>,
    cell: usize,
) -> Result<()> {
    let (w, h, rgb) = colormap_pixels(s, scale, cell)?;
    save_ppm(out, w, h, &rgb)
}

pub fn colormap_pixels(
    s: &ScalarField,
    scale: &ColorScale,
    cell: usize,
) -> Result<(usize, usize, Vec<[u8; 3]>)> {
    if cell == 0 {
        return Err(PivError::Parameter(
            "colormap cell size must be >= 1".into(),
        ));
    }
    let colors = colorize(s, scale);
    let (nx, ny) = (s.grid.nx, s.grid.ny);
    let (w, h) = (nx * cell, ny * cell);
    let mut rgb = Vec::with_capacity(w * h);
    for r in 0..h {
        for c in 0..w {
            rgb.push(colors[(r / cell) * nx + c / cell]);
        }
    }
    Ok((w, h, rgb))
}
