//! Shared data model: grayscale frames, interrogation grids, vector and
//! scalar fields.
//!
//! Coordinates are continuous pixel coordinates: pixel `(col, row)` covers
//! `[col, col + 1) x [row, row + 1)`, so its center sits at
//! `(col + 0.5, row + 0.5)`. `x` grows to the right, `y` grows downward, and
//! displacements `(u, v)` follow the same axes.

use serde::{Deserialize, Serialize};

use crate::error::{PivError, Result};

/// Single-channel image with intensities normalized to `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(PivError::Dimension(format!(
                "image must be nonempty, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(PivError::Dimension(format!(
                "expected {} samples for {width}x{height}, got {}",
                width * height,
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|v| !v.is_finite()) {
            return Err(PivError::Numeric(format!("non-finite intensity {bad}")));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    /// Builds an image by evaluating `f(col, row)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                data.push(f(col, row));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub(crate) fn from_raw(width: usize, height: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, col: usize, row: usize, value: f64) {
        self.data[row * self.width + col] = value;
    }

    /// Pixel lookup with edge replication for out-of-range indices.
    #[inline]
    pub fn get_clamped(&self, col: isize, row: isize) -> f64 {
        let c = col.clamp(0, self.width as isize - 1) as usize;
        let r = row.clamp(0, self.height as isize - 1) as usize;
        self.data[r * self.width + c]
    }

    /// Bilinear sample at fractional array index `(col, row)` with edge
    /// replication.
    pub fn sample_bilinear(&self, col: f64, row: f64) -> f64 {
        let c0 = col.floor();
        let r0 = row.floor();
        let fc = col - c0;
        let fr = row - r0;
        let (c0, r0) = (c0 as isize, r0 as isize);
        let p00 = self.get_clamped(c0, r0);
        let p10 = self.get_clamped(c0 + 1, r0);
        let p01 = self.get_clamped(c0, r0 + 1);
        let p11 = self.get_clamped(c0 + 1, r0 + 1);
        let top = p00 + (p10 - p00) * fc;
        let bottom = p01 + (p11 - p01) * fc;
        top + (bottom - top) * fr
    }

    /// Copies the `side x side` block whose top-left pixel is `(col, row)`.
    pub fn window(&self, col: usize, row: usize, side: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(side * side);
        for r in row..row + side {
            let start = r * self.width + col;
            out.extend_from_slice(&self.data[start..start + side]);
        }
        out
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }
}

/// Tiling of a frame into square interrogation windows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub width: usize,
    pub height: usize,
    pub window: usize,
    pub step: usize,
    pub nx: usize,
    pub ny: usize,
}

/// Smallest interrogation window accepted by [`make_grid`].
pub const MIN_WINDOW: usize = 4;

/// Lays out square windows of side `window` every `step` pixels. Partial
/// windows at the right and bottom borders are dropped.
pub fn make_grid(width: usize, height: usize, window: usize, step: usize) -> Result<GridSpec> {
    if step == 0 {
        return Err(PivError::Parameter("grid step must be at least 1".into()));
    }
    if window < MIN_WINDOW {
        return Err(PivError::Parameter(format!(
            "window {window} is below the minimum of {MIN_WINDOW}"
        )));
    }
    if window > width.min(height) {
        return Err(PivError::Dimension(format!(
            "window {window} does not fit a {width}x{height} image"
        )));
    }
    if step > window {
        return Err(PivError::Parameter(format!(
            "step {step} exceeds window {window}"
        )));
    }
    Ok(GridSpec {
        width,
        height,
        window,
        step,
        nx: (width - window) / step + 1,
        ny: (height - window) / step + 1,
    })
}

impl GridSpec {
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }

    /// Top-left pixel of the window at node `(ix, iy)`.
    #[inline]
    pub fn origin(&self, ix: usize, iy: usize) -> (usize, usize) {
        (ix * self.step, iy * self.step)
    }

    /// Center of the window at node `(ix, iy)` in continuous pixel coordinates.
    #[inline]
    pub fn center(&self, ix: usize, iy: usize) -> (f64, f64) {
        let half = self.window as f64 / 2.0;
        (
            (ix * self.step) as f64 + half,
            (iy * self.step) as f64 + half,
        )
    }

    /// All node centers in row-major order.
    pub fn centers(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.len());
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                out.push(self.center(ix, iy));
            }
        }
        out
    }

    /// Fractional node coordinate of pixel position `(x, y)`, clamped to the
    /// node lattice.
    pub(crate) fn node_coords(&self, x: f64, y: f64) -> (f64, f64) {
        let half = self.window as f64 / 2.0;
        let step = self.step as f64;
        let fx = ((x - half) / step).clamp(0.0, (self.nx - 1) as f64);
        let fy = ((y - half) / step).clamp(0.0, (self.ny - 1) as f64);
        (fx, fy)
    }
}

/// Validity state of a vector-field node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeStatus {
    Measured,
    Outlier,
    Interpolated,
}

impl NodeStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeStatus::Measured => "measured",
            NodeStatus::Outlier => "outlier",
            NodeStatus::Interpolated => "interpolated",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "measured" => Some(NodeStatus::Measured),
            "outlier" => Some(NodeStatus::Outlier),
            "interpolated" => Some(NodeStatus::Interpolated),
            _ => None,
        }
    }

    /// Usable as data (not flagged).
    pub fn is_valid(self) -> bool {
        self != NodeStatus::Outlier
    }
}

/// Per-node displacement in pixels per frame interval.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub grid: GridSpec,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub status: Vec<NodeStatus>,
}

impl VectorField {
    pub fn new(grid: GridSpec, u: Vec<f64>, v: Vec<f64>, status: Vec<NodeStatus>) -> Result<Self> {
        let n = grid.len();
        if u.len() != n || v.len() != n || status.len() != n {
            return Err(PivError::Dimension(format!(
                "vector field needs {n} nodes, got u={} v={} status={}",
                u.len(),
                v.len(),
                status.len()
            )));
        }
        Ok(Self { grid, u, v, status })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        let n = grid.len();
        Self {
            grid,
            u: vec![0.0; n],
            v: vec![0.0; n],
            status: vec![NodeStatus::Measured; n],
        }
    }

    /// Evaluates `f(x, y) -> (u, v)` at every node center; all nodes measured.
    pub fn from_fn(grid: GridSpec, mut f: impl FnMut(f64, f64) -> (f64, f64)) -> Self {
        let mut field = Self::zeros(grid);
        for (i, (x, y)) in grid.centers().into_iter().enumerate() {
            let (u, v) = f(x, y);
            field.u[i] = u;
            field.v[i] = v;
        }
        field
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn count(&self, status: NodeStatus) -> usize {
        self.status.iter().filter(|&&s| s == status).count()
    }

    /// True when no node is flagged.
    pub fn is_complete(&self) -> bool {
        self.status.iter().all(|s| s.is_valid())
    }

    /// Bilinear interpolation of the node values at pixel position `(x, y)`.
    /// Positions outside the node lattice take the nearest border value.
    pub fn sample(&self, x: f64, y: f64) -> (f64, f64) {
        let (fx, fy) = self.grid.node_coords(x, y);
        (
            bilinear_nodes(&self.u, self.grid.nx, self.grid.ny, fx, fy),
            bilinear_nodes(&self.v, self.grid.nx, self.grid.ny, fx, fy),
        )
    }

    /// Resamples this field onto the centers of `target`.
    pub fn resample(&self, target: GridSpec) -> VectorField {
        VectorField::from_fn(target, |x, y| self.sample(x, y))
    }
}

pub(crate) fn bilinear_nodes(values: &[f64], nx: usize, ny: usize, fx: f64, fy: f64) -> f64 {
    let x0 = (fx.floor() as usize).min(nx - 1);
    let y0 = (fy.floor() as usize).min(ny - 1);
    let x1 = (x0 + 1).min(nx - 1);
    let y1 = (y0 + 1).min(ny - 1);
    let tx = fx - x0 as f64;
    let ty = fy - y0 as f64;
    let a = values[y0 * nx + x0];
    let b = values[y0 * nx + x1];
    let c = values[y1 * nx + x0];
    let d = values[y1 * nx + x1];
    let top = a + (b - a) * tx;
    let bottom = c + (d - c) * tx;
    top + (bottom - top) * ty
}

/// Which derived quantity a [`ScalarField`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quantity {
    Vorticity,
    Magnitude,
    Divergence,
    Shear,
}

impl Quantity {
    pub const ALL: [Quantity; 4] = [
        Quantity::Vorticity,
        Quantity::Magnitude,
        Quantity::Divergence,
        Quantity::Shear,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Quantity::Vorticity => "vorticity",
            Quantity::Magnitude => "magnitude",
            Quantity::Divergence => "divergence",
            Quantity::Shear => "shear",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Quantity::ALL.into_iter().find(|q| q.as_str() == s)
    }
}

/// One scalar per grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: GridSpec,
    pub values: Vec<f64>,
    pub quantity: Quantity,
}

impl ScalarField {
    pub fn new(grid: GridSpec, values: Vec<f64>, quantity: Quantity) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(PivError::Dimension(format!(
                "scalar field needs {} nodes, got {}",
                grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(PivError::Numeric(format!(
                "{} field contains non-finite values",
                quantity.as_str()
            )));
        }
        Ok(Self {
            grid,
            values,
            quantity,
        })
    }

    #[inline]
    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.values[self.grid.index(ix, iy)]
    }

    /// Bilinear interpolation at pixel position `(x, y)`.
    pub fn sample(&self, x: f64, y: f64) -> f64 {
        let (fx, fy) = self.grid.node_coords(x, y);
        bilinear_nodes(&self.values, self.grid.nx, self.grid.ny, fx, fy)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_24_12_on_64() {
        // origins 0, 12, 24, 36; 36 + 24 = 60 <= 64, 48 + 24 > 64
        let g = make_grid(64, 64, 24, 12).unwrap();
        assert_eq!((g.nx, g.ny), (4, 4));
        assert_eq!(g.center(0, 0), (12.0, 12.0));
        assert_eq!(g.center(3, 3), (48.0, 48.0));
    }

    #[test]
    fn full_frame_window() {
        let g = make_grid(64, 64, 64, 64).unwrap();
        assert_eq!((g.nx, g.ny), (1, 1));
    }

    #[test]
    fn grid_errors() {
        assert!(matches!(
            make_grid(32, 32, 48, 12),
            Err(PivError::Dimension(_))
        ));
        assert!(matches!(
            make_grid(32, 32, 16, 0),
            Err(PivError::Parameter(_))
        ));
        assert!(matches!(
            make_grid(32, 32, 3, 1),
            Err(PivError::Parameter(_))
        ));
    }

    #[test]
    fn grid_is_deterministic_and_inside() {
        for (w, h, win, step) in [(100, 77, 16, 5), (64, 200, 33, 33), (50, 50, 4, 1)] {
            let a = make_grid(w, h, win, step).unwrap();
            let b = make_grid(w, h, win, step).unwrap();
            assert_eq!(a.centers(), b.centers());
            let (ox, oy) = a.origin(a.nx - 1, a.ny - 1);
            assert!(ox + win <= w && oy + win <= h);
            assert!(ox + step + win > w && oy + step + win > h);
        }
    }

    #[test]
    fn image_rejects_bad_length() {
        assert!(GrayImage::new(3, 3, vec![0.0; 8]).is_err());
        assert!(GrayImage::new(1, 1, vec![f64::NAN]).is_err());
    }

    #[test]
    fn field_sampling_reproduces_linear_field() {
        let g = make_grid(64, 64, 16, 8).unwrap();
        let f = VectorField::from_fn(g, |x, y| (0.1 * x - 0.3 * y, 2.0));
        let (u, v) = f.sample(20.5, 33.25);
        assert!((u - (2.05 - 9.975)).abs() < 1e-12);
        assert_eq!(v, 2.0);
        // outside the lattice the border value is held
        let (u0, _) = f.sample(0.0, 8.0);
        assert!((u0 - (0.8 - 2.4)).abs() < 1e-12);
    }
}
