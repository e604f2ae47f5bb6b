//! Image enhancement ahead of correlation: contrast-limited adaptive
//! histogram equalization, Gaussian high-pass, and intensity capping.
//!
//! When several steps are enabled they run in the order
//! CLAHE, high-pass, capping.

use serde::{Deserialize, Serialize};

use crate::error::{PivError, Result};
use crate::field::GrayImage;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PreprocessConfig {
    pub clahe_enabled: bool,
    pub clahe_tile: usize,
    /// Clip factor relative to the uniform histogram level.
    pub clahe_clip: f64,
    pub clahe_bins: usize,
    pub hpf_enabled: bool,
    pub hpf_sigma: f64,
    pub cap_enabled: bool,
    /// Cap level in standard deviations above the mean.
    pub cap_n: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            clahe_enabled: false,
            clahe_tile: 32,
            clahe_clip: 4.0,
            clahe_bins: 256,
            hpf_enabled: false,
            hpf_sigma: 3.0,
            cap_enabled: false,
            cap_n: 2.0,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if self.clahe_tile < 8 {
            return Err(PivError::Config(format!(
                "preprocess.clahe_tile must be >= 8, got {}",
                self.clahe_tile
            )));
        }
        if self.clahe_bins < 16 {
            return Err(PivError::Config(format!(
                "preprocess.clahe_bins must be >= 16, got {}",
                self.clahe_bins
            )));
        }
        if !(self.clahe_clip > 1.0) {
            return Err(PivError::Config(format!(
                "preprocess.clahe_clip must be > 1, got {}",
                self.clahe_clip
            )));
        }
        if !(self.hpf_sigma > 0.0 && self.hpf_sigma.is_finite()) {
            return Err(PivError::Config(format!(
                "preprocess.hpf_sigma must be > 0, got {}",
                self.hpf_sigma
            )));
        }
        if !(self.cap_n > 0.0) {
            return Err(PivError::Config(format!(
                "preprocess.cap_n must be > 0, got {}",
                self.cap_n
            )));
        }
        Ok(())
    }

    pub fn any_enabled(&self) -> bool {
        self.clahe_enabled || self.hpf_enabled || self.cap_enabled
    }

    /// Runs the enabled steps in order.
    pub fn apply(&self, img: &GrayImage) -> Result<GrayImage> {
        self.validate()?;
        let mut out = img.clone();
        if self.clahe_enabled {
            out = clahe(&out, self.clahe_tile, self.clahe_clip, self.clahe_bins)?;
        }
        if self.hpf_enabled {
            out = highpass(&out, self.hpf_sigma)?;
        }
        if self.cap_enabled {
            out = intensity_cap(&out, self.cap_n)?;
        }
        Ok(out)
    }
}

/// Per-tile equalization lookup table: `lut[bin]` is the output intensity.
#[derive(Debug, Clone)]
pub struct TileMapping {
    pub lut: Vec<f64>,
}

#[inline]
fn bin_of(v: f64, bins: usize) -> usize {
    ((v * bins as f64) as usize).min(bins - 1)
}

/// Builds the clipped-histogram equalization mapping for a set of samples.
///
/// Bins above `clip * count / bins` are cut to that level and the total
/// excess is spread evenly over all bins in a single pass. An infinite
/// `clip` disables clipping. The mapping is the normalized inclusive CDF.
pub fn tile_mapping(samples: impl Iterator<Item = f64>, clip: f64, bins: usize) -> TileMapping {
    let mut hist = vec![0.0f64; bins];
    let mut count = 0usize;
    for v in samples {
        hist[bin_of(v, bins)] += 1.0;
        count += 1;
    }
    if clip.is_finite() {
        let limit = clip * count as f64 / bins as f64;
        let mut excess = 0.0;
        for h in hist.iter_mut() {
            if *h > limit {
                excess += *h - limit;
                *h = limit;
            }
        }
        let share = excess / bins as f64;
        for h in hist.iter_mut() {
            *h += share;
        }
    }
    let total = count as f64;
    let mut acc = 0.0;
    let lut = hist
        .iter()
        .map(|h| {
            acc += h;
            (acc / total).clamp(0.0, 1.0)
        })
        .collect();
    TileMapping { lut }
}

/// Tile boundaries along one axis: `[start, end)` spans of width `tile`,
/// the last one possibly shorter.
fn tile_spans(extent: usize, tile: usize) -> Vec<(usize, usize)> {
    (0..extent.div_ceil(tile))
        .map(|i| (i * tile, ((i + 1) * tile).min(extent)))
        .collect()
}

/// Locates `pos` between tile centers: `(lower, upper, weight of upper)`.
/// Outside the first or last center both indices clamp to that tile.
fn blend_position(pos: f64, centers: &[f64]) -> (usize, usize, f64) {
    let last = centers.len() - 1;
    if pos <= centers[0] {
        return (0, 0, 0.0);
    }
    if pos >= centers[last] {
        return (last, last, 0.0);
    }
    let upper = centers.partition_point(|&c| c <= pos);
    let lower = upper - 1;
    let w = (pos - centers[lower]) / (centers[upper] - centers[lower]);
    (lower, upper, w)
}

/// Contrast-limited adaptive histogram equalization.
///
/// The image is tiled into `tile x tile` blocks; each block gets a clipped
/// equalization mapping and every pixel blends the mappings of the four
/// nearest tile centers bilinearly.
pub fn clahe(img: &GrayImage, tile: usize, clip: f64, bins: usize) -> Result<GrayImage> {
    let (w, h) = (img.width(), img.height());
    if tile == 0 || tile > w.min(h) {
        return Err(PivError::Parameter(format!(
            "CLAHE tile {tile} does not fit a {w}x{h} image"
        )));
    }
    if bins < 2 {
        return Err(PivError::Parameter("CLAHE needs at least 2 bins".into()));
    }
    if !(clip > 0.0) {
        return Err(PivError::Parameter(format!(
            "CLAHE clip {clip} must be > 0"
        )));
    }
    let xs = tile_spans(w, tile);
    let ys = tile_spans(h, tile);
    let mut maps = Vec::with_capacity(xs.len() * ys.len());
    for &(y0, y1) in &ys {
        for &(x0, x1) in &xs {
            let samples = (y0..y1).flat_map(|r| (x0..x1).map(move |c| img.get(c, r)));
            maps.push(tile_mapping(samples, clip, bins));
        }
    }
    let cx: Vec<f64> = xs.iter().map(|&(a, b)| (a + b) as f64 / 2.0).collect();
    let cy: Vec<f64> = ys.iter().map(|&(a, b)| (a + b) as f64 / 2.0).collect();
    let ntx = xs.len();
    let col_blend: Vec<_> = (0..w)
        .map(|c| blend_position(c as f64 + 0.5, &cx))
        .collect();
    let mut out = Vec::with_capacity(w * h);
    for r in 0..h {
        let (ty0, ty1, wy) = blend_position(r as f64 + 0.5, &cy);
        for (c, &(tx0, tx1, wx)) in col_blend.iter().enumerate() {
            let b = bin_of(img.get(c, r), bins);
            let m = |tx: usize, ty: usize| maps[ty * ntx + tx].lut[b];
            let top = m(tx0, ty0) * (1.0 - wx) + m(tx1, ty0) * wx;
            let bottom = m(tx0, ty1) * (1.0 - wx) + m(tx1, ty1) * wx;
            out.push((top * (1.0 - wy) + bottom * wy).clamp(0.0, 1.0));
        }
    }
    Ok(GrayImage::from_raw(w, h, out))
}

/// Normalized Gaussian kernel truncated at radius `ceil(3 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Separable Gaussian blur with edge replication.
pub fn gaussian_lowpass(img: &GrayImage, sigma: f64) -> GrayImage {
    let k = gaussian_kernel(sigma);
    let radius = (k.len() / 2) as isize;
    let (w, h) = (img.width(), img.height());
    let mut tmp = vec![0.0; w * h];
    for r in 0..h {
        for c in 0..w {
            tmp[r * w + c] = k
                .iter()
                .enumerate()
                .map(|(i, kv)| kv * img.get_clamped(c as isize + i as isize - radius, r as isize))
                .sum();
        }
    }
    let tmp = GrayImage::from_raw(w, h, tmp);
    let mut out = vec![0.0; w * h];
    for r in 0..h {
        for c in 0..w {
            out[r * w + c] = k
                .iter()
                .enumerate()
                .map(|(i, kv)| kv * tmp.get_clamped(c as isize, r as isize + i as isize - radius))
                .sum();
        }
    }
    GrayImage::from_raw(w, h, out)
}

/// `img - gaussian_lowpass(img, sigma)` before any renormalization.
pub fn highpass_residual(img: &GrayImage, sigma: f64) -> Result<Vec<f64>> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(PivError::Parameter(format!(
            "high-pass sigma must be > 0, got {sigma}"
        )));
    }
    let low = gaussian_lowpass(img, sigma);
    Ok(img
        .data()
        .iter()
        .zip(low.data())
        .map(|(a, b)| a - b)
        .collect())
}

/// Gaussian high-pass, min-max rescaled to `[0, 1]`. A flat residual maps
/// to all zeros.
pub fn highpass(img: &GrayImage, sigma: f64) -> Result<GrayImage> {
    let res = highpass_residual(img, sigma)?;
    let (lo, hi) = res
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    let span = hi - lo;
    let data = if span > 1e-12 {
        res.iter().map(|v| (v - lo) / span).collect()
    } else {
        vec![0.0; res.len()]
    };
    Ok(GrayImage::from_raw(img.width(), img.height(), data))
}

/// Population mean and standard deviation.
pub(crate) fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Replaces every pixel brighter than `mean + n * std` with that level.
pub fn intensity_cap(img: &GrayImage, n: f64) -> Result<GrayImage> {
    if !(n > 0.0) {
        return Err(PivError::Parameter(format!(
            "cap multiplier must be > 0, got {n}"
        )));
    }
    let (mean, std) = mean_std(img.data());
    let cap = mean + n * std;
    let data = img
        .data()
        .iter()
        .map(|&v| if v > cap { cap } else { v })
        .collect();
    Ok(GrayImage::from_raw(img.width(), img.height(), data))
}
