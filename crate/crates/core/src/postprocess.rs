//! Vector-field cleanup: global and local outlier detection, Laplace hole
//! filling and median smoothing.
//!
//! Detection and filling are separate phases: validators only change node
//! status, never the `u`/`v` values of nodes they keep.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PivError, Result};
use crate::field::{NodeStatus, VectorField};
use crate::preprocess::mean_std;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PostprocessConfig {
    /// Global threshold multiplier on the component standard deviation.
    pub n_global: f64,
    pub local_radius: usize,
    pub n_local: f64,
    pub median_radius: usize,
    pub smoothing_enabled: bool,
    /// Optional hard limits on displacement components, applied before the
    /// statistical tests.
    pub u_limits: Option<[f64; 2]>,
    pub v_limits: Option<[f64; 2]>,
}

impl Default for PostprocessConfig {
    fn default() -> Self {
        Self {
            n_global: 3.0,
            local_radius: 1,
            n_local: 2.0,
            median_radius: 1,
            smoothing_enabled: true,
            u_limits: None,
            v_limits: None,
        }
    }
}

impl PostprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.n_global > 0.0) || !(self.n_local > 0.0) {
            return Err(PivError::Config(
                "postprocess.n_global and postprocess.n_local must be > 0".into(),
            ));
        }
        if self.local_radius < 1 || self.median_radius < 1 {
            return Err(PivError::Config(
                "postprocess.local_radius and postprocess.median_radius must be >= 1".into(),
            ));
        }
        for (name, lim) in [("u_limits", self.u_limits), ("v_limits", self.v_limits)] {
            if let Some([lo, hi]) = lim {
                if !(lo < hi) {
                    return Err(PivError::Config(format!(
                        "postprocess.{name} must be [low, high] with low < high"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Outcome of a validation step.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    /// Nodes newly flagged by this step.
    pub flagged: usize,
    /// Set when the step could not run (e.g. no measured nodes).
    pub warning: Option<String>,
}

/// Flags measured nodes with a component outside `[low, high]`.
pub fn limit_validate(
    field: &VectorField,
    u_limits: Option<[f64; 2]>,
    v_limits: Option<[f64; 2]>,
) -> (VectorField, ValidationReport) {
    let mut out = field.clone();
    let mut flagged = 0;
    let outside = |x: f64, lim: Option<[f64; 2]>| lim.is_some_and(|[lo, hi]| x < lo || x > hi);
    for i in 0..out.len() {
        if out.status[i] == NodeStatus::Measured
            && (outside(out.u[i], u_limits) || outside(out.v[i], v_limits))
        {
            out.status[i] = NodeStatus::Outlier;
            flagged += 1;
        }
    }
    (
        out,
        ValidationReport {
            flagged,
            warning: None,
        },
    )
}

/// Global threshold test: per component, measured nodes outside
/// `mean +/- n * std` (population statistics over measured nodes) are
/// flagged. Flags from the two components are combined.
pub fn global_threshold_validate(field: &VectorField, n: f64) -> (VectorField, ValidationReport) {
    let measured: Vec<usize> = (0..field.len())
        .filter(|&i| field.status[i] == NodeStatus::Measured)
        .collect();
    if measured.len() < 2 {
        return (
            field.clone(),
            ValidationReport {
                flagged: 0,
                warning: Some(format!(
                    "global validation skipped: {} measured node(s)",
                    measured.len()
                )),
            },
        );
    }
    let stats = |comp: &[f64]| {
        let vals: Vec<f64> = measured.iter().map(|&i| comp[i]).collect();
        mean_std(&vals)
    };
    let (mu, su) = stats(&field.u);
    let (mv, sv) = stats(&field.v);
    let mut out = field.clone();
    let mut flagged = 0;
    for &i in &measured {
        let bad_u = (field.u[i] - mu).abs() > n * su;
        let bad_v = (field.v[i] - mv).abs() > n * sv;
        if bad_u || bad_v {
            out.status[i] = NodeStatus::Outlier;
            flagged += 1;
        }
    }
    (
        out,
        ValidationReport {
            flagged,
            warning: None,
        },
    )
}

/// Neighborhood node indices within `radius` of `(ix, iy)`, excluding the
/// node itself, truncated at the grid border.
fn neighbors(
    nx: usize,
    ny: usize,
    ix: usize,
    iy: usize,
    radius: usize,
) -> impl Iterator<Item = usize> {
    let x0 = ix.saturating_sub(radius);
    let x1 = (ix + radius).min(nx - 1);
    let y0 = iy.saturating_sub(radius);
    let y1 = (iy + radius).min(ny - 1);
    (y0..=y1).flat_map(move |y| {
        (x0..=x1).filter_map(move |x| (x != ix || y != iy).then_some(y * nx + x))
    })
}

/// Local standard-deviation test. For each measured node, the mean and
/// population deviation of each component are taken over the
/// `(2r+1)^2` neighborhood without the node itself and without flagged
/// nodes; the node is flagged if it lies strictly outside `mean +/- n * std`.
/// One sweep over a frozen copy of the input.
pub fn local_stddev_validate(
    field: &VectorField,
    radius: usize,
    n: f64,
) -> Result<(VectorField, ValidationReport)> {
    if radius < 1 {
        return Err(PivError::Parameter("local radius must be >= 1".into()));
    }
    let (nx, ny) = (field.grid.nx, field.grid.ny);
    let flags: Vec<bool> = (0..field.len())
        .into_par_iter()
        .map(|i| {
            if field.status[i] != NodeStatus::Measured {
                return false;
            }
            let (ix, iy) = (i % nx, i / nx);
            let (mut nu, mut nv) = (Vec::new(), Vec::new());
            for j in neighbors(nx, ny, ix, iy, radius) {
                if field.status[j].is_valid() {
                    nu.push(field.u[j]);
                    nv.push(field.v[j]);
                }
            }
            if nu.is_empty() {
                return false;
            }
            let (mu, su) = mean_std(&nu);
            let (mv, sv) = mean_std(&nv);
            (field.u[i] - mu).abs() > n * su || (field.v[i] - mv).abs() > n * sv
        })
        .collect();
    let mut out = field.clone();
    let mut flagged = 0;
    for (i, f) in flags.into_iter().enumerate() {
        if f {
            out.status[i] = NodeStatus::Outlier;
            flagged += 1;
        }
    }
    Ok((
        out,
        ValidationReport {
            flagged,
            warning: None,
        },
    ))
}

/// Largest number of Gauss-Seidel sweeps used by [`interpolate_holes`].
pub const MAX_FILL_SWEEPS: usize = 10_000;
/// Convergence threshold on the largest per-sweep update.
pub const FILL_TOLERANCE: f64 = 1e-9;

/// Fills flagged nodes by discrete Laplace interpolation: each hole becomes
/// the mean of its available 4-neighbors, solved by Gauss-Seidel sweeps.
/// Filled nodes are marked interpolated.
pub fn interpolate_holes(field: &VectorField) -> (VectorField, ValidationReport) {
    let holes: Vec<usize> = (0..field.len())
        .filter(|&i| !field.status[i].is_valid())
        .collect();
    if holes.is_empty() {
        return (field.clone(), ValidationReport::default());
    }
    let known: Vec<usize> = (0..field.len())
        .filter(|&i| field.status[i].is_valid())
        .collect();
    if known.is_empty() {
        return (
            field.clone(),
            ValidationReport {
                flagged: 0,
                warning: Some("interpolation skipped: no valid nodes".into()),
            },
        );
    }
    let (nx, ny) = (field.grid.nx, field.grid.ny);
    let mut out = field.clone();
    let mean = |c: &[f64]| known.iter().map(|&i| c[i]).sum::<f64>() / known.len() as f64;
    let (mu, mv) = (mean(&field.u), mean(&field.v));
    for &h in &holes {
        out.u[h] = mu;
        out.v[h] = mv;
    }
    let stencil: Vec<Vec<usize>> = holes
        .iter()
        .map(|&h| {
            let (x, y) = (h % nx, h / nx);
            let mut s = Vec::with_capacity(4);
            if x > 0 {
                s.push(h - 1);
            }
            if x + 1 < nx {
                s.push(h + 1);
            }
            if y > 0 {
                s.push(h - nx);
            }
            if y + 1 < ny {
                s.push(h + nx);
            }
            s
        })
        .collect();
    for _ in 0..MAX_FILL_SWEEPS {
        let mut change = 0.0f64;
        for (&h, s) in holes.iter().zip(&stencil) {
            let k = s.len() as f64;
            let nu = s.iter().map(|&j| out.u[j]).sum::<f64>() / k;
            let nv = s.iter().map(|&j| out.v[j]).sum::<f64>() / k;
            change = change.max((nu - out.u[h]).abs()).max((nv - out.v[h]).abs());
            out.u[h] = nu;
            out.v[h] = nv;
        }
        if change < FILL_TOLERANCE {
            break;
        }
    }
    for &h in &holes {
        out.status[h] = NodeStatus::Interpolated;
    }
    (
        out,
        ValidationReport {
            flagged: holes.len(),
            warning: None,
        },
    )
}

/// Median of a sample; even counts average the two middle order statistics.
pub fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty());
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Replaces each component by the median over the `(2r+1)^2` neighborhood
/// (including the node, truncated at borders). Status flags are kept.
pub fn median_smooth(field: &VectorField, radius: usize) -> Result<VectorField> {
    if radius < 1 {
        return Err(PivError::Parameter("median radius must be >= 1".into()));
    }
    let (nx, ny) = (field.grid.nx, field.grid.ny);
    let smoothed: Vec<(f64, f64)> = (0..field.len())
        .into_par_iter()
        .map(|i| {
            let (ix, iy) = (i % nx, i / nx);
            let idx: Vec<usize> = neighbors(nx, ny, ix, iy, radius)
                .chain(std::iter::once(i))
                .collect();
            let mut u: Vec<f64> = idx.iter().map(|&j| field.u[j]).collect();
            let mut v: Vec<f64> = idx.iter().map(|&j| field.v[j]).collect();
            (median(&mut u), median(&mut v))
        })
        .collect();
    let mut out = field.clone();
    for (i, (u, v)) in smoothed.into_iter().enumerate() {
        out.u[i] = u;
        out.v[i] = v;
    }
    Ok(out)
}

/// Bookkeeping for [`validate_pipeline`].
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PostprocessReport {
    pub flagged_limits: usize,
    pub flagged_global: usize,
    pub flagged_local: usize,
    pub interpolated: usize,
    pub warnings: Vec<String>,
}

impl PostprocessReport {
    pub fn flagged(&self) -> usize {
        self.flagged_limits + self.flagged_global + self.flagged_local
    }
}

/// Limits, global threshold, local deviation, hole filling, then optional
/// median smoothing.
pub fn validate_pipeline(
    field: &VectorField,
    cfg: &PostprocessConfig,
) -> Result<(VectorField, PostprocessReport)> {
    cfg.validate()?;
    let mut report = PostprocessReport::default();
    if field.count(NodeStatus::Measured) == 0 {
        report
            .warnings
            .push("no measured nodes; field returned unchanged".into());
        return Ok((field.clone(), report));
    }
    let (f, r) = limit_validate(field, cfg.u_limits, cfg.v_limits);
    report.flagged_limits = r.flagged;
    let (f, r) = global_threshold_validate(&f, cfg.n_global);
    report.flagged_global = r.flagged;
    report.warnings.extend(r.warning);
    let (f, r) = local_stddev_validate(&f, cfg.local_radius, cfg.n_local)?;
    report.flagged_local = r.flagged;
    let (mut f, r) = interpolate_holes(&f);
    report.interpolated = r.flagged;
    report.warnings.extend(r.warning);
    if cfg.smoothing_enabled {
        f = median_smooth(&f, cfg.median_radius)?;
    }
    Ok((f, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::make_grid;

    fn field_5x1(u: [f64; 5]) -> VectorField {
        let g = make_grid(20, 4, 4, 4).unwrap();
        assert_eq!((g.nx, g.ny), (5, 1));
        VectorField::new(g, u.to_vec(), vec![0.0; 5], vec![NodeStatus::Measured; 5]).unwrap()
    }

    #[test]
    fn global_threshold_example() {
        let f = field_5x1([1.0, 1.0, 1.0, 1.0, 10.0]);
        let vals = [1.0, 1.0, 1.0, 1.0, 10.0];
        let mu: f64 = vals.iter().sum::<f64>() / 5.0;
        let sd = (vals.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / 5.0).sqrt();
        assert!((mu - 2.8).abs() < 1e-12 && (sd - 3.6).abs() < 1e-12);
        let (out, rep) = global_threshold_validate(&f, 1.0);
        assert_eq!(rep.flagged, 1);
        assert_eq!(out.status[4], NodeStatus::Outlier);
        assert_eq!(out.u, f.u);
    }

    #[test]
    fn global_threshold_noops() {
        let f = field_5x1([2.0; 5]);
        assert_eq!(global_threshold_validate(&f, 1.0).1.flagged, 0);
        let f = field_5x1([1.0, -3.0, 7.0, 0.5, 2.0]);
        assert_eq!(global_threshold_validate(&f, 100.0).1.flagged, 0);
        let mut f = field_5x1([1.0; 5]);
        f.status = vec![NodeStatus::Outlier; 5];
        let (_, rep) = global_threshold_validate(&f, 1.0);
        assert!(rep.warning.is_some());
    }

    fn grid_field(n: usize, f: impl Fn(usize, usize) -> (f64, f64)) -> VectorField {
        let g = make_grid(4 * n, 4 * n, 4, 4).unwrap();
        let mut out = VectorField::zeros(g);
        for iy in 0..n {
            for ix in 0..n {
                let (u, v) = f(ix, iy);
                out.u[iy * n + ix] = u;
                out.v[iy * n + ix] = v;
            }
        }
        out
    }

    #[test]
    fn local_spike_flagged() {
        let mut f = grid_field(5, |_, _| (1.0, 0.5));
        // give the background some spread so the spike is a finite multiple
        for i in 0..25 {
            f.u[i] += if i % 2 == 0 { 0.1 } else { -0.1 };
        }
        f.u[12] += 10.0 * 0.1;
        let (out, rep) = local_stddev_validate(&f, 1, 2.0).unwrap();
        assert_eq!(rep.flagged, 1);
        assert_eq!(out.status[12], NodeStatus::Outlier);
    }

    #[test]
    fn local_linear_and_constant() {
        let f = grid_field(7, |x, _| (x as f64, 0.0));
        for r in 1..=3 {
            assert_eq!(local_stddev_validate(&f, r, 3.0).unwrap().1.flagged, 0);
        }
        let f = grid_field(5, |_, _| (2.0, 2.0));
        assert_eq!(local_stddev_validate(&f, 1, 2.0).unwrap().1.flagged, 0);
    }

    #[test]
    fn fill_linear_exactly() {
        let mut f = grid_field(6, |x, y| (2.0 * x as f64 + 3.0 * y as f64, -1.0));
        f.status[2 * 6 + 3] = NodeStatus::Outlier;
        f.u[2 * 6 + 3] = 99.0;
        let (out, rep) = interpolate_holes(&f);
        assert_eq!(rep.flagged, 1);
        assert!((out.u[15] - 12.0).abs() < 1e-8);
        assert!((out.v[15] + 1.0).abs() < 1e-8);
        assert_eq!(out.status[15], NodeStatus::Interpolated);
    }

    #[test]
    fn fill_constant() {
        let mut f = grid_field(4, |_, _| (0.7, 0.7));
        f.status[0] = NodeStatus::Outlier;
        f.u[0] = -5.0;
        let (out, _) = interpolate_holes(&f);
        assert!((out.u[0] - 0.7).abs() < 1e-9);
    }

    #[test]
    fn median_center() {
        let vals = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 100.0];
        let f = grid_field(3, |x, y| (vals[y * 3 + x], 0.0));
        let out = median_smooth(&f, 1).unwrap();
        assert_eq!(out.u[4], 5.0);
        // corner: {1, 2, 4, 5} -> mean of 2 and 4
        assert_eq!(out.u[0], 3.0);
        let f = grid_field(4, |_, _| (1.5, -2.0));
        assert_eq!(median_smooth(&f, 2).unwrap(), f);
    }

    #[test]
    fn pipeline_all_invalid_is_noop() {
        let mut f = grid_field(3, |_, _| (1.0, 1.0));
        f.status = vec![NodeStatus::Outlier; 9];
        let (out, rep) = validate_pipeline(&f, &PostprocessConfig::default()).unwrap();
        assert_eq!(out, f);
        assert_eq!(rep.warnings.len(), 1);
    }

    #[test]
    fn limits_flag_out_of_range() {
        let f = field_5x1([0.0, 1.0, 2.0, 3.0, 4.0]);
        let (out, rep) = limit_validate(&f, Some([0.5, 3.5]), None);
        assert_eq!(rep.flagged, 2);
        assert_eq!(out.status[0], NodeStatus::Outlier);
        assert_eq!(out.status[4], NodeStatus::Outlier);
    }
}
