//! Scalar quantities derived from a vector field, tracer slip velocity, and
//! simple analyses (line profiles, area-mean direction).
//!
//! Derivatives use second-order central differences on the node lattice and
//! second-order one-sided differences on border nodes.

use serde::{Deserialize, Serialize};

use crate::error::{PivError, Result};
use crate::field::{GridSpec, Quantity, ScalarField, VectorField};

pub fn velocity_magnitude(field: &VectorField) -> Result<ScalarField> {
    let values = field
        .u
        .iter()
        .zip(&field.v)
        .map(|(u, v)| u.hypot(*v))
        .collect();
    ScalarField::new(field.grid, values, Quantity::Magnitude)
}

fn check_lattice(grid: &GridSpec, spacing: f64) -> Result<()> {
    if grid.nx < 3 || grid.ny < 3 {
        return Err(PivError::Dimension(format!(
            "derivatives need at least 3x3 nodes, got {}x{}",
            grid.nx, grid.ny
        )));
    }
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(PivError::Parameter(format!(
            "node spacing must be > 0, got {spacing}"
        )));
    }
    Ok(())
}

/// Derivative along a line of `n >= 3` samples at position `i`.
#[inline]
fn diff1(at: impl Fn(usize) -> f64, i: usize, n: usize, h: f64) -> f64 {
    if i == 0 {
        (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h)
    } else if i == n - 1 {
        (3.0 * at(n - 1) - 4.0 * at(n - 2) + at(n - 3)) / (2.0 * h)
    } else {
        (at(i + 1) - at(i - 1)) / (2.0 * h)
    }
}

/// `d/dx` of a node array.
pub fn ddx(values: &[f64], grid: &GridSpec, spacing: f64) -> Vec<f64> {
    let (nx, ny) = (grid.nx, grid.ny);
    let mut out = Vec::with_capacity(nx * ny);
    for iy in 0..ny {
        for ix in 0..nx {
            out.push(diff1(|k| values[iy * nx + k], ix, nx, spacing));
        }
    }
    out
}

/// `d/dy` of a node array.
pub fn ddy(values: &[f64], grid: &GridSpec, spacing: f64) -> Vec<f64> {
    let (nx, ny) = (grid.nx, grid.ny);
    let mut out = Vec::with_capacity(nx * ny);
    for iy in 0..ny {
        for ix in 0..nx {
            out.push(diff1(|k| values[k * nx + ix], iy, ny, spacing));
        }
    }
    out
}

fn combine(
    field: &VectorField,
    spacing: f64,
    quantity: Quantity,
    f: impl Fn(f64, f64, f64, f64) -> f64,
) -> Result<ScalarField> {
    check_lattice(&field.grid, spacing)?;
    let g = &field.grid;
    let (ux, uy) = (ddx(&field.u, g, spacing), ddy(&field.u, g, spacing));
    let (vx, vy) = (ddx(&field.v, g, spacing), ddy(&field.v, g, spacing));
    let values = (0..field.len())
        .map(|i| f(ux[i], uy[i], vx[i], vy[i]))
        .collect();
    ScalarField::new(*g, values, quantity)
}

/// `dv/dx - du/dy`. `spacing` is the physical distance between nodes.
pub fn vorticity(field: &VectorField, spacing: f64) -> Result<ScalarField> {
    combine(field, spacing, Quantity::Vorticity, |_, uy, vx, _| vx - uy)
}

/// `du/dx + dv/dy`.
pub fn divergence(field: &VectorField, spacing: f64) -> Result<ScalarField> {
    combine(field, spacing, Quantity::Divergence, |ux, _, _, vy| ux + vy)
}

/// `du/dy + dv/dx`.
pub fn shear_strain(field: &VectorField, spacing: f64) -> Result<ScalarField> {
    combine(field, spacing, Quantity::Shear, |_, uy, vx, _| uy + vx)
}

/// Physical calibration of pixel displacements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Calibration {
    /// Physical length of one pixel.
    pub units_per_pixel: f64,
    /// Time between the two frames.
    pub frame_interval: f64,
}

impl Default for Calibration {
    fn default() -> Self {
        Self {
            units_per_pixel: 1.0,
            frame_interval: 1.0,
        }
    }
}

impl Calibration {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("units_per_pixel", self.units_per_pixel),
            ("frame_interval", self.frame_interval),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(PivError::Parameter(format!("{name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// Computes the requested quantity in calibrated units: velocities are
/// displacements times `units_per_pixel / frame_interval`, and the node
/// spacing is `grid.step * units_per_pixel`.
pub fn derive_quantity(
    field: &VectorField,
    quantity: Quantity,
    cal: &Calibration,
) -> Result<ScalarField> {
    cal.validate()?;
    let k = cal.units_per_pixel / cal.frame_interval;
    let velocity = VectorField {
        u: field.u.iter().map(|u| u * k).collect(),
        v: field.v.iter().map(|v| v * k).collect(),
        ..field.clone()
    };
    let spacing = field.grid.step as f64 * cal.units_per_pixel;
    match quantity {
        Quantity::Magnitude => velocity_magnitude(&velocity),
        Quantity::Vorticity => vorticity(&velocity, spacing),
        Quantity::Divergence => divergence(&velocity, spacing),
        Quantity::Shear => shear_strain(&velocity, spacing),
    }
}

/// Tracer particle and carrier fluid properties (SI units).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracerSpec {
    /// Particle diameter (m).
    pub diameter: f64,
    /// Particle density (kg/m^3).
    pub particle_density: f64,
    /// Fluid density (kg/m^3).
    pub fluid_density: f64,
    /// Dynamic viscosity (Pa s).
    pub viscosity: f64,
    /// Body acceleration (m/s^2).
    pub acceleration: f64,
}

/// Stokes slip velocity `d^2 (rho_p - rho) / (18 mu) * a` of a tracer.
/// Positive when the particle is denser than the fluid.
pub fn stokes_slip_velocity(t: &TracerSpec) -> Result<f64> {
    if !(t.diameter > 0.0 && t.viscosity > 0.0 && t.particle_density > 0.0 && t.fluid_density > 0.0)
    {
        return Err(PivError::Parameter(
            "tracer diameter, viscosity and densities must be positive".into(),
        ));
    }
    Ok(t.diameter.powi(2)
        * ((t.particle_density - t.fluid_density) / (18.0 * t.viscosity))
        * t.acceleration)
}

/// Straight sampling line between two pixel positions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineProbe {
    pub start: (f64, f64),
    pub end: (f64, f64),
    pub samples: usize,
}

fn inside_lattice(grid: &GridSpec, (x, y): (f64, f64)) -> bool {
    let (x0, y0) = grid.center(0, 0);
    let (x1, y1) = grid.center(grid.nx - 1, grid.ny - 1);
    (x0..=x1).contains(&x) && (y0..=y1).contains(&y)
}

/// Samples `s` bilinearly at `samples` equidistant points from `start` to
/// `end`. Returns `(distance from start, value)` pairs.
pub fn line_profile(s: &ScalarField, probe: &LineProbe) -> Result<Vec<(f64, f64)>> {
    if probe.samples < 2 {
        return Err(PivError::Parameter(
            "a line probe needs at least 2 samples".into(),
        ));
    }
    for p in [probe.start, probe.end] {
        if !inside_lattice(&s.grid, p) {
            return Err(PivError::Parameter(format!(
                "probe endpoint ({}, {}) lies outside the node lattice",
                p.0, p.1
            )));
        }
    }
    let (dx, dy) = (probe.end.0 - probe.start.0, probe.end.1 - probe.start.1);
    let length = dx.hypot(dy);
    let last = (probe.samples - 1) as f64;
    Ok((0..probe.samples)
        .map(|k| {
            let t = k as f64 / last;
            let (x, y) = (probe.start.0 + t * dx, probe.start.1 + t * dy);
            (t * length, s.sample(x, y))
        })
        .collect())
}

/// Inclusive rectangle of node indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeRegion {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

/// Direction and magnitude of the mean vector over a region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanDirection {
    /// Degrees in `[0, 360)`, 0 along +x, increasing toward +y.
    pub angle_deg: f64,
    pub magnitude: f64,
}

pub fn area_mean_direction(field: &VectorField, region: &NodeRegion) -> Result<MeanDirection> {
    let g = &field.grid;
    if region.x0 > region.x1 || region.y0 > region.y1 || region.x1 >= g.nx || region.y1 >= g.ny {
        return Err(PivError::Parameter(format!(
            "region {region:?} is empty or outside a {}x{} grid",
            g.nx, g.ny
        )));
    }
    let (mut su, mut sv, mut n) = (0.0, 0.0, 0usize);
    for iy in region.y0..=region.y1 {
        for ix in region.x0..=region.x1 {
            let i = g.index(ix, iy);
            su += field.u[i];
            sv += field.v[i];
            n += 1;
        }
    }
    let (mu, mv) = (su / n as f64, sv / n as f64);
    let magnitude = mu.hypot(mv);
    if magnitude <= 1e-12 {
        return Err(PivError::Numeric(
            "mean vector is zero; direction undefined".into(),
        ));
    }
    let angle = mv.atan2(mu).to_degrees().rem_euclid(360.0);
    // rem_euclid can round up to exactly 360 for tiny negative angles
    let angle_deg = if angle >= 360.0 { 0.0 } else { angle };
    Ok(MeanDirection {
        angle_deg,
        magnitude,
    })
}
