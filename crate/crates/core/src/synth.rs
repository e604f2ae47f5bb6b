//! Synthetic particle-image pairs with analytic ground-truth flows.
//!
//! Randomness comes from `ChaCha8Rng` seeded with `seed_from_u64(seed)`.
//! Frame A draws particle positions uniformly over the frame, then (for A
//! and B in turn) one normal deviate per pixel for sensor noise when
//! `noise_sigma > 0`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{PivError, Result};
use crate::field::{GrayImage, GridSpec, VectorField};

/// Analytic displacement field (pixels per frame interval).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FlowSpec {
    Uniform {
        u: f64,
        v: f64,
    },
    /// Solid-body rotation by `omega` radians per frame about the center,
    /// applied as an exact rotation.
    RigidRotation {
        cx: f64,
        cy: f64,
        omega: f64,
    },
    /// Rankine vortex with circulation `gamma` (px^2 per frame): solid-body
    /// core of radius `core_radius`, irrotational outside.
    Rankine {
        cx: f64,
        cy: f64,
        gamma: f64,
        core_radius: f64,
    },
    /// Simple shear `u = rate * y`, `v = 0`.
    Shear {
        rate: f64,
    },
}

impl FlowSpec {
    pub fn validate(&self) -> Result<()> {
        let finite = match *self {
            FlowSpec::Uniform { u, v } => u.is_finite() && v.is_finite(),
            FlowSpec::RigidRotation { cx, cy, omega } => {
                cx.is_finite() && cy.is_finite() && omega.is_finite()
            }
            FlowSpec::Rankine {
                cx,
                cy,
                gamma,
                core_radius,
            } => {
                if !(core_radius > 0.0) {
                    return Err(PivError::Parameter(
                        "Rankine core radius must be > 0".into(),
                    ));
                }
                cx.is_finite() && cy.is_finite() && gamma.is_finite() && core_radius.is_finite()
            }
            FlowSpec::Shear { rate } => rate.is_finite(),
        };
        if finite {
            Ok(())
        } else {
            Err(PivError::Parameter("flow parameters must be finite".into()))
        }
    }

    /// Displacement of a particle starting at `(x, y)`.
    pub fn displacement(&self, x: f64, y: f64) -> (f64, f64) {
        match *self {
            FlowSpec::Uniform { u, v } => (u, v),
            FlowSpec::RigidRotation { cx, cy, omega } => {
                let (s, c) = omega.sin_cos();
                let (rx, ry) = (x - cx, y - cy);
                (c * rx - s * ry - rx, s * rx + c * ry - ry)
            }
            FlowSpec::Rankine {
                cx,
                cy,
                gamma,
                core_radius,
            } => {
                let (rx, ry) = (x - cx, y - cy);
                let r2 = rx * rx + ry * ry;
                // tangential speed divided by r
                let k = if r2 <= core_radius * core_radius {
                    gamma / (2.0 * std::f64::consts::PI * core_radius * core_radius)
                } else {
                    gamma / (2.0 * std::f64::consts::PI * r2)
                };
                (-k * ry, k * rx)
            }
            FlowSpec::Shear { rate } => (rate * y, 0.0),
        }
    }

    /// Analytic vorticity of the displacement field at `(x, y)`.
    pub fn vorticity(&self, x: f64, y: f64) -> f64 {
        match *self {
            FlowSpec::Uniform { .. } => 0.0,
            FlowSpec::RigidRotation { omega, .. } => 2.0 * omega.sin(),
            FlowSpec::Rankine {
                cx,
                cy,
                gamma,
                core_radius,
            } => {
                let r2 = (x - cx).powi(2) + (y - cy).powi(2);
                if r2 < core_radius * core_radius {
                    gamma / (std::f64::consts::PI * core_radius * core_radius)
                } else {
                    0.0
                }
            }
            FlowSpec::Shear { rate } => -rate,
        }
    }

    /// Ground truth sampled at the node centers of `grid`.
    pub fn sample_grid(&self, grid: GridSpec) -> VectorField {
        VectorField::from_fn(grid, |x, y| self.displacement(x, y))
    }
}

/// Moves every position by the flow's displacement.
pub fn advect(positions: &[(f64, f64)], flow: &FlowSpec) -> Vec<(f64, f64)> {
    positions
        .iter()
        .map(|&(x, y)| {
            let (dx, dy) = flow.displacement(x, y);
            (x + dx, y + dy)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthParams {
    pub width: usize,
    pub height: usize,
    pub particle_count: usize,
    /// e^-2 intensity diameter in pixels.
    pub particle_diameter: f64,
    pub peak_intensity: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl SynthParams {
    /// Frame of the given size seeded at `density` particles per pixel.
    pub fn with_density(width: usize, height: usize, density: f64, seed: u64) -> Self {
        Self {
            width,
            height,
            particle_count: (density * (width * height) as f64).round() as usize,
            particle_diameter: 3.0,
            peak_intensity: 0.8,
            noise_sigma: 0.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(PivError::Parameter("frame must be nonempty".into()));
        }
        if !(self.particle_diameter >= 1.0) {
            return Err(PivError::Parameter(format!(
                "particle diameter must be >= 1, got {}",
                self.particle_diameter
            )));
        }
        if !(0.0..=1.0).contains(&self.peak_intensity) || !(0.0..=1.0).contains(&self.noise_sigma) {
            return Err(PivError::Parameter(
                "peak intensity and noise sigma must lie in [0, 1]".into(),
            ));
        }
        Ok(())
    }
}

/// Sums Gaussian blobs `I exp(-8 r^2 / d^2)` without noise or clamping.
/// Pixel `(c, r)` is evaluated at its center `(c + 0.5, r + 0.5)`.
pub fn render_intensity(positions: &[(f64, f64)], p: &SynthParams) -> Vec<f64> {
    let (w, h) = (p.width, p.height);
    let mut data = vec![0.0; w * h];
    let d2 = p.particle_diameter * p.particle_diameter;
    // beyond two diameters the blob is below e^-32 of its peak
    let reach = (2.0 * p.particle_diameter).ceil() + 1.0;
    for &(px, py) in positions {
        let c0 = (px - reach).floor().max(0.0) as usize;
        let r0 = (py - reach).floor().max(0.0) as usize;
        let c1 = ((px + reach).ceil().max(0.0) as usize).min(w);
        let r1 = ((py + reach).ceil().max(0.0) as usize).min(h);
        for r in r0..r1 {
            let dy = r as f64 + 0.5 - py;
            for c in c0..c1 {
                let dx = c as f64 + 0.5 - px;
                data[r * w + c] += p.peak_intensity * (-8.0 * (dx * dx + dy * dy) / d2).exp();
            }
        }
    }
    data
}

fn add_noise_and_clamp(data: &mut [f64], sigma: f64, rng: &mut ChaCha8Rng) {
    if sigma > 0.0 {
        let normal = Normal::new(0.0, sigma).expect("sigma is finite and positive");
        for v in data.iter_mut() {
            *v += normal.sample(rng);
        }
    }
    for v in data.iter_mut() {
        *v = v.clamp(0.0, 1.0);
    }
}

/// Renders particles, adds noise drawn from `seed`, and clamps to `[0, 1]`.
pub fn render_particles(positions: &[(f64, f64)], p: &SynthParams) -> Result<GrayImage> {
    p.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut data = render_intensity(positions, p);
    add_noise_and_clamp(&mut data, p.noise_sigma, &mut rng);
    GrayImage::new(p.width, p.height, data)
}

/// A synthetic frame pair with its generating flow.
#[derive(Debug, Clone)]
pub struct SyntheticPair {
    pub frame_a: GrayImage,
    pub frame_b: GrayImage,
    pub positions_a: Vec<(f64, f64)>,
    pub positions_b: Vec<(f64, f64)>,
    pub flow: FlowSpec,
}

impl SyntheticPair {
    pub fn ground_truth(&self, grid: GridSpec) -> VectorField {
        self.flow.sample_grid(grid)
    }
}

/// Seeds particles uniformly over the frame, advects them with `flow`, and
/// renders both frames. Particles that leave the frame are not replaced.
pub fn gen_pair(flow: &FlowSpec, p: &SynthParams) -> Result<SyntheticPair> {
    flow.validate()?;
    p.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let positions_a: Vec<(f64, f64)> = (0..p.particle_count)
        .map(|_| {
            let x = rng.random::<f64>() * p.width as f64;
            let y = rng.random::<f64>() * p.height as f64;
            (x, y)
        })
        .collect();
    let positions_b = advect(&positions_a, flow);
    let mut a = render_intensity(&positions_a, p);
    add_noise_and_clamp(&mut a, p.noise_sigma, &mut rng);
    let mut b = render_intensity(&positions_b, p);
    add_noise_and_clamp(&mut b, p.noise_sigma, &mut rng);
    Ok(SyntheticPair {
        frame_a: GrayImage::new(p.width, p.height, a)?,
        frame_b: GrayImage::new(p.width, p.height, b)?,
        positions_a,
        positions_b,
        flow: *flow,
    })
}
