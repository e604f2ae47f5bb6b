use piv_core::derive::*;
use piv_core::synth::FlowSpec;
use piv_core::{make_grid, GridSpec, NodeStatus, Quantity, VectorField};
use proptest::prelude::*;

fn grid(n: usize, step: usize) -> GridSpec {
    make_grid(
        2 * step + step * (n - 1),
        2 * step + step * (n - 1),
        2 * step,
        step,
    )
    .unwrap()
}

fn interior(g: &GridSpec) -> impl Iterator<Item = usize> + '_ {
    (1..g.ny - 1).flat_map(move |y| (1..g.nx - 1).map(move |x| g.index(x, y)))
}

#[test]
fn rigid_rotation_velocity_has_vorticity_two_omega() {
    let g = grid(12, 8);
    let omega = 0.5;
    let f = VectorField::from_fn(g, |x, y| (-omega * (y - 50.0), omega * (x - 40.0)));
    let w = vorticity(&f, g.step as f64).unwrap();
    assert!(w.values.iter().all(|v| (v - 1.0).abs() < 1e-10));
    let d = divergence(&f, g.step as f64).unwrap();
    let s = shear_strain(&f, g.step as f64).unwrap();
    assert!(d.values.iter().chain(&s.values).all(|v| v.abs() < 1e-12));
}

#[test]
fn uniform_flow_has_no_vorticity() {
    let g = grid(6, 4);
    let f = VectorField::from_fn(g, |_, _| (1.3, -0.4));
    let w = vorticity(&f, 4.0).unwrap();
    assert!(w.values.iter().all(|v| v.abs() < 1e-15));
}

#[test]
fn rankine_vortex_matches_analytic_curl() {
    let flow = FlowSpec::Rankine {
        cx: 200.0,
        cy: 200.0,
        gamma: 3000.0,
        core_radius: 60.0,
    };
    let g = make_grid(400, 400, 4, 2).unwrap();
    let f = flow.sample_grid(g);
    let w = vorticity(&f, g.step as f64).unwrap();
    for i in interior(&g) {
        let (x, y) = g.center(i % g.nx, i / g.nx);
        let r = ((x - 200.0).powi(2) + (y - 200.0).powi(2)).sqrt();
        if (r - 60.0).abs() < 10.0 || r > 180.0 {
            continue;
        }
        let exact = flow.vorticity(x, y);
        let peak = 3000.0 / (std::f64::consts::PI * 3600.0);
        assert!(
            (w.values[i] - exact).abs() <= 0.05 * peak,
            "r={r}: {} vs {exact}",
            w.values[i]
        );
    }
}

#[test]
fn stencil_error_is_second_order() {
    let field_at = |step: usize| {
        let g = make_grid(200, 200, 2 * step, step).unwrap();
        let f = VectorField::from_fn(g, |x, y| ((0.03 * y).sin(), (0.02 * x).cos()));
        let w = vorticity(&f, step as f64).unwrap();
        // error at the node nearest (100, 100)
        let ix = (100 - step) / step;
        let (x, y) = g.center(ix, ix);
        let exact = -0.02 * (0.02 * x).sin() - 0.03 * (0.03 * y).cos();
        (w.get(ix, ix) - exact).abs()
    };
    let ratio = field_at(8) / field_at(4);
    assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
}

#[test]
fn rotated_field_divergence_equals_vorticity() {
    let g = grid(9, 4);
    let f = VectorField::from_fn(g, |x, y| {
        ((0.1 * x).sin() * y * 0.01, (0.07 * y).cos() + 0.002 * x * x)
    });
    let h = g.step as f64;
    let w = vorticity(&f, h).unwrap();
    // (u, v) -> (v, -u) carries the curl into the divergence
    let rot = VectorField {
        u: f.v.clone(),
        v: f.u.iter().map(|u| -u).collect(),
        ..f.clone()
    };
    let d = divergence(&rot, h).unwrap();
    for i in interior(&g) {
        assert!((d.values[i] - w.values[i]).abs() < 1e-12);
    }
}

proptest! {
    #[test]
    fn affine_fields_are_exact(
        a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0,
        d in -2.0f64..2.0, e in -2.0f64..2.0, k in -2.0f64..2.0,
        step in 2usize..10,
    ) {
        let g = grid(7, step);
        let f = VectorField::from_fn(g, |x, y| (a * x + b * y + c, d * x + e * y + k));
        let h = step as f64;
        let tol = 1e-12 * (1.0 + 100.0 * (a.abs() + b.abs() + d.abs() + e.abs()));
        for (s, want) in [
            (vorticity(&f, h).unwrap(), d - b),
            (divergence(&f, h).unwrap(), a + e),
            (shear_strain(&f, h).unwrap(), b + d),
        ] {
            for v in &s.values {
                prop_assert!((v - want).abs() < tol, "{} vs {}", v, want);
            }
        }
    }

    #[test]
    fn swapping_axes_negates_vorticity(
        u in prop::collection::vec(-1.0f64..1.0, 36),
        v in prop::collection::vec(-1.0f64..1.0, 36),
    ) {
        let g = grid(6, 4);
        let f = VectorField::new(g, u.clone(), v.clone(), vec![NodeStatus::Measured; 36]).unwrap();
        // transpose the lattice and swap components
        let t = |vals: &[f64]| (0..36).map(|i| vals[(i % 6) * 6 + i / 6]).collect::<Vec<_>>();
        let swapped = VectorField::new(g, t(&v), t(&u), vec![NodeStatus::Measured; 36]).unwrap();
        let w1 = vorticity(&f, 4.0).unwrap();
        let w2 = vorticity(&swapped, 4.0).unwrap();
        for i in 0..36 {
            let j = (i % 6) * 6 + i / 6;
            prop_assert!((w1.values[j] + w2.values[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn magnitude_matches_formula(
        u in prop::collection::vec(-5.0f64..5.0, 16),
        v in prop::collection::vec(-5.0f64..5.0, 16),
    ) {
        let g = grid(4, 4);
        let f = VectorField::new(g, u.clone(), v.clone(), vec![NodeStatus::Measured; 16]).unwrap();
        let m = velocity_magnitude(&f).unwrap();
        for i in 0..16 {
            prop_assert!((m.values[i] - (u[i] * u[i] + v[i] * v[i]).sqrt()).abs() < 1e-12);
        }
    }
}

#[test]
fn calibration_scales_outputs() {
    let g = grid(5, 4);
    let f = VectorField::from_fn(g, |x, y| (-0.1 * y, 0.1 * x));
    let cal = Calibration {
        units_per_pixel: 0.5,
        frame_interval: 0.25,
    };
    let w = derive_quantity(&f, Quantity::Vorticity, &cal).unwrap();
    // per-frame curl 0.2, divided by the interval
    assert!(w.values.iter().all(|v| (v - 0.8).abs() < 1e-12));
    let m = derive_quantity(&f, Quantity::Magnitude, &cal).unwrap();
    let m0 = velocity_magnitude(&f).unwrap();
    for (a, b) in m.values.iter().zip(&m0.values) {
        assert!((a - 2.0 * b).abs() < 1e-12);
    }
}

#[test]
fn stokes_reference_value() {
    let t = TracerSpec {
        diameter: 1e-6,
        particle_density: 1050.0,
        fluid_density: 1000.0,
        viscosity: 1e-3,
        acceleration: 9.81,
    };
    let u = stokes_slip_velocity(&t).unwrap();
    let expected = 1e-12 * 50.0 / 18e-3 * 9.81;
    assert!((u - expected).abs() < 1e-20);
    assert!((u - 2.725e-8).abs() < 1e-10);
    let big = stokes_slip_velocity(&TracerSpec {
        diameter: 2e-6,
        ..t
    })
    .unwrap();
    assert!((big / u - 4.0).abs() < 1e-12);
}

#[test]
fn diagonal_profile_matches_bilinear_oracle() {
    let g = grid(8, 4);
    let vals: Vec<f64> = (0..64).map(|i| ((i * 29) % 13) as f64 * 0.1).collect();
    let s = piv_core::ScalarField::new(g, vals.clone(), Quantity::Vorticity).unwrap();
    let (x0, y0) = g.center(0, 0);
    let (x1, y1) = g.center(7, 7);
    let probe = LineProbe {
        start: (x0 + 1.3, y0 + 0.2),
        end: (x1 - 2.1, y1 - 0.7),
        samples: 11,
    };
    let prof = line_profile(&s, &probe).unwrap();
    for (k, &(dist, val)) in prof.iter().enumerate() {
        let t = k as f64 / 10.0;
        let x = probe.start.0 + t * (probe.end.0 - probe.start.0);
        let y = probe.start.1 + t * (probe.end.1 - probe.start.1);
        let fx = (x - x0) / g.step as f64;
        let fy = (y - y0) / g.step as f64;
        let (ix, iy) = (fx.floor() as usize, fy.floor() as usize);
        let (ix, iy) = (ix.min(6), iy.min(6));
        let (tx, ty) = (fx - ix as f64, fy - iy as f64);
        let at = |x: usize, y: usize| vals[y * 8 + x];
        let oracle = (1.0 - ty) * ((1.0 - tx) * at(ix, iy) + tx * at(ix + 1, iy))
            + ty * ((1.0 - tx) * at(ix, iy + 1) + tx * at(ix + 1, iy + 1));
        assert!((val - oracle).abs() < 1e-12);
        let dd = ((x - probe.start.0).powi(2) + (y - probe.start.1).powi(2)).sqrt();
        assert!((dist - dd).abs() < 1e-12);
    }
}

#[test]
fn mean_direction_conventions() {
    let g = grid(4, 4);
    let region = NodeRegion {
        x0: 0,
        y0: 0,
        x1: 3,
        y1: 3,
    };
    let f = VectorField::from_fn(g, |_, _| (1.0, 1.0));
    assert!((area_mean_direction(&f, &region).unwrap().angle_deg - 45.0).abs() < 1e-12);
    let f = VectorField::from_fn(g, |_, _| (-1.0, 0.0));
    assert!((area_mean_direction(&f, &region).unwrap().angle_deg - 180.0).abs() < 1e-12);
    let f = VectorField::from_fn(g, |_, _| (0.0, -2.0));
    let d = area_mean_direction(&f, &region).unwrap();
    assert!((d.angle_deg - 270.0).abs() < 1e-12 && (d.magnitude - 2.0).abs() < 1e-12);
    assert!(area_mean_direction(&VectorField::zeros(g), &region).is_err());
}
