use super::plane::{CorrelationPlane, Peak};

/// Displacement estimate for one interrogation window, in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Displacement {
    pub dx: f64,
    pub dy: f64,
    pub peak_value: f64,
    pub peak_ratio: Option<f64>,
    /// The sub-pixel fit fell back to the integer peak on at least one axis.
    pub degenerate: bool,
}

/// Offset of the apex of a Gaussian through three equally spaced positive
/// samples. `None` when the fit is undefined or the apex leaves `(-1, 1)`.
pub fn gauss3_offset(minus: f64, center: f64, plus: f64) -> Option<f64> {
    if !(minus > 0.0 && center > 0.0 && plus > 0.0) {
        return None;
    }
    let (lm, lc, lp) = (minus.ln(), center.ln(), plus.ln());
    let den = 2.0 * lm - 4.0 * lc + 2.0 * lp;
    if den == 0.0 || !den.is_finite() {
        return None;
    }
    let delta = (lm - lp) / den;
    (delta.is_finite() && delta.abs() < 1.0).then_some(delta)
}

/// Refines an integer peak with two independent three-point Gaussian fits,
/// one per axis ("Gaussian 2x3").
///
/// If any sample in the 3x3 neighborhood is nonpositive while the peak itself
/// is positive, the neighborhood is lifted by `1e-6 - min` before taking
/// logarithms. Border peaks, nonpositive peaks and undefined fits fall back
/// to the integer position and set the degenerate flag.
pub fn subpixel_gauss3(plane: &CorrelationPlane, peak: &Peak) -> Displacement {
    let r = plane.radius() as isize;
    let integer = Displacement {
        dx: peak.dx as f64,
        dy: peak.dy as f64,
        peak_value: peak.value,
        peak_ratio: peak.ratio,
        degenerate: true,
    };
    let (px, py) = (peak.dx, peak.dy);
    if peak.degenerate || px.abs() >= r || py.abs() >= r {
        return integer;
    }
    let c0 = plane.get(px, py);
    if !(c0 > 0.0) {
        return integer;
    }
    let mut low = f64::INFINITY;
    for j in -1..=1 {
        for i in -1..=1 {
            low = low.min(plane.get(px + i, py + j));
        }
    }
    let lift = if low <= 0.0 { 1e-6 - low } else { 0.0 };
    let at = |dx: isize, dy: isize| plane.get(dx, dy) + lift;

    let fx = gauss3_offset(at(px - 1, py), at(px, py), at(px + 1, py));
    let fy = gauss3_offset(at(px, py - 1), at(px, py), at(px, py + 1));
    Displacement {
        dx: px as f64 + fx.unwrap_or(0.0),
        dy: py as f64 + fy.unwrap_or(0.0),
        peak_value: peak.value,
        peak_ratio: peak.ratio,
        degenerate: fx.is_none() || fy.is_none(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlate::find_peak;

    #[test]
    fn symmetric_neighbors_give_zero() {
        assert_eq!(gauss3_offset(0.4, 0.9, 0.4), Some(0.0));
    }

    /// Least-squares Gaussian through three samples: the log-parabola vertex,
    /// solved from the 3x3 normal equations for `ln c = a + b x + c x^2`.
    fn lsq_vertex(samples: [f64; 3]) -> f64 {
        let xs = [-1.0, 0.0, 1.0];
        let ys: Vec<f64> = samples.iter().map(|v| v.ln()).collect();
        // Vandermonde is square, so least squares is interpolation
        let a = ys[1];
        let b = (ys[2] - ys[0]) / (xs[2] - xs[0]);
        let c = (ys[2] + ys[0] - 2.0 * a) / 2.0;
        -b / (2.0 * c)
    }

    #[test]
    fn known_offset() {
        let s = [(-0.5f64).exp(), 1.0, (-2.0f64).exp()];
        let d = gauss3_offset(s[0], s[1], s[2]).unwrap();
        assert!((d - -0.3).abs() < 1e-12);
        assert!((d - lsq_vertex(s)).abs() < 1e-12);
    }

    #[test]
    fn zero_center_is_degenerate() {
        let p = CorrelationPlane::from_fn(2, |dx, dy| match (dx, dy) {
            (0, 0) => 0.0,
            _ => -1.0,
        });
        let pk = find_peak(&p);
        let d = subpixel_gauss3(&p, &pk);
        assert!(d.degenerate);
        assert_eq!((d.dx, d.dy), (0.0, 0.0));
    }

    #[test]
    fn border_peak_falls_back() {
        let p = CorrelationPlane::from_fn(2, |dx, dy| if (dx, dy) == (2, 0) { 1.0 } else { 0.1 });
        let pk = find_peak(&p);
        let d = subpixel_gauss3(&p, &pk);
        assert!(d.degenerate);
        assert_eq!((d.dx, d.dy), (2.0, 0.0));
    }

    #[test]
    fn negative_neighbors_are_lifted() {
        let p = CorrelationPlane::from_fn(3, |dx, dy| {
            let g = (-((dx as f64 - 0.2).powi(2) + (dy as f64).powi(2)) / 2.0).exp();
            g - 0.5
        });
        let pk = find_peak(&p);
        let d = subpixel_gauss3(&p, &pk);
        assert!(!d.degenerate);
        assert!(d.dx > 0.0 && d.dx < 0.5);
        assert!(d.dy.abs() < 1e-12);
    }

    #[test]
    fn exact_gaussian_plane() {
        for &(ox, oy, w) in &[(0.3, -0.45, 0.8), (-0.1, 0.25, 1.5), (0.45, 0.0, 3.0)] {
            let p = CorrelationPlane::from_fn(5, |dx, dy| {
                let (x, y) = (dx as f64 - 1.0 - ox, dy as f64 + 2.0 - oy);
                (-(x * x + y * y) / (2.0 * w * w)).exp()
            });
            let pk = find_peak(&p);
            let d = subpixel_gauss3(&p, &pk);
            assert!((d.dx - (1.0 + ox)).abs() < 1e-9, "{d:?}");
            assert!((d.dy - (-2.0 + oy)).abs() < 1e-9, "{d:?}");
        }
    }
}
