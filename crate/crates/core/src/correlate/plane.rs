use crate::error::{PivError, Result};

/// Correlation values over integer shifts `(dx, dy)` in `[-radius, radius]^2`,
/// stored row-major with `dy` selecting the row.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationPlane {
    radius: usize,
    values: Vec<f64>,
}

impl CorrelationPlane {
    pub fn new(radius: usize, values: Vec<f64>) -> Result<Self> {
        let side = 2 * radius + 1;
        if values.len() != side * side {
            return Err(PivError::Dimension(format!(
                "plane of radius {radius} needs {} values, got {}",
                side * side,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(PivError::Numeric("non-finite correlation value".into()));
        }
        Ok(Self { radius, values })
    }

    /// Builds a plane by evaluating `f(dx, dy)` at every shift.
    pub fn from_fn(radius: usize, mut f: impl FnMut(isize, isize) -> f64) -> Self {
        let r = radius as isize;
        let mut values = Vec::with_capacity((2 * radius + 1).pow(2));
        for dy in -r..=r {
            for dx in -r..=r {
                values.push(f(dx, dy));
            }
        }
        Self { radius, values }
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn side(&self) -> usize {
        2 * self.radius + 1
    }

    /// Index of the zero shift along each axis.
    pub fn origin(&self) -> (usize, usize) {
        (self.radius, self.radius)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, dx: isize, dy: isize) -> f64 {
        let r = self.radius as isize;
        debug_assert!(dx.abs() <= r && dy.abs() <= r);
        self.values[((dy + r) as usize) * self.side() + (dx + r) as usize]
    }

    /// Keeps only shifts with `|dx|, |dy| <= radius`.
    pub fn crop(&self, radius: usize) -> CorrelationPlane {
        let radius = radius.min(self.radius);
        Self::from_fn(radius, |dx, dy| self.get(dx, dy))
    }
}

/// Subtracts the window mean.
pub(crate) fn centered(w: &[f64]) -> Vec<f64> {
    let mean = w.iter().sum::<f64>() / w.len() as f64;
    w.iter().map(|v| v - mean).collect()
}

pub(crate) fn check_pair(a: &[f64], b: &[f64], side: usize) -> Result<()> {
    if a.len() != side * side || b.len() != side * side {
        return Err(PivError::Dimension(format!(
            "windows must both be {side}x{side}, got {} and {} samples",
            a.len(),
            b.len()
        )));
    }
    if side == 0 {
        return Err(PivError::Dimension("empty window".into()));
    }
    Ok(())
}

/// Direct spatial cross-correlation of two `side x side` windows.
///
/// Both windows are mean-subtracted, then for every shift
/// `C(dx, dy) = sum A'(x, y) B'(x + dx, y + dy)` over the overlapping
/// samples, divided by the number of overlapping samples.
pub fn dcc(a: &[f64], b: &[f64], side: usize, half_width: usize) -> Result<CorrelationPlane> {
    check_pair(a, b, side)?;
    if half_width > side / 2 {
        return Err(PivError::Parameter(format!(
            "half width {half_width} exceeds half the window side {side}"
        )));
    }
    let a = centered(a);
    let b = centered(b);
    let s = side as isize;
    Ok(CorrelationPlane::from_fn(half_width, |dx, dy| {
        let y0 = 0.max(-dy);
        let y1 = s.min(s - dy);
        let x0 = 0.max(-dx);
        let x1 = s.min(s - dx);
        let mut sum = 0.0;
        for y in y0..y1 {
            let ra = &a[(y * s) as usize..((y + 1) * s) as usize];
            let rb = &b[((y + dy) * s) as usize..((y + dy + 1) * s) as usize];
            for x in x0..x1 {
                sum += ra[x as usize] * rb[(x + dx) as usize];
            }
        }
        let overlap = ((s - dx.abs()) * (s - dy.abs())) as f64;
        sum / overlap
    }))
}

/// Integer peak of a correlation plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub dx: isize,
    pub dy: isize,
    pub value: f64,
    /// Peak value over the highest value outside its 3x3 neighborhood, when
    /// both are positive.
    pub ratio: Option<f64>,
    /// The searched region was flat.
    pub degenerate: bool,
}

/// Global maximum of the plane. See [`find_peak_within`].
pub fn find_peak(plane: &CorrelationPlane) -> Peak {
    find_peak_within(plane, plane.radius())
}

/// Maximum over shifts with `|dx|, |dy| <= radius`. Ties go to the smallest
/// shift magnitude, then to row-major order. A flat region yields shift
/// `(0, 0)` with the degenerate flag.
pub fn find_peak_within(plane: &CorrelationPlane, radius: usize) -> Peak {
    let r = radius.min(plane.radius()) as isize;
    let mut best = (0isize, 0isize);
    let mut best_val = f64::NEG_INFINITY;
    let mut lowest = f64::INFINITY;
    for dy in -r..=r {
        for dx in -r..=r {
            let v = plane.get(dx, dy);
            lowest = lowest.min(v);
            let closer = dx * dx + dy * dy < best.0 * best.0 + best.1 * best.1;
            if v > best_val || (v == best_val && closer) {
                best_val = v;
                best = (dx, dy);
            }
        }
    }
    if lowest == best_val {
        return Peak {
            dx: 0,
            dy: 0,
            value: plane.get(0, 0),
            ratio: None,
            degenerate: true,
        };
    }
    let mut second = f64::NEG_INFINITY;
    for dy in -r..=r {
        for dx in -r..=r {
            if (dx - best.0).abs() <= 1 && (dy - best.1).abs() <= 1 {
                continue;
            }
            second = second.max(plane.get(dx, dy));
        }
    }
    let ratio = (best_val > 0.0 && second > 0.0).then(|| best_val / second);
    Peak {
        dx: best.0,
        dy: best.1,
        value: best_val,
        ratio,
        degenerate: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn impulse_shift_right() {
        let mut a = vec![0.0; 25];
        let mut b = vec![0.0; 25];
        a[2 * 5 + 2] = 1.0;
        b[2 * 5 + 3] = 1.0;
        let p = dcc(&a, &b, 5, 2).unwrap();
        let pk = find_peak(&p);
        assert_eq!((pk.dx, pk.dy), (1, 0));
    }

    #[test]
    fn autocorrelation_peaks_at_zero() {
        // overlap normalization lets strongly periodic windows peak elsewhere,
        // so use an aperiodic one
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12345);
        let a: Vec<f64> = (0..64).map(|_| rng.random()).collect();
        let p = dcc(&a, &a, 8, 4).unwrap();
        let pk = find_peak(&p);
        assert_eq!((pk.dx, pk.dy), (0, 0));
        assert!(!pk.degenerate);
    }

    #[test]
    fn mismatched_windows() {
        assert!(matches!(
            dcc(&[0.0; 16], &[0.0; 25], 4, 1),
            Err(PivError::Dimension(_))
        ));
        assert!(dcc(&[0.0; 16], &[0.0; 16], 4, 3).is_err());
    }

    #[test]
    fn single_maximum() {
        let p = CorrelationPlane::from_fn(3, |dx, dy| if (dx, dy) == (1, 0) { 2.0 } else { 0.5 });
        let pk = find_peak(&p);
        assert_eq!((pk.dx, pk.dy, pk.value), (1, 0, 2.0));
        assert_eq!(pk.ratio, Some(4.0));
    }

    #[test]
    fn constant_plane_is_degenerate() {
        let p = CorrelationPlane::from_fn(2, |_, _| 0.3);
        let pk = find_peak(&p);
        assert!(pk.degenerate);
        assert_eq!((pk.dx, pk.dy), (0, 0));
    }

    #[test]
    fn tie_prefers_smaller_shift() {
        let p = CorrelationPlane::from_fn(4, |dx, dy| match (dx, dy) {
            (-2, 0) | (3, 0) => 1.0,
            _ => 0.0,
        });
        let pk = find_peak(&p);
        assert_eq!((pk.dx, pk.dy), (-2, 0));
        // equal magnitude: row-major order wins
        let p = CorrelationPlane::from_fn(4, |dx, dy| match (dx, dy) {
            (2, 0) | (0, -2) => 1.0,
            _ => 0.0,
        });
        let pk = find_peak(&p);
        assert_eq!((pk.dx, pk.dy), (0, -2));
    }

    #[test]
    fn search_radius_limits_peak() {
        let p = CorrelationPlane::from_fn(4, |dx, dy| match (dx, dy) {
            (4, 4) => 9.0,
            (1, -1) => 2.0,
            _ => 0.0,
        });
        assert_eq!((find_peak(&p).dx, find_peak(&p).dy), (4, 4));
        let pk = find_peak_within(&p, 2);
        assert_eq!((pk.dx, pk.dy), (1, -1));
    }
}
