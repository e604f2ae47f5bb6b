use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::plane::{centered, check_pair, CorrelationPlane};
use crate::error::Result;

/// Frequency-domain correlator for a fixed window side.
///
/// Windows are mean-subtracted and zero-padded to the next power of two at
/// or above twice the side, so the product `conj(F) * G` yields the linear
/// (non-wrapping) correlation for every shift in `(-side, side)`. Each value
/// is divided by its overlap count, which makes the plane identical to
/// [`super::dcc`] on the shared shift range.
#[derive(Clone)]
pub struct FftCorrelator {
    side: usize,
    padded: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for FftCorrelator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftCorrelator")
            .field("side", &self.side)
            .field("padded", &self.padded)
            .finish()
    }
}

impl FftCorrelator {
    pub fn new(side: usize) -> Self {
        Self::with_padding(side, (2 * side).next_power_of_two())
    }

    fn with_padding(side: usize, padded: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            side,
            padded,
            forward: planner.plan_fft_forward(padded),
            inverse: planner.plan_fft_inverse(padded),
        }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    /// Side of the zero-padded transform.
    pub fn padded_side(&self) -> usize {
        self.padded
    }

    fn transform(&self, fft: &Arc<dyn Fft<f64>>, buf: &mut [Complex<f64>]) {
        // rows, transpose, rows: the spectrum comes out transposed, which is
        // harmless for an elementwise product followed by the same sequence
        let n = self.padded;
        let mut scratch = vec![Complex::default(); fft.get_inplace_scratch_len()];
        fft.process_with_scratch(buf, &mut scratch);
        transpose_in_place(buf, n);
        fft.process_with_scratch(buf, &mut scratch);
    }

    fn load(&self, w: &[f64]) -> Vec<Complex<f64>> {
        let n = self.padded;
        let mut buf = vec![Complex::default(); n * n];
        let w = centered(w);
        for r in 0..self.side {
            for c in 0..self.side {
                buf[r * n + c] = Complex::new(w[r * self.side + c], 0.0);
            }
        }
        buf
    }

    /// Raw circular correlation `sum a'(x) b'(x + s)` indexed by `s mod n`.
    fn raw(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let n = self.padded;
        let mut fa = self.load(a);
        let mut fb = self.load(b);
        self.transform(&self.forward, &mut fa);
        self.transform(&self.forward, &mut fb);
        for (x, y) in fa.iter_mut().zip(&fb) {
            *x = x.conj() * y;
        }
        self.transform(&self.inverse, &mut fa);
        let scale = 1.0 / (n * n) as f64;
        fa.iter().map(|c| c.re * scale).collect()
    }

    /// Full plane over shifts `|dx|, |dy| <= side - 1`.
    pub fn correlate(&self, a: &[f64], b: &[f64]) -> Result<CorrelationPlane> {
        check_pair(a, b, self.side)?;
        let n = self.padded as isize;
        let s = self.side as isize;
        let raw = self.raw(a, b);
        Ok(CorrelationPlane::from_fn(self.side - 1, |dx, dy| {
            let r = dy.rem_euclid(n) as usize;
            let c = dx.rem_euclid(n) as usize;
            let overlap = ((s - dx.abs()) * (s - dy.abs())) as f64;
            raw[r * n as usize + c] / overlap
        }))
    }
}

fn transpose_in_place(buf: &mut [Complex<f64>], n: usize) {
    for r in 0..n {
        for c in r + 1..n {
            buf.swap(r * n + c, c * n + r);
        }
    }
}

/// Zero-padded FFT cross-correlation of two `side x side` windows.
pub fn fft_correlate(a: &[f64], b: &[f64], side: usize) -> Result<CorrelationPlane> {
    FftCorrelator::new(side).correlate(a, b)
}

/// Circular FFT cross-correlation without padding: shifts wrap around the
/// window and every value is divided by `side^2`. Covers shifts
/// `|dx|, |dy| <= (side - 1) / 2`.
pub fn fft_correlate_circular(a: &[f64], b: &[f64], side: usize) -> Result<CorrelationPlane> {
    check_pair(a, b, side)?;
    let corr = FftCorrelator::with_padding(side, side);
    let raw = corr.raw(a, b);
    let n = side as isize;
    let norm = (side * side) as f64;
    Ok(CorrelationPlane::from_fn((side - 1) / 2, |dx, dy| {
        raw[dy.rem_euclid(n) as usize * side + dx.rem_euclid(n) as usize] / norm
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlate::{dcc, find_peak};

    fn window(side: usize, seed: u64) -> Vec<f64> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..side * side).map(|_| rng.random()).collect()
    }

    #[test]
    fn zero_windows_give_zero_plane() {
        let z = vec![0.0; 64];
        let p = fft_correlate(&z, &z, 8).unwrap();
        assert!(p.values().iter().all(|&v| v.abs() < 1e-15));
    }

    #[test]
    fn matches_direct_on_shared_range() {
        let a = window(16, 1);
        let b = window(16, 2);
        let f = fft_correlate(&a, &b, 16).unwrap();
        let d = dcc(&a, &b, 16, 8).unwrap();
        let scale = d.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for dy in -8..=8 {
            for dx in -8..=8 {
                assert!((f.get(dx, dy) - d.get(dx, dy)).abs() <= 1e-6 * scale);
            }
        }
    }

    #[test]
    fn odd_side_is_padded() {
        let c = FftCorrelator::new(13);
        assert_eq!(c.padded_side(), 32);
        let a = window(13, 5);
        let b = window(13, 6);
        let f = c.correlate(&a, &b).unwrap();
        let d = dcc(&a, &b, 13, 6).unwrap();
        for dy in -6..=6 {
            for dx in -6..=6 {
                assert!((f.get(dx, dy) - d.get(dx, dy)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn circular_shift_recovered() {
        let side = 16;
        let a = window(side, 9);
        // b(x) = a(x - (2, 3)) with wrap-around
        let b: Vec<f64> = (0..side * side)
            .map(|i| {
                let (r, c) = (i / side, i % side);
                a[((r + side - 3) % side) * side + (c + side - 2) % side]
            })
            .collect();
        let p = fft_correlate_circular(&a, &b, side).unwrap();
        let pk = find_peak(&p);
        assert_eq!((pk.dx, pk.dy), (2, 3));
        // direct circular sum at the peak
        let ac = centered(&a);
        let bc = centered(&b);
        let direct: f64 = (0..side * side)
            .map(|i| {
                let (r, c) = (i / side, i % side);
                ac[i] * bc[((r + 3) % side) * side + (c + 2) % side]
            })
            .sum::<f64>()
            / (side * side) as f64;
        assert!((p.get(2, 3) - direct).abs() < 1e-12);
    }
}
