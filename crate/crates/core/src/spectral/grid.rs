use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Uniform `n x n` sampling of the unit torus `[0,1)^2`.
///
/// Samples sit at `(i h, j h)` with `h = 1/n`; storage is row-major with the
/// x index outer and the y index inner. Angular wavenumbers are `2 pi` times
/// the integer frequencies `[-n/2, n/2)`.
#[derive(Clone)]
pub struct TorusGrid {
    inner: Arc<GridInner>,
}

struct GridInner {
    n: usize,
    h: f64,
    freqs: Vec<i64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl TorusGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n = {n} must be a power of two and at least 8"
            )));
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let freqs = (0..n)
            .map(|i| {
                if i < n / 2 {
                    i as i64
                } else {
                    i as i64 - n as i64
                }
            })
            .collect();
        Ok(Self {
            inner: Arc::new(GridInner {
                n,
                h: 1.0 / n as f64,
                freqs,
                forward,
                inverse,
            }),
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.inner.n
    }

    #[inline]
    pub fn h(&self) -> f64 {
        self.inner.h
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.inner.n * self.inner.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Integer frequencies per axis, in FFT storage order.
    pub fn freqs(&self) -> &[i64] {
        &self.inner.freqs
    }

    /// Angular wavenumber `2 pi p` for storage index `i`.
    #[inline]
    pub fn wavenumber(&self, i: usize) -> f64 {
        std::f64::consts::TAU * self.inner.freqs[i] as f64
    }

    /// `|k| = 2 pi sqrt(p^2 + q^2)` for the mode at storage indices `(i, j)`.
    #[inline]
    pub fn k_mag(&self, i: usize, j: usize) -> f64 {
        let p = self.inner.freqs[i] as f64;
        let q = self.inner.freqs[j] as f64;
        std::f64::consts::TAU * (p * p + q * q).sqrt()
    }

    /// Whether storage index `i` holds the unpaired Nyquist frequency `-n/2`.
    #[inline]
    pub fn is_nyquist(&self, i: usize) -> bool {
        i == self.inner.n / 2
    }

    /// Coordinates of grid point `(i, j)`.
    #[inline]
    pub fn point(&self, i: usize, j: usize) -> (f64, f64) {
        (i as f64 * self.inner.h, j as f64 * self.inner.h)
    }

    pub fn same_as(&self, other: &TorusGrid) -> bool {
        self.inner.n == other.inner.n
    }

    pub(crate) fn ensure_same(&self, other: &TorusGrid) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "grid sizes {} and {} differ",
                self.n(),
                other.n()
            )))
        }
    }

    /// Unscaled forward 2D DFT of a real array.
    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut buf, &self.inner.forward);
        buf
    }

    /// Inverse 2D DFT scaled by `1/n^2`; returns the real part.
    pub fn inverse_real(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let mut buf = coeffs.to_vec();
        self.transform(&mut buf, &self.inner.inverse);
        let scale = 1.0 / self.len() as f64;
        buf.iter().map(|c| c.re * scale).collect()
    }

    fn transform(&self, buf: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.inner.n;
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        // y direction: contiguous rows
        fft.process_with_scratch(buf, &mut scratch);
        // x direction: transpose, transform rows, transpose back
        let mut t = vec![Complex64::default(); n * n];
        transpose(buf, &mut t, n);
        fft.process_with_scratch(&mut t, &mut scratch);
        transpose(&t, buf, n);
    }
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], n: usize) {
    const B: usize = 16;
    for ib in (0..n).step_by(B) {
        for jb in (0..n).step_by(B) {
            for i in ib..(ib + B).min(n) {
                for j in jb..(jb + B).min(n) {
                    dst[j * n + i] = src[i * n + j];
                }
            }
        }
    }
}

impl fmt::Debug for TorusGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TorusGrid")
            .field("n", &self.inner.n)
            .finish()
    }
}

impl PartialEq for TorusGrid {
    fn eq(&self, other: &Self) -> bool {
        self.same_as(other)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes() {
        assert!(TorusGrid::new(4).is_err());
        assert!(TorusGrid::new(48).is_err());
        assert!(TorusGrid::new(16).is_ok());
    }

    #[test]
    fn k_mag_vanishes_only_at_origin() {
        let g = TorusGrid::new(16).unwrap();
        for i in 0..16 {
            for j in 0..16 {
                let k = g.k_mag(i, j);
                assert_eq!(k == 0.0, i == 0 && j == 0);
            }
        }
        assert_eq!(g.freqs()[8], -8);
        assert_eq!(g.freqs()[15], -1);
    }

    #[test]
    fn forward_inverse_roundtrip() {
        let g = TorusGrid::new(16).unwrap();
        let v: Vec<f64> = (0..256).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
        let back = g.inverse_real(&g.forward(&v));
        for (a, b) in v.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
