use std::sync::OnceLock;

use num_complex::Complex64;

use super::grid::TorusGrid;
use crate::error::{Error, Result};

/// Real periodic grid function with lazily computed Fourier coefficients.
///
/// Values are immutable once constructed; every operation returns a new
/// field. The spectral cache uses the unscaled forward transform.
#[derive(Clone)]
pub struct ScalarField {
    grid: TorusGrid,
    values: Vec<f64>,
    spectral: OnceLock<Vec<Complex64>>,
}

impl ScalarField {
    pub fn from_values(grid: &TorusGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Shape(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self {
            grid: grid.clone(),
            values,
            spectral: OnceLock::new(),
        })
    }

    pub fn zeros(grid: &TorusGrid) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![0.0; grid.len()],
            spectral: OnceLock::new(),
        }
    }

    /// Samples `f(x, y)` at the grid points.
    pub fn from_fn(grid: &TorusGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let n = grid.n();
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..n {
            for j in 0..n {
                let (x, y) = grid.point(i, j);
                values.push(f(x, y));
            }
        }
        Self {
            grid: grid.clone(),
            values,
            spectral: OnceLock::new(),
        }
    }

    /// Builds a field from Fourier coefficients after projecting them onto
    /// the Hermitian-symmetric subspace, so the result is exactly real.
    pub fn from_spectral(grid: &TorusGrid, mut coeffs: Vec<Complex64>) -> Self {
        hermitian_project(grid, &mut coeffs);
        Self::from_hermitian(grid, coeffs)
    }

    /// Caller guarantees Hermitian symmetry of `coeffs`.
    pub(crate) fn from_hermitian(grid: &TorusGrid, coeffs: Vec<Complex64>) -> Self {
        let values = grid.inverse_real(&coeffs);
        let spectral = OnceLock::new();
        let _ = spectral.set(coeffs);
        Self {
            grid: grid.clone(),
            values,
            spectral,
        }
    }

    #[inline]
    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.n() + j]
    }

    pub fn spectral(&self) -> &[Complex64] {
        self.spectral
            .get_or_init(|| self.grid.forward(&self.values))
    }

    pub fn has_spectral_cache(&self) -> bool {
        self.spectral.get().is_some()
    }

    pub fn mean(&self) -> f64 {
        self.spectral()[0].re / self.grid.len() as f64
    }

    /// Returns the field minus its mean.
    pub fn mean_free(&self) -> ScalarField {
        let mut c = self.spectral().to_vec();
        c[0] = Complex64::default();
        Self::from_hermitian(&self.grid, c)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
            spectral: OnceLock::new(),
        }
    }

    pub fn zip_with(
        &self,
        other: &ScalarField,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<ScalarField> {
        self.grid.ensure_same(&other.grid)?;
        Ok(Self {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            spectral: OnceLock::new(),
        })
    }

    /// `a * self + b * other`, combining spectral caches when both exist.
    pub fn axpby(&self, a: f64, other: &ScalarField, b: f64) -> Result<ScalarField> {
        self.grid.ensure_same(&other.grid)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&x, &y)| a * x + b * y)
            .collect();
        let spectral = OnceLock::new();
        if let (Some(s), Some(o)) = (self.spectral.get(), other.spectral.get()) {
            let _ = spectral.set(s.iter().zip(o).map(|(&x, &y)| x * a + y * b).collect());
        }
        Ok(Self {
            grid: self.grid.clone(),
            values,
            spectral,
        })
    }

    pub fn add(&self, other: &ScalarField) -> Result<ScalarField> {
        self.axpby(1.0, other, 1.0)
    }

    pub fn sub(&self, other: &ScalarField) -> Result<ScalarField> {
        self.axpby(1.0, other, -1.0)
    }

    pub fn scale(&self, a: f64) -> ScalarField {
        let spectral = OnceLock::new();
        if let Some(s) = self.spectral.get() {
            let _ = spectral.set(s.iter().map(|&x| x * a).collect());
        }
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| a * v).collect(),
            spectral,
        }
    }

    /// Largest absolute difference of grid samples.
    pub fn max_abs_diff(&self, other: &ScalarField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Little-endian sample bytes, used for digests and dumps.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        self.values.iter().flat_map(|v| v.to_le_bytes()).collect()
    }
}

impl std::fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScalarField")
            .field("n", &self.grid.n())
            .field("cached", &self.has_spectral_cache())
            .finish()
    }
}

fn hermitian_project(grid: &TorusGrid, c: &mut [Complex64]) {
    let n = grid.n();
    let src = c.to_vec();
    for i in 0..n {
        let mi = (n - i) % n;
        for j in 0..n {
            let mj = (n - j) % n;
            c[i * n + j] = (src[i * n + j] + src[mi * n + mj].conj()) * 0.5;
        }
    }
}
