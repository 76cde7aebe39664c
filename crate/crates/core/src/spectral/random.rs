use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::field::ScalarField;
use super::grid::TorusGrid;
use super::ops::keeps_mode;

/// Random mean-zero field with i.i.d. complex Gaussian Fourier coefficients
/// weighted by `|k|^{-gamma}` and truncated at the dealiasing cutoff.
///
/// `max_freq` further limits `max(|p|, |q|)` when set.
pub fn random_field<R: Rng + ?Sized>(
    grid: &TorusGrid,
    gamma: f64,
    max_freq: Option<i64>,
    rng: &mut R,
) -> ScalarField {
    let n = grid.n();
    let freqs = grid.freqs();
    let limit = max_freq.unwrap_or(i64::MAX);
    let mut c = vec![Complex64::default(); grid.len()];
    for i in 0..n {
        for j in 0..n {
            let (p, q) = (freqs[i], freqs[j]);
            // draw for every slot so the stream does not depend on the cutoff
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            if (p == 0 && q == 0)
                || !keeps_mode(n, p)
                || !keeps_mode(n, q)
                || p.abs().max(q.abs()) > limit
            {
                continue;
            }
            let w = grid.k_mag(i, j).powf(-gamma);
            c[i * n + j] = Complex64::new(re, im) * (w * grid.len() as f64);
        }
    }
    ScalarField::from_spectral(grid, c)
}

/// Rescales `f` to unit sup norm (zero fields are returned unchanged).
pub fn normalize_linf(f: &ScalarField) -> ScalarField {
    let m = super::norms::linf(f);
    if m > 0.0 {
        f.scale(1.0 / m)
    } else {
        f.clone()
    }
}
