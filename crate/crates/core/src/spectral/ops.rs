use num_complex::Complex64;

use super::field::ScalarField;
use super::grid::TorusGrid;
use crate::error::{Error, Result};

/// Relative tolerance on the mean for operations defined on mean-zero fields.
pub const MEAN_TOL: f64 = 1e-10;

/// Applies a Hermitian-preserving Fourier multiplier `m(i, j)`.
fn apply_multiplier(f: &ScalarField, m: impl Fn(usize, usize) -> Complex64) -> ScalarField {
    let grid = f.grid();
    let n = grid.n();
    let src = f.spectral();
    let mut out = Vec::with_capacity(src.len());
    for i in 0..n {
        for j in 0..n {
            out.push(src[i * n + j] * m(i, j));
        }
    }
    ScalarField::from_hermitian(grid, out)
}

/// Spectral multiplier for `d^a/dx^a` along one axis. Odd derivatives drop the
/// unpaired Nyquist mode so the result stays real.
fn axis_factor(grid: &TorusGrid, idx: usize, order: usize) -> Complex64 {
    if order == 0 {
        return Complex64::new(1.0, 0.0);
    }
    if order % 2 == 1 && grid.is_nyquist(idx) {
        return Complex64::default();
    }
    let ik = Complex64::new(0.0, grid.wavenumber(idx));
    let mut r = Complex64::new(1.0, 0.0);
    for _ in 0..order {
        r *= ik;
    }
    r
}

/// `d^a/dx^a d^b/dy^b f` for total degree at most two.
pub fn derivative(f: &ScalarField, order: (usize, usize)) -> Result<ScalarField> {
    let (a, b) = order;
    if a + b > 2 {
        return Err(Error::UnsupportedOrder(a, b));
    }
    let grid = f.grid().clone();
    Ok(apply_multiplier(f, |i, j| {
        axis_factor(&grid, i, a) * axis_factor(&grid, j, b)
    }))
}

pub fn laplacian(f: &ScalarField) -> ScalarField {
    let grid = f.grid().clone();
    apply_multiplier(f, |i, j| {
        let k = grid.k_mag(i, j);
        Complex64::new(-k * k, 0.0)
    })
}

/// Checks `|<f>| <= MEAN_TOL * |f|_L2`.
pub fn ensure_mean_zero(f: &ScalarField) -> Result<()> {
    let mean = f.mean();
    let l2 = l2_norm(f);
    let tol = MEAN_TOL * l2;
    if mean.abs() > tol && mean.abs() > 1e-300 {
        return Err(Error::MeanViolation { mean, tol });
    }
    Ok(())
}

pub(crate) fn l2_norm(f: &ScalarField) -> f64 {
    let v = f.values();
    (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt()
}

/// Solves `Delta g = f` with `<g> = 0`.
pub fn inv_laplacian(f: &ScalarField) -> Result<ScalarField> {
    ensure_mean_zero(f)?;
    Ok(inv_laplacian_unchecked(f))
}

/// Inverse Laplacian that silently discards the mean of `f`.
pub(crate) fn inv_laplacian_unchecked(f: &ScalarField) -> ScalarField {
    let grid = f.grid().clone();
    apply_multiplier(f, |i, j| {
        if i == 0 && j == 0 {
            Complex64::default()
        } else {
            let k = grid.k_mag(i, j);
            Complex64::new(-1.0 / (k * k), 0.0)
        }
    })
}

/// `grad^perp psi = (-d_y psi, d_x psi)`.
pub fn perp_gradient(psi: &ScalarField) -> (ScalarField, ScalarField) {
    let dx = derivative(psi, (1, 0)).expect("first order");
    let dy = derivative(psi, (0, 1)).expect("first order");
    (dy.scale(-1.0), dx)
}

pub fn gradient(f: &ScalarField) -> (ScalarField, ScalarField) {
    (
        derivative(f, (1, 0)).expect("first order"),
        derivative(f, (0, 1)).expect("first order"),
    )
}

/// Second derivatives `(f_xx, f_xy, f_yy)`.
pub fn hessian(f: &ScalarField) -> (ScalarField, ScalarField, ScalarField) {
    (
        derivative(f, (2, 0)).expect("second order"),
        derivative(f, (1, 1)).expect("second order"),
        derivative(f, (0, 2)).expect("second order"),
    )
}

#[inline]
pub(crate) fn keeps_mode(n: usize, freq: i64) -> bool {
    3 * freq.unsigned_abs() as usize <= n
}

/// Two-thirds rule: zero every mode with `max(|p|, |q|) > n/3`.
pub fn dealias(f: &ScalarField) -> ScalarField {
    let grid = f.grid().clone();
    let n = grid.n();
    apply_multiplier(f, |i, j| {
        if keeps_mode(n, grid.freqs()[i]) && keeps_mode(n, grid.freqs()[j]) {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::default()
        }
    })
}

/// Pointwise `sum_k a_k * b_k` followed by dealiasing.
pub fn dealiased_sum_of_products(
    pairs: &[(&ScalarField, &ScalarField)],
    weights: &[f64],
) -> ScalarField {
    let grid = pairs[0].0.grid();
    let mut acc = vec![0.0; grid.len()];
    for ((a, b), w) in pairs.iter().zip(weights) {
        for ((o, x), y) in acc.iter_mut().zip(a.values()).zip(b.values()) {
            *o += w * x * y;
        }
    }
    dealias(&ScalarField::from_values(grid, acc).expect("finite products"))
}

pub fn dealiased_product(a: &ScalarField, b: &ScalarField) -> ScalarField {
    dealiased_sum_of_products(&[(a, b)], &[1.0])
}

/// Dealiased `u . grad f` for `u = (ux, uy)`.
pub fn advection(ux: &ScalarField, uy: &ScalarField, f: &ScalarField) -> ScalarField {
    let (fx, fy) = gradient(f);
    dealiased_sum_of_products(&[(ux, &fx), (uy, &fy)], &[1.0, 1.0])
}

/// Trigonometric interpolation of `f` onto a grid `factor` times finer by
/// zero padding. The Nyquist row and column of the source are dropped.
pub fn refine(f: &ScalarField, factor: usize) -> Result<ScalarField> {
    let grid = f.grid();
    let n = grid.n();
    let fine = TorusGrid::new(n * factor)?;
    let big = fine.n();
    let src = f.spectral();
    let scale = (factor * factor) as f64;
    let mut out = vec![Complex64::default(); fine.len()];
    let slot = |p: i64| p.rem_euclid(big as i64) as usize;
    for i in 0..n {
        if grid.is_nyquist(i) {
            continue;
        }
        for j in 0..n {
            if grid.is_nyquist(j) {
                continue;
            }
            let (p, q) = (grid.freqs()[i], grid.freqs()[j]);
            out[slot(p) * big + slot(q)] = src[i * n + j] * scale;
        }
    }
    Ok(ScalarField::from_hermitian(&fine, out))
}
