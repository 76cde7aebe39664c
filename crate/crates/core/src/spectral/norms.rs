use serde::{Deserialize, Serialize};

use super::field::ScalarField;
use super::ops::{ensure_mean_zero, gradient, hessian};
use crate::error::Result;

/// Default Hölder exponent.
pub const DEFAULT_ALPHA: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NormKind {
    L2,
    Linf,
    /// Homogeneous Sobolev norm with `|k|^{2s}` weights on nonzero modes.
    Hs {
        s: f64,
    },
    Hminus1,
    W1inf,
    Calpha {
        alpha: f64,
    },
    GradLinf,
}

pub fn norm(f: &ScalarField, kind: NormKind) -> Result<f64> {
    Ok(match kind {
        NormKind::L2 => l2(f),
        NormKind::Linf => linf(f),
        NormKind::Hs { s } => {
            ensure_mean_zero(f)?;
            hs_unchecked(f, s)
        }
        NormKind::Hminus1 => {
            ensure_mean_zero(f)?;
            hs_unchecked(f, -1.0)
        }
        NormKind::W1inf => linf(f) + grad_linf(f),
        NormKind::Calpha { alpha } => linf(f) + holder_seminorm(f, alpha),
        NormKind::GradLinf => grad_linf(f),
    })
}

pub fn l2(f: &ScalarField) -> f64 {
    let v = f.values();
    (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt()
}

pub fn linf(f: &ScalarField) -> f64 {
    f.values().iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `(sum_{k != 0} |k|^{2s} |f_k|^2)^{1/2}` with unit-measure normalisation.
pub(crate) fn hs_unchecked(f: &ScalarField, s: f64) -> f64 {
    let grid = f.grid();
    let n = grid.n();
    let c = f.spectral();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == 0 && j == 0 {
                continue;
            }
            let k = grid.k_mag(i, j);
            acc += k.powf(2.0 * s) * c[i * n + j].norm_sqr();
        }
    }
    let len = grid.len() as f64;
    (acc / (len * len)).sqrt()
}

pub fn hminus1_unchecked(f: &ScalarField) -> f64 {
    hs_unchecked(f, -1.0)
}

/// Pointwise Euclidean max of the gradient.
pub fn grad_linf(f: &ScalarField) -> f64 {
    let (fx, fy) = gradient(f);
    fx.values()
        .iter()
        .zip(fy.values())
        .fold(0.0, |m, (a, b)| m.max((a * a + b * b).sqrt()))
}

/// Frobenius norms of the Hessian: `(sup_x |D2 f|, |D2 f|_L2)`.
pub fn hessian_norms(f: &ScalarField) -> (f64, f64) {
    let (xx, xy, yy) = hessian(f);
    let mut sup: f64 = 0.0;
    let mut sum = 0.0;
    for ((a, b), c) in xx.values().iter().zip(xy.values()).zip(yy.values()) {
        let fro2 = a * a + 2.0 * b * b + c * c;
        sup = sup.max(fro2);
        sum += fro2;
    }
    (sup.sqrt(), (sum / xx.values().len() as f64).sqrt())
}

/// Discrete Hölder seminorm over dyadic offsets along both axes and both
/// diagonals, with geodesic torus distance.
pub fn holder_seminorm(f: &ScalarField, alpha: f64) -> f64 {
    let grid = f.grid();
    let n = grid.n();
    let h = grid.h();
    let v = f.values();
    let mut best: f64 = 0.0;
    let mut step = 1usize;
    while step <= n / 2 {
        let axis = (step as f64 * h).min(1.0 - step as f64 * h);
        let offsets: [(usize, usize, f64); 4] = [
            (step, 0, axis),
            (0, step, axis),
            (step, step, axis * std::f64::consts::SQRT_2),
            (step, n - step, axis * std::f64::consts::SQRT_2),
        ];
        for &(di, dj, dist) in &offsets {
            let w = dist.powf(alpha);
            for i in 0..n {
                let ii = (i + di) % n;
                for j in 0..n {
                    let jj = (j + dj) % n;
                    let d = (v[i * n + j] - v[ii * n + jj]).abs();
                    best = best.max(d / w);
                }
            }
        }
        step *= 2;
    }
    best
}
