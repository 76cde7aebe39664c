//! Optimal transport between grid densities on the unit torus.

mod bound;
mod exact;
mod sinkhorn;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::ScalarField;

pub use bound::{gronwall_w2_bound, BoundSeries};
pub use exact::{
    displacement_interpolation, w2_exact_points, w2_exact_small, ExactPlan, EXACT_MAX_POINTS,
};
pub use sinkhorn::{w2_sinkhorn, w2_sinkhorn_with, SinkhornOptions, DEFAULT_REG};

/// Largest side length handed to the entropic solver.
pub const MAX_SIDE: usize = 64;

/// Probability weights on the `side x side` points `(i/side, j/side)`,
/// stored row-major with the x index outer.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOnTorus {
    side: usize,
    weights: Vec<f64>,
}

impl DensityOnTorus {
    pub fn new(side: usize, weights: Vec<f64>) -> Result<Self> {
        if side == 0 || weights.len() != side * side {
            return Err(Error::Shape(format!(
                "{} weights for side {side}",
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Precondition(
                "weights must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Degenerate("zero total mass".into()));
        }
        Ok(Self {
            side,
            weights: weights.into_iter().map(|w| w / total).collect(),
        })
    }

    pub fn uniform(side: usize) -> Self {
        Self::new(side, vec![1.0; side * side]).expect("uniform weights")
    }

    /// Point mass at grid node `(i, j)`.
    pub fn dirac(side: usize, i: usize, j: usize) -> Self {
        let mut w = vec![0.0; side * side];
        w[i * side + j] = 1.0;
        Self::new(side, w).expect("single atom")
    }

    /// Physical density `1 + eps * rho`, block-averaged down to at most
    /// `max_side` points per axis.
    pub fn physical(rho: &ScalarField, eps: f64, max_side: usize) -> Result<Self> {
        let min = rho
            .values()
            .iter()
            .fold(f64::INFINITY, |m, &v| m.min(1.0 + eps * v));
        if min < 0.0 {
            return Err(Error::Precondition(format!(
                "1 + eps rho has negative minimum {min}"
            )));
        }
        let mass = rho.map(|v| 1.0 + eps * v);
        Self::from_field(&mass, max_side)
    }

    /// Nonnegative field values as weights, block-averaged to at most `max_side`.
    pub fn from_field(field: &ScalarField, max_side: usize) -> Result<Self> {
        let n = field.grid().n();
        let mut side = n;
        while side > max_side.max(1) {
            side /= 2;
        }
        let b = n / side;
        let mut w = vec![0.0; side * side];
        for i in 0..n {
            for j in 0..n {
                w[(i / b) * side + j / b] += field.at(i, j);
            }
        }
        Self::new(side, w)
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Block-averages onto a coarser side dividing the current one.
    pub fn downsample(&self, side: usize) -> Result<Self> {
        if side == 0 || self.side % side != 0 {
            return Err(Error::Shape(format!(
                "{side} does not divide {}",
                self.side
            )));
        }
        let b = self.side / side;
        let mut w = vec![0.0; side * side];
        for i in 0..self.side {
            for j in 0..self.side {
                w[(i / b) * side + j / b] += self.weights[i * self.side + j];
            }
        }
        Self::new(side, w)
    }

    pub fn point(&self, idx: usize) -> (f64, f64) {
        let s = self.side as f64;
        ((idx / self.side) as f64 / s, (idx % self.side) as f64 / s)
    }

    pub fn max_density(&self) -> f64 {
        self.weights.iter().fold(0.0, |m: f64, &w| m.max(w)) * (self.side * self.side) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OtMethod {
    Sinkhorn,
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OTResult {
    pub distance: f64,
    pub method: OtMethod,
    pub reg: Option<f64>,
    pub iterations: usize,
    pub marginal_error: f64,
}

/// One OT line of a diagnostics stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OtRecord {
    pub t: f64,
    pub w2: f64,
    pub method: OtMethod,
    pub reg: Option<f64>,
    pub marginal_error: f64,
}

impl OtRecord {
    pub fn new(t: f64, r: &OTResult) -> Self {
        Self {
            t,
            w2: r.distance,
            method: r.method,
            reg: r.reg,
            marginal_error: r.marginal_error,
        }
    }
}

/// Squared geodesic distance on the unit torus.
#[inline]
pub fn torus_dist2(a: (f64, f64), b: (f64, f64)) -> f64 {
    let d = |u: f64, v: f64| {
        let t = (u - v).rem_euclid(1.0);
        let t = t.min(1.0 - t);
        t * t
    };
    d(a.0, b.0) + d(a.1, b.1)
}

/// Dense cost matrix between two point sets, row-major `p x q`.
pub fn torus_cost(pa: &[(f64, f64)], pb: &[(f64, f64)]) -> Result<Vec<f64>> {
    let entries = pa.len().checked_mul(pb.len()).unwrap_or(usize::MAX);
    if entries > 1 << 26 {
        return Err(Error::Resource(format!(
            "cost matrix with {entries} entries"
        )));
    }
    let mut c = Vec::with_capacity(entries);
    for &a in pa {
        for &b in pb {
            c.push(torus_dist2(a, b));
        }
    }
    Ok(c)
}

/// Grid points `(i/side, j/side)` of a side-length.
pub fn grid_points(side: usize) -> Vec<(f64, f64)> {
    let s = side as f64;
    (0..side * side)
        .map(|k| ((k / side) as f64 / s, (k % side) as f64 / s))
        .collect()
}
