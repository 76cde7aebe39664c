//! Periodic grid, FFT-based differential operators and the norm kit.

mod dump;
mod field;
mod grid;
mod norms;
mod ops;
mod random;

pub use dump::{load_field, read_field, save_field, write_field, DumpHeader};
pub use field::ScalarField;
pub use grid::TorusGrid;
pub(crate) use norms::hs_unchecked;
pub use norms::{
    grad_linf, hessian_norms, hminus1_unchecked, holder_seminorm, l2, linf, norm, NormKind,
    DEFAULT_ALPHA,
};
pub(crate) use ops::inv_laplacian_unchecked;
pub use ops::{
    advection, dealias, dealiased_product, dealiased_sum_of_products, derivative, ensure_mean_zero,
    gradient, hessian, inv_laplacian, laplacian, perp_gradient, refine, MEAN_TOL,
};
pub use random::{normalize_linf, random_field};
