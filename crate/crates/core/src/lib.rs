//! Pseudo-spectral laboratory for the small-amplitude semigeostrophic system
//! and 2D incompressible Euler on the unit torus.
//!
//! The crate is organised bottom-up:
//!
//! * [`spectral`]: grid, FFT operators, Sobolev/Hölder norms, field dumps;
//! * [`elliptic`]: the Monge–Ampère-corrected Poisson solve, determinant
//!   algebra and the bootstrap monitor;
//! * [`transport`]: RK4 integration of Euler, SG and the first-order corrector;
//! * [`lagrangian`]: particle flow maps, flow gaps and pushforwards;
//! * [`wasserstein`]: torus optimal transport and the Grönwall-type W2 bound;
//! * [`inequalities`]: numerical checkers for the functional estimates;
//! * [`lab`]: configuration, experiment drivers and report emission.

pub mod elliptic;
pub mod error;
pub mod inequalities;
pub mod lab;
pub mod lagrangian;
pub mod spectral;
pub mod transport;
pub mod wasserstein;

pub use error::{Error, Result};
pub use spectral::{NormKind, ScalarField, TorusGrid};
