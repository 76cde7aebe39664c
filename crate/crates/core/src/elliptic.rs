//! Monge–Ampère-corrected Poisson equation `Delta psi = rho - eps det D2 psi`,
//! the corrector's linear elliptic equation, and 2D determinant algebra.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{
    self, dealiased_sum_of_products, ensure_mean_zero, hessian, hessian_norms, hs_unchecked,
    inv_laplacian_unchecked, laplacian, ScalarField,
};

/// Iterates leave the contractive regime once `eps |D2 psi|_inf` exceeds this.
pub const DIVERGENCE_GUARD: f64 = 0.5;
/// Smallness constant of the bootstrap condition.
pub const BOOTSTRAP_LEVEL: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MASolveReport {
    pub iterations: usize,
    /// `|Delta psi - rho + eps det D2 psi|_L2` at the returned iterate.
    pub residual: f64,
    /// Pointwise Frobenius sup of `D2 psi`.
    pub hessian_linf: f64,
    pub converged: bool,
}

/// Dealiased `psi_xx psi_yy - psi_xy^2`.
pub fn hessian_det(psi: &ScalarField) -> ScalarField {
    let (xx, xy, yy) = hessian(psi);
    dealiased_sum_of_products(&[(&xx, &yy), (&xy, &xy)], &[1.0, -1.0])
}

/// Dealiased `cof(D2 phi) : D2 eta = phi_yy eta_xx - 2 phi_xy eta_xy + phi_xx eta_yy`.
pub fn cofactor_contraction(phi: &ScalarField, eta: &ScalarField) -> ScalarField {
    let (pxx, pxy, pyy) = hessian(phi);
    let (exx, exy, eyy) = hessian(eta);
    dealiased_sum_of_products(
        &[(&pyy, &exx), (&pxy, &exy), (&pxx, &eyy)],
        &[1.0, -2.0, 1.0],
    )
}

/// L2 norm of `det D2(phi + eps eta) - [det D2 phi + eps cof(D2 phi):D2 eta + eps^2 det D2 eta]`.
pub fn det_expansion_residual(phi: &ScalarField, eta: &ScalarField, eps: f64) -> Result<f64> {
    let combined = phi.axpby(1.0, eta, eps)?;
    let lhs = hessian_det(&combined);
    let rhs = hessian_det(phi)
        .axpby(1.0, &cofactor_contraction(phi, eta), eps)?
        .axpby(1.0, &hessian_det(eta), eps * eps)?;
    Ok(spectral::l2(&lhs.sub(&rhs)?))
}

/// `|Delta psi - rho + eps det D2 psi|_L2`.
pub fn sg_residual(rho: &ScalarField, psi: &ScalarField, eps: f64) -> Result<f64> {
    let r = laplacian(psi)
        .sub(rho)?
        .axpby(1.0, &hessian_det(psi), eps)?;
    Ok(spectral::l2(&r))
}

fn h1_seminorm(f: &ScalarField) -> f64 {
    hs_unchecked(f, 1.0)
}

/// Picard iteration `psi^{k+1} = Delta^{-1}(rho - eps det D2 psi^k)` from
/// `psi^0 = Delta^{-1} rho`, stopped on the relative H1 update.
pub fn solve_sg_potential(
    rho: &ScalarField,
    eps: f64,
    opts: SolveOptions,
) -> Result<(ScalarField, MASolveReport)> {
    ensure_mean_zero(rho)?;
    if !(eps >= 0.0) {
        return Err(Error::Precondition(format!(
            "eps = {eps} must be nonnegative"
        )));
    }
    let mut psi = inv_laplacian_unchecked(rho);
    let mut iterations = 0;
    let mut converged = false;
    let mut update = f64::INFINITY;
    while iterations < opts.max_iter {
        iterations += 1;
        if eps == 0.0 {
            converged = true;
            break;
        }
        let source = rho.axpby(1.0, &hessian_det(&psi), -eps)?;
        let next = inv_laplacian_unchecked(&source);
        let diff = next.sub(&psi)?;
        update = h1_seminorm(&diff) / h1_seminorm(&next).max(1e-14);
        psi = next;
        if update <= opts.tol {
            converged = true;
            break;
        }
        // only iterates that would be fed back into the map are guarded; a
        // rank-one Hessian makes the correction vanish at any amplitude
        let (hinf, _) = hessian_norms(&psi);
        if eps * hinf > DIVERGENCE_GUARD {
            return Err(Error::Divergence {
                iteration: iterations,
                value: eps * hinf,
            });
        }
    }
    if !converged {
        return Err(Error::NonConvergence { iterations, update });
    }
    let residual = sg_residual(rho, &psi, eps)?;
    let (hinf, _) = hessian_norms(&psi);
    Ok((
        psi,
        MASolveReport {
            iterations,
            residual,
            hessian_linf: hinf,
            converged,
        },
    ))
}

/// `phi_1 = Delta^{-1}(rho_1 - det D2 phibar)`.
pub fn solve_corrector_potential(rho1: &ScalarField, phibar: &ScalarField) -> Result<ScalarField> {
    let source = rho1.sub(&hessian_det(phibar))?;
    spectral::inv_laplacian(&source)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapStatus {
    /// `1/4 - eps |grad rho|_inf`
    pub grad_margin: f64,
    /// `1/4 - eps |D2 psi|_inf`
    pub hessian_margin: f64,
    /// `|D2 psi|_inf / [M0 (1 + log+(|rho|_{C^alpha} / M0))]`
    pub log_estimate_ratio: f64,
    pub inside: bool,
}

// margins closer to zero than this are reported as exactly zero
const MARGIN_SNAP: f64 = 1e-14;

fn snap(m: f64) -> f64 {
    if m.abs() <= MARGIN_SNAP {
        0.0
    } else {
        m
    }
}

pub fn bootstrap_status(
    rho: &ScalarField,
    psi: &ScalarField,
    eps: f64,
    alpha: f64,
    m0: f64,
) -> Result<BootstrapStatus> {
    if !(m0 > 0.0) {
        return Err(Error::Precondition(format!("M0 = {m0} must be positive")));
    }
    let grad = spectral::grad_linf(rho);
    let (hinf, _) = hessian_norms(psi);
    let calpha = spectral::linf(rho) + spectral::holder_seminorm(rho, alpha);
    Ok(status_from_norms(grad, hinf, calpha, eps, m0))
}

pub(crate) fn status_from_norms(
    grad: f64,
    hinf: f64,
    calpha: f64,
    eps: f64,
    m0: f64,
) -> BootstrapStatus {
    let grad_margin = snap(BOOTSTRAP_LEVEL - eps * grad);
    let hessian_margin = snap(BOOTSTRAP_LEVEL - eps * hinf);
    let log_plus = (calpha / m0).ln().max(0.0);
    BootstrapStatus {
        grad_margin,
        hessian_margin,
        log_estimate_ratio: hinf / (m0 * (1.0 + log_plus)),
        inside: grad_margin > 0.0 && hessian_margin > 0.0,
    }
}
