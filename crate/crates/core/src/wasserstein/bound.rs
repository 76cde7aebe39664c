use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{gradient, hessian_norms};
use crate::transport::{Model, Trajectory};

/// Grönwall-type upper bound for `W2^2(1 + eps rho^eps, 1 + eps rhobar)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSeries {
    pub times: Vec<f64>,
    /// `A(t) = int_0^t (1 + 2 |D2 phibar|_inf) ds`
    pub a_t: Vec<f64>,
    /// `int |u^eps - ubar|^2 (1 + eps rho^eps) dx`
    pub integrand: Vec<f64>,
    /// `B(t) = int_0^t exp(A(t) - A(s)) integrand(s) ds`
    pub bound: Vec<f64>,
}

/// Evaluates the bound by trapezoid quadrature on the shared sample times.
pub fn gronwall_w2_bound(traj_sg: &Trajectory, traj_euler: &Trajectory) -> Result<BoundSeries> {
    if traj_sg.last().model != Model::SGeps || traj_euler.last().model != Model::Euler {
        return Err(Error::Configuration(
            "expected an SG^eps and an Euler trajectory".into(),
        ));
    }
    let ts = traj_sg.times();
    let te = traj_euler.times();
    let k = ts.len().min(te.len());
    if k == 0 {
        return Err(Error::Alignment("empty trajectory".into()));
    }
    for i in 0..k {
        if (ts[i] - te[i]).abs() > 1e-12 {
            return Err(Error::Alignment(format!(
                "sample {i}: {} vs {}",
                ts[i], te[i]
            )));
        }
    }
    let r0 = traj_sg.states[0].rho.sub(&traj_euler.states[0].rho)?;
    if crate::spectral::linf(&r0) > 1e-12 {
        return Err(Error::Alignment(
            "trajectories start from different densities".into(),
        ));
    }
    let mut out = BoundSeries {
        times: ts[..k].to_vec(),
        a_t: Vec::with_capacity(k),
        integrand: Vec::with_capacity(k),
        bound: Vec::with_capacity(k),
    };
    let mut rate = Vec::with_capacity(k);
    for i in 0..k {
        let sg = &traj_sg.states[i];
        let eu = &traj_euler.states[i];
        let (gx, gy) = gradient(&sg.potential.sub(&eu.potential)?);
        let eps = sg.eps;
        let vals = gx.values().iter().zip(gy.values()).zip(sg.rho.values());
        let sum: f64 = vals
            .map(|((a, b), r)| (a * a + b * b) * (1.0 + eps * r))
            .sum();
        out.integrand.push(sum / gx.values().len() as f64);
        rate.push(1.0 + 2.0 * hessian_norms(&eu.potential).0);
    }
    let mut acc = 0.0;
    out.a_t.push(0.0);
    for i in 1..k {
        acc += 0.5 * (rate[i] + rate[i - 1]) * (out.times[i] - out.times[i - 1]);
        out.a_t.push(acc);
    }
    for i in 0..k {
        let at = out.a_t[i];
        let mut b = 0.0;
        for s in 1..=i {
            let f0 = (at - out.a_t[s - 1]).exp() * out.integrand[s - 1];
            let f1 = (at - out.a_t[s]).exp() * out.integrand[s];
            b += 0.5 * (f0 + f1) * (out.times[s] - out.times[s - 1]);
        }
        out.bound.push(b);
    }
    Ok(out)
}
