//! Checkers evaluated along simulated trajectories.

use std::f64::consts::SQRT_2;

use super::{field_digest, nonzero, CheckResult};
use crate::elliptic::hessian_det;
use crate::error::{Error, Result};
use crate::lab::RunConfig;
use crate::lagrangian::{flow_gap, inverse_flow, paired_flows, FlowMap, GridVelocity, PairedFlows};
use crate::spectral::{
    self, advection, hessian_norms, hs_unchecked, perp_gradient, refine, ScalarField,
};
use crate::transport::{run_from, Model, RunOptions, SimState, Trajectory};

/// Sup norms are read off a grid this many times finer than the solver grid.
const REFINE: usize = 4;

fn fine(f: &ScalarField) -> ScalarField {
    refine(f, REFINE).expect("refined grid size is valid")
}

fn fine_linf(f: &ScalarField) -> f64 {
    spectral::linf(&fine(f))
}

fn fine_grad_linf(f: &ScalarField) -> f64 {
    spectral::grad_linf(&fine(f))
}

fn fine_hess_linf(f: &ScalarField) -> f64 {
    hessian_norms(&fine(f)).0
}

/// Cumulative trapezoid integral, starting from zero.
fn cumulative(times: &[f64], vals: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(vals.len());
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..vals.len() {
        acc += 0.5 * (vals[k] + vals[k - 1]) * (times[k] - times[k - 1]);
        out.push(acc);
    }
    out
}

/// Largest `num / den` over samples with a positive denominator.
fn max_ratio(name: &str, pairs: impl Iterator<Item = (f64, f64)>) -> Result<f64> {
    let mut best: Option<f64> = None;
    for (num, den) in pairs {
        if den > 0.0 && den.is_finite() {
            let r = num / den;
            best = Some(best.map_or(r, |b: f64| b.max(r)));
        }
    }
    best.ok_or_else(|| Error::Degenerate(format!("{name}: every right-hand side vanishes")))
}

fn traj_digest(traj: &Trajectory) -> String {
    let s = &traj.states[0];
    field_digest(
        &[&s.rho],
        &[s.eps, traj.last().time, traj.states.len() as f64],
    )
}

fn require_samples(traj: &Trajectory, min: usize) -> Result<()> {
    if traj.states.len() < min {
        return Err(Error::Sampling(format!(
            "{} samples, need {min}",
            traj.states.len()
        )));
    }
    Ok(())
}

/// `|rho(t)|_{H^m} / (|rho0|_{H^m} exp(int_0^t |D2 psi|_inf + |grad rho|_inf))`
/// maximised over positive sample times.
pub fn check_hm_transport(traj: &Trajectory, m: u32) -> Result<CheckResult> {
    if !(2..=3).contains(&m) {
        return Err(Error::Precondition(format!("m = {m} not in {{2, 3}}")));
    }
    require_samples(traj, 10)?;
    let times = traj.times();
    let rate: Vec<f64> = traj
        .states
        .iter()
        .map(|s| fine_hess_linf(&s.potential) + fine_grad_linf(&s.rho))
        .collect();
    let integral = cumulative(&times, &rate);
    let h0 = nonzero("rho0 in H^m", hs_unchecked(&traj.states[0].rho, m as f64))?;
    let ratio = max_ratio(
        "hm_transport",
        traj.states
            .iter()
            .zip(&integral)
            .skip(1)
            .map(|(s, i)| (hs_unchecked(&s.rho, m as f64), h0 * i.exp())),
    )?;
    Ok(CheckResult::new(
        &format!("hm_transport_m{m}"),
        ratio,
        1.0 + 1e-2,
        traj_digest(traj),
    ))
}

/// Largest measured exponent `log(|rho(t)|_{H^m} / |rho0|_{H^m}) / int(...)`.
fn hm_exponent(traj: &Trajectory, m: f64) -> f64 {
    let times = traj.times();
    let rate: Vec<f64> = traj
        .states
        .iter()
        .map(|s| fine_hess_linf(&s.potential) + fine_grad_linf(&s.rho))
        .collect();
    let integral = cumulative(&times, &rate);
    let h0 = hs_unchecked(&traj.states[0].rho, m);
    traj.states
        .iter()
        .zip(&integral)
        .skip(1)
        .filter(|(_, i)| **i > 0.0)
        .map(|(s, i)| (hs_unchecked(&s.rho, m) / h0).ln() / i)
        .fold(0.0, f64::max)
}

/// `|grad rho(t)|_inf / (|grad rho0|_inf exp(int_0^t |D2 psi|_inf))`.
pub fn check_grad_ode(traj: &Trajectory) -> Result<CheckResult> {
    require_samples(traj, 2)?;
    let times = traj.times();
    let rate: Vec<f64> = traj
        .states
        .iter()
        .map(|s| fine_hess_linf(&s.potential))
        .collect();
    let integral = cumulative(&times, &rate);
    let g0 = nonzero("grad rho0", fine_grad_linf(&traj.states[0].rho))?;
    let ratio = max_ratio(
        "grad_ode",
        traj.states
            .iter()
            .zip(&integral)
            .skip(1)
            .map(|(s, i)| (fine_grad_linf(&s.rho), g0 * i.exp())),
    )?;
    Ok(CheckResult::new(
        "grad_ode",
        ratio,
        1.0 + 1e-3,
        traj_digest(traj),
    ))
}

fn sup_hessian(trajs: &[&Trajectory]) -> f64 {
    trajs
        .iter()
        .flat_map(|t| t.states.iter())
        .map(|s| fine_hess_linf(&s.potential))
        .fold(0.0, f64::max)
}

/// `|rho(t)|_{H^1} / ((1 + e^{Mt}) |rho0|_{H^1})` with `M = sup |D2 psi|_inf`.
pub fn check_h1_growth(traj: &Trajectory) -> Result<CheckResult> {
    require_samples(traj, 2)?;
    let m = sup_hessian(&[traj]);
    let h0 = nonzero("rho0 in H^1", hs_unchecked(&traj.states[0].rho, 1.0))?;
    let ratio = max_ratio(
        "h1_growth",
        traj.states
            .iter()
            .skip(1)
            .map(|s| (hs_unchecked(&s.rho, 1.0), (1.0 + (m * s.time).exp()) * h0)),
    )?;
    Ok(CheckResult::new("h1_growth", ratio, 1.0, traj_digest(traj)))
}

/// `sup_t |D2 psi^eps|_L2 / (2 |rho0|_L2)`.
pub fn check_l2_hessian(traj: &Trajectory) -> Result<CheckResult> {
    let r0 = nonzero("rho0", spectral::l2(&traj.states[0].rho))?;
    let ratio = max_ratio(
        "l2_hessian",
        traj.states
            .iter()
            .map(|s| (hessian_norms(&s.potential).1, 2.0 * r0)),
    )?;
    Ok(CheckResult::new(
        "l2_hessian",
        ratio,
        1.0,
        traj_digest(traj),
    ))
}

/// Largest `|det D2 psi|_{H^-1} / |D2 psi|_L2^2` along a trajectory.
pub fn measured_wente_constant(traj: &Trajectory) -> f64 {
    traj.states
        .iter()
        .filter_map(|s| {
            let h = hessian_norms(&s.potential).1;
            (h > 0.0).then(|| hs_unchecked(&hessian_det(&s.potential), -1.0) / (h * h))
        })
        .fold(0.0, f64::max)
}

/// An Euler run and an SG^eps run from the same density, with their
/// Lagrangian flows on shared sample times and the inverse flows at the
/// final time.
pub struct ComparisonRun {
    pub rho0: ScalarField,
    pub eps: f64,
    pub euler: Trajectory,
    pub sg: Trajectory,
    pub flows: PairedFlows,
    pub inv_euler: FlowMap,
    pub inv_sg: FlowMap,
}

impl ComparisonRun {
    /// `base` supplies the grid, horizon and stepping; `m` is the label grid
    /// side and `particle_dt` the particle step.
    pub fn new(
        base: &RunConfig,
        rho0: &ScalarField,
        eps: f64,
        m: usize,
        particle_dt: f64,
    ) -> Result<Self> {
        let opts = RunOptions { record_steps: true };
        let euler_cfg = RunConfig {
            model: Model::Euler,
            eps: 0.0,
            stop_on_exit: false,
            ..base.clone()
        };
        let sg_cfg = RunConfig {
            model: Model::SGeps,
            eps,
            stop_on_exit: false,
            ..base.clone()
        };
        euler_cfg.validate()?;
        sg_cfg.validate()?;
        let euler = run_from(&euler_cfg, rho0, opts)?;
        let sg = run_from(&sg_cfg, rho0, opts)?;
        for t in [&euler, &sg] {
            if !t.completed() {
                return Err(Error::Configuration(format!(
                    "{:?} run did not complete: {:?}",
                    t.last().model,
                    t.exit
                )));
            }
        }
        let flows = paired_flows(&euler, &sg, m, particle_dt)?;
        let t = *flows.times.last().expect("at least one shared time");
        let inv_euler = inverse_flow(&GridVelocity::from_trajectory(&euler)?, m, t, particle_dt)?;
        let inv_sg = inverse_flow(&GridVelocity::from_trajectory(&sg)?, m, t, particle_dt)?;
        Ok(Self {
            rho0: rho0.clone(),
            eps,
            euler,
            sg,
            flows,
            inv_euler,
            inv_sg,
        })
    }

    fn digest(&self) -> String {
        field_digest(
            &[&self.rho0],
            &[self.eps, *self.flows.times.last().unwrap()],
        )
    }

    fn pairs(&self) -> impl Iterator<Item = (usize, &SimState, &SimState)> {
        (0..self.flows.times.len()).map(move |i| (i, &self.euler.states[i], &self.sg.states[i]))
    }

    fn flow_gaps(&self) -> Result<Vec<f64>> {
        self.flows
            .a
            .iter()
            .zip(&self.flows.b)
            .map(|(a, b)| flow_gap(a, b))
            .collect()
    }

    fn sup_hessian(&self) -> f64 {
        sup_hessian(&[&self.euler, &self.sg])
    }
}

/// `|rho_E - rho_S|_{H^-1} / (sqrt(2) |rho0|_inf |X_E - X_S|_L2)`.
pub fn check_flow_hminus1(run: &ComparisonRun) -> Result<CheckResult> {
    let m0 = fine_linf(&run.rho0);
    let gaps = run.flow_gaps()?;
    let mut pairs = Vec::new();
    for (i, e, s) in run.pairs().skip(1) {
        pairs.push((
            hs_unchecked(&e.rho.sub(&s.rho)?, -1.0),
            SQRT_2 * m0 * gaps[i],
        ));
    }
    let ratio = max_ratio("flow_hminus1", pairs.into_iter())?;
    Ok(CheckResult::new("flow_hminus1", ratio, 1.0, run.digest()))
}

/// `|rho_E - rho_S|_L2 / (|grad rho0|_inf e^{Mt} |X_E - X_S|_L2)`.
pub fn check_density_stability_w1inf(run: &ComparisonRun) -> Result<CheckResult> {
    let g0 = fine_grad_linf(&run.rho0);
    let m = run.sup_hessian();
    let gaps = run.flow_gaps()?;
    let mut pairs = Vec::new();
    for (i, e, s) in run.pairs().skip(1) {
        pairs.push((
            spectral::l2(&e.rho.sub(&s.rho)?),
            g0 * (m * e.time).exp() * gaps[i],
        ));
    }
    let ratio = max_ratio("density_stability_w1inf", pairs.into_iter())?;
    Ok(CheckResult::new(
        "density_stability_w1inf",
        ratio,
        1.0,
        run.digest(),
    ))
}

/// `|g|_L2 / (sqrt(2) (1 + e^{Mt})^{1/2} |rho0|_{H^1}^{1/2} |g|_{H^-1}^{1/2})`
/// with `g = rho_E - rho_S`.
pub fn check_density_stability_h1(run: &ComparisonRun) -> Result<CheckResult> {
    let h1 = hs_unchecked(&run.rho0, 1.0);
    let m = run.sup_hessian();
    let mut pairs = Vec::new();
    for (_, e, s) in run.pairs().skip(1) {
        let g = e.rho.sub(&s.rho)?;
        let rhs = SQRT_2 * (1.0 + (m * e.time).exp()).sqrt() * (h1 * hs_unchecked(&g, -1.0)).sqrt();
        pairs.push((spectral::l2(&g), rhs));
    }
    let ratio = max_ratio("density_stability_h1", pairs.into_iter())?;
    Ok(CheckResult::new(
        "density_stability_h1",
        ratio,
        1.0,
        run.digest(),
    ))
}

/// `|X_E^{-1} - X_S^{-1}|_L2 / (Lip(X_E^{-1}) |X_E - X_S|_L2)` at the final time.
pub fn check_inv_gap(run: &ComparisonRun) -> Result<CheckResult> {
    let fwd = flow_gap(run.flows.a.last().unwrap(), run.flows.b.last().unwrap())?;
    let inv = flow_gap(&run.inv_euler, &run.inv_sg)?;
    let lip = run.inv_euler.lipschitz_estimate();
    let den = nonzero("forward flow gap", lip * fwd)?;
    Ok(CheckResult::new("inv_gap", inv / den, 1.05, run.digest()))
}

/// `|grad(phibar - psi)|_L2 / (sqrt(2) |rho0|_inf |X_E - X_S| + C_W eps |D2 psi|_L2^2)`.
pub fn check_vel_gap(run: &ComparisonRun, c_w: f64) -> Result<CheckResult> {
    let m0 = fine_linf(&run.rho0);
    let gaps = run.flow_gaps()?;
    let mut pairs = Vec::new();
    for (i, e, s) in run.pairs().skip(1) {
        let lhs = hs_unchecked(&e.potential.sub(&s.potential)?, 1.0);
        let h = hessian_norms(&s.potential).1;
        pairs.push((lhs, SQRT_2 * m0 * gaps[i] + c_w * run.eps * h * h));
    }
    let ratio = max_ratio("vel_gap", pairs.into_iter())?;
    Ok(CheckResult::new("vel_gap", ratio, 1.0, run.digest()))
}

/// Flow gap against its Grönwall bound
/// `exp(int |D2 phibar|_inf + sqrt(2) |rho0|_inf) * C_W eps int |D2 psi|_L2^2`.
pub fn check_flow_gap_gronwall(run: &ComparisonRun, c_w: f64) -> Result<CheckResult> {
    let m0 = fine_linf(&run.rho0);
    let gaps = run.flow_gaps()?;
    let times = &run.flows.times;
    let k = times.len();
    let rate: Vec<f64> = run.euler.states[..k]
        .iter()
        .map(|s| fine_hess_linf(&s.potential) + SQRT_2 * m0)
        .collect();
    let forcing: Vec<f64> = run.sg.states[..k]
        .iter()
        .map(|s| c_w * run.eps * hessian_norms(&s.potential).1.powi(2))
        .collect();
    let a = cumulative(times, &rate);
    let f = cumulative(times, &forcing);
    let ratio = max_ratio(
        "flow_gap_gronwall",
        (1..k).map(|i| (gaps[i], a[i].exp() * f[i])),
    )?;
    Ok(CheckResult::new(
        "flow_gap_gronwall",
        ratio,
        1.0,
        run.digest(),
    ))
}

/// `|g|_L2 / (2^{1/(m+1)} |g|_{H^-1}^{m/(m+1)} |rho0|_{H^m}^{1/(m+1)} exp(Gamma_m / (m+1)))`
/// with `Gamma_m = C_m (M t + |grad rho0|_inf (e^{Mt} - 1) / M)` and `C_m`
/// the larger of one and the measured H^m exponent of either run.
pub fn check_l2_stab_hm(run: &ComparisonRun, m: u32) -> Result<CheckResult> {
    let mf = m as f64;
    let c_m = hm_exponent(&run.euler, mf)
        .max(hm_exponent(&run.sg, mf))
        .max(1.0);
    let big_m = nonzero("sup |D2 psi|", run.sup_hessian())?;
    let g0 = fine_grad_linf(&run.rho0);
    let hm = hs_unchecked(&run.rho0, mf);
    let p = 1.0 / (mf + 1.0);
    let mut pairs = Vec::new();
    for (_, e, s) in run.pairs().skip(1) {
        let g = e.rho.sub(&s.rho)?;
        let t = e.time;
        let gamma = c_m * (big_m * t + g0 * ((big_m * t).exp() - 1.0) / big_m);
        let rhs =
            2f64.powf(p) * hs_unchecked(&g, -1.0).powf(mf * p) * hm.powf(p) * (gamma * p).exp();
        pairs.push((spectral::l2(&g), rhs));
    }
    let ratio = max_ratio("l2_stab_hm", pairs.into_iter())?;
    Ok(CheckResult::new(
        &format!("l2_stab_hm_m{m}"),
        ratio,
        1.0,
        run.digest(),
    ))
}

/// Two densities transported by the same velocity, one of them forced.
pub struct ForcedPair {
    pub times: Vec<f64>,
    pub forced: Vec<ScalarField>,
    pub free: Vec<ScalarField>,
    pub forcing: Vec<ScalarField>,
    /// Stream functions driving each member, per sample.
    pub psi_forced: Vec<ScalarField>,
    pub psi_free: Vec<ScalarField>,
}

/// RK4 integration of `d_t sigma + u . grad sigma = f` and of the unforced
/// equation from the same `sigma0`, with steady `u = grad^perp psi` and `f`.
pub fn forced_transport_pair(
    psi: &ScalarField,
    sigma0: &ScalarField,
    forcing: &ScalarField,
    t_final: f64,
    steps: usize,
) -> Result<ForcedPair> {
    if steps == 0 || !(t_final > 0.0) {
        return Err(Error::Precondition(
            "need t_final > 0 and at least one step".into(),
        ));
    }
    let (ux, uy) = perp_gradient(psi);
    let tend = |s: &ScalarField, f: Option<&ScalarField>| -> Result<ScalarField> {
        let a = advection(&ux, &uy, s).scale(-1.0);
        match f {
            Some(f) => a.add(f),
            None => Ok(a),
        }
    };
    let step = |s: &ScalarField, f: Option<&ScalarField>, dt: f64| -> Result<ScalarField> {
        let k1 = tend(s, f)?;
        let k2 = tend(&s.axpby(1.0, &k1, 0.5 * dt)?, f)?;
        let k3 = tend(&s.axpby(1.0, &k2, 0.5 * dt)?, f)?;
        let k4 = tend(&s.axpby(1.0, &k3, dt)?, f)?;
        let inc = k1.add(&k4)?.axpby(1.0, &k2.add(&k3)?, 2.0)?;
        s.axpby(1.0, &inc, dt / 6.0)
    };
    let dt = t_final / steps as f64;
    let mut out = ForcedPair {
        times: vec![0.0],
        forced: vec![sigma0.clone()],
        free: vec![sigma0.clone()],
        forcing: vec![forcing.clone()],
        psi_forced: vec![psi.clone()],
        psi_free: vec![psi.clone()],
    };
    for k in 0..steps {
        let a = step(out.forced.last().unwrap(), Some(forcing), dt)?;
        let b = step(out.free.last().unwrap(), None, dt)?;
        out.times.push((k + 1) as f64 * dt);
        out.forced.push(a);
        out.free.push(b);
        out.forcing.push(forcing.clone());
        out.psi_forced.push(psi.clone());
        out.psi_free.push(psi.clone());
    }
    Ok(out)
}

/// `|sigma(t) - sigma~(t)|_{H^-1} / int_0^t |f|_{H^-1}` maximised over time.
pub fn check_forced_transport(pair: &ForcedPair) -> Result<CheckResult> {
    let k = pair.times.len();
    if [
        pair.forced.len(),
        pair.free.len(),
        pair.forcing.len(),
        pair.psi_forced.len(),
        pair.psi_free.len(),
    ]
    .iter()
    .any(|&l| l != k)
    {
        return Err(Error::Configuration(
            "forced pair series have different lengths".into(),
        ));
    }
    for (a, b) in pair.psi_forced.iter().zip(&pair.psi_free) {
        if a.max_abs_diff(b) > 1e-12 * (1.0 + spectral::linf(a)) {
            return Err(Error::Configuration(
                "the two members are advected by different velocities".into(),
            ));
        }
    }
    let norms: Vec<f64> = pair.forcing.iter().map(|f| hs_unchecked(f, -1.0)).collect();
    let integral = cumulative(&pair.times, &norms);
    if integral.iter().all(|v| *v == 0.0) {
        let defect = pair
            .forced
            .iter()
            .zip(&pair.free)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max);
        let ratio = if defect == 0.0 { 0.0 } else { f64::INFINITY };
        return Ok(CheckResult::new(
            "forced_transport",
            ratio,
            1.0 + 1e-2,
            field_digest(&[&pair.forced[0]], &[]),
        ));
    }
    let mut pairs = Vec::new();
    for i in 1..k {
        pairs.push((
            hs_unchecked(&pair.forced[i].sub(&pair.free[i])?, -1.0),
            integral[i],
        ));
    }
    let ratio = max_ratio("forced_transport", pairs.into_iter())?;
    Ok(CheckResult::new(
        "forced_transport",
        ratio,
        1.0 + 1e-2,
        field_digest(
            &[&pair.forced[0], &pair.forcing[0], &pair.psi_forced[0]],
            &[pair.times[k - 1]],
        ),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lab::{InitialData, Preset};
    use crate::spectral::{random_field, TorusGrid};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::TAU;

    fn base(n: usize, t_final: f64) -> RunConfig {
        RunConfig {
            n,
            t_final,
            sample_interval: 0.05,
            ..RunConfig::default()
        }
    }

    #[test]
    fn forced_transport_zero_velocity_is_exact() {
        let g = TorusGrid::new(32).unwrap();
        let zero = ScalarField::zeros(&g);
        let sigma0 = ScalarField::from_fn(&g, |x, y| (TAU * x).sin() * (TAU * y).cos());
        let f = ScalarField::from_fn(&g, |x, _| (2.0 * TAU * x).cos());
        let pair = forced_transport_pair(&zero, &sigma0, &f, 0.5, 20).unwrap();
        let r = check_forced_transport(&pair).unwrap();
        assert!((r.ratio - 1.0).abs() < 1e-10, "{}", r.ratio);
        let none = forced_transport_pair(&zero, &sigma0, &zero, 0.5, 5).unwrap();
        assert_eq!(check_forced_transport(&none).unwrap().ratio, 0.0);
    }

    #[test]
    fn forced_transport_rejects_mismatched_velocities() {
        let g = TorusGrid::new(16).unwrap();
        let zero = ScalarField::zeros(&g);
        let f = ScalarField::from_fn(&g, |x, _| (TAU * x).cos());
        let mut pair = forced_transport_pair(&zero, &f, &f, 0.1, 2).unwrap();
        pair.psi_free[1] = f.clone();
        assert!(matches!(
            check_forced_transport(&pair),
            Err(Error::Configuration(_))
        ));
    }

    #[test]
    fn hm_transport_on_stationary_shear() {
        let cfg = RunConfig {
            model: Model::Euler,
            eps: 0.0,
            initial_data: InitialData::Preset(Preset::Shear),
            ..base(32, 0.5)
        };
        let traj = crate::transport::run_simulation(&cfg).unwrap();
        let r = check_hm_transport(&traj, 2).unwrap();
        assert!(r.ratio < 1.0 && r.pass);
        let short = RunConfig {
            t_final: 0.2,
            ..cfg
        };
        let traj = crate::transport::run_simulation(&short).unwrap();
        assert!(matches!(
            check_hm_transport(&traj, 2),
            Err(Error::Sampling(_))
        ));
    }

    #[test]
    fn comparison_run_checks_hold_on_a_random_datum() {
        let g = TorusGrid::new(32).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rho0 = spectral::normalize_linf(&random_field(&g, 3.0, Some(4), &mut rng));
        let run = ComparisonRun::new(&base(32, 0.5), &rho0, 0.02, 16, 0.01).unwrap();
        let c_w = measured_wente_constant(&run.sg);
        assert!(c_w > 0.0 && c_w < 0.5);
        let results = [
            check_hm_transport(&run.sg, 2).unwrap(),
            check_hm_transport(&run.sg, 3).unwrap(),
            check_grad_ode(&run.sg).unwrap(),
            check_h1_growth(&run.sg).unwrap(),
            check_l2_hessian(&run.sg).unwrap(),
            check_flow_hminus1(&run).unwrap(),
            check_density_stability_w1inf(&run).unwrap(),
            check_density_stability_h1(&run).unwrap(),
            check_inv_gap(&run).unwrap(),
            check_vel_gap(&run, c_w).unwrap(),
            check_flow_gap_gronwall(&run, c_w).unwrap(),
            check_l2_stab_hm(&run, 3).unwrap(),
        ];
        for r in &results {
            assert!(r.pass, "{} ratio {}", r.name, r.ratio);
        }
    }
}
