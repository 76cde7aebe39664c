//! RK4 time integration of Euler, SG^eps and the first-order corrector,
//! trajectory sampling, diagnostics and checkpoints.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::elliptic::{
    self, hessian_det, solve_corrector_potential, solve_sg_potential, BootstrapStatus, SolveOptions,
};
use crate::error::{Error, Result};
use crate::lab::RunConfig;
use crate::spectral::{
    self, advection, hessian_norms, hs_unchecked, inv_laplacian_unchecked, load_field,
    perp_gradient, save_field, DumpHeader, ScalarField, TorusGrid, DEFAULT_ALPHA,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Model {
    Euler,
    SGeps,
    Corrector,
}

impl Model {
    pub fn as_str(self) -> &'static str {
        match self {
            Model::Euler => "Euler",
            Model::SGeps => "SGeps",
            Model::Corrector => "Corrector",
        }
    }
}

/// Background Euler fields carried by a corrector state.
#[derive(Debug, Clone)]
pub struct Background {
    pub rho: ScalarField,
    pub potential: ScalarField,
}

#[derive(Debug, Clone)]
pub struct SimState {
    pub time: f64,
    pub model: Model,
    pub eps: f64,
    pub rho: ScalarField,
    pub potential: ScalarField,
    /// Euler state at the same time; present exactly for the corrector.
    pub background: Option<Background>,
}

fn potential_for(
    model: Model,
    eps: f64,
    rho: &ScalarField,
    background: Option<&ScalarField>,
    opts: SolveOptions,
) -> Result<ScalarField> {
    match model {
        Model::Euler => Ok(inv_laplacian_unchecked(rho)),
        Model::SGeps => Ok(solve_sg_potential(rho, eps, opts)?.0),
        Model::Corrector => {
            let phibar = background.ok_or_else(missing_background)?;
            solve_corrector_potential(rho, phibar)
        }
    }
}

fn missing_background() -> Error {
    Error::Configuration("corrector state requires the Euler background".into())
}

impl SimState {
    /// State at `t = 0`. The corrector starts from `rho_1 = 0` around an Euler
    /// background initialised with `rho0`.
    pub fn initial(model: Model, eps: f64, rho0: &ScalarField) -> Result<Self> {
        spectral::ensure_mean_zero(rho0)?;
        let opts = SolveOptions::default();
        match model {
            Model::Euler | Model::SGeps => {
                let eps = if model == Model::Euler { 0.0 } else { eps };
                let potential = potential_for(model, eps, rho0, None, opts)?;
                Ok(Self {
                    time: 0.0,
                    model,
                    eps,
                    rho: rho0.clone(),
                    potential,
                    background: None,
                })
            }
            Model::Corrector => {
                let phibar = inv_laplacian_unchecked(rho0);
                let rho1 = ScalarField::zeros(rho0.grid());
                let phi1 = solve_corrector_potential(&rho1, &phibar)?;
                Ok(Self {
                    time: 0.0,
                    model,
                    eps,
                    rho: rho1,
                    potential: phi1,
                    background: Some(Background {
                        rho: rho0.clone(),
                        potential: phibar,
                    }),
                })
            }
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        self.rho.grid()
    }

    /// Largest pointwise speed of the advecting field(s).
    pub fn max_speed(&self) -> f64 {
        let mut s = speed(&self.potential);
        if let Some(bg) = &self.background {
            s = s.max(speed(&bg.potential));
        }
        s
    }

    pub fn cfl_limit(&self, cfl: f64) -> f64 {
        cfl * self.grid().h() / self.max_speed().max(1e-14)
    }

    /// `Euler + eps * corrector` fields `(rho~, psi~)` of a corrector state.
    pub fn corrected(&self) -> Result<(ScalarField, ScalarField)> {
        let bg = self.background.as_ref().ok_or_else(missing_background)?;
        Ok((
            bg.rho.axpby(1.0, &self.rho, self.eps)?,
            bg.potential.axpby(1.0, &self.potential, self.eps)?,
        ))
    }
}

fn speed(psi: &ScalarField) -> f64 {
    let (ux, uy) = perp_gradient(psi);
    ux.values()
        .iter()
        .zip(uy.values())
        .fold(0.0, |m, (a, b)| m.max((a * a + b * b).sqrt()))
}

/// Time derivatives `(d rho/dt, d rhobar/dt)`; the second entry only for the corrector.
fn tendencies(
    model: Model,
    eps: f64,
    rho: &ScalarField,
    rhobar: Option<&ScalarField>,
    opts: SolveOptions,
) -> Result<(ScalarField, Option<ScalarField>)> {
    match model {
        Model::Euler | Model::SGeps => {
            let psi = potential_for(model, eps, rho, None, opts)?;
            let (ux, uy) = perp_gradient(&psi);
            Ok((advection(&ux, &uy, rho).scale(-1.0), None))
        }
        Model::Corrector => {
            let rhobar = rhobar.ok_or_else(missing_background)?;
            let phibar = inv_laplacian_unchecked(rhobar);
            let (bx, by) = perp_gradient(&phibar);
            let kbar = advection(&bx, &by, rhobar).scale(-1.0);
            let phi1 = solve_corrector_potential(rho, &phibar)?;
            let (ux, uy) = perp_gradient(&phi1);
            let k1 = advection(&bx, &by, rho)
                .add(&advection(&ux, &uy, rhobar))?
                .scale(-1.0);
            Ok((k1, Some(kbar)))
        }
    }
}

/// `-u . grad rho` for Euler and SG^eps; `-ubar . grad rho_1 - u_1 . grad rhobar`
/// for the corrector.
pub fn rhs(state: &SimState) -> Result<ScalarField> {
    if state.model == Model::Corrector {
        let bg = state.background.as_ref().ok_or_else(missing_background)?;
        let (bx, by) = perp_gradient(&bg.potential);
        let (ux, uy) = perp_gradient(&state.potential);
        return Ok(advection(&bx, &by, &state.rho)
            .add(&advection(&ux, &uy, &bg.rho))?
            .scale(-1.0));
    }
    let (ux, uy) = perp_gradient(&state.potential);
    Ok(advection(&ux, &uy, &state.rho).scale(-1.0))
}

/// One classical RK4 step with the elliptic problem re-solved at every stage.
pub fn step_rk4(state: &SimState, dt: f64, cfl: f64) -> Result<SimState> {
    if dt == 0.0 {
        return Ok(state.clone());
    }
    if state.model == Model::Corrector && state.background.is_none() {
        return Err(missing_background());
    }
    let limit = state.cfl_limit(cfl);
    if !(dt > 0.0) || dt > limit * (1.0 + 1e-12) {
        return Err(Error::StepSize { dt, limit });
    }
    let opts = SolveOptions::default();
    let (model, eps) = (state.model, state.eps);
    let bg0 = state.background.as_ref().map(|b| &b.rho);

    let (k1, kb1) = tendencies(model, eps, &state.rho, bg0, opts)?;
    let stage = |f: &ScalarField, k: &ScalarField, c: f64| f.axpby(1.0, k, c);
    let bstage = |k: &Option<ScalarField>, c: f64| -> Result<Option<ScalarField>> {
        match (bg0, k) {
            (Some(b), Some(k)) => Ok(Some(b.axpby(1.0, k, c)?)),
            _ => Ok(None),
        }
    };
    let r2 = stage(&state.rho, &k1, 0.5 * dt)?;
    let b2 = bstage(&kb1, 0.5 * dt)?;
    let (k2, kb2) = tendencies(model, eps, &r2, b2.as_ref(), opts)?;
    let r3 = stage(&state.rho, &k2, 0.5 * dt)?;
    let b3 = bstage(&kb2, 0.5 * dt)?;
    let (k3, kb3) = tendencies(model, eps, &r3, b3.as_ref(), opts)?;
    let r4 = stage(&state.rho, &k3, dt)?;
    let b4 = bstage(&kb3, dt)?;
    let (k4, kb4) = tendencies(model, eps, &r4, b4.as_ref(), opts)?;

    let combine = |f: &ScalarField,
                   k1: &ScalarField,
                   k2: &ScalarField,
                   k3: &ScalarField,
                   k4: &ScalarField| {
        let incr = k1.axpby(1.0, k2, 2.0)?.axpby(1.0, k3, 2.0)?.add(k4)?;
        Ok::<_, Error>(f.axpby(1.0, &incr, dt / 6.0)?.mean_free())
    };
    let rho = combine(&state.rho, &k1, &k2, &k3, &k4)?;
    let background = match (&state.background, kb1, kb2, kb3, kb4) {
        (Some(b), Some(a1), Some(a2), Some(a3), Some(a4)) => {
            let rhobar = combine(&b.rho, &a1, &a2, &a3, &a4)?;
            let potential = inv_laplacian_unchecked(&rhobar);
            Some(Background {
                rho: rhobar,
                potential,
            })
        }
        _ => None,
    };
    let potential = potential_for(
        model,
        eps,
        &rho,
        background.as_ref().map(|b| &b.potential),
        opts,
    )?;
    Ok(SimState {
        time: state.time + dt,
        model,
        eps,
        rho,
        potential,
        background,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub l2_rho: f64,
    pub linf_rho: f64,
    pub grad_linf_rho: f64,
    pub h2_rho: f64,
    pub h3_rho: f64,
    pub calpha_rho: f64,
    pub hess_linf_psi: f64,
    pub hess_l2_psi: f64,
    pub grad_margin: f64,
    pub hessian_margin: f64,
    pub log_estimate_ratio: f64,
    pub velocity_gap: Option<f64>,
    pub flow_gap: Option<f64>,
    pub hminus1_gap: Option<f64>,
    pub w2: Option<f64>,
    #[serde(rename = "A_t")]
    pub a_t: Option<f64>,
    pub gronwall_bound: Option<f64>,
}

impl DiagnosticsRecord {
    /// Norms of a single state. `m0` is `|rho^0|_inf` of the run.
    pub fn of_state(state: &SimState, m0: f64) -> Self {
        let rho = &state.rho;
        let grad = spectral::grad_linf(rho);
        let (hinf, hl2) = hessian_norms(&state.potential);
        let linf = spectral::linf(rho);
        let calpha = linf + spectral::holder_seminorm(rho, DEFAULT_ALPHA);
        let status: BootstrapStatus =
            elliptic::status_from_norms(grad, hinf, calpha, state.eps, m0.max(1e-300));
        Self {
            t: state.time,
            l2_rho: spectral::l2(rho),
            linf_rho: linf,
            grad_linf_rho: grad,
            h2_rho: hs_unchecked(rho, 2.0),
            h3_rho: hs_unchecked(rho, 3.0),
            calpha_rho: calpha,
            hess_linf_psi: hinf,
            hess_l2_psi: hl2,
            grad_margin: status.grad_margin,
            hessian_margin: status.hessian_margin,
            log_estimate_ratio: status.log_estimate_ratio,
            velocity_gap: None,
            flow_gap: None,
            hminus1_gap: None,
            w2: None,
            a_t: None,
            gronwall_bound: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum ExitReason {
    Completed,
    BootstrapExit { time: f64 },
    Failed { time: f64, message: String },
}

/// Potentials after every accepted step, used to drive particle flows.
#[derive(Debug, Clone, Default)]
pub struct StepHistory {
    pub times: Vec<f64>,
    pub potentials: Vec<ScalarField>,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub states: Vec<SimState>,
    pub dt_history: Vec<f64>,
    pub diagnostics: Vec<DiagnosticsRecord>,
    pub exit: ExitReason,
    pub steps: Option<StepHistory>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.time).collect()
    }

    pub fn last(&self) -> &SimState {
        self.states.last().expect("trajectory has an initial state")
    }

    pub fn completed(&self) -> bool {
        self.exit == ExitReason::Completed
    }

    pub fn exit_time(&self) -> Option<f64> {
        match self.exit {
            ExitReason::BootstrapExit { time } => Some(time),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Keep the potential after every step (needed for particle flows).
    pub record_steps: bool,
}

/// Sample times `k * sample_interval` up to `t_final`, with `t_final` appended
/// when it is not itself a multiple.
pub fn sample_times(t_final: f64, sample_interval: f64) -> Vec<f64> {
    let count = (t_final / sample_interval + 1e-9).floor() as usize;
    let mut times: Vec<f64> = (0..=count).map(|k| k as f64 * sample_interval).collect();
    if t_final - times[count] > 1e-9 * sample_interval {
        times.push(t_final);
    } else {
        times[count] = t_final;
    }
    times
}

pub fn run_simulation(config: &RunConfig) -> Result<Trajectory> {
    run_simulation_with(config, RunOptions::default())
}

/// Integrates from `t = 0` to `t_final`. Solver failures end the run early
/// with the trajectory so far and an exit reason; only invalid configurations
/// are returned as errors.
pub fn run_simulation_with(config: &RunConfig, opts: RunOptions) -> Result<Trajectory> {
    config.validate()?;
    let grid = TorusGrid::new(config.n)?;
    let rho0 = config.initial_data.sample(&grid);
    run_from(config, &rho0, opts)
}

pub fn run_from(config: &RunConfig, rho0: &ScalarField, opts: RunOptions) -> Result<Trajectory> {
    let mut state = SimState::initial(config.model, config.eps, rho0)?;
    let m0 = spectral::linf(rho0);
    let mut traj = Trajectory {
        states: vec![state.clone()],
        dt_history: Vec::new(),
        diagnostics: vec![DiagnosticsRecord::of_state(&state, m0)],
        exit: ExitReason::Completed,
        steps: opts.record_steps.then(|| StepHistory {
            times: vec![0.0],
            potentials: vec![state.potential.clone()],
        }),
    };
    let watch_exit = config.stop_on_exit && config.model == Model::SGeps;
    let margin = |s: &SimState| {
        let d = elliptic::status_from_norms(
            spectral::grad_linf(&s.rho),
            hessian_norms(&s.potential).0,
            0.0,
            s.eps,
            1.0,
        );
        (d.grad_margin.min(d.hessian_margin), d.inside)
    };
    if watch_exit && !margin(&state).1 {
        traj.exit = ExitReason::BootstrapExit { time: 0.0 };
        return Ok(traj);
    }
    let mut prev_margin = if watch_exit { margin(&state).0 } else { 0.0 };
    let times = sample_times(config.t_final, config.sample_interval);
    for window in times.windows(2) {
        let (t0, t1) = (window[0], window[1]);
        let target = config.dt_max.min(0.9 * state.cfl_limit(config.cfl));
        let nsteps = ((t1 - t0) / target - 1e-9).ceil().max(1.0) as usize;
        let dt = (t1 - t0) / nsteps as f64;
        for k in 0..nsteps {
            let next = match step_rk4(&state, dt, config.cfl) {
                Ok(s) => s,
                Err(e) => {
                    traj.exit = ExitReason::Failed {
                        time: state.time,
                        message: e.to_string(),
                    };
                    return Ok(traj);
                }
            };
            state = next;
            // sample instants are set exactly rather than accumulated
            state.time = if k + 1 == nsteps {
                t1
            } else {
                t0 + (k + 1) as f64 * dt
            };
            traj.dt_history.push(dt);
            if let Some(h) = traj.steps.as_mut() {
                h.times.push(state.time);
                h.potentials.push(state.potential.clone());
            }
            if watch_exit {
                let (m, inside) = margin(&state);
                if !inside {
                    // linear interpolation of the margin between the two steps
                    let frac = if prev_margin > m {
                        prev_margin / (prev_margin - m)
                    } else {
                        1.0
                    };
                    let time = state.time - dt + frac.clamp(0.0, 1.0) * dt;
                    traj.diagnostics
                        .push(DiagnosticsRecord::of_state(&state, m0));
                    traj.states.push(state);
                    traj.exit = ExitReason::BootstrapExit { time };
                    return Ok(traj);
                }
                prev_margin = m;
            }
        }
        traj.diagnostics
            .push(DiagnosticsRecord::of_state(&state, m0));
        traj.states.push(state.clone());
    }
    Ok(traj)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointSidecar {
    pub time: f64,
    pub model: Model,
    pub eps: f64,
    pub step: usize,
}

/// Writes `rho.bin`, `potential.bin` (plus `background_rho.bin` for the
/// corrector) and `checkpoint.json` into `dir`.
pub fn write_checkpoint(state: &SimState, step: usize, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let n = state.grid().n();
    let eps = (state.model != Model::Euler).then_some(state.eps);
    let header = |kind: &str| DumpHeader {
        n,
        kind: kind.into(),
        time: state.time,
        epsilon: eps,
    };
    let (rho_kind, pot_kind) = match state.model {
        Model::Euler => ("rho", "phi_euler"),
        Model::SGeps => ("rho", "psi_sg"),
        Model::Corrector => ("rho_corrector", "phi_corrector"),
    };
    save_field(&dir.join("rho.bin"), &state.rho, &header(rho_kind))?;
    save_field(
        &dir.join("potential.bin"),
        &state.potential,
        &header(pot_kind),
    )?;
    if let Some(bg) = &state.background {
        save_field(&dir.join("background_rho.bin"), &bg.rho, &header("rho"))?;
    }
    let sidecar = CheckpointSidecar {
        time: state.time,
        model: state.model,
        eps: state.eps,
        step,
    };
    let path = dir.join("checkpoint.json");
    let text = serde_json::to_string(&sidecar).expect("sidecar serialises");
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

/// Restores a checkpoint written by [`write_checkpoint`]; the potential is
/// re-derived from the density and compared against the stored one.
pub fn load_checkpoint(dir: &Path) -> Result<(SimState, CheckpointSidecar)> {
    let path = dir.join("checkpoint.json");
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let sidecar: CheckpointSidecar = serde_json::from_str(&text)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    let (_, rho) = load_field(&dir.join("rho.bin"))?;
    let (_, potential) = load_field(&dir.join("potential.bin"))?;
    let background = if sidecar.model == Model::Corrector {
        let (_, rhobar) = load_field(&dir.join("background_rho.bin"))?;
        let phibar = inv_laplacian_unchecked(&rhobar);
        Some(Background {
            rho: rhobar,
            potential: phibar,
        })
    } else {
        None
    };
    Ok((
        SimState {
            time: sidecar.time,
            model: sidecar.model,
            eps: sidecar.eps,
            rho,
            potential,
            background,
        },
        sidecar,
    ))
}

/// Defects of `(rho~, psi~) = (rhobar + eps rho_1, phibar + eps phi_1)` in the
/// SG^eps equations: `(|d_t rho~ + u~ . grad rho~|_L2, |Delta psi~ - rho~ + eps det D2 psi~|_L2)`
/// together with the elliptic defect's closed form
/// `eps^2 cof(D2 phibar) : D2 phi_1 + eps^3 det D2 phi_1`.
pub struct ConsistencyDefects {
    pub transport: f64,
    pub elliptic: f64,
    pub elliptic_closed_form_error: f64,
}

pub fn corrector_consistency(state: &SimState) -> Result<ConsistencyDefects> {
    let bg = state.background.as_ref().ok_or_else(missing_background)?;
    let eps = state.eps;
    let (rho_t, psi_t) = state.corrected()?;
    let elliptic_defect =
        spectral::laplacian(&psi_t)
            .sub(&rho_t)?
            .axpby(1.0, &hessian_det(&psi_t), eps)?;
    let closed = elliptic::cofactor_contraction(&bg.potential, &state.potential).axpby(
        eps * eps,
        &hessian_det(&state.potential),
        eps * eps * eps,
    )?;
    // d_t rho~ from the corrector system itself
    let (kbar, _) = tendencies(Model::Euler, 0.0, &bg.rho, None, SolveOptions::default())?;
    let k1 = rhs(state)?;
    let dt_rho = kbar.axpby(1.0, &k1, eps)?;
    let (ux, uy) = perp_gradient(&psi_t);
    let transport = dt_rho.add(&advection(&ux, &uy, &rho_t))?;
    Ok(ConsistencyDefects {
        transport: spectral::l2(&transport),
        elliptic: spectral::l2(&elliptic_defect),
        elliptic_closed_form_error: spectral::l2(&elliptic_defect.sub(&closed)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lab::{InitialData, Preset};
    use std::f64::consts::{PI, TAU};

    fn shear(g: &TorusGrid) -> ScalarField {
        ScalarField::from_fn(g, |_, y| -4.0 * PI * PI * (TAU * y).cos())
    }

    #[test]
    fn shear_is_stationary_for_every_model() {
        let g = TorusGrid::new(32).unwrap();
        for model in [Model::Euler, Model::SGeps, Model::Corrector] {
            let s = SimState::initial(model, 0.05, &shear(&g)).unwrap();
            assert!(spectral::linf(&rhs(&s).unwrap()) < 1e-10, "{model:?}");
            let mut t = s.clone();
            for _ in 0..100 {
                t = step_rk4(&t, 1e-3, 0.5).unwrap();
            }
            assert!(t.rho.max_abs_diff(&s.rho) <= 1e-10, "{model:?}");
            assert!((t.time - 0.1).abs() < 1e-12);
        }
    }

    #[test]
    fn corrector_needs_background() {
        let g = TorusGrid::new(32).unwrap();
        let mut s = SimState::initial(Model::Corrector, 0.05, &shear(&g)).unwrap();
        s.background = None;
        assert!(matches!(rhs(&s), Err(Error::Configuration(_))));
    }

    #[test]
    fn zero_step_is_identity() {
        let g = TorusGrid::new(32).unwrap();
        let rho = InitialData::default().sample(&g);
        let s = SimState::initial(Model::SGeps, 0.02, &rho).unwrap();
        let t = step_rk4(&s, 0.0, 0.5).unwrap();
        assert_eq!(t.time, s.time);
        assert_eq!(t.rho.max_abs_diff(&s.rho), 0.0);
    }

    #[test]
    fn cfl_violation() {
        let g = TorusGrid::new(32).unwrap();
        let rho = InitialData::default().sample(&g);
        let s = SimState::initial(Model::Euler, 0.0, &rho).unwrap();
        let limit = s.cfl_limit(0.5);
        assert!(matches!(
            step_rk4(&s, 2.0 * limit, 0.5),
            Err(Error::StepSize { .. })
        ));
    }

    #[test]
    fn sample_grid() {
        assert_eq!(sample_times(0.1, 0.05).len(), 3);
        let t = sample_times(0.12, 0.05);
        assert_eq!(t.len(), 4);
        assert_eq!(*t.last().unwrap(), 0.12);
        assert_eq!(sample_times(1.0, 0.05)[20], 1.0);
    }

    #[test]
    fn euler_run_conserves_l2_and_is_deterministic() {
        let cfg = RunConfig {
            n: 32,
            model: Model::Euler,
            eps: 0.0,
            t_final: 0.2,
            ..RunConfig::default()
        };
        let a = run_simulation(&cfg).unwrap();
        let b = run_simulation(&cfg).unwrap();
        assert!(a.completed());
        let l0 = a.diagnostics[0].l2_rho;
        for d in &a.diagnostics {
            assert!((d.l2_rho - l0).abs() <= 1e-8 * l0);
        }
        assert_eq!(a.last().rho.to_le_bytes(), b.last().rho.to_le_bytes());
        assert!(a.times().windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn elliptic_consistency_identity() {
        let g = TorusGrid::new(32).unwrap();
        let rho = InitialData::default().sample(&g);
        let cfg = RunConfig {
            n: 32,
            model: Model::Corrector,
            eps: 0.04,
            t_final: 0.1,
            ..RunConfig::default()
        };
        let traj = run_from(&cfg, &rho, RunOptions::default()).unwrap();
        let d = corrector_consistency(traj.last()).unwrap();
        assert!(
            d.elliptic_closed_form_error <= 1e-10,
            "{}",
            d.elliptic_closed_form_error
        );
    }

    #[test]
    fn checkpoint_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let g = TorusGrid::new(32).unwrap();
        let rho = InitialData::Preset(Preset::Default).sample(&g);
        let s = SimState::initial(Model::Corrector, 0.02, &rho).unwrap();
        let s = step_rk4(&s, 0.01, 0.5).unwrap();
        write_checkpoint(&s, 1, dir.path()).unwrap();
        let (back, side) = load_checkpoint(dir.path()).unwrap();
        assert_eq!(side.step, 1);
        assert_eq!(back.rho.to_le_bytes(), s.rho.to_le_bytes());
        assert_eq!(back.potential.to_le_bytes(), s.potential.to_le_bytes());
        let text = std::fs::read_to_string(dir.path().join("checkpoint.json")).unwrap();
        assert_eq!(
            text,
            r#"{"time":0.01,"model":"Corrector","eps":0.02,"step":1}"#
        );
    }
}
