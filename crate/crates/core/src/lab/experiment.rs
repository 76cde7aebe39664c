//! Experiment drivers: paired runs over a list of `eps` values and the rate
//! fits built on them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentKind, ExperimentSpec, RunConfig};
use super::fit::{loglog_fit, riccati_fit, LineFit, RiccatiFit};
use crate::elliptic::BOOTSTRAP_LEVEL;
use crate::error::{Error, Result};
use crate::inequalities::{run_suite, SuiteReport, EXACT_CHECKS};
use crate::lagrangian::{gap_series, paired_flows, GapSeries};
use crate::spectral::{self, hs_unchecked, ScalarField, TorusGrid};
use crate::transport::{
    self, run_from, DiagnosticsRecord, ExitReason, Model, RunOptions, Trajectory,
};
use crate::wasserstein::{
    gronwall_w2_bound, w2_exact_small, w2_sinkhorn, BoundSeries, DensityOnTorus, OtRecord,
    DEFAULT_REG, MAX_SIDE,
};

/// Label grid side for the flow diagnostics.
const FLOW_LABELS: usize = 32;
/// Side of the downsampled densities used to validate Sinkhorn against the
/// exact solver.
const ORACLE_SIDE: usize = 16;
/// Accepted distance between Sinkhorn and the exact solver at `ORACLE_SIDE`.
const ORACLE_TOL: f64 = 2e-3;
const CLOSED_FORM_TOL: f64 = 1e-10;
const RICCATI_R2: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    /// Completed but left the ellipticity window; kept out of rate fits.
    Excluded,
    Failed,
}

/// Sinkhorn at `ORACLE_SIDE` against the exact solver at one sample time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSample {
    pub t: f64,
    pub sinkhorn: f64,
    pub exact: f64,
    pub bias: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSample {
    pub t: f64,
    /// `(W2 + bias)^2`.
    pub lhs: f64,
    pub bound: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsOutcome {
    pub eps: f64,
    pub status: RunStatus,
    pub message: Option<String>,
    pub exit: Option<ExitReason>,
    pub sup_velocity_gap: Option<f64>,
    pub sup_w2: Option<f64>,
    pub exit_time: Option<f64>,
    /// `sup_t eps |D2 psi|_inf`.
    pub max_ellipticity: f64,
    /// `min_t (1/4 - eps |grad rho|_inf)`.
    pub min_grad_margin: f64,
    #[serde(skip)]
    pub diagnostics: Vec<DiagnosticsRecord>,
    #[serde(skip)]
    pub ot: Vec<OtRecord>,
    pub oracle: Vec<OracleSample>,
    pub bound: Vec<BoundSample>,
    /// Largest `|elliptic defect - closed form|_L2` over samples (corrector).
    pub closed_form_error: Option<f64>,
    pub riccati: Option<RiccatiFit>,
}

impl EpsOutcome {
    fn failed(eps: f64, message: String) -> Self {
        Self {
            eps,
            status: RunStatus::Failed,
            message: Some(message),
            exit: None,
            sup_velocity_gap: None,
            sup_w2: None,
            exit_time: None,
            max_ellipticity: f64::NAN,
            min_grad_margin: f64::NAN,
            diagnostics: Vec::new(),
            ot: Vec::new(),
            oracle: Vec::new(),
            bound: Vec::new(),
            closed_form_error: None,
            riccati: None,
        }
    }

    fn from_trajectory(eps: f64, traj: &Trajectory) -> Self {
        let max_ellipticity = traj
            .diagnostics
            .iter()
            .map(|d| eps * d.hess_linf_psi)
            .fold(0.0, f64::max);
        let min_grad_margin = traj
            .diagnostics
            .iter()
            .map(|d| BOOTSTRAP_LEVEL - eps * d.grad_linf_rho)
            .fold(f64::INFINITY, f64::min);
        let (status, message) = match &traj.exit {
            ExitReason::Failed { message, .. } => (RunStatus::Failed, Some(message.clone())),
            _ if max_ellipticity > BOOTSTRAP_LEVEL => (
                RunStatus::Excluded,
                Some(format!("eps |D2 psi|_inf reached {max_ellipticity:.4}")),
            ),
            _ => (RunStatus::Ok, None),
        };
        Self {
            eps,
            status,
            message,
            exit: Some(traj.exit.clone()),
            sup_velocity_gap: None,
            sup_w2: None,
            exit_time: traj.exit_time(),
            max_ellipticity,
            min_grad_margin,
            diagnostics: traj.diagnostics.clone(),
            ot: Vec::new(),
            oracle: Vec::new(),
            bound: Vec::new(),
            closed_form_error: None,
            riccati: None,
        }
    }

    pub fn in_fit(&self) -> bool {
        self.status == RunStatus::Ok
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, pass: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            pass,
            detail,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub kind: ExperimentKind,
    pub spec: ExperimentSpec,
    pub runs: Vec<EpsOutcome>,
    /// Reference (Euler or corrector) diagnostics.
    #[serde(skip)]
    pub reference: Vec<DiagnosticsRecord>,
    /// Fit of the primary metric against `eps`.
    pub fit: Option<LineFit>,
    /// Wasserstein distance at the final time against `eps`.
    pub w2_fit: Option<LineFit>,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    #[serde(skip)]
    pub suite: Option<SuiteReport>,
}

impl ExperimentReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// 0 when every assertion held, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            2
        }
    }
}

fn model_config(base: &RunConfig, model: Model, eps: f64) -> RunConfig {
    RunConfig {
        model,
        eps: if model == Model::Euler { 0.0 } else { eps },
        ..base.clone()
    }
}

/// Runs the experiment described by `spec`. Invalid specs and failures of the
/// reference run are errors; failures of individual `eps` runs are recorded
/// in the report.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    spec.validate()?;
    let mut report = ExperimentReport {
        kind: spec.kind,
        spec: spec.clone(),
        runs: Vec::new(),
        reference: Vec::new(),
        fit: None,
        w2_fit: None,
        checks: Vec::new(),
        notes: Vec::new(),
        suite: None,
    };
    match spec.kind {
        ExperimentKind::Stability => stability(spec, &mut report, false)?,
        ExperimentKind::Wasserstein => stability(spec, &mut report, true)?,
        ExperimentKind::Corrector => corrector(spec, &mut report)?,
        ExperimentKind::Lifespan => lifespan(spec, &mut report)?,
        ExperimentKind::Inequalities => inequalities(spec, &mut report)?,
    }
    Ok(report)
}

fn initial_density(base: &RunConfig) -> Result<ScalarField> {
    let grid = TorusGrid::new(base.n)?;
    Ok(base.initial_data.sample(&grid))
}

fn reference_run(
    base: &RunConfig,
    model: Model,
    rho0: &ScalarField,
    eps: f64,
) -> Result<Trajectory> {
    let cfg = RunConfig {
        stop_on_exit: false,
        ..model_config(base, model, eps)
    };
    let traj = run_from(&cfg, rho0, RunOptions { record_steps: true })?;
    if let ExitReason::Failed { time, message } = &traj.exit {
        return Err(Error::Configuration(format!(
            "{} reference run failed at t = {time}: {message}",
            model.as_str()
        )));
    }
    Ok(traj)
}

fn windowed<'a>(spec: &ExperimentSpec, runs: &'a [EpsOutcome]) -> Vec<&'a EpsOutcome> {
    let [lo, hi] = spec.slope_window.unwrap_or([0, runs.len()]);
    runs.iter()
        .enumerate()
        .filter(|(i, r)| *i >= lo && *i < hi && r.in_fit())
        .map(|(_, r)| r)
        .collect()
}

fn fit_metric(
    spec: &ExperimentSpec,
    runs: &[EpsOutcome],
    metric: impl Fn(&EpsOutcome) -> Option<f64>,
) -> Option<LineFit> {
    let pts: Vec<(f64, f64)> = windowed(spec, runs)
        .into_iter()
        .filter_map(|r| metric(r).map(|m| (r.eps, m)))
        .collect();
    let (e, m): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    loglog_fit(&e, &m)
}

fn slope_check(name: &str, fit: &Option<LineFit>, target: f64, tol: f64) -> Check {
    match fit {
        Some(f) => Check::new(
            name,
            (f.slope - target).abs() <= tol,
            format!(
                "slope {:.4} (stderr {}) over {} points, expected {target} +/- {tol}",
                f.slope,
                f.slope_stderr.map_or("n/a".into(), |s| format!("{s:.4}")),
                f.points
            ),
        ),
        None => Check::new(name, false, "fewer than two usable runs".into()),
    }
}

fn fill_gaps(out: &mut EpsOutcome, gaps: &GapSeries) {
    for (d, k) in out.diagnostics.iter_mut().zip(0..gaps.times.len()) {
        d.velocity_gap = Some(gaps.velocity_gap[k]);
        d.hminus1_gap = Some(gaps.hminus1_gap[k]);
        d.flow_gap = gaps.flow_gap[k].is_finite().then_some(gaps.flow_gap[k]);
    }
    out.sup_velocity_gap = gaps.velocity_gap.iter().copied().reduce(f64::max);
}

fn stability(spec: &ExperimentSpec, report: &mut ExperimentReport, with_ot: bool) -> Result<()> {
    let base = &spec.base;
    let rho0 = initial_density(base)?;
    let euler = reference_run(base, Model::Euler, &rho0, 0.0)?;
    report.reference = euler.diagnostics.clone();
    report.runs = spec
        .eps_list
        .par_iter()
        .map(|&eps| {
            stability_one(base, &rho0, &euler, eps, with_ot)
                .unwrap_or_else(|e| EpsOutcome::failed(eps, e.to_string()))
        })
        .collect();
    report.fit = fit_metric(spec, &report.runs, |r| r.sup_velocity_gap);
    if with_ot {
        report.w2_fit = fit_metric(spec, &report.runs, |r| {
            r.diagnostics.last().and_then(|d| d.w2)
        });
        report
            .checks
            .push(slope_check("w2_rate", &report.w2_fit, 1.0, 0.2));
        let worst = report
            .runs
            .iter()
            .flat_map(|r| r.oracle.iter())
            .map(|o| o.bias)
            .fold(0.0, f64::max);
        let any = report.runs.iter().any(|r| !r.oracle.is_empty());
        report.checks.push(Check::new(
            "sinkhorn_vs_exact",
            any && worst <= ORACLE_TOL,
            format!("max |sinkhorn - exact| at side {ORACLE_SIDE}: {worst:.3e} (tolerance {ORACLE_TOL:e})"),
        ));
        for r in report.runs.iter().filter(|r| !r.bound.is_empty()) {
            let bad: Vec<f64> = r.bound.iter().filter(|b| !b.holds).map(|b| b.t).collect();
            report.checks.push(Check::new(
                &format!("gronwall_bound_eps_{}", r.eps),
                bad.is_empty(),
                if bad.is_empty() {
                    format!(
                        "(W2 + bias)^2 <= B(t) at all {} sample times",
                        r.bound.len()
                    )
                } else {
                    format!("bound violated at t = {bad:?}")
                },
            ));
        }
        report.notes.push(format!(
            "W2 uses debiased Sinkhorn (reg {DEFAULT_REG:e}) on at most {MAX_SIDE}^2 block averages; the bias \
             budget at each sample is |sinkhorn - exact| on {ORACLE_SIDE}^2 block averages"
        ));
    } else {
        report
            .checks
            .push(slope_check("velocity_rate", &report.fit, 1.0, 0.15));
    }
    fit_notes(report);
    Ok(())
}

fn fit_notes(report: &mut ExperimentReport) {
    let excluded: Vec<String> = report
        .runs
        .iter()
        .filter(|r| r.status != RunStatus::Ok)
        .map(|r| {
            format!(
                "eps {} {:?}: {}",
                r.eps,
                r.status,
                r.message.clone().unwrap_or_default()
            )
        })
        .collect();
    if !excluded.is_empty() {
        report
            .notes
            .push(format!("left out of fits: {}", excluded.join("; ")));
    }
    let outside: Vec<String> = report
        .runs
        .iter()
        .filter(|r| r.min_grad_margin < 0.0)
        .map(|r| format!("{} (margin {:.3})", r.eps, r.min_grad_margin))
        .collect();
    if !outside.is_empty() {
        report.notes.push(format!(
            "eps |grad rho|_inf exceeded 1/4 for eps = {}; fits filter on eps |D2 psi|_inf <= 1/4 only",
            outside.join(", ")
        ));
    }
    if report.runs.iter().all(|r| r.status == RunStatus::Failed) {
        report
            .checks
            .push(Check::new("runs", false, "every run failed".into()));
    }
}

fn stability_one(
    base: &RunConfig,
    rho0: &ScalarField,
    euler: &Trajectory,
    eps: f64,
    with_ot: bool,
) -> Result<EpsOutcome> {
    let cfg = RunConfig {
        stop_on_exit: false,
        ..model_config(base, Model::SGeps, eps)
    };
    let sg = run_from(&cfg, rho0, RunOptions { record_steps: true })?;
    let mut out = EpsOutcome::from_trajectory(eps, &sg);
    if out.status == RunStatus::Failed {
        return Ok(out);
    }
    let flows = paired_flows(euler, &sg, FLOW_LABELS, base.dt_max)?;
    let gaps = gap_series(euler, &sg, Some(&flows))?;
    fill_gaps(&mut out, &gaps);
    if with_ot {
        wasserstein_diagnostics(&mut out, euler, &sg)?;
    }
    Ok(out)
}

fn wasserstein_diagnostics(
    out: &mut EpsOutcome,
    euler: &Trajectory,
    sg: &Trajectory,
) -> Result<()> {
    let eps = out.eps;
    let bound: BoundSeries = gronwall_w2_bound(sg, euler)?;
    let mut oracle_records = Vec::new();
    for (k, &t) in bound.times.iter().enumerate() {
        let m_sg = DensityOnTorus::physical(&sg.states[k].rho, eps, MAX_SIDE)?;
        let m_eu = DensityOnTorus::physical(&euler.states[k].rho, eps, MAX_SIDE)?;
        let r = w2_sinkhorn(&m_sg, &m_eu, DEFAULT_REG)?;
        let (c_sg, c_eu) = (m_sg.downsample(ORACLE_SIDE)?, m_eu.downsample(ORACLE_SIDE)?);
        let coarse = w2_sinkhorn(&c_sg, &c_eu, DEFAULT_REG)?;
        let exact = w2_exact_small(&c_sg, &c_eu)?;
        out.ot.push(OtRecord::new(t, &r));
        oracle_records.push(OtRecord::new(t, &coarse));
        oracle_records.push(OtRecord::new(t, &exact));
        let bias = (coarse.distance - exact.distance).abs();
        out.oracle.push(OracleSample {
            t,
            sinkhorn: coarse.distance,
            exact: exact.distance,
            bias,
        });
        let lhs = (r.distance + bias).powi(2);
        out.bound.push(BoundSample {
            t,
            lhs,
            bound: bound.bound[k],
            holds: lhs <= bound.bound[k],
        });
        let d = &mut out.diagnostics[k];
        d.w2 = Some(r.distance);
        d.a_t = Some(bound.a_t[k]);
        d.gronwall_bound = Some(bound.bound[k]);
    }
    out.sup_w2 = out.ot.iter().map(|o| o.w2).reduce(f64::max);
    // full-resolution series first, then the oracle pairs
    out.ot.extend(oracle_records);
    Ok(())
}

fn corrector(spec: &ExperimentSpec, report: &mut ExperimentReport) -> Result<()> {
    let base = &spec.base;
    let rho0 = initial_density(base)?;
    let corr = reference_run(base, Model::Corrector, &rho0, spec.eps_list[0])?;
    report.reference = corr.diagnostics.clone();
    report.runs = spec
        .eps_list
        .par_iter()
        .map(|&eps| {
            corrector_one(base, &rho0, &corr, eps)
                .unwrap_or_else(|e| EpsOutcome::failed(eps, e.to_string()))
        })
        .collect();
    report.fit = fit_metric(spec, &report.runs, |r| r.sup_velocity_gap);
    report
        .checks
        .push(slope_check("corrector_rate", &report.fit, 2.0, 0.25));
    let worst = report
        .runs
        .iter()
        .filter_map(|r| r.closed_form_error)
        .fold(f64::NAN, f64::max);
    report.checks.push(Check::new(
        "elliptic_consistency_closed_form",
        worst <= CLOSED_FORM_TOL,
        format!("max |defect - closed form|_L2 = {worst:.3e} (tolerance {CLOSED_FORM_TOL:e})"),
    ));
    fit_notes(report);
    Ok(())
}

fn corrector_one(
    base: &RunConfig,
    rho0: &ScalarField,
    corr: &Trajectory,
    eps: f64,
) -> Result<EpsOutcome> {
    let cfg = RunConfig {
        stop_on_exit: false,
        ..model_config(base, Model::SGeps, eps)
    };
    let sg = run_from(&cfg, rho0, RunOptions::default())?;
    let mut out = EpsOutcome::from_trajectory(eps, &sg);
    if out.status == RunStatus::Failed {
        return Ok(out);
    }
    let k = sg.states.len().min(corr.states.len());
    let mut worst: f64 = 0.0;
    let mut sup: f64 = 0.0;
    for i in 0..k {
        let s = &sg.states[i];
        if (s.time - corr.states[i].time).abs() > 1e-12 {
            return Err(Error::Alignment(format!(
                "sample {i}: {} vs {}",
                s.time, corr.states[i].time
            )));
        }
        let mut c = corr.states[i].clone();
        c.eps = eps;
        let (rho_t, psi_t) = c.corrected()?;
        let gap = hs_unchecked(&s.potential.sub(&psi_t)?, 1.0);
        sup = sup.max(gap);
        worst = worst.max(transport::corrector_consistency(&c)?.elliptic_closed_form_error);
        let d = &mut out.diagnostics[i];
        d.velocity_gap = Some(gap);
        d.hminus1_gap = Some(hs_unchecked(&s.rho.sub(&rho_t)?, -1.0));
    }
    out.sup_velocity_gap = Some(sup);
    out.closed_form_error = Some(worst);
    Ok(out)
}

fn lifespan(spec: &ExperimentSpec, report: &mut ExperimentReport) -> Result<()> {
    let base = &spec.base;
    let rho0 = initial_density(base)?;
    let m0 = spectral::linf(&rho0);
    report.runs = spec
        .eps_list
        .par_iter()
        .map(|&eps| {
            let cfg = RunConfig {
                stop_on_exit: true,
                ..model_config(base, Model::SGeps, eps)
            };
            match run_from(&cfg, &rho0, RunOptions::default()) {
                Ok(traj) => {
                    let mut out = EpsOutcome::from_trajectory(eps, &traj);
                    // the window is the object of study here, not a filter
                    if out.status == RunStatus::Excluded {
                        out.status = RunStatus::Ok;
                        out.message = None;
                    }
                    let times: Vec<f64> = traj.diagnostics.iter().map(|d| d.t).collect();
                    let y: Vec<f64> = traj.diagnostics.iter().map(|d| d.calpha_rho).collect();
                    out.riccati = riccati_fit(&times, &y, m0);
                    out
                }
                Err(e) => EpsOutcome::failed(eps, e.to_string()),
            }
        })
        .collect();
    report.fit = fit_metric(spec, &report.runs, |r| r.exit_time);
    let exits: Vec<Option<f64>> = report.runs.iter().map(|r| r.exit_time).collect();
    let monotone = exits.iter().all(Option::is_some)
        && exits
            .windows(2)
            .all(|w| matches!((w[0], w[1]), (Some(a), Some(b)) if b > a));
    report.checks.push(Check::new(
        "exit_time_monotone",
        monotone,
        format!("exit times {exits:?} for eps {:?}", spec.eps_list),
    ));
    for r in &report.runs {
        let (pass, detail) = match &r.riccati {
            Some(f) => (
                f.r2 >= RICCATI_R2 && f.c_bound.is_finite(),
                format!(
                    "C_fit {:.4}, C_bound {:.4}, R^2 {:.4}",
                    f.c_fit, f.c_bound, f.r2
                ),
            ),
            None => (false, "fewer than three samples before exit".into()),
        };
        report.checks.push(Check::new(
            &format!("riccati_fit_eps_{}", r.eps),
            pass,
            detail,
        ));
    }
    report.notes.push(
        "the eps^-1 log log(1/eps) lifespan asymptotic is not reproducible at this scale: log log(1/eps) \
         changes by less than 15% over the affordable eps range, so only monotonicity and fit quality are asserted"
            .into(),
    );
    report.notes.push(format!(
        "y(t) = |rho|_C^alpha with M0 = |rho0|_inf = {m0:.6}; C_fit and R^2 come from a least-squares line through \
         (t, F(y)) with F' = 1 / (M0 y (1 + log+(y/M0))); C_bound is the smallest C with y' <= C M0 y (1 + log+(y/M0)) \
         at every interior sample"
    ));
    if report.runs.iter().all(|r| r.status == RunStatus::Failed) {
        report
            .checks
            .push(Check::new("runs", false, "every run failed".into()));
    }
    Ok(())
}

fn inequalities(spec: &ExperimentSpec, report: &mut ExperimentReport) -> Result<()> {
    let mut all = SuiteReport::default();
    for &seed in &spec.seeds {
        all.merge(run_suite(seed, spec.count)?);
    }
    let exact_fail = all
        .failures()
        .filter(|r| EXACT_CHECKS.contains(&r.name.as_str()))
        .count();
    let other_fail = all.failures().count() - exact_fail;
    report.checks.push(Check::new(
        "exact_constant_checks",
        exact_fail == 0,
        format!("{exact_fail} failures"),
    ));
    report.checks.push(Check::new(
        "bounded_ratio_checks",
        other_fail == 0,
        format!("{other_fail} failures"),
    ));
    report.checks.push(Check::new(
        "checker_errors",
        all.errors.is_empty(),
        format!("{} errors", all.errors.len()),
    ));
    for s in all.summary() {
        report.notes.push(format!(
            "{}: max ratio {:.6e} over {} samples (bound {:e})",
            s.name, s.max_ratio, s.count, s.bound
        ));
    }
    report.suite = Some(all);
    Ok(())
}
