//! Randomised sweep over every registered checker.

use std::collections::BTreeMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::trajectory::{self, ComparisonRun};
use super::{
    check_det_expansion, check_det_lip, check_endpoint_cz, check_h1_interp, check_sobolev_interp,
    check_wente, CheckResult, DEFAULT_C_ALPHA,
};
use crate::error::{Error, Result};
use crate::lab::RunConfig;
use crate::spectral::{normalize_linf, random_field, ScalarField, TorusGrid, DEFAULT_ALPHA};

/// Checkers whose constant is analytically one (or zero for the expansion
/// residual); they must never fail.
pub const EXACT_CHECKS: [&str; 4] = [
    "h1_interp",
    "sobolev_interp",
    "det_expansion",
    "forced_transport",
];

/// Bound applied to the exact checks inside the suite.
const EXACT_SUITE_TOL: f64 = 1e-10;

const STATIC_N: usize = 64;
const TRAJ_N: usize = 32;
const TRAJ_T: f64 = 0.5;
const LABELS: usize = 16;

/// One line of the suite's NDJSON report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteLine {
    pub name: String,
    pub ratio: f64,
    pub pass: bool,
    pub seed: u64,
    pub digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteError {
    pub name: String,
    pub seed: u64,
    pub index: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckerSummary {
    pub name: String,
    pub count: usize,
    pub max_ratio: f64,
    pub bound: f64,
    pub failures: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SuiteReport {
    pub results: Vec<CheckResult>,
    pub errors: Vec<SuiteError>,
}

impl SuiteReport {
    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.results.iter().filter(|r| !r.pass)
    }

    pub fn merge(&mut self, other: SuiteReport) {
        self.results.extend(other.results);
        self.errors.extend(other.errors);
    }

    /// Per-checker maxima, sorted by name.
    pub fn summary(&self) -> Vec<CheckerSummary> {
        let mut by: BTreeMap<&str, CheckerSummary> = BTreeMap::new();
        for r in &self.results {
            let e = by.entry(&r.name).or_insert_with(|| CheckerSummary {
                name: r.name.clone(),
                count: 0,
                max_ratio: 0.0,
                bound: r.bound,
                failures: 0,
            });
            e.count += 1;
            e.max_ratio = e.max_ratio.max(r.ratio);
            e.failures += usize::from(!r.pass);
        }
        by.into_values().collect()
    }

    pub fn lines(&self) -> Vec<SuiteLine> {
        self.results
            .iter()
            .map(|r| SuiteLine {
                name: r.name.clone(),
                ratio: r.ratio,
                pass: r.pass,
                seed: r.seed.unwrap_or(0),
                digest: r.inputs_digest.clone(),
            })
            .collect()
    }

    pub fn write_ndjson<W: Write>(&self, mut w: W) -> Result<()> {
        for line in self.lines() {
            serde_json::to_writer(&mut w, &line).map_err(|e| Error::Format(e.to_string()))?;
            w.write_all(b"\n")
                .map_err(|e| Error::io("<suite report>", e))?;
        }
        Ok(())
    }

    pub fn write_summary_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let io = |e| Error::io("<suite summary>", e);
        writeln!(w, "name,count,max_ratio,bound,failures").map_err(io)?;
        for s in self.summary() {
            writeln!(
                w,
                "{},{},{:e},{:e},{}",
                s.name, s.count, s.max_ratio, s.bound, s.failures
            )
            .map_err(io)?;
        }
        Ok(())
    }
}

fn gamma<R: Rng>(rng: &mut R) -> f64 {
    [2.0, 3.0, 4.0][rng.random_range(0..3)]
}

/// Collects a checker's result or its error under `name`.
struct Sink {
    seed: u64,
    index: usize,
    report: SuiteReport,
}

impl Sink {
    fn push(&mut self, name: &str, r: Result<CheckResult>) {
        match r {
            Ok(mut c) => {
                c.seed = Some(self.seed);
                c.index = Some(self.index);
                self.report.results.push(c);
            }
            Err(e) => self.report.errors.push(SuiteError {
                name: name.to_string(),
                seed: self.seed,
                index: self.index,
                message: e.to_string(),
            }),
        }
    }
}

fn static_checks(sink: &mut Sink, rng: &mut ChaCha8Rng) {
    let g = TorusGrid::new(STATIC_N).expect("static grid");
    let field = |rng: &mut ChaCha8Rng| {
        let gm = gamma(rng);
        random_field(&g, gm, None, rng)
    };

    let psi = field(rng);
    sink.push("wente", check_wente(&psi));

    let f = field(rng);
    sink.push(
        "endpoint_cz",
        check_endpoint_cz(&f, DEFAULT_ALPHA, DEFAULT_C_ALPHA),
    );

    let f = field(rng);
    sink.push(
        "h1_interp",
        check_h1_interp(&f).map(|c| c.with_bound(1.0 + EXACT_SUITE_TOL)),
    );

    let f = field(rng);
    let s0 = -rng.random::<f64>();
    let s1 = 1.0 + 2.0 * rng.random::<f64>();
    let s = s0 + (s1 - s0) * (0.05 + 0.9 * rng.random::<f64>());
    sink.push(
        "sobolev_interp",
        check_sobolev_interp(&f, s0, s, s1).map(|c| c.with_bound(1.0 + EXACT_SUITE_TOL)),
    );

    let (phi, eta) = (field(rng), field(rng));
    let eps = rng.random_range(-1.0..1.0);
    sink.push("det_expansion", check_det_expansion(&phi, &eta, eps));

    let (f, h) = (field(rng), field(rng));
    sink.push("det_lip", check_det_lip(&f, &h));

    let sigma0 = field(rng);
    let forcing = random_field(&g, 2.0, Some(4), rng);
    let zero = ScalarField::zeros(&g);
    sink.push(
        "forced_transport",
        trajectory::forced_transport_pair(&zero, &sigma0, &forcing, 0.5, 10)
            .and_then(|p| trajectory::check_forced_transport(&p))
            .map(|c| c.with_bound(1.0 + EXACT_SUITE_TOL)),
    );
}

const TRAJ_CHECKS: [&str; 13] = [
    "hm_transport_m2",
    "hm_transport_m3",
    "grad_ode",
    "h1_growth",
    "l2_hessian",
    "flow_hminus1",
    "density_stability_w1inf",
    "density_stability_h1",
    "inv_gap",
    "vel_gap",
    "flow_gap_gronwall",
    "l2_stab_hm_m3",
    "comparison_run",
];

fn trajectory_checks(sink: &mut Sink, rng: &mut ChaCha8Rng) {
    let g = TorusGrid::new(TRAJ_N).expect("trajectory grid");
    let gm = [3.0, 4.0][rng.random_range(0..2)];
    let rho0 = normalize_linf(&random_field(&g, gm, Some(4), rng));
    let eps = rng.random_range(0.005..0.03);
    let base = RunConfig {
        n: TRAJ_N,
        t_final: TRAJ_T,
        sample_interval: 0.05,
        dt_max: 0.01,
        ..RunConfig::default()
    };
    let run = match ComparisonRun::new(&base, &rho0, eps, LABELS, 0.01) {
        Ok(r) => r,
        Err(e) => {
            sink.push(TRAJ_CHECKS[12], Err(e));
            return;
        }
    };
    let c_w = trajectory::measured_wente_constant(&run.sg);
    sink.push(TRAJ_CHECKS[0], trajectory::check_hm_transport(&run.sg, 2));
    sink.push(TRAJ_CHECKS[1], trajectory::check_hm_transport(&run.sg, 3));
    sink.push(TRAJ_CHECKS[2], trajectory::check_grad_ode(&run.sg));
    sink.push(TRAJ_CHECKS[3], trajectory::check_h1_growth(&run.sg));
    sink.push(TRAJ_CHECKS[4], trajectory::check_l2_hessian(&run.sg));
    sink.push(TRAJ_CHECKS[5], trajectory::check_flow_hminus1(&run));
    sink.push(
        TRAJ_CHECKS[6],
        trajectory::check_density_stability_w1inf(&run),
    );
    sink.push(TRAJ_CHECKS[7], trajectory::check_density_stability_h1(&run));
    sink.push(TRAJ_CHECKS[8], trajectory::check_inv_gap(&run));
    sink.push(TRAJ_CHECKS[9], trajectory::check_vel_gap(&run, c_w));
    sink.push(
        TRAJ_CHECKS[10],
        trajectory::check_flow_gap_gronwall(&run, c_w),
    );
    sink.push(TRAJ_CHECKS[11], trajectory::check_l2_stab_hm(&run, 3));
}

fn run_one(seed: u64, index: usize) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let mut sink = Sink {
        seed,
        index,
        report: SuiteReport::default(),
    };
    static_checks(&mut sink, &mut rng);
    trajectory_checks(&mut sink, &mut rng);
    sink.report
}

/// Runs every checker `count` times on inputs drawn from a ChaCha8 stream
/// keyed by `(seed, index)`. Samples are processed in parallel and merged in
/// index order. Checker errors are recorded, not propagated.
pub fn run_suite(seed: u64, count: usize) -> Result<SuiteReport> {
    if count == 0 {
        return Err(Error::Precondition("count must be at least 1".into()));
    }
    let parts: Vec<SuiteReport> = (0..count)
        .into_par_iter()
        .map(|i| run_one(seed, i))
        .collect();
    let mut out = SuiteReport::default();
    for p in parts {
        out.merge(p);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smoke_and_determinism() {
        let a = run_suite(0, 1).unwrap();
        assert!(a.errors.is_empty(), "{:?}", a.errors);
        assert_eq!(a.results.len(), 19);
        for r in a.failures() {
            panic!("{} failed with ratio {}", r.name, r.ratio);
        }
        let b = run_suite(0, 1).unwrap();
        assert_eq!(a.lines(), b.lines());
        let mut buf = Vec::new();
        a.write_ndjson(&mut buf).unwrap();
        let first: serde_json::Value =
            serde_json::from_slice(buf.split(|c| *c == b'\n').next().unwrap()).unwrap();
        let keys: Vec<&String> = first.as_object().unwrap().keys().collect();
        assert_eq!(keys.len(), 5);
        let mut csv = Vec::new();
        a.write_summary_csv(&mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 20);
    }

    #[test]
    fn zero_count_is_rejected() {
        assert!(run_suite(1, 0).is_err());
    }
}
