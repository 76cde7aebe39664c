//! Acceptance run: one `[PASS]` / `[FAIL]` line per criterion.
//!
//! The process exits 0 whenever it manages to evaluate every criterion; a
//! failing criterion is reported, not raised, so the numbers stay visible.

use std::f64::consts::{PI, TAU};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sglab::elliptic::{solve_sg_potential, SolveOptions};
use sglab::inequalities::check_wente;
use sglab::lab::{
    emit_report, parse_config, run_experiment, ExperimentReport, ExperimentSpec, ParsedConfig,
};
use sglab::spectral::{inv_laplacian, laplacian, linf, random_field};
use sglab::transport::{step_rk4, DiagnosticsRecord, Model, SimState};
use sglab::{Error, ScalarField, TorusGrid};

type Outcome = std::result::Result<(bool, String), Error>;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn spec(name: &str) -> ExperimentSpec {
    let path = configs().join(name);
    let text = fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    match parse_config(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display())) {
        ParsedConfig::Experiment(s) => s,
        ParsedConfig::Run(_) => panic!("{} is not an experiment", path.display()),
    }
}

fn check<'a>(r: &'a ExperimentReport, name: &str) -> Option<&'a sglab::lab::Check> {
    r.checks.iter().find(|c| c.name == name)
}

fn checks_pass(r: &ExperimentReport, names: &[&str]) -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for n in names {
        match check(r, n) {
            Some(c) => {
                ok &= c.pass;
                parts.push(format!("{n}: {}", c.detail));
            }
            None => {
                ok = false;
                parts.push(format!("{n}: missing"));
            }
        }
    }
    (ok, parts.join("; "))
}

fn spectral_exactness() -> Outcome {
    let start = Instant::now();
    let grid = TorusGrid::new(128)?;
    let mut worst_mode: f64 = 0.0;
    // FFT round-off leaking into low modes grows like |k|^2 times machine
    // epsilon, which passes 1e-12 near the dealiasing cutoff
    for (p, q) in [
        (1, 0),
        (0, 1),
        (1, 1),
        (3, -2),
        (7, 5),
        (12, -9),
        (20, 13),
        (21, 0),
    ] {
        let f = ScalarField::from_fn(&grid, |x, y| (TAU * (p as f64 * x + q as f64 * y)).cos());
        let k2 = 4.0 * PI * PI * (p * p + q * q) as f64;
        let exact = f.scale(-1.0 / k2);
        let g = inv_laplacian(&f)?;
        worst_mode = worst_mode.max(linf(&g.sub(&exact)?) / linf(&exact));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_round: f64 = 0.0;
    for k in 0..100 {
        let f = random_field(&grid, 1.0 + (k % 4) as f64, None, &mut rng).map(|v| v + 0.3);
        let centred = f.mean_free();
        let back = laplacian(&inv_laplacian(&centred)?);
        worst_round = worst_round.max(linf(&back.sub(&centred)?) / linf(&centred));
    }
    let secs = start.elapsed().as_secs_f64();
    Ok((
        worst_mode <= 1e-12 && worst_round <= 1e-10 && secs < 1.0,
        format!("single-mode rel err {worst_mode:.2e}, round trip {worst_round:.2e} over 100 fields, {secs:.3} s"),
    ))
}

fn monge_ampere() -> Outcome {
    let grid = TorusGrid::new(128)?;
    let rho = ScalarField::from_fn(&grid, |x, y| {
        (TAU * x).cos() * (TAU * y).cos() + 0.5 * (2.0 * TAU * y).cos()
    });
    let (_, rep) = solve_sg_potential(&rho, 0.01, SolveOptions::default())?;
    let fixed_ok = rep.converged && rep.iterations <= 15 && rep.residual <= 1e-10;
    let shear = ScalarField::from_fn(&grid, |_, y| {
        (TAU * y).cos() - 0.4 * (3.0 * TAU * y + 0.7).sin()
    });
    let euler = inv_laplacian(&shear)?;
    let mut worst: f64 = 0.0;
    for eps in [0.001, 0.01, 0.05, 0.1] {
        let (psi, _) = solve_sg_potential(&shear, eps, SolveOptions::default())?;
        worst = worst.max(linf(&psi.sub(&euler)?));
    }
    Ok((
        fixed_ok && worst <= 1e-12,
        format!(
            "eps 0.01: {} iterations, residual {:.2e}; y-only |psi_sg - psi_euler|_inf {worst:.2e}",
            rep.iterations, rep.residual
        ),
    ))
}

fn l2_drift(records: &[DiagnosticsRecord]) -> f64 {
    let l0 = records[0].l2_rho;
    records
        .iter()
        .map(|d| (d.l2_rho - l0).abs() / l0)
        .fold(0.0, f64::max)
}

fn stationarity(stability: &ExperimentReport) -> Outcome {
    let grid = TorusGrid::new(128)?;
    let shear = ScalarField::from_fn(&grid, |_, y| {
        -4.0 * PI * PI * (TAU * y).cos() + 3.0 * (2.0 * TAU * y + 0.3).sin()
    });
    let mut drift: f64 = 0.0;
    for (model, eps) in [(Model::Euler, 0.0), (Model::SGeps, 0.05)] {
        let mut s = SimState::initial(model, eps, &shear)?;
        let dt = s.cfl_limit(0.5).min(0.01);
        for _ in 0..100 {
            s = step_rk4(&s, dt, 0.5)?;
        }
        drift = drift.max(linf(&s.rho.sub(&shear)?));
    }
    let mut cons = l2_drift(&stability.reference);
    for r in &stability.runs {
        if r.diagnostics.is_empty() {
            return Ok((false, format!("eps {} produced no diagnostics", r.eps)));
        }
        cons = cons.max(l2_drift(&r.diagnostics));
    }
    Ok((
        drift <= 1e-10 && cons <= 1e-6,
        format!("shear drift {drift:.2e} after 100 steps; max relative L2 drift {cons:.2e} (Euler and SG to T = 1)"),
    ))
}

fn lifespan(r: &ExperimentReport) -> (bool, String) {
    let names: Vec<String> = std::iter::once("exit_time_monotone".to_string())
        .chain(r.runs.iter().map(|o| format!("riccati_fit_eps_{}", o.eps)))
        .collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let (ok, detail) = checks_pass(r, &refs);
    let finite = r
        .runs
        .iter()
        .all(|o| o.riccati.as_ref().is_some_and(|f| f.c_bound.is_finite()));
    (ok && finite && r.runs.len() == 3, detail)
}

fn suite(r: &ExperimentReport, secs: f64) -> Outcome {
    let (ok, detail) = checks_pass(
        r,
        &[
            "exact_constant_checks",
            "bounded_ratio_checks",
            "checker_errors",
        ],
    );
    let grid = TorusGrid::new(64)?;
    let cc = ScalarField::from_fn(&grid, |x, y| (TAU * x).cos() * (TAU * y).cos());
    let wente = check_wente(&cc)?.ratio;
    let wente_ok = (wente - 1.0 / (8.0 * PI)).abs() <= 1e-10;
    Ok((
        ok && wente_ok && secs <= 300.0,
        format!("{detail}; Wente closed form {wente:.12} vs 1/(8 pi); {secs:.1} s"),
    ))
}

fn ndjson_bytes(dir: &Path) -> std::io::Result<Vec<(PathBuf, Vec<u8>)>> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d)? {
            let p = e?.path();
            if p.is_dir() {
                stack.push(p);
            } else if p.extension().is_some_and(|x| x == "ndjson") {
                out.push((p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p)?));
            }
        }
    }
    out.sort();
    Ok(out)
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| Error::io("<tempdir>", e))?;
    let mut small = spec("wasserstein.json");
    small.base.n = 32;
    small.base.t_final = 0.2;
    let mut ineq = spec("inequalities.json");
    ineq.seeds = vec![7];
    ineq.count = 2;
    let mut compared = 0;
    for (label, s) in [("wasserstein", &small), ("inequalities", &ineq)] {
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let dir = tmp.path().join(format!("{label}_{rep}"));
            emit_report(&run_experiment(s)?, &dir)?;
            outputs.push(ndjson_bytes(&dir).map_err(|e| Error::io(&dir, e))?);
        }
        if outputs[0].is_empty() || outputs[0] != outputs[1] {
            return Ok((
                false,
                format!("{label}: NDJSON outputs differ between runs"),
            ));
        }
        compared += outputs[0].len();
    }
    Ok((
        true,
        format!("{compared} NDJSON files byte-identical across repeated runs"),
    ))
}

fn report(id: usize, title: &str, outcome: Outcome) -> bool {
    let (pass, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
    println!(
        "[{}] {id}. {title}: {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    pass
}

fn timed(s: &ExperimentSpec) -> Result<(ExperimentReport, f64), Error> {
    let start = Instant::now();
    let r = run_experiment(s)?;
    Ok((r, start.elapsed().as_secs_f64()))
}

fn main() {
    let mut passed = 0;
    passed += report(1, "spectral exactness", spectral_exactness()) as usize;
    passed += report(2, "Monge-Ampere solver", monge_ampere()) as usize;

    let stability = timed(&spec("stability.json"));
    passed += report(
        3,
        "stationarity and conservation",
        match &stability {
            Ok((r, _)) => stationarity(r),
            Err(e) => Err(Error::Configuration(e.to_string())),
        },
    ) as usize;
    passed += report(
        4,
        "O(eps) velocity rate",
        stability.map(|(r, secs)| {
            let (ok, d) = checks_pass(&r, &["velocity_rate"]);
            (ok && secs <= 600.0, format!("{d}; {secs:.1} s"))
        }),
    ) as usize;

    passed += report(
        5,
        "O(eps^2) corrector rate",
        timed(&spec("corrector.json"))
            .map(|(r, _)| checks_pass(&r, &["corrector_rate", "elliptic_consistency_closed_form"])),
    ) as usize;

    let wasserstein = timed(&spec("wasserstein.json"));
    passed += report(
        6,
        "O(eps) Wasserstein rate",
        match &wasserstein {
            Ok((r, _)) => Ok(checks_pass(r, &["w2_rate", "sinkhorn_vs_exact"])),
            Err(e) => Err(Error::Configuration(e.to_string())),
        },
    ) as usize;
    passed += report(
        7,
        "Wasserstein Gronwall bound at eps = 0.02",
        wasserstein.map(|(r, _)| checks_pass(&r, &["gronwall_bound_eps_0.02"])),
    ) as usize;

    passed += report(
        8,
        "lifespan",
        timed(&spec("lifespan.json")).map(|(r, _)| lifespan(&r)),
    ) as usize;
    passed += report(
        9,
        "inequality suite",
        timed(&spec("inequalities.json")).and_then(|(r, secs)| suite(&r, secs)),
    ) as usize;
    passed += report(10, "determinism", determinism()) as usize;
    println!("{passed}/10 criteria passed");
}
