use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{ExperimentKind, RunConfig};
use super::experiment::{ExperimentReport, RunStatus};
use crate::error::{Error, Result};
use crate::spectral::{save_field, DumpHeader};
use crate::transport::{write_checkpoint, Trajectory};

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn finish(path: &Path, mut w: BufWriter<File>) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes one JSON document per line.
pub fn write_ndjson<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut w = create(path)?;
    for item in items {
        serde_json::to_writer(&mut w, item)
            .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    finish(path, w)
}

fn write_lines(path: &Path, header: &str, rows: &[String]) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "{header}").map_err(|e| Error::io(path, e))?;
    for r in rows {
        writeln!(w, "{r}").map_err(|e| Error::io(path, e))?;
    }
    finish(path, w)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn status_str(s: RunStatus) -> &'static str {
    match s {
        RunStatus::Ok => "ok",
        RunStatus::Excluded => "excluded",
        RunStatus::Failed => "failed",
    }
}

/// Writes the report under `dir` and returns the paths written, in order.
pub fn emit_report(report: &ExperimentReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();

    let path = dir.join("report.json");
    let mut w = create(&path)?;
    serde_json::to_writer_pretty(&mut w, report).map_err(|e| Error::Format(e.to_string()))?;
    w.write_all(b"\n").map_err(|e| Error::io(&path, e))?;
    finish(&path, w)?;
    written.push(path);

    if report.kind == ExperimentKind::Inequalities {
        if let Some(suite) = &report.suite {
            let path = dir.join("suite.ndjson");
            let mut w = create(&path)?;
            suite.write_ndjson(&mut w)?;
            finish(&path, w)?;
            written.push(path);
            let path = dir.join("suite_summary.csv");
            let mut w = create(&path)?;
            suite.write_summary_csv(&mut w)?;
            finish(&path, w)?;
            written.push(path);
        }
        return Ok(written);
    }

    let runs_dir = dir.join("runs");
    if !report.reference.is_empty() {
        let path = runs_dir.join("reference.ndjson");
        write_ndjson(&path, &report.reference)?;
        written.push(path);
    }
    for r in &report.runs {
        let path = runs_dir.join(format!("eps_{}.ndjson", r.eps));
        write_ndjson(&path, &r.diagnostics)?;
        written.push(path);
        if !r.ot.is_empty() {
            let path = runs_dir.join(format!("eps_{}_ot.ndjson", r.eps));
            write_ndjson(&path, &r.ot)?;
            written.push(path);
        }
    }

    let mut rows: Vec<String> = report
        .runs
        .iter()
        .map(|r| {
            format!(
                "{},{},{},{},,,{}",
                r.eps,
                opt(r.sup_velocity_gap),
                opt(r.sup_w2),
                opt(r.exit_time),
                status_str(r.status)
            )
        })
        .collect();
    let check_status = if report.passed() {
        "ok"
    } else {
        "check_failed"
    };
    if report.runs.iter().all(|r| r.status == RunStatus::Failed) {
        rows.push("fit,,,,,,failed".into());
    } else {
        for (label, fit) in [("fit", &report.fit), ("fit_w2", &report.w2_fit)] {
            if let Some(f) = fit {
                rows.push(format!(
                    "{label},,,,{},{},{check_status}",
                    f.slope,
                    opt(f.slope_stderr)
                ));
            } else if label == "fit" {
                rows.push(format!("{label},,,,,,{check_status}"));
            }
        }
    }
    let path = dir.join("summary.csv");
    write_lines(
        &path,
        "eps,sup_velocity_gap,sup_w2,exit_time,slope,slope_stderr,status",
        &rows,
    )?;
    written.push(path);

    let mut gap_rows = Vec::new();
    let mut w2_rows = Vec::new();
    let mut growth_rows = Vec::new();
    for r in &report.runs {
        for d in &r.diagnostics {
            if d.velocity_gap.is_some() {
                gap_rows.push(format!(
                    "{},{},{},{},{}",
                    d.t,
                    r.eps,
                    opt(d.velocity_gap),
                    opt(d.flow_gap),
                    opt(d.hminus1_gap)
                ));
            }
            if d.w2.is_some() {
                w2_rows.push(format!(
                    "{},{},{},{},{}",
                    d.t,
                    r.eps,
                    opt(d.w2),
                    opt(d.gronwall_bound),
                    opt(d.a_t)
                ));
            }
            if report.kind == ExperimentKind::Lifespan {
                growth_rows.push(format!(
                    "{},{},{},{},{}",
                    d.t, r.eps, d.calpha_rho, d.grad_linf_rho, d.grad_margin
                ));
            }
        }
    }
    if !gap_rows.is_empty() {
        let path = dir.join("plot_gap_vs_t.csv");
        write_lines(&path, "t,eps,velocity_gap,flow_gap,hminus1_gap", &gap_rows)?;
        written.push(path);
    }
    if !w2_rows.is_empty() {
        let path = dir.join("plot_w2_vs_t.csv");
        write_lines(&path, "t,eps,w2,gronwall_bound,A_t", &w2_rows)?;
        written.push(path);
    }
    if !growth_rows.is_empty() {
        let path = dir.join("plot_growth_vs_t.csv");
        write_lines(
            &path,
            "t,eps,calpha_rho,grad_linf_rho,grad_margin",
            &growth_rows,
        )?;
        written.push(path);
    }
    let metric_rows: Vec<String> = report
        .runs
        .iter()
        .filter_map(|r| {
            let m = if report.kind == ExperimentKind::Lifespan {
                r.exit_time
            } else {
                r.sup_velocity_gap
            }?;
            Some(format!(
                "{},{},{},{},{}",
                r.eps,
                m,
                r.eps.ln(),
                m.ln(),
                r.in_fit()
            ))
        })
        .collect();
    if !metric_rows.is_empty() {
        let path = dir.join("plot_gap_vs_eps.csv");
        write_lines(&path, "eps,metric,log_eps,log_metric,in_fit", &metric_rows)?;
        written.push(path);
    }
    Ok(written)
}

/// Outputs of a single run: diagnostics stream, final fields and a
/// checkpoint of the final state.
pub fn emit_run(traj: &Trajectory, config: &RunConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let path = dir.join("diagnostics.ndjson");
    write_ndjson(&path, &traj.diagnostics)?;
    written.push(path);
    let path = dir.join("exit.json");
    let text = serde_json::to_string(&traj.exit).map_err(|e| Error::Format(e.to_string()))?;
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    written.push(path);
    let last = traj.last();
    let header = |kind: &str| DumpHeader {
        n: config.n,
        kind: kind.to_string(),
        time: last.time,
        epsilon: Some(last.eps),
    };
    let path = dir.join("rho_final.bin");
    save_field(&path, &last.rho, &header("rho"))?;
    written.push(path);
    let path = dir.join("potential_final.bin");
    save_field(&path, &last.potential, &header("potential"))?;
    written.push(path);
    let ckpt = dir.join("checkpoint");
    write_checkpoint(last, traj.dt_history.len(), &ckpt)?;
    written.push(ckpt);
    Ok(written)
}
