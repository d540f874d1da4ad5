//! Files written for a finished run.
//!
//! Every number is rendered as `{:.16e}`, 17 significant digits, which
//! round-trips any `f64` exactly. Only `summary.txt` is free-form.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thermorelax_core::equilibrium::Support;

use crate::config::Experiment;
use crate::scenario::{RunError, RunReport};

pub const TIMESERIES_HEADER: &str = "time,mean_q,var_q,mean_p,var_p,cov_qp,mass,min_rho,lyapunov";

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn timeseries_csv(report: &RunReport) -> String {
    let mut out = String::from(TIMESERIES_HEADER);
    out.push('\n');
    for r in &report.records {
        let cells = [
            num(r.time),
            opt(r.mean_q),
            opt(r.var_q),
            opt(r.mean_p),
            opt(r.var_p),
            opt(r.cov_qp),
            num(r.mass),
            num(r.min_rho),
            num(r.lyapunov),
        ];
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// `density_final.csv`, or `None` when the run has no density.
pub fn density_csv(report: &RunReport) -> Option<String> {
    let rho = report.final_density.as_ref()?;
    let mut out = String::new();
    match rho.support() {
        Support::Line(g) => {
            let axis = if report.config.space == thermorelax_core::relaxation::Space::Momentum {
                "p"
            } else {
                "q"
            };
            let _ = writeln!(out, "{axis},rho");
            for (x, v) in g.nodes().zip(rho.values()) {
                let _ = writeln!(out, "{},{}", num(x), num(*v));
            }
        }
        Support::Plane(g) => {
            out.push_str("q,p,rho\n");
            for (i, q) in g.q.nodes().enumerate() {
                for (j, p) in g.p.nodes().enumerate() {
                    let _ = writeln!(
                        out,
                        "{},{},{}",
                        num(q),
                        num(p),
                        num(rho.values()[g.index(i, j)])
                    );
                }
            }
        }
    }
    Some(out)
}

pub fn response_csv(report: &RunReport) -> String {
    let mut out = String::from("time,y\n");
    for (t, y) in &report.response {
        let _ = writeln!(out, "{},{}", num(*t), num(*y));
    }
    out
}

pub fn sweep_csv(report: &RunReport) -> String {
    let mut out = String::from("beta,z,eigen_variance,formula_variance,relative_error,states\n");
    for r in &report.sweep {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            num(r.beta),
            num(r.z),
            num(r.eigen_variance),
            num(r.formula_variance),
            num(r.relative_error),
            r.states
        );
    }
    out
}

/// Human-readable summary. Wall time is left out so the file stays
/// reproducible.
pub fn summary_text(report: &RunReport) -> String {
    let c = &report.config;
    let mut out = String::new();
    let _ = writeln!(out, "scenario: {}", c.name);
    let _ = writeln!(out, "experiment: {}", c.experiment.name());
    if c.experiment == Experiment::Relaxation {
        let _ = writeln!(out, "space: {}", c.space.name());
        let _ = writeln!(out, "backend: {}", c.backend.name());
        let _ = writeln!(out, "records: {}", report.records.len());
    }
    let _ = writeln!(out, "steps: {}", report.steps);
    let _ = writeln!(out, "status: {}", report.status.name());
    if let Some(f) = &report.failure {
        let _ = writeln!(out, "failure: {f}");
    }
    out.push_str("\n[results]\n");
    for (name, value) in &report.metrics {
        let _ = writeln!(out, "{name} = {}", num(*value));
    }
    out.push_str("\n[config]\n");
    out.push_str(&c.to_toml());
    out
}

fn write(path: PathBuf, contents: &str) -> Result<PathBuf, RunError> {
    fs::write(&path, contents).map_err(|source| RunError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

/// Writes the files selected in `[outputs]` into `directory`, creating it
/// if needed, and returns their paths.
pub fn emit_outputs(report: &RunReport, directory: &Path) -> Result<Vec<PathBuf>, RunError> {
    fs::create_dir_all(directory).map_err(|source| RunError::Io {
        path: directory.to_path_buf(),
        source,
    })?;
    let o = &report.config.outputs;
    let mut written = Vec::new();
    if o.timeseries {
        match report.config.experiment {
            Experiment::Relaxation => written.push(write(
                directory.join("timeseries.csv"),
                &timeseries_csv(report),
            )?),
            Experiment::Response => written.push(write(
                directory.join("response.csv"),
                &response_csv(report),
            )?),
            Experiment::CothSweep => {
                written.push(write(directory.join("sweep.csv"), &sweep_csv(report))?)
            }
            Experiment::Equilibrium => {}
        }
    }
    if o.density {
        if let Some(text) = density_csv(report) {
            written.push(write(directory.join("density_final.csv"), &text)?);
        }
    }
    if o.summary {
        written.push(write(directory.join("summary.txt"), &summary_text(report))?);
    }
    Ok(written)
}
