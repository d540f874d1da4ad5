//! Library-level runs: determinism, file formats and physical sanity.

use std::fs;

use thermorelax_cli::output::{density_csv, timeseries_csv};
use thermorelax_cli::presets::{preset_config, PRESETS};
use thermorelax_cli::{emit_outputs, parse_config, run_scenario, RunStatus};

fn short(kind: &str, backend: &str, grid: &str) -> String {
    format!(
        r#"
name = "short"
experiment = "relaxation"
[space]
kind = "{kind}"
backend = "{backend}"
[thermo]
kbt = 0.5
friction = 1.0
[grid]
{grid}
[stepping]
t_end = 0.2
stride = 4
"#
    )
}

#[test]
fn reruns_are_byte_identical() {
    let cfg = parse_config(&short(
        "position",
        "classical",
        "lo = -8.0\nhi = 8.0\nn = 101",
    ))
    .unwrap();
    let a = run_scenario(&cfg).unwrap();
    let b = run_scenario(&cfg).unwrap();
    assert_eq!(timeseries_csv(&a), timeseries_csv(&b));
    assert_eq!(density_csv(&a), density_csv(&b));
    let dir = tempfile::tempdir().unwrap();
    let (x, y) = (dir.path().join("x"), dir.path().join("y"));
    emit_outputs(&a, &x).unwrap();
    emit_outputs(&b, &y).unwrap();
    for file in ["timeseries.csv", "density_final.csv", "summary.txt"] {
        assert_eq!(
            fs::read(x.join(file)).unwrap(),
            fs::read(y.join(file)).unwrap(),
            "{file}"
        );
    }
}

const COARSE_PLANE: &str = "q_lo = -6.0\nq_hi = 6.0\nq_n = 41\np_lo = -6.0\np_hi = 6.0\np_n = 41";

#[test]
fn upwind_phase_space_run_keeps_mass_and_positivity() {
    let text = short("phase", "classical", COARSE_PLANE).replace(
        "backend = \"classical\"",
        "backend = \"classical\"\nadvection = \"upwind\"",
    );
    let cfg = parse_config(&text).unwrap();
    let report = run_scenario(&cfg).unwrap();
    assert_eq!(report.status, RunStatus::Completed);
    assert!(report.metric("max_mass_error").unwrap() < 1e-9);
    assert!(report.metric("min_rho_ratio").unwrap() >= -1e-12);
    assert!(report.metric("lyapunov_max_rise").unwrap() <= 1e-10);
    let csv = density_csv(&report).unwrap();
    assert_eq!(csv.lines().next(), Some("q,p,rho"));
    assert_eq!(csv.lines().count(), 41 * 41 + 1);
}

#[test]
fn centered_flux_on_a_coarse_plane_is_rejected_not_clipped() {
    let cfg = parse_config(&short("phase", "classical", COARSE_PLANE)).unwrap();
    let report = run_scenario(&cfg).unwrap();
    assert_eq!(report.status, RunStatus::RejectedStep);
    assert!(report.failure.as_deref().unwrap().contains("unstable dt"));
    assert!(report.metric("final_time").unwrap() < 0.2);
    let rho = report.final_density.unwrap();
    let max = rho.values().iter().copied().fold(0.0, f64::max);
    assert!(rho.values().iter().all(|v| *v >= -1e-12 * max));
}

#[test]
fn momentum_run_labels_its_axis() {
    let cfg = parse_config(&short(
        "momentum",
        "classical",
        "lo = -8.0\nhi = 8.0\nn = 81",
    ))
    .unwrap();
    let report = run_scenario(&cfg).unwrap();
    assert_eq!(density_csv(&report).unwrap().lines().next(), Some("p,rho"));
    assert!(
        timeseries_csv(&report)
            .lines()
            .nth(1)
            .unwrap()
            .split(',')
            .nth(1)
            == Some("")
    );
}

#[test]
fn presets_round_trip_through_their_own_toml() {
    for p in &PRESETS {
        let cfg = preset_config(p.name).unwrap();
        let again = parse_config(&cfg.to_toml()).unwrap();
        assert_eq!(again.to_toml(), cfg.to_toml(), "{}", p.name);
    }
}

#[test]
fn equilibrium_preset_reports_uncertainty_product() {
    let report = run_scenario(&preset_config("eq10_equilibrium").unwrap()).unwrap();
    let product = report.metric("uncertainty_product").unwrap();
    assert!((product - 0.25).abs() < 0.0025, "{product}");
}
