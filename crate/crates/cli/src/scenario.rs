use std::path::PathBuf;
use std::time::{Duration, Instant};

use thermorelax_core::equilibrium::{
    gibbs_density, marginal, mean_variance, phase_space_gibbs, CanonicalEnsemble, DensityField,
    Support,
};
use thermorelax_core::free_energy::{BackendTag, FreeEnergyBackend};
use thermorelax_core::numerics::{Field, Grid1D, Grid2D};
use thermorelax_core::oscillator::{
    fit_decay_time, mean_response, quantum_friction_factor, relaxation_time, stationary_dispersion,
    OscillatorParams,
};
use thermorelax_core::relaxation::{
    evolve, Drive, KineticCoefficients, PhaseBackends, Record, RelaxationError, RelaxationState,
    Schedule, Space,
};
use thermorelax_core::spectrum::{
    discretize_momentum_hamiltonian, discretize_position_hamiltonian, momentum_hamiltonian_for,
    solve_spectrum, HamiltonianMatrix,
};
use thiserror::Error;

use crate::config::{ConfigError, Experiment, Initial, PotentialKind, ScenarioConfig};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {message}")]
    Setup { path: String, message: String },
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn setup(path: &str, err: impl std::fmt::Display) -> RunError {
    RunError::Setup {
        path: path.to_string(),
        message: err.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Completed,
    RejectedStep,
    NanAbort,
}

impl RunStatus {
    pub fn name(self) -> &'static str {
        match self {
            RunStatus::Completed => "completed",
            RunStatus::RejectedStep => "rejected_step",
            RunStatus::NanAbort => "nan_abort",
        }
    }
}

/// One row of a coth sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub beta: f64,
    pub z: f64,
    pub eigen_variance: f64,
    pub formula_variance: f64,
    pub relative_error: f64,
    pub states: usize,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub config: ScenarioConfig,
    pub records: Vec<Record>,
    pub final_density: Option<DensityField>,
    /// `(t, y)` samples of a response run.
    pub response: Vec<(f64, f64)>,
    pub sweep: Vec<SweepRow>,
    /// Named scalar results in a fixed order.
    pub metrics: Vec<(String, f64)>,
    pub steps: u64,
    pub status: RunStatus,
    pub failure: Option<String>,
    pub wall_time: Duration,
}

impl RunReport {
    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| *v)
    }

    fn new(config: &ScenarioConfig) -> Self {
        Self {
            config: config.clone(),
            records: Vec::new(),
            final_density: None,
            response: Vec::new(),
            sweep: Vec::new(),
            metrics: Vec::new(),
            steps: 0,
            status: RunStatus::Completed,
            failure: None,
            wall_time: Duration::ZERO,
        }
    }

    fn push(&mut self, name: &str, value: f64) {
        self.metrics.push((name.to_string(), value));
    }
}

/// Runs one validated scenario. Identical configs give identical reports
/// apart from `wall_time`.
pub fn run_scenario(config: &ScenarioConfig) -> Result<RunReport, RunError> {
    let start = Instant::now();
    let mut report = match config.experiment {
        Experiment::Relaxation => run_relaxation(config)?,
        Experiment::Response => run_response(config)?,
        Experiment::Equilibrium => run_equilibrium(config)?,
        Experiment::CothSweep => run_sweep(config)?,
    };
    report.wall_time = start.elapsed();
    Ok(report)
}

fn oscillator(config: &ScenarioConfig, beta: f64) -> Result<OscillatorParams, RunError> {
    let s = &config.system;
    let friction = config.thermo.friction.unwrap_or(1.0);
    OscillatorParams::new(s.mass, s.omega, s.hbar, friction, beta).map_err(|e| setup("thermo", e))
}

fn position_hamiltonian(
    config: &ScenarioConfig,
    grid: &Grid1D,
) -> Result<HamiltonianMatrix, RunError> {
    let s = &config.system;
    discretize_position_hamiltonian(grid, s.mass, s.hbar, &s.potential_spec())
        .map_err(|e| setup("system", e))
}

fn momentum_hamiltonian(
    config: &ScenarioConfig,
    grid: &Grid1D,
) -> Result<HamiltonianMatrix, RunError> {
    let s = &config.system;
    momentum_hamiltonian_for(grid, s.mass, s.hbar, &s.potential_spec())
        .map_err(|e| setup("system.force", e))
}

fn line_hamiltonian(config: &ScenarioConfig, grid: &Grid1D) -> Result<HamiltonianMatrix, RunError> {
    match config.space {
        Space::Momentum => momentum_hamiltonian(config, grid),
        _ => position_hamiltonian(config, grid),
    }
}

fn line_gibbs(
    config: &ScenarioConfig,
    h: &HamiltonianMatrix,
    beta: f64,
) -> Result<(DensityField, usize), RunError> {
    let ensemble = CanonicalEnsemble::from_hamiltonian(h, beta, config.thermo.truncation)
        .map_err(|e| setup("thermo.truncation", e))?;
    Ok((gibbs_density(&ensemble), ensemble.spectrum().count()))
}

/// Phase-space Gibbs density from the position ensemble and as many
/// momentum states.
fn phase_gibbs(
    config: &ScenarioConfig,
    grid: &Grid2D,
    beta: f64,
) -> Result<(DensityField, DensityField), RunError> {
    let s = &config.system;
    let hq = position_hamiltonian(config, &grid.q)?;
    let ensemble = CanonicalEnsemble::from_hamiltonian(&hq, beta, config.thermo.truncation)
        .map_err(|e| setup("thermo.truncation", e))?;
    let k = ensemble.spectrum().count().min(grid.p.len());
    let hp = discretize_momentum_hamiltonian(&grid.p, s.mass, s.hbar, s.omega)
        .map_err(|e| setup("system", e))?;
    let sp = solve_spectrum(&hp, k).map_err(|e| setup("grid", e))?;
    let reference =
        phase_space_gibbs(ensemble.spectrum(), &sp, beta).map_err(|e| setup("grid", e))?;
    Ok((reference, gibbs_density(&ensemble)))
}

fn classical_energy(
    config: &ScenarioConfig,
    grid: &Grid1D,
    momentum: bool,
) -> Result<Field, RunError> {
    if momentum {
        let m = config.system.mass;
        Ok(grid.sample(|p| p * p / (2.0 * m)))
    } else {
        config
            .system
            .potential_spec()
            .sample(grid)
            .map_err(|e| setup("system", e))
    }
}

fn boltzmann(energy: &[f64], kt: f64, support: Support) -> Result<DensityField, RunError> {
    let e0 = energy.iter().copied().fold(f64::INFINITY, f64::min);
    let values = energy.iter().map(|e| (-(e - e0) / kt).exp()).collect();
    DensityField::normalized(support, values, 0.0).map_err(|e| setup("grid", e))
}

/// Stationary Gaussian variances `(q, p)` of the bohm backend.
fn bohm_variances(config: &ScenarioConfig, kt: f64) -> (f64, f64) {
    let s = &config.system;
    let root = kt + (kt * kt + (s.hbar * s.omega).powi(2)).sqrt();
    (
        root / (2.0 * s.mass * s.omega * s.omega),
        s.mass * root / 2.0,
    )
}

/// The drive and its equilibrium density.
fn build_drive(config: &ScenarioConfig) -> Result<(Drive, DensityField), RunError> {
    let kt = config.temperature().kt();
    let beta = config.temperature().beta();
    let backend_err = |e| setup("space.backend", e);
    if let Some(grid) = config.line_grid() {
        let momentum = config.space == Space::Momentum;
        return Ok(match config.backend {
            BackendTag::Classical => {
                let energy = classical_energy(config, &grid, momentum)?;
                let eq = boltzmann(energy.values(), kt, Support::Line(grid))?;
                (
                    Drive::Line(FreeEnergyBackend::classical(energy, kt).map_err(backend_err)?),
                    eq,
                )
            }
            BackendTag::Bohm => {
                let h = line_hamiltonian(config, &grid)?;
                let eq = bohm_line_equilibrium(config, &grid, kt)?;
                (
                    Drive::Line(FreeEnergyBackend::bohm(h, kt).map_err(backend_err)?),
                    eq,
                )
            }
            BackendTag::Canonical => {
                let (eq, _) = line_gibbs(config, &line_hamiltonian(config, &grid)?, beta)?;
                (
                    Drive::Line(FreeEnergyBackend::canonical(eq.clone(), kt).map_err(backend_err)?),
                    eq,
                )
            }
        });
    }
    let grid = config
        .plane_grid()
        .expect("relaxation configs carry a grid");
    let s = &config.system;
    let (backends, eq) = match config.backend {
        BackendTag::Classical => {
            let eq_energy = classical_energy(config, &grid.q, false)?;
            let ep = classical_energy(config, &grid.p, true)?;
            let total: Vec<f64> = eq_energy
                .values()
                .iter()
                .flat_map(|u| ep.values().iter().map(move |k| u + k))
                .collect();
            let eq = boltzmann(&total, kt, Support::Plane(grid))?;
            (
                PhaseBackends::new(
                    FreeEnergyBackend::classical(eq_energy, kt).map_err(backend_err)?,
                    FreeEnergyBackend::classical(ep, kt).map_err(backend_err)?,
                ),
                eq,
            )
        }
        BackendTag::Bohm => {
            if s.potential == PotentialKind::Free {
                return Err(setup(
                    "system.potential",
                    "bohm phase-space runs need a harmonic potential",
                ));
            }
            let hq = position_hamiltonian(config, &grid.q)?;
            let hp = discretize_momentum_hamiltonian(&grid.p, s.mass, s.hbar, s.omega)
                .map_err(|e| setup("system", e))?;
            let (vq, vp) = bohm_variances(config, kt);
            let eq = DensityField::gaussian_2d(grid, (0.0, vq), (0.0, vp))
                .map_err(|e| setup("grid", e))?;
            (
                PhaseBackends::new(
                    FreeEnergyBackend::bohm(hq, kt).map_err(backend_err)?,
                    FreeEnergyBackend::bohm(hp, kt).map_err(backend_err)?,
                ),
                eq,
            )
        }
        BackendTag::Canonical => {
            let (reference, _) = phase_gibbs(config, &grid, beta)?;
            (
                PhaseBackends::new(
                    FreeEnergyBackend::canonical(reference.clone(), kt).map_err(backend_err)?,
                    FreeEnergyBackend::canonical(reference.clone(), kt).map_err(backend_err)?,
                ),
                reference,
            )
        }
    };
    Ok((Drive::Phase(backends.with_advection(config.advection)), eq))
}

fn bohm_line_equilibrium(
    config: &ScenarioConfig,
    grid: &Grid1D,
    kt: f64,
) -> Result<DensityField, RunError> {
    let s = &config.system;
    if s.potential == PotentialKind::Free {
        return Err(setup(
            "system.potential",
            "bohm runs need a harmonic potential",
        ));
    }
    let (vq, vp) = bohm_variances(config, kt);
    let (mean, var) = match config.space {
        Space::Momentum => (0.0, vp),
        _ => (s.force / (s.mass * s.omega * s.omega), vq),
    };
    DensityField::gaussian(*grid, mean, var).map_err(|e| setup("grid", e))
}

/// Value of `values` at `x`, interpolating `ln rho` linearly between nodes
/// (exact up to a constant factor for Gaussians); zero outside the grid.
fn sample_shifted(values: &[f64], grid: &Grid1D, x: f64) -> f64 {
    let s = (x - grid.lo()) / grid.spacing();
    if s < 0.0 || s > (grid.len() - 1) as f64 {
        return 0.0;
    }
    let i = (s.floor() as usize).min(grid.len() - 2);
    let t = s - i as f64;
    let (a, b) = (values[i], values[i + 1]);
    if t == 0.0 {
        a
    } else if t == 1.0 {
        b
    } else if a > 0.0 && b > 0.0 {
        ((1.0 - t) * a.ln() + t * b.ln()).exp()
    } else {
        0.0
    }
}

fn initial_density(
    config: &ScenarioConfig,
    equilibrium: &DensityField,
) -> Result<DensityField, RunError> {
    let path = "stepping.initial";
    match (config.stepping.initial, *equilibrium.support()) {
        (Initial::Gaussian { mean, variance, .. }, Support::Line(g)) => {
            DensityField::gaussian(g, mean, variance).map_err(|e| setup(path, e))
        }
        (
            Initial::Gaussian {
                mean,
                variance,
                mean_p,
                variance_p,
            },
            Support::Plane(g),
        ) => DensityField::gaussian_2d(g, (mean, variance), (mean_p, variance_p))
            .map_err(|e| setup(path, e)),
        (Initial::ShiftedGibbs { shift }, Support::Line(g)) => {
            let (_, var) = mean_variance(equilibrium);
            let delta = shift * var.sqrt();
            let v = equilibrium.values();
            let values = g
                .nodes()
                .map(|x| sample_shifted(v, &g, x - delta))
                .collect();
            DensityField::normalized(Support::Line(g), values, 0.0).map_err(|e| setup(path, e))
        }
        (Initial::ShiftedGibbs { shift }, Support::Plane(g)) => {
            let q_marginal = marginal(equilibrium, true).expect("plane density");
            let (_, var) = mean_variance(&q_marginal);
            let delta = shift * var.sqrt();
            let np = g.p.len();
            let v = equilibrium.values();
            let mut values = vec![0.0; g.len()];
            for j in 0..np {
                let column: Vec<f64> = (0..g.q.len()).map(|i| v[i * np + j]).collect();
                for (i, q) in g.q.nodes().enumerate() {
                    values[i * np + j] = sample_shifted(&column, &g.q, q - delta);
                }
            }
            DensityField::normalized(Support::Plane(g), values, 0.0).map_err(|e| setup(path, e))
        }
    }
}

/// Target second moments `(<q^2>, <p^2>)` of the equilibrium the backend
/// relaxes to, or `None` on unconfined axes.
fn target_moments(config: &ScenarioConfig) -> (Option<f64>, Option<f64>) {
    let s = &config.system;
    let kt = config.temperature().kt();
    let centre = s.force / (s.mass * s.omega * s.omega);
    let (vq, vp) = match config.backend {
        BackendTag::Classical => (kt / (s.mass * s.omega * s.omega), s.mass * kt),
        BackendTag::Bohm => bohm_variances(config, kt),
        BackendTag::Canonical => {
            let p = OscillatorParams::new(s.mass, s.omega, s.hbar, 1.0, 1.0 / kt);
            let vq = p.map(|p| stationary_dispersion(&p)).unwrap_or(f64::NAN);
            (vq, vq * (s.mass * s.omega).powi(2))
        }
    };
    let q2 = (s.potential == PotentialKind::Harmonic).then_some(vq + centre * centre);
    let p2 = match (s.potential, config.backend) {
        (PotentialKind::Harmonic, _) | (_, BackendTag::Classical) => Some(vp),
        _ => None,
    };
    (q2, p2)
}

fn status_of(err: &RelaxationError) -> RunStatus {
    match err {
        RelaxationError::NanDetected => RunStatus::NanAbort,
        _ => RunStatus::RejectedStep,
    }
}

/// Everything a relaxation run starts from.
pub struct Prepared {
    pub drive: Drive,
    pub coefficients: KineticCoefficients,
    pub initial: RelaxationState,
    pub equilibrium: DensityField,
}

/// Builds the drive, kinetic coefficients and initial state of a
/// relaxation config without stepping.
pub fn prepare_relaxation(config: &ScenarioConfig) -> Result<Prepared, RunError> {
    if config.experiment != Experiment::Relaxation {
        return Err(setup("experiment", "not a relaxation scenario"));
    }
    let (drive, equilibrium) = build_drive(config)?;
    let rho = initial_density(config, &equilibrium)?;
    let friction = config
        .thermo
        .friction
        .expect("relaxation configs carry a friction");
    let mut coefficients =
        KineticCoefficients::new(friction).map_err(|e| setup("thermo.friction", e))?;
    if let Some(mobility) = config.thermo.position_mobility {
        coefficients = coefficients
            .with_position_mobility(mobility)
            .map_err(|e| setup("thermo.position_mobility", e))?;
    }
    let initial = RelaxationState::new(rho, config.space).map_err(|e| setup("space.kind", e))?;
    Ok(Prepared {
        drive,
        coefficients,
        initial,
        equilibrium,
    })
}

fn run_relaxation(config: &ScenarioConfig) -> Result<RunReport, RunError> {
    let Prepared {
        drive,
        coefficients: l,
        initial: state,
        ..
    } = prepare_relaxation(config)?;
    let schedule = Schedule::new(config.stepping.t_end, config.stepping.stride)
        .with_safety(config.stepping.safety);
    let mut report = RunReport::new(config);
    let trajectory = match evolve(state, &drive, &l, &schedule) {
        Ok(t) => t,
        Err(failure) => {
            if failure.partial.records.is_empty() {
                return Err(setup("stepping", &failure));
            }
            report.status = status_of(&failure.source);
            report.failure = Some(failure.to_string());
            failure.partial
        }
    };
    report.steps = trajectory.steps();
    report.records = trajectory.records;
    let last = *report
        .records
        .last()
        .expect("evolve records the initial state");
    let final_density = trajectory.final_state.into_density();

    report.push("final_time", final_density.time());
    report.push("steps", report.steps as f64);
    let (tq2, tp2) = target_moments(config);
    let second = |mean: Option<f64>, var: Option<f64>| Some(var? + mean?.powi(2));
    if let Some(m) = last.mean_q {
        report.push("mean_q", m);
        report.push("var_q", last.var_q.unwrap_or(f64::NAN));
        let q2 = second(last.mean_q, last.var_q).unwrap_or(f64::NAN);
        report.push("q2", q2);
        if let Some(t) = tq2 {
            report.push("target_q2", t);
            report.push("q2_relative_error", (q2 - t).abs() / t);
        }
    }
    if let Some(m) = last.mean_p {
        report.push("mean_p", m);
        report.push("var_p", last.var_p.unwrap_or(f64::NAN));
        let p2 = second(last.mean_p, last.var_p).unwrap_or(f64::NAN);
        report.push("p2", p2);
        if let Some(t) = tp2 {
            report.push("target_p2", t);
            report.push("p2_relative_error", (p2 - t).abs() / t);
        }
    }
    if let Some(c) = last.cov_qp {
        report.push("cov_qp", c);
    }
    report.push("lyapunov_final", last.lyapunov);
    let rise = report
        .records
        .windows(2)
        .map(|w| w[1].lyapunov - w[0].lyapunov)
        .fold(f64::NEG_INFINITY, f64::max);
    report.push(
        "lyapunov_max_rise",
        if rise.is_finite() { rise } else { 0.0 },
    );
    let mass_err = report
        .records
        .iter()
        .map(|r| (r.mass - 1.0).abs())
        .fold(0.0, f64::max);
    report.push("max_mass_error", mass_err);
    let min_ratio = report
        .records
        .iter()
        .map(|r| r.min_rho / r.max_rho)
        .fold(f64::INFINITY, f64::min);
    report.push("min_rho_ratio", min_ratio);
    report.final_density = Some(final_density);
    Ok(report)
}

fn run_response(config: &ScenarioConfig) -> Result<RunReport, RunError> {
    let params = oscillator(config, config.temperature().beta())?;
    let s = &config.system;
    let force = s.force;
    let stiffness = s.mass * s.omega * s.omega;
    let y_eq = force / stiffness;
    let st = &config.stepping;
    let series = mean_response(&params, |_| force, st.y0, st.t_end, st.dt)
        .map_err(|e| setup("stepping", e))?;
    let sign = if st.y0 >= y_eq { 1.0 } else { -1.0 };
    let deviation: Vec<(f64, f64)> = series
        .iter()
        .map(|&(t, y)| (t, sign * (y - y_eq)))
        .collect();
    let fitted = fit_decay_time(&deviation).ok_or_else(|| {
        setup(
            "stepping.y0",
            "response does not decay; y0 equals the static displacement",
        )
    })?;
    let mut report = RunReport::new(config);
    report.steps = (series.len() - 1) as u64;
    report.push("z", params.z());
    report.push("friction_factor", quantum_friction_factor(&params));
    report.push("relaxation_time", relaxation_time(&params));
    report.push("fitted_decay_time", fitted);
    report.push(
        "decay_time_error",
        (fitted - relaxation_time(&params)).abs(),
    );
    report.push("classical_relaxation_time", params.friction() / stiffness);
    report.push("static_displacement", y_eq);
    report.push("y_final", series.last().map_or(f64::NAN, |p| p.1));
    report.response = series;
    Ok(report)
}

fn run_equilibrium(config: &ScenarioConfig) -> Result<RunReport, RunError> {
    let beta = config.temperature().beta();
    let params = oscillator(config, beta)?;
    let var_q = stationary_dispersion(&params);
    let s = &config.system;
    let var_p = var_q * (s.mass * s.omega).powi(2);
    let mut report = RunReport::new(config);
    if let Some(grid) = config.line_grid() {
        let (rho, states) = line_gibbs(config, &line_hamiltonian(config, &grid)?, beta)?;
        let (mean, var) = mean_variance(&rho);
        let (name, formula) = match config.space {
            Space::Momentum => ("p", var_p),
            _ => ("q", var_q),
        };
        report.push("states", states as f64);
        report.push(&format!("mean_{name}"), mean);
        report.push(&format!("var_{name}"), var);
        report.push(&format!("formula_var_{name}"), formula);
        report.push("relative_error", (var - formula).abs() / formula);
        report.final_density = Some(rho);
        return Ok(report);
    }
    let grid = config
        .plane_grid()
        .expect("equilibrium configs carry a grid");
    let (rho, line_q) = phase_gibbs(config, &grid, beta)?;
    let mq = marginal(&rho, true).expect("plane density");
    let mp = marginal(&rho, false).expect("plane density");
    let hp = discretize_momentum_hamiltonian(&grid.p, s.mass, s.hbar, s.omega)
        .map_err(|e| setup("system", e))?;
    let (line_p, _) = line_gibbs(config, &hp, beta)?;
    let max_gap = |a: &DensityField, b: &DensityField| {
        a.values()
            .iter()
            .zip(b.values())
            .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
    };
    let (mean_q, vq) = mean_variance(&mq);
    let (mean_p, vp) = mean_variance(&mp);
    let q2 = vq + mean_q * mean_q;
    let p2 = vp + mean_p * mean_p;
    let floor = s.hbar * s.hbar / 4.0;
    report.push("q2", q2);
    report.push("p2", p2);
    report.push("formula_var_q", var_q);
    report.push("formula_var_p", var_p);
    report.push("uncertainty_product", q2 * p2);
    report.push("zero_point_product", floor);
    report.push("product_relative_error", (q2 * p2 - floor).abs() / floor);
    report.push("max_q_marginal_error", max_gap(&mq, &line_q));
    report.push("max_p_marginal_error", max_gap(&mp, &line_p));
    report.final_density = Some(rho);
    Ok(report)
}

fn run_sweep(config: &ScenarioConfig) -> Result<RunReport, RunError> {
    let grid = config.line_grid().expect("sweeps carry a line grid");
    let h = position_hamiltonian(config, &grid)?;
    let mut report = RunReport::new(config);
    let mut worst = 0.0_f64;
    for &beta in &config.thermo.betas {
        let (rho, states) = line_gibbs(config, &h, beta)?;
        let (_, var) = mean_variance(&rho);
        let params = oscillator(config, beta)?;
        let formula = stationary_dispersion(&params);
        let relative_error = (var - formula).abs() / formula;
        worst = worst.max(relative_error);
        report.sweep.push(SweepRow {
            beta,
            z: params.z(),
            eigen_variance: var,
            formula_variance: formula,
            relative_error,
            states,
        });
    }
    report.push("max_relative_error", worst);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn relaxation(extra: &str) -> ScenarioConfig {
        let text = format!(
            r#"
[space]
kind = "position"
backend = "classical"
[thermo]
kbt = 0.5
friction = 1.0
[grid]
lo = -8
hi = 8
n = 101
[stepping]
t_end = 0.5
stride = 10
{extra}
"#
        );
        parse_config(&text).unwrap()
    }

    #[test]
    fn shifted_start_moves_by_one_sigma() {
        let cfg = relaxation("");
        let (_, eq) = build_drive(&cfg).unwrap();
        let rho = initial_density(&cfg, &eq).unwrap();
        let (m, v) = mean_variance(&rho);
        assert!((m - 0.5f64.sqrt()).abs() < 1e-3, "{m}");
        assert!((v - 0.5).abs() < 1e-3, "{v}");
    }

    #[test]
    fn records_follow_stride_and_end_at_t_end() {
        let report = run_scenario(&relaxation("")).unwrap();
        assert_eq!(report.status, RunStatus::Completed);
        assert_eq!(report.records.len() as u64, report.steps.div_ceil(10) + 1);
        assert!(report.metric("max_mass_error").unwrap() < 1e-9);
    }

    #[test]
    fn reports_are_deterministic() {
        let cfg = relaxation("initial = \"gaussian\"\nmean = 1.0\nvariance = 0.3");
        let a = run_scenario(&cfg).unwrap();
        let b = run_scenario(&cfg).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.final_density, b.final_density);
        assert_eq!(a.metrics, b.metrics);
    }

    #[test]
    fn interpolated_shift_is_exact_on_nodes() {
        use thermorelax_core::numerics::build_grid;
        let g = build_grid(0.0, 4.0, 5).unwrap();
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(sample_shifted(&v, &g, 2.0), 3.0);
        assert!((sample_shifted(&v, &g, 2.5) - 12f64.sqrt()).abs() < 1e-12);
        assert_eq!(
            sample_shifted(&[0.0, 1.0, 2.0], &build_grid(0.0, 1.0, 3).unwrap(), 0.2),
            0.0
        );
        assert_eq!(sample_shifted(&v, &g, 4.0), 5.0);
        assert_eq!(sample_shifted(&v, &g, -0.1), 0.0);
    }

    #[test]
    fn response_reports_coth_time() {
        let text =
            "experiment = \"response\"\n[thermo]\nbeta = 2\nfriction = 1\n[stepping]\nt_end = 5\n";
        let report = run_scenario(&parse_config(text).unwrap()).unwrap();
        assert!((report.metric("fitted_decay_time").unwrap() - 1.313035).abs() < 1e-4);
    }

    #[test]
    fn sweep_rows_follow_betas() {
        let text = "experiment = \"coth_sweep\"\n[thermo]\nbetas = [1, 2]\n[grid]\nlo = -12\nhi = 12\nn = 601\n";
        let report = run_scenario(&parse_config(text).unwrap()).unwrap();
        assert_eq!(report.sweep.len(), 2);
        assert!(report.metric("max_relative_error").unwrap() < 0.005);
    }
}
