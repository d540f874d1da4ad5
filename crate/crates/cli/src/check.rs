//! The acceptance suite behind `--check`.
//!
//! Every criterion is a list of measurements, each with its own target and
//! tolerance. Runs are written below the output directory (one folder per
//! run) together with `check.csv`, so two `--check` invocations can be
//! compared byte for byte.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use thermorelax_core::equilibrium::{DensityField, Support};
use thermorelax_core::free_energy::FreeEnergyBackend;
use thermorelax_core::numerics::{build_grid, Grid1D, Grid2D};
use thermorelax_core::oscillator::{stationary_dispersion, OscillatorParams};
use thermorelax_core::relaxation::{
    drift_diffusion_rate, drift_diffusion_step, lyapunov_functional, phase_space_rates, stable_dt,
    Drive, KineticCoefficients, RelaxationError, RelaxationState, Space,
};
use thermorelax_core::spectrum::{discretize_position_hamiltonian, solve_spectrum, PotentialSpec};
use toml::{Table, Value};

use crate::config::{parse_config, ScenarioConfig};
use crate::output::{emit_outputs, num};
use crate::presets::find_preset;
use crate::scenario::{prepare_relaxation, run_scenario, RunError, RunReport, RunStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tolerance {
    /// `|value - target| <= tol`
    Absolute,
    /// `|value - target| <= tol |target|`
    Relative,
    /// `value <= tol`; the target is unused.
    AtMost,
    /// `value >= tol`; the target is unused.
    AtLeast,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub name: String,
    pub value: f64,
    pub target: f64,
    pub tolerance: f64,
    pub kind: Tolerance,
}

impl Measurement {
    pub fn pass(&self) -> bool {
        let gap = (self.value - self.target).abs();
        match self.kind {
            Tolerance::Absolute => gap <= self.tolerance,
            Tolerance::Relative => gap <= self.tolerance * self.target.abs(),
            Tolerance::AtMost => self.value <= self.tolerance,
            Tolerance::AtLeast => self.value >= self.tolerance,
        }
    }

    fn describe(&self) -> String {
        match self.kind {
            Tolerance::Absolute => format!(
                "{} = {:.6e} (target {:.6e} +- {:e})",
                self.name, self.value, self.target, self.tolerance
            ),
            Tolerance::Relative => format!(
                "{} = {:.6e} (target {:.6e} within {}%)",
                self.name,
                self.value,
                self.target,
                100.0 * self.tolerance
            ),
            Tolerance::AtMost => format!(
                "{} = {:.3e} (<= {:e})",
                self.name, self.value, self.tolerance
            ),
            Tolerance::AtLeast => format!(
                "{} = {:.3e} (>= {:e})",
                self.name, self.value, self.tolerance
            ),
        }
    }
}

fn m(name: &str, value: f64, target: f64, tolerance: f64, kind: Tolerance) -> Measurement {
    Measurement {
        name: name.to_string(),
        value,
        target,
        tolerance,
        kind,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionResult {
    pub id: u32,
    pub title: &'static str,
    pub measurements: Vec<Measurement>,
    /// Problems that are not numbers, such as a run that did not finish.
    pub errors: Vec<String>,
}

impl CriterionResult {
    fn new(id: u32, title: &'static str) -> Self {
        Self {
            id,
            title,
            measurements: Vec::new(),
            errors: Vec::new(),
        }
    }

    pub fn pass(&self) -> bool {
        self.errors.is_empty()
            && !self.measurements.is_empty()
            && self.measurements.iter().all(Measurement::pass)
    }

    /// `PASS  3  title: detail` with the worst measurement as detail.
    pub fn line(&self) -> String {
        let verdict = if self.pass() { "PASS" } else { "FAIL" };
        let detail = if let Some(e) = self.errors.first() {
            e.clone()
        } else if let Some(bad) = self.measurements.iter().find(|x| !x.pass()) {
            bad.describe()
        } else {
            self.measurements
                .iter()
                .map(Measurement::describe)
                .collect::<Vec<_>>()
                .join("; ")
        };
        format!("{verdict} {:>2}  {}: {detail}", self.id, self.title)
    }

    fn push(&mut self, measurement: Measurement) {
        self.measurements.push(measurement);
    }

    fn metric(&mut self, report: &Result<&RunReport, String>, label: &str, metric: &str) -> f64 {
        match report.as_ref().map(|r| r.metric(metric)) {
            Ok(Some(v)) => v,
            Ok(None) => {
                self.errors.push(format!("{label}: no {metric}"));
                f64::NAN
            }
            Err(e) => {
                self.errors.push(format!("{label}: {e}"));
                f64::NAN
            }
        }
    }
}

/// Copy of a preset with some keys replaced, parsed through the normal
/// validation.
pub fn variant(preset: &str, name: &str, edits: &[(&str, &str, Value)]) -> ScenarioConfig {
    let text = find_preset(preset)
        .unwrap_or_else(|| panic!("no preset {preset}"))
        .text;
    let mut table: Table = text.parse().expect("presets are valid TOML");
    table.insert("name".into(), Value::String(name.into()));
    for (section, key, value) in edits {
        table
            .entry(section.to_string())
            .or_insert_with(|| Value::Table(Table::new()))
            .as_table_mut()
            .expect("section is a table")
            .insert(key.to_string(), value.clone());
    }
    let text = toml::to_string(&table).expect("tables serialize");
    parse_config(&text).unwrap_or_else(|e| panic!("variant {name} is invalid: {e}"))
}

fn f(x: f64) -> Value {
    Value::Float(x)
}

/// The runs behind criteria 2 to 11, in output order.
pub fn check_runs() -> Vec<ScenarioConfig> {
    let preset = |name| variant(name, name, &[]);
    vec![
        preset("coth_sweep"),
        preset("eq6_ou"),
        variant("eq6_ou", "eq6_ou_t1", &[("stepping", "t_end", f(1.0))]),
        preset("eq7_smoluchowski"),
        variant(
            "eq7_smoluchowski",
            "eq7_canonical_beta2",
            &[
                ("space", "backend", Value::String("canonical".into())),
                ("thermo", "kbt", f(0.5)),
            ],
        ),
        variant(
            "eq7_smoluchowski",
            "eq7_bohm",
            &[
                ("space", "backend", Value::String("bohm".into())),
                ("grid", "n", Value::Integer(161)),
                ("stepping", "t_end", f(12.0)),
                ("stepping", "stride", Value::Integer(1000)),
            ],
        ),
        preset("eq8_response"),
        variant(
            "eq8_response",
            "eq8_classical",
            &[("thermo", "beta", f(1e-7))],
        ),
        preset("eq9_phase"),
        preset("eq10_equilibrium"),
        preset("eq11_kramers"),
    ]
}

/// Runs that criterion 12 repeats.
const REPEATED: [&str; 3] = ["eq6_ou_t1", "eq7_smoluchowski", "eq8_response"];

fn run_all(configs: &[ScenarioConfig]) -> Vec<Result<RunReport, RunError>> {
    std::thread::scope(|s| {
        let handles: Vec<_> = configs
            .iter()
            .map(|c| s.spawn(move || run_scenario(c)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("run thread panicked"))
            .collect()
    })
}

fn csv_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    if let Ok(entries) = fs::read_dir(dir) {
        for entry in entries.flatten() {
            let path = entry.path();
            if path.extension().is_some_and(|e| e == "csv") {
                if let Ok(bytes) = fs::read(&path) {
                    out.insert(entry.file_name().to_string_lossy().into_owned(), bytes);
                }
            }
        }
    }
    out
}

/// Runs the suite, writing run outputs and `check.csv` below `out`.
pub fn run_checks(out: &Path) -> Result<Vec<CriterionResult>, RunError> {
    let configs = check_runs();
    let results = run_all(&configs);
    let mut reports: BTreeMap<String, RunReport> = BTreeMap::new();
    let mut failures: BTreeMap<String, String> = BTreeMap::new();
    for (config, result) in configs.iter().zip(results) {
        match result {
            Ok(report) => {
                emit_outputs(&report, &out.join(&config.name))?;
                reports.insert(config.name.clone(), report);
            }
            Err(e) => {
                failures.insert(config.name.clone(), e.to_string());
            }
        }
    }
    let get = |label: &str| -> Result<&RunReport, String> {
        reports.get(label).ok_or_else(|| {
            failures
                .get(label)
                .cloned()
                .unwrap_or_else(|| "not run".into())
        })
    };
    let mut all = Vec::new();

    all.push(eigen_levels());

    let mut c = CriterionResult::new(2, "coth dispersion of the eigen-expansion");
    if let Ok(r) = get("coth_sweep") {
        for row in &r.sweep {
            c.push(m(
                &format!("var(beta={})", row.beta),
                row.eigen_variance,
                row.formula_variance,
                0.005,
                Tolerance::Relative,
            ));
        }
        match r.sweep.iter().find(|row| row.beta == 2.0) {
            Some(row) => c.push(m(
                "var(beta=2)",
                row.eigen_variance,
                0.656518,
                0.005,
                Tolerance::Relative,
            )),
            None => c.errors.push("sweep has no beta = 2 row".into()),
        }
    }
    c.push(m(
        "formula(beta=2)",
        formula_variance(2.0),
        0.656518,
        5e-7,
        Tolerance::Absolute,
    ));
    all.push(c);

    let mut c = CriterionResult::new(3, "momentum-space OU relaxation");
    let mean = c.metric(&get("eq6_ou_t1"), "eq6_ou_t1", "mean_p");
    c.push(m(
        "mean_p(t=1)",
        mean,
        2.0 * (-1.0f64).exp(),
        0.01,
        Tolerance::Relative,
    ));
    let var = c.metric(&get("eq6_ou"), "eq6_ou", "var_p");
    c.push(m("var_p(t=20)", var, 1.0, 0.01, Tolerance::Relative));
    all.push(c);

    let mut c = CriterionResult::new(4, "overdamped relaxation");
    let var = c.metric(&get("eq7_smoluchowski"), "eq7_smoluchowski", "var_q");
    c.push(m("var_q", var, 0.5, 0.01, Tolerance::Relative));
    all.push(c);

    let mut c = CriterionResult::new(5, "classical phase-space relaxation");
    let r = get("eq11_kramers");
    let p2 = c.metric(&r, "eq11_kramers", "p2");
    let q2 = c.metric(&r, "eq11_kramers", "q2");
    let cov = c.metric(&r, "eq11_kramers", "cov_qp");
    c.push(m("<p^2>", p2, 0.5, 0.02, Tolerance::Relative));
    c.push(m("<q^2>", q2, 0.5, 0.02, Tolerance::Relative));
    c.push(m("|<qp>|", cov.abs(), 0.0, 0.02, Tolerance::AtMost));
    all.push(c);

    all.push(phase_reduction(get("eq11_kramers").ok()));

    let mut c = CriterionResult::new(7, "phase-space Gibbs density");
    let r = get("eq10_equilibrium");
    let gap = c.metric(&r, "eq10_equilibrium", "max_q_marginal_error");
    let product = c.metric(&r, "eq10_equilibrium", "uncertainty_product");
    c.push(m(
        "max |q marginal - line Gibbs|",
        gap,
        0.0,
        1e-6,
        Tolerance::AtMost,
    ));
    c.push(m("<q^2><p^2>", product, 0.25, 0.01, Tolerance::Relative));
    all.push(c);

    let mut c = CriterionResult::new(8, "quantum friction decay time");
    let fitted = c.metric(&get("eq8_response"), "eq8_response", "fitted_decay_time");
    let formula = c.metric(&get("eq8_response"), "eq8_response", "relaxation_time");
    c.push(m(
        "fitted tau(beta=2)",
        fitted,
        formula,
        1e-4,
        Tolerance::Absolute,
    ));
    let fitted = c.metric(&get("eq8_classical"), "eq8_classical", "fitted_decay_time");
    let classical = c.metric(
        &get("eq8_classical"),
        "eq8_classical",
        "classical_relaxation_time",
    );
    c.push(m(
        "fitted tau(beta=1e-7)",
        fitted,
        classical,
        1e-6,
        Tolerance::Absolute,
    ));
    all.push(c);

    let mut c = CriterionResult::new(9, "canonical-backend quantum relaxation");
    let r = get("eq7_canonical_beta2");
    let var = c.metric(&r, "eq7_canonical_beta2", "var_q");
    let rise = c.metric(&r, "eq7_canonical_beta2", "lyapunov_max_rise");
    c.push(m("var_q", var, 0.656518, 0.01, Tolerance::Relative));
    c.push(m(
        "max relative-entropy rise",
        rise,
        0.0,
        1e-10,
        Tolerance::AtMost,
    ));
    all.push(c);

    let mut c = CriterionResult::new(10, "conservation and positivity");
    let mut worst_mass = 0.0_f64;
    let mut worst_min = f64::INFINITY;
    for (label, r) in &reports {
        if r.records.is_empty() {
            continue;
        }
        if r.status != RunStatus::Completed {
            c.errors
                .push(format!("{label} ended with {}", r.status.name()));
        }
        for rec in &r.records {
            worst_mass = worst_mass.max((rec.mass - 1.0).abs());
            worst_min = worst_min.min(rec.min_rho / rec.max_rho);
        }
    }
    c.push(m(
        "max |mass - 1|",
        worst_mass,
        0.0,
        1e-9,
        Tolerance::AtMost,
    ));
    c.push(m(
        "min rho / max rho",
        worst_min,
        0.0,
        -1e-12,
        Tolerance::AtLeast,
    ));
    c.push(m(
        "oversized step rejected",
        if oversized_step_is_rejected() {
            1.0
        } else {
            0.0
        },
        1.0,
        0.0,
        Tolerance::Absolute,
    ));
    all.push(c);

    all.push(bohm_stationarity(get("eq7_bohm")));

    let mut c = CriterionResult::new(12, "byte-identical reruns");
    let repeat: Vec<ScenarioConfig> = configs
        .iter()
        .filter(|cfg| REPEATED.contains(&cfg.name.as_str()))
        .cloned()
        .collect();
    for (config, result) in repeat.iter().zip(run_all(&repeat)) {
        let dir = out.join("repeat").join(&config.name);
        match result {
            Ok(report) => {
                emit_outputs(&report, &dir)?;
                let first = csv_files(&out.join(&config.name));
                let second = csv_files(&dir);
                let same = !first.is_empty() && first == second;
                c.push(m(
                    &format!("{} identical", config.name),
                    if same { 1.0 } else { 0.0 },
                    1.0,
                    0.0,
                    Tolerance::Absolute,
                ));
            }
            Err(e) => c.errors.push(format!("{}: {e}", config.name)),
        }
    }
    all.push(c);

    write_check_csv(out, &all)?;
    Ok(all)
}

fn write_check_csv(out: &Path, results: &[CriterionResult]) -> Result<(), RunError> {
    let mut text = String::from("criterion,measurement,value,target,tolerance,kind,pass\n");
    for c in results {
        for x in &c.measurements {
            text.push_str(&format!(
                "{},\"{}\",{},{},{},{:?},{}\n",
                c.id,
                x.name,
                num(x.value),
                num(x.target),
                num(x.tolerance),
                x.kind,
                x.pass()
            ));
        }
    }
    let path = out.join("check.csv");
    fs::write(&path, text).map_err(|source| RunError::Io { path, source })
}

fn formula_variance(beta: f64) -> f64 {
    stationary_dispersion(&OscillatorParams::unit(beta).expect("positive beta"))
}

fn eigen_levels() -> CriterionResult {
    let mut c = CriterionResult::new(1, "harmonic eigenvalues");
    let grid = build_grid(-12.0, 12.0, 2001).expect("valid grid");
    let spectrum =
        discretize_position_hamiltonian(&grid, 1.0, 1.0, &PotentialSpec::unit_harmonic())
            .map_err(|e| e.to_string())
            .and_then(|h| solve_spectrum(&h, 10).map_err(|e| e.to_string()));
    match spectrum {
        Ok(s) => {
            for (n, e) in s.energies().iter().enumerate() {
                c.push(m(
                    &format!("E_{n}"),
                    *e,
                    n as f64 + 0.5,
                    1e-3,
                    Tolerance::Absolute,
                ));
            }
        }
        Err(e) => c.errors.push(e),
    }
    c
}

/// Applies a line operator to every slice of a plane density, through a
/// normalized copy of the slice; the rate is linear in `rho`.
fn line_rate(
    values: &[f64],
    grid: Grid1D,
    backend: &FreeEnergyBackend,
    l: &KineticCoefficients,
    space: Space,
) -> Result<Vec<f64>, String> {
    let mass = Support::Line(grid).integrate(values);
    if mass == 0.0 {
        return Ok(vec![0.0; values.len()]);
    }
    let rho = DensityField::normalized(Support::Line(grid), values.to_vec(), 0.0)
        .map_err(|e| e.to_string())?;
    let state = RelaxationState::new(rho, space).map_err(|e| e.to_string())?;
    let rate = drift_diffusion_rate(&state, backend, l).map_err(|e| e.to_string())?;
    Ok(rate.into_iter().map(|r| r * mass).collect())
}

/// Conservative centered difference along one axis with zero flux through
/// the ends: face values are averages, end nodes own half cells.
fn centered_divergence(values: &[f64], grid: &Grid1D) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![0.0; n];
    for i in 0..n - 1 {
        let face = 0.5 * (values[i] + values[i + 1]);
        out[i] += face / grid.weight(i);
        out[i + 1] -= face / grid.weight(i + 1);
    }
    out
}

/// Direct discretization of the classical phase-space equation: transport
/// `-(p/m) d_q rho + U'(q) d_p rho` plus the two line operators.
fn classical_phase_rate(
    rho: &[f64],
    grid: &Grid2D,
    config: &ScenarioConfig,
    l: &KineticCoefficients,
) -> Result<Vec<f64>, String> {
    let s = &config.system;
    let kt = config.temperature().kt();
    let (nq, np) = (grid.q.len(), grid.p.len());
    let potential = s.potential_spec();
    let u = potential.sample(&grid.q).map_err(|e| e.to_string())?;
    let du = potential.force_field(&grid.q).map_err(|e| e.to_string())?;
    let kinetic = grid.p.sample(|p| p * p / (2.0 * s.mass));
    let q_backend = FreeEnergyBackend::classical(u, kt).map_err(|e| e.to_string())?;
    let p_backend = FreeEnergyBackend::classical(kinetic, kt).map_err(|e| e.to_string())?;
    let mut rate = vec![0.0; rho.len()];
    for i in 0..nq {
        let row = &rho[i * np..(i + 1) * np];
        let d_p = centered_divergence(row, &grid.p);
        let diss = line_rate(row, grid.p, &p_backend, l, Space::Momentum)?;
        for j in 0..np {
            rate[i * np + j] += du.values()[i] * d_p[j] + diss[j];
        }
    }
    for (j, p) in grid.p.nodes().enumerate() {
        let column: Vec<f64> = (0..nq).map(|i| rho[i * np + j]).collect();
        let d_q = centered_divergence(&column, &grid.q);
        let diss = line_rate(&column, grid.q, &q_backend, l, Space::Position)?;
        for i in 0..nq {
            rate[i * np + j] += -(p / s.mass) * d_q[i] + diss[i];
        }
    }
    Ok(rate)
}

fn phase_reduction(kramers: Option<&RunReport>) -> CriterionResult {
    let mut c = CriterionResult::new(6, "phase-space fluxes reduce to the classical equation");
    let config = variant("eq11_kramers", "eq11_kramers", &[]);
    let prepared = match prepare_relaxation(&config) {
        Ok(p) => p,
        Err(e) => {
            c.errors.push(e.to_string());
            return c;
        }
    };
    let Drive::Phase(backends) = &prepared.drive else {
        c.errors
            .push("kramers preset is not a phase-space run".into());
        return c;
    };
    let grid = config.plane_grid().expect("phase preset");
    let mut states = vec![("initial", prepared.initial.clone())];
    if let Some(end) = kramers.and_then(|r| r.final_density.clone()) {
        match RelaxationState::new(end, Space::Phase) {
            Ok(s) => states.push(("final", s)),
            Err(e) => c.errors.push(e.to_string()),
        }
    }
    for (label, state) in states {
        let rates =
            phase_space_rates(&state, backends, &prepared.coefficients).map_err(|e| e.to_string());
        let reference = classical_phase_rate(
            state.density().values(),
            &grid,
            &config,
            &prepared.coefficients,
        );
        match (rates, reference) {
            (Ok(rates), Ok(reference)) => {
                let gap = rates
                    .reversible
                    .iter()
                    .zip(&rates.dissipative)
                    .zip(&reference)
                    .fold(0.0_f64, |g, ((a, b), r)| g.max((a + b - r).abs()));
                c.push(m(
                    &format!("max node gap ({label})"),
                    gap,
                    0.0,
                    1e-10,
                    Tolerance::AtMost,
                ));
            }
            (Err(e), _) | (_, Err(e)) => c.errors.push(e),
        }
    }
    c
}

/// A unit spike stepped at ten times the stable step must be rejected.
fn oversized_step_is_rejected() -> bool {
    let grid = build_grid(-8.0, 8.0, 201).expect("valid grid");
    let mut values = vec![1e-6; grid.len()];
    values[100] = 1.0;
    let Ok(rho) = DensityField::normalized(Support::Line(grid), values, 0.0) else {
        return false;
    };
    let Ok(state) = RelaxationState::new(rho, Space::Position) else {
        return false;
    };
    let Ok(backend) = FreeEnergyBackend::classical(grid.sample(|q| 0.5 * q * q), 0.5) else {
        return false;
    };
    let Ok(l) = KineticCoefficients::new(1.0) else {
        return false;
    };
    let Ok(dt) = stable_dt(&state, &backend, &l) else {
        return false;
    };
    matches!(
        drift_diffusion_step(&state, &backend, &l, 10.0 * dt),
        Err(RelaxationError::UnstableDt { .. })
    )
}

/// Closed-form stationary variance of the bohm backend, unit parameters.
pub fn bohm_root(kt: f64) -> f64 {
    (kt + (kt * kt + 1.0).sqrt()) / 2.0
}

/// Variance of the centred Gaussian that minimizes the bohm Lyapunov
/// functional on `grid`, found by golden-section search in `ln u` between
/// `(4h)^2` and the widest variance the grid supports at eight sigma.
pub fn bohm_gaussian_minimizer(grid: Grid1D, kt: f64) -> Result<f64, String> {
    let h = discretize_position_hamiltonian(&grid, 1.0, 1.0, &PotentialSpec::unit_harmonic())
        .map_err(|e| e.to_string())?;
    let backend = FreeEnergyBackend::bohm(h, kt).map_err(|e| e.to_string())?;
    let lyapunov = |ln_u: f64| -> Result<f64, String> {
        let rho = DensityField::gaussian(grid, 0.0, ln_u.exp()).map_err(|e| e.to_string())?;
        let state = RelaxationState::new(rho, Space::Position).map_err(|e| e.to_string())?;
        lyapunov_functional(&state, &backend).map_err(|e| e.to_string())
    };
    let half = 0.5 * (grid.hi() - grid.lo());
    let (mut a, mut b) = (
        (4.0 * grid.spacing()).powi(2).ln(),
        (half / 8.0).powi(2).ln(),
    );
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - ratio * (b - a);
    let mut x2 = a + ratio * (b - a);
    let (mut f1, mut f2) = (lyapunov(x1)?, lyapunov(x2)?);
    for _ in 0..80 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = lyapunov(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = lyapunov(x2)?;
        }
    }
    Ok((0.5 * (a + b)).exp())
}

fn bohm_stationarity(run: Result<&RunReport, String>) -> CriterionResult {
    let mut c = CriterionResult::new(11, "bohm-backend stationary variance");
    c.push(m(
        "closed form (kT=0.5)",
        bohm_root(0.5),
        0.809017,
        5e-7,
        Tolerance::Absolute,
    ));
    let var = c.metric(&run, "eq7_bohm", "var_q");
    c.push(m(
        "relaxed var_q (kT=0.5)",
        var,
        bohm_root(0.5),
        0.01,
        Tolerance::Relative,
    ));
    let limits = [
        ("kT=0.005", 0.005, build_grid(-8.0, 8.0, 801)),
        ("kT=50", 50.0, build_grid(-60.0, 60.0, 1201)),
    ];
    for (label, kt, grid) in limits {
        let coth = formula_variance(1.0 / kt);
        match grid
            .map_err(|e| e.to_string())
            .and_then(|g| bohm_gaussian_minimizer(g, kt))
        {
            Ok(u) => {
                c.push(m(
                    &format!("minimizer vs closed form ({label})"),
                    u,
                    bohm_root(kt),
                    0.01,
                    Tolerance::Relative,
                ));
                c.push(m(
                    &format!("minimizer vs coth law ({label})"),
                    u,
                    coth,
                    0.01,
                    Tolerance::Relative,
                ));
            }
            Err(e) => c.errors.push(e),
        }
        c.push(m(
            &format!("closed form vs coth law ({label})"),
            bohm_root(kt),
            coth,
            0.01,
            Tolerance::Relative,
        ));
    }
    c
}
