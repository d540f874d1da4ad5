//! Scenario files.
//!
//! A scenario is a TOML document with two top-level keys (`name`,
//! `experiment`) and the sections `[system]`, `[space]`, `[thermo]`,
//! `[grid]`, `[stepping]` and `[outputs]`. The README lists every key.
//! Validation collects every problem before failing, and each problem
//! carries the key path that caused it.

use std::fmt;
use std::path::PathBuf;

use thermorelax_core::free_energy::BackendTag;
use thermorelax_core::numerics::{build_grid, Grid1D, Grid2D, GridError};
use thermorelax_core::relaxation::{AdvectionScheme, Space};
use thermorelax_core::spectrum::PotentialSpec;
use thiserror::Error;
use toml::{Table, Value};

pub const DEFAULT_SAFETY: f64 = 0.5;
pub const DEFAULT_STRIDE: usize = 100;
pub const DEFAULT_SHIFT: f64 = 1.0;
pub const DEFAULT_RESPONSE_DT: f64 = 1e-3;
pub const DEFAULT_RESPONSE_Y0: f64 = 1.0;
pub const DEFAULT_TRUNCATION: f64 = 1e-10;
/// Minimal distance from the equilibrium centre to either grid end, in
/// equilibrium standard deviations.
pub const SUPPORT_SIGMAS: f64 = 8.0;

const SECTIONS: [&str; 6] = ["system", "space", "thermo", "grid", "stepping", "outputs"];
const LINE_GRID: [&str; 3] = ["lo", "hi", "n"];
const PHASE_GRID: [&str; 6] = ["q_lo", "q_hi", "q_n", "p_lo", "p_hi", "p_n"];

/// One violated constraint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Issue {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid scenario:{}", render(.issues))]
pub struct ConfigError {
    pub issues: Vec<Issue>,
}

fn render(issues: &[Issue]) -> String {
    issues.iter().map(|i| format!("\n  {i}")).collect()
}

impl ConfigError {
    pub fn has_path(&self, path: &str) -> bool {
        self.issues.iter().any(|i| i.path == path)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Relaxation,
    Response,
    Equilibrium,
    CothSweep,
}

impl Experiment {
    pub const ALL: [Experiment; 4] = [
        Experiment::Relaxation,
        Experiment::Response,
        Experiment::Equilibrium,
        Experiment::CothSweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Relaxation => "relaxation",
            Experiment::Response => "response",
            Experiment::Equilibrium => "equilibrium",
            Experiment::CothSweep => "coth_sweep",
        }
    }

    fn uses(self, section: &str) -> bool {
        match self {
            Experiment::Relaxation => true,
            Experiment::Response => matches!(section, "system" | "thermo" | "stepping" | "outputs"),
            Experiment::Equilibrium => section != "stepping",
            Experiment::CothSweep => matches!(section, "system" | "thermo" | "grid" | "outputs"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PotentialKind {
    Harmonic,
    Free,
}

impl PotentialKind {
    pub fn name(self) -> &'static str {
        match self {
            PotentialKind::Harmonic => "harmonic",
            PotentialKind::Free => "free",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemConfig {
    pub potential: PotentialKind,
    pub mass: f64,
    pub omega: f64,
    pub hbar: f64,
    pub force: f64,
}

impl SystemConfig {
    pub fn potential_spec(&self) -> PotentialSpec {
        match self.potential {
            PotentialKind::Harmonic => PotentialSpec::Harmonic {
                mass: self.mass,
                omega: self.omega,
                force: self.force,
            },
            PotentialKind::Free => PotentialSpec::Free,
        }
    }

    fn stiffness(&self) -> f64 {
        self.mass * self.omega * self.omega
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Temperature {
    Kbt(f64),
    Beta(f64),
}

impl Temperature {
    pub fn kt(self) -> f64 {
        match self {
            Temperature::Kbt(kt) => kt,
            Temperature::Beta(beta) => 1.0 / beta,
        }
    }

    pub fn beta(self) -> f64 {
        match self {
            Temperature::Kbt(kt) => 1.0 / kt,
            Temperature::Beta(beta) => beta,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThermoConfig {
    /// `None` only for coth sweeps, which use `betas`.
    pub temperature: Option<Temperature>,
    pub betas: Vec<f64>,
    pub friction: Option<f64>,
    pub position_mobility: Option<f64>,
    /// Largest estimated tail mass of a truncated eigen-expansion.
    pub truncation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridSpec {
    Line(Grid1D),
    Phase(Grid2D),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Initial {
    /// Equilibrium density displaced by `shift` of its standard deviations
    /// along `q` (along `p` for momentum runs).
    ShiftedGibbs { shift: f64 },
    /// Gaussian; the `_p` pair is used only in phase space.
    Gaussian {
        mean: f64,
        variance: f64,
        mean_p: f64,
        variance_p: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteppingConfig {
    pub t_end: f64,
    pub safety: f64,
    pub stride: usize,
    pub initial: Initial,
    pub dt: f64,
    pub y0: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputsConfig {
    pub directory: Option<PathBuf>,
    pub timeseries: bool,
    pub density: bool,
    pub summary: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub experiment: Experiment,
    pub system: SystemConfig,
    pub space: Space,
    pub backend: BackendTag,
    pub advection: AdvectionScheme,
    pub thermo: ThermoConfig,
    pub grid: Option<GridSpec>,
    pub stepping: SteppingConfig,
    pub outputs: OutputsConfig,
}

impl ScenarioConfig {
    pub fn line_grid(&self) -> Option<Grid1D> {
        match self.grid {
            Some(GridSpec::Line(g)) => Some(g),
            _ => None,
        }
    }

    pub fn plane_grid(&self) -> Option<Grid2D> {
        match self.grid {
            Some(GridSpec::Phase(g)) => Some(g),
            _ => None,
        }
    }

    /// Temperature of single-temperature experiments.
    pub fn temperature(&self) -> Temperature {
        self.thermo
            .temperature
            .expect("validated configs carry a temperature outside coth sweeps")
    }

    /// Canonical TOML for this config. Parsing it back yields an equal
    /// config, and it lists every default that was filled in.
    pub fn to_toml(&self) -> String {
        let mut out = String::new();
        let mut line = |s: String| {
            out.push_str(&s);
            out.push('\n');
        };
        let e = self.experiment;
        line(format!("name = {:?}", self.name));
        line(format!("experiment = {:?}", e.name()));
        line(String::new());
        line("[system]".into());
        line(format!("potential = {:?}", self.system.potential.name()));
        line(format!("mass = {:?}", self.system.mass));
        line(format!("omega = {:?}", self.system.omega));
        line(format!("hbar = {:?}", self.system.hbar));
        line(format!("force = {:?}", self.system.force));
        if e.uses("space") {
            line(String::new());
            line("[space]".into());
            line(format!("kind = {:?}", self.space.name()));
            if e == Experiment::Relaxation {
                line(format!("backend = {:?}", self.backend.name()));
                if self.space == Space::Phase {
                    line(format!("advection = {:?}", advection_name(self.advection)));
                }
            }
        }
        line(String::new());
        line("[thermo]".into());
        match self.thermo.temperature {
            Some(Temperature::Kbt(kt)) => line(format!("kbt = {kt:?}")),
            Some(Temperature::Beta(beta)) => line(format!("beta = {beta:?}")),
            None => {}
        }
        if e == Experiment::CothSweep {
            let list: Vec<String> = self.thermo.betas.iter().map(|b| format!("{b:?}")).collect();
            line(format!("betas = [{}]", list.join(", ")));
        }
        if let Some(b) = self.thermo.friction {
            line(format!("friction = {b:?}"));
        }
        if let Some(l) = self.thermo.position_mobility {
            line(format!("position_mobility = {l:?}"));
        }
        if e != Experiment::Response {
            line(format!("truncation = {:?}", self.thermo.truncation));
        }
        if let Some(grid) = self.grid {
            line(String::new());
            line("[grid]".into());
            match grid {
                GridSpec::Line(g) => {
                    line(format!("lo = {:?}", g.lo()));
                    line(format!("hi = {:?}", g.hi()));
                    line(format!("n = {}", g.len()));
                }
                GridSpec::Phase(g) => {
                    for (prefix, axis) in [("q", g.q), ("p", g.p)] {
                        line(format!("{prefix}_lo = {:?}", axis.lo()));
                        line(format!("{prefix}_hi = {:?}", axis.hi()));
                        line(format!("{prefix}_n = {}", axis.len()));
                    }
                }
            }
        }
        if e.uses("stepping") {
            let s = &self.stepping;
            line(String::new());
            line("[stepping]".into());
            line(format!("t_end = {:?}", s.t_end));
            if e == Experiment::Response {
                line(format!("dt = {:?}", s.dt));
                line(format!("y0 = {:?}", s.y0));
            } else {
                line(format!("safety = {:?}", s.safety));
                line(format!("stride = {}", s.stride));
                match s.initial {
                    Initial::ShiftedGibbs { shift } => {
                        line("initial = \"shifted_gibbs\"".into());
                        line(format!("shift = {shift:?}"));
                    }
                    Initial::Gaussian {
                        mean,
                        variance,
                        mean_p,
                        variance_p,
                    } => {
                        line("initial = \"gaussian\"".into());
                        line(format!("mean = {mean:?}"));
                        line(format!("variance = {variance:?}"));
                        if self.space == Space::Phase {
                            line(format!("mean_p = {mean_p:?}"));
                            line(format!("variance_p = {variance_p:?}"));
                        }
                    }
                }
            }
        }
        line(String::new());
        line("[outputs]".into());
        if let Some(dir) = &self.outputs.directory {
            line(format!("directory = {:?}", dir.to_string_lossy()));
        }
        line(format!("timeseries = {}", self.outputs.timeseries));
        line(format!("density = {}", self.outputs.density));
        line(format!("summary = {}", self.outputs.summary));
        out
    }
}

pub fn advection_name(scheme: AdvectionScheme) -> &'static str {
    match scheme {
        AdvectionScheme::Centered => "centered",
        AdvectionScheme::Upwind => "upwind",
    }
}

fn path(section: &str, key: &str) -> String {
    if section.is_empty() {
        key.to_string()
    } else {
        format!("{section}.{key}")
    }
}

/// Typed access to one table that records every problem it meets.
#[derive(Default)]
struct Reader {
    issues: Vec<Issue>,
}

impl Reader {
    fn issue(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.issues.push(Issue {
            path: path.into(),
            message: message.into(),
        });
    }

    fn number(&mut self, t: Option<&Table>, section: &str, key: &str) -> Option<f64> {
        match t?.get(key)? {
            Value::Float(x) if x.is_finite() => Some(*x),
            Value::Integer(i) => Some(*i as f64),
            Value::Float(x) => {
                self.issue(path(section, key), format!("must be finite, got {x}"));
                None
            }
            other => {
                self.issue(
                    path(section, key),
                    format!("expected a number, got {}", other.type_str()),
                );
                None
            }
        }
    }

    fn positive(&mut self, t: Option<&Table>, section: &str, key: &str) -> Option<f64> {
        let x = self.number(t, section, key)?;
        if x > 0.0 {
            Some(x)
        } else {
            self.issue(path(section, key), format!("must be positive, got {x}"));
            None
        }
    }

    fn count(&mut self, t: Option<&Table>, section: &str, key: &str) -> Option<usize> {
        match t?.get(key)? {
            Value::Integer(i) if *i >= 0 => Some(*i as usize),
            other => {
                self.issue(
                    path(section, key),
                    format!("expected a non-negative integer, got {other}"),
                );
                None
            }
        }
    }

    fn text<'t>(&mut self, t: Option<&'t Table>, section: &str, key: &str) -> Option<&'t str> {
        match t?.get(key)? {
            Value::String(s) => Some(s),
            other => {
                self.issue(
                    path(section, key),
                    format!("expected a string, got {}", other.type_str()),
                );
                None
            }
        }
    }

    fn flag(&mut self, t: Option<&Table>, section: &str, key: &str) -> Option<bool> {
        match t?.get(key)? {
            Value::Boolean(b) => Some(*b),
            other => {
                self.issue(
                    path(section, key),
                    format!("expected true or false, got {}", other.type_str()),
                );
                None
            }
        }
    }

    fn numbers(&mut self, t: Option<&Table>, section: &str, key: &str) -> Option<Vec<f64>> {
        let Value::Array(items) = t?.get(key)? else {
            self.issue(path(section, key), "expected an array of numbers");
            return None;
        };
        let mut out = Vec::with_capacity(items.len());
        for (i, item) in items.iter().enumerate() {
            match item {
                Value::Float(x) if x.is_finite() => out.push(*x),
                Value::Integer(v) => out.push(*v as f64),
                _ => {
                    self.issue(
                        format!("{}[{i}]", path(section, key)),
                        "expected a finite number",
                    );
                    return None;
                }
            }
        }
        Some(out)
    }

    fn choice<T: Copy>(
        &mut self,
        t: Option<&Table>,
        section: &str,
        key: &str,
        options: &[(&str, T)],
    ) -> Option<T> {
        let s = self.text(t, section, key)?;
        match options.iter().find(|(name, _)| *name == s) {
            Some((_, v)) => Some(*v),
            None => {
                let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
                self.issue(
                    path(section, key),
                    format!("unknown value {s:?}; expected one of {}", names.join(", ")),
                );
                None
            }
        }
    }

    fn require(&mut self, t: Option<&Table>, section: &str, key: &str) {
        if t.is_none_or(|t| !t.contains_key(key)) {
            self.issue(path(section, key), "missing required key");
        }
    }

    /// Flags keys of `t` outside `used`; `known` marks keys that exist in
    /// the grammar but do not apply to this scenario.
    fn check_keys(
        &mut self,
        t: Option<&Table>,
        section: &str,
        used: &[&str],
        known: &[&str],
        context: &str,
    ) {
        let Some(t) = t else { return };
        for key in t.keys() {
            if used.contains(&key.as_str()) {
                continue;
            }
            if known.contains(&key.as_str()) {
                self.issue(path(section, key), format!("not used by {context}"));
            } else {
                self.issue(path(section, key), "unknown key");
            }
        }
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Parses and validates a scenario.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let root: Table = text.parse().map_err(|e: toml::de::Error| {
        let at = e.span().map(|s| format!("line {}", line_of(text, s.start)));
        ConfigError {
            issues: vec![Issue {
                path: at.unwrap_or_else(|| "(document)".into()),
                message: e.message().trim().to_string(),
            }],
        }
    })?;
    let mut r = Reader::default();
    let top = Some(&root);

    let name = r.text(top, "", "name").unwrap_or("scenario").to_string();
    if name.is_empty()
        || !name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || "_-.".contains(c))
        || name.starts_with('.')
    {
        r.issue(
            "name",
            "must be non-empty and use only letters, digits, '_', '-' and '.'",
        );
    }
    let experiments: Vec<(&str, Experiment)> =
        Experiment::ALL.iter().map(|e| (e.name(), *e)).collect();
    let experiment = if root.contains_key("experiment") {
        r.choice(top, "", "experiment", &experiments)
            .unwrap_or(Experiment::Relaxation)
    } else {
        Experiment::Relaxation
    };
    let context = format!("{} runs", experiment.name());

    for (key, value) in &root {
        if key == "name" || key == "experiment" {
            continue;
        }
        if !SECTIONS.contains(&key.as_str()) {
            r.issue(key.clone(), "unknown key");
        } else if !value.is_table() {
            r.issue(key.clone(), "expected a table");
        } else if !experiment.uses(key) {
            r.issue(key.clone(), format!("section not used by {context}"));
        }
    }
    let section = |name: &str| {
        if experiment.uses(name) {
            root.get(name).and_then(Value::as_table)
        } else {
            None
        }
    };

    // [system]
    let sys = section("system");
    r.check_keys(
        sys,
        "system",
        &["potential", "mass", "omega", "hbar", "force"],
        &[],
        &context,
    );
    let potential = r
        .choice(
            sys,
            "system",
            "potential",
            &[
                ("harmonic", PotentialKind::Harmonic),
                ("free", PotentialKind::Free),
            ],
        )
        .unwrap_or(PotentialKind::Harmonic);
    let system = SystemConfig {
        potential,
        mass: r.positive(sys, "system", "mass").unwrap_or(1.0),
        omega: r.positive(sys, "system", "omega").unwrap_or(1.0),
        hbar: r.positive(sys, "system", "hbar").unwrap_or(1.0),
        force: r.number(sys, "system", "force").unwrap_or(0.0),
    };
    if potential == PotentialKind::Free && experiment != Experiment::Relaxation {
        r.issue(
            "system.potential",
            format!("{context} need a harmonic potential"),
        );
    }

    // [space]
    let sp = section("space");
    let mut space = Space::Position;
    let mut backend = BackendTag::Classical;
    let mut advection = AdvectionScheme::Centered;
    if experiment.uses("space") {
        r.require(sp, "space", "kind");
        space = r
            .choice(
                sp,
                "space",
                "kind",
                &[
                    ("momentum", Space::Momentum),
                    ("position", Space::Position),
                    ("phase", Space::Phase),
                ],
            )
            .unwrap_or(Space::Position);
        let mut used = vec!["kind"];
        if experiment == Experiment::Relaxation {
            used.push("backend");
            r.require(sp, "space", "backend");
            backend = r
                .choice(
                    sp,
                    "space",
                    "backend",
                    &[
                        ("classical", BackendTag::Classical),
                        ("bohm", BackendTag::Bohm),
                        ("canonical", BackendTag::Canonical),
                    ],
                )
                .unwrap_or(BackendTag::Classical);
            if space == Space::Phase {
                used.push("advection");
                advection = r
                    .choice(
                        sp,
                        "space",
                        "advection",
                        &[
                            ("centered", AdvectionScheme::Centered),
                            ("upwind", AdvectionScheme::Upwind),
                        ],
                    )
                    .unwrap_or_default();
            }
        }
        let space_context = format!("{context} in {} space", space.name());
        r.check_keys(
            sp,
            "space",
            &used,
            &["kind", "backend", "advection"],
            &space_context,
        );
    }
    let quantum_axes = match experiment {
        Experiment::Relaxation => backend != BackendTag::Classical,
        Experiment::Equilibrium => true,
        _ => false,
    };
    if quantum_axes && system.force != 0.0 && matches!(space, Space::Momentum | Space::Phase) {
        r.issue(
            "system.force",
            "a linear force has no momentum-space Hamiltonian; use position space or force = 0",
        );
    }

    // [thermo]
    let th = section("thermo");
    let mut thermo_used = vec![];
    let temperature = if experiment == Experiment::CothSweep {
        None
    } else {
        thermo_used.extend(["kbt", "beta"]);
        let has = |k| th.is_some_and(|t| t.contains_key(k));
        match (has("kbt"), has("beta")) {
            (true, true) => {
                r.issue(
                    "thermo",
                    "give exactly one of thermo.kbt and thermo.beta, not both",
                );
                None
            }
            (false, false) => {
                r.issue("thermo.kbt", "missing required key (or give thermo.beta)");
                None
            }
            (true, false) => r.positive(th, "thermo", "kbt").map(Temperature::Kbt),
            (false, true) => r.positive(th, "thermo", "beta").map(Temperature::Beta),
        }
    };
    let mut betas = Vec::new();
    if experiment == Experiment::CothSweep {
        thermo_used.push("betas");
        r.require(th, "thermo", "betas");
        if let Some(list) = r.numbers(th, "thermo", "betas") {
            if list.is_empty() {
                r.issue("thermo.betas", "must list at least one inverse temperature");
            }
            for (i, b) in list.iter().enumerate() {
                if *b <= 0.0 {
                    r.issue(
                        format!("thermo.betas[{i}]"),
                        format!("must be positive, got {b}"),
                    );
                }
            }
            betas = list;
        }
    }
    let mut friction = None;
    if matches!(experiment, Experiment::Relaxation | Experiment::Response) {
        thermo_used.push("friction");
        r.require(th, "thermo", "friction");
        friction = r.positive(th, "thermo", "friction");
    }
    let mut position_mobility = None;
    if experiment == Experiment::Relaxation && space != Space::Momentum {
        thermo_used.push("position_mobility");
        position_mobility = r.positive(th, "thermo", "position_mobility");
    }
    let mut truncation = DEFAULT_TRUNCATION;
    if experiment != Experiment::Response {
        thermo_used.push("truncation");
        if let Some(t) = r.positive(th, "thermo", "truncation") {
            if t < 1.0 {
                truncation = t;
            } else {
                r.issue("thermo.truncation", format!("must be below 1, got {t}"));
            }
        }
    }
    r.check_keys(
        th,
        "thermo",
        &thermo_used,
        &[
            "kbt",
            "beta",
            "betas",
            "friction",
            "position_mobility",
            "truncation",
        ],
        &format!("{context} in {} space", space.name()),
    );
    let thermo = ThermoConfig {
        temperature,
        betas,
        friction,
        position_mobility,
        truncation,
    };

    // [grid]
    let gr = section("grid");
    let grid = if experiment.uses("grid") {
        let phase = space == Space::Phase;
        let (used, other): (&[&str], &[&str]) = if phase {
            (&PHASE_GRID, &LINE_GRID)
        } else {
            (&LINE_GRID, &PHASE_GRID)
        };
        let kind = if phase {
            "phase-space grids"
        } else {
            "line grids"
        };
        r.check_keys(gr, "grid", used, other, kind);
        if phase {
            let q = read_axis(&mut r, gr, "q_");
            let p = read_axis(&mut r, gr, "p_");
            q.zip(p).map(|(q, p)| GridSpec::Phase(Grid2D::new(q, p)))
        } else {
            read_axis(&mut r, gr, "").map(GridSpec::Line)
        }
    } else {
        None
    };

    // [stepping]
    let st = section("stepping");
    let mut stepping = SteppingConfig {
        t_end: 0.0,
        safety: DEFAULT_SAFETY,
        stride: DEFAULT_STRIDE,
        initial: Initial::ShiftedGibbs {
            shift: DEFAULT_SHIFT,
        },
        dt: DEFAULT_RESPONSE_DT,
        y0: DEFAULT_RESPONSE_Y0,
    };
    let all_stepping = [
        "t_end",
        "safety",
        "stride",
        "initial",
        "shift",
        "mean",
        "variance",
        "mean_p",
        "variance_p",
        "dt",
        "y0",
    ];
    if experiment == Experiment::Response {
        r.check_keys(
            st,
            "stepping",
            &["t_end", "dt", "y0"],
            &all_stepping,
            &context,
        );
        r.require(st, "stepping", "t_end");
        stepping.t_end = r.positive(st, "stepping", "t_end").unwrap_or(0.0);
        stepping.dt = r
            .positive(st, "stepping", "dt")
            .unwrap_or(DEFAULT_RESPONSE_DT);
        stepping.y0 = r
            .number(st, "stepping", "y0")
            .unwrap_or(DEFAULT_RESPONSE_Y0);
    } else if experiment == Experiment::Relaxation {
        r.require(st, "stepping", "t_end");
        stepping.t_end = r.positive(st, "stepping", "t_end").unwrap_or(0.0);
        if let Some(s) = r.positive(st, "stepping", "safety") {
            if s <= 1.0 {
                stepping.safety = s;
            } else {
                r.issue("stepping.safety", format!("must lie in (0, 1], got {s}"));
            }
        }
        if let Some(n) = r.count(st, "stepping", "stride") {
            if n >= 1 {
                stepping.stride = n;
            } else {
                r.issue("stepping.stride", "must be at least 1");
            }
        }
        let gaussian = r
            .choice(
                st,
                "stepping",
                "initial",
                &[("shifted_gibbs", false), ("gaussian", true)],
            )
            .unwrap_or(false);
        let mut used = vec!["t_end", "safety", "stride", "initial"];
        if gaussian {
            used.extend(["mean", "variance"]);
            r.require(st, "stepping", "mean");
            r.require(st, "stepping", "variance");
            let mean = r.number(st, "stepping", "mean").unwrap_or(0.0);
            let variance = r.positive(st, "stepping", "variance").unwrap_or(1.0);
            let (mut mean_p, mut variance_p) = (0.0, 1.0);
            if space == Space::Phase {
                used.extend(["mean_p", "variance_p"]);
                r.require(st, "stepping", "mean_p");
                r.require(st, "stepping", "variance_p");
                mean_p = r.number(st, "stepping", "mean_p").unwrap_or(0.0);
                variance_p = r.positive(st, "stepping", "variance_p").unwrap_or(1.0);
            }
            stepping.initial = Initial::Gaussian {
                mean,
                variance,
                mean_p,
                variance_p,
            };
        } else {
            used.push("shift");
            let shift = r.number(st, "stepping", "shift").unwrap_or(DEFAULT_SHIFT);
            stepping.initial = Initial::ShiftedGibbs { shift };
        }
        let init_context = format!(
            "{context} in {} space with initial = \"{}\"",
            space.name(),
            if gaussian {
                "gaussian"
            } else {
                "shifted_gibbs"
            }
        );
        r.check_keys(st, "stepping", &used, &all_stepping, &init_context);
    }

    // [outputs]
    let ou = section("outputs");
    r.check_keys(
        ou,
        "outputs",
        &["directory", "timeseries", "density", "summary"],
        &[],
        &context,
    );
    let outputs = OutputsConfig {
        directory: r.text(ou, "outputs", "directory").map(PathBuf::from),
        timeseries: r.flag(ou, "outputs", "timeseries").unwrap_or(true),
        density: r.flag(ou, "outputs", "density").unwrap_or(true),
        summary: r.flag(ou, "outputs", "summary").unwrap_or(true),
    };

    let config = ScenarioConfig {
        name,
        experiment,
        system,
        space,
        backend,
        advection,
        thermo,
        grid,
        stepping,
        outputs,
    };
    if r.issues.is_empty() {
        check_support(&config, &mut r);
    }
    if r.issues.is_empty() {
        Ok(config)
    } else {
        Err(ConfigError { issues: r.issues })
    }
}

fn read_axis(r: &mut Reader, gr: Option<&Table>, prefix: &str) -> Option<Grid1D> {
    let keys = [
        format!("{prefix}lo"),
        format!("{prefix}hi"),
        format!("{prefix}n"),
    ];
    for k in &keys {
        r.require(gr, "grid", k);
    }
    let lo = r.number(gr, "grid", &keys[0]);
    let hi = r.number(gr, "grid", &keys[1]);
    let n = r.count(gr, "grid", &keys[2]);
    let (lo, hi, n) = (lo?, hi?, n?);
    match build_grid(lo, hi, n) {
        Ok(g) => Some(g),
        Err(e) => {
            let key = match e {
                GridError::TooFewNodes(_) => &keys[2],
                _ => &keys[1],
            };
            r.issue(path("grid", key), e.to_string());
            None
        }
    }
}

/// Equilibrium standard deviation along one axis, or `None` when the
/// potential does not confine that axis.
pub fn equilibrium_sigma(
    system: &SystemConfig,
    kt: f64,
    backend: Option<BackendTag>,
    momentum_axis: bool,
) -> Option<f64> {
    let (m, w, hbar) = (system.mass, system.omega, system.hbar);
    if system.potential == PotentialKind::Free {
        return momentum_axis.then(|| (m * kt).sqrt());
    }
    // Position variances; the momentum axis scales by (m w)^2.
    let var_q = match backend {
        Some(BackendTag::Classical) => kt / system.stiffness(),
        Some(BackendTag::Bohm) => {
            (kt + (kt * kt + hbar * hbar * w * w).sqrt()) / (2.0 * system.stiffness())
        }
        _ => {
            let z = hbar * w / (2.0 * kt);
            hbar / (2.0 * m * w) / z.tanh()
        }
    };
    let scale = if momentum_axis { m * w } else { 1.0 };
    Some(var_q.sqrt() * scale)
}

/// Every grid end must lie at least `SUPPORT_SIGMAS` equilibrium standard
/// deviations from the equilibrium centre.
fn check_support(config: &ScenarioConfig, r: &mut Reader) {
    let Some(grid) = config.grid else { return };
    let backend = match config.experiment {
        Experiment::Relaxation => Some(config.backend),
        _ => None,
    };
    let kt = match config.thermo.temperature {
        Some(t) => t.kt(),
        None => {
            1.0 / config
                .thermo
                .betas
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min)
        }
    };
    let centre_q = match config.system.potential {
        PotentialKind::Harmonic => config.system.force / config.system.stiffness(),
        PotentialKind::Free => 0.0,
    };
    let axes: Vec<(&str, Grid1D, bool)> = match grid {
        GridSpec::Line(g) => vec![("", g, config.space == Space::Momentum)],
        GridSpec::Phase(g) => vec![("q_", g.q, false), ("p_", g.p, true)],
    };
    for (prefix, axis, momentum) in axes {
        let Some(sigma) = equilibrium_sigma(&config.system, kt, backend, momentum) else {
            continue;
        };
        let centre = if momentum { 0.0 } else { centre_q };
        let reach = SUPPORT_SIGMAS * sigma * (1.0 - 1e-12);
        if axis.lo() > centre - reach {
            r.issue(
                format!("grid.{prefix}lo"),
                format!(
                    "{} leaves fewer than {SUPPORT_SIGMAS} standard deviations (sigma = {sigma:.6}) below the equilibrium centre {centre}",
                    axis.lo()
                ),
            );
        }
        if axis.hi() < centre + reach {
            r.issue(
                format!("grid.{prefix}hi"),
                format!(
                    "{} leaves fewer than {SUPPORT_SIGMAS} standard deviations (sigma = {sigma:.6}) above the equilibrium centre {centre}",
                    axis.hi()
                ),
            );
        }
    }
}
