use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thermorelax_cli::check::run_checks;
use thermorelax_cli::presets::{preset_config, PRESETS};
use thermorelax_cli::{
    emit_outputs, parse_config, run_scenario, RunError, RunStatus, ScenarioConfig,
};

/// Relaxation of densities towards thermal equilibrium.
#[derive(Parser)]
#[command(name = "thermorelax", version)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    /// Run a built-in scenario.
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
    /// Output directory (default: the config's outputs.directory, else out/<name>).
    #[arg(long, value_name = "DIR", global = true)]
    out: Option<PathBuf>,
    /// List the built-in scenarios.
    #[arg(long)]
    list_presets: bool,
    /// Run every *.toml config in a directory concurrently.
    #[arg(long, value_name = "DIR")]
    sweep: Option<PathBuf>,
    /// Run the acceptance suite and print a PASS/FAIL table.
    #[arg(long)]
    check: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file.
    Run { config: PathBuf },
}

const EXIT_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;

fn load(path: &Path) -> Result<ScenarioConfig, (u8, String)> {
    let text =
        fs::read_to_string(path).map_err(|e| (EXIT_CONFIG, format!("{}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| (EXIT_CONFIG, format!("{}: {e}", path.display())))
}

fn output_dir(config: &ScenarioConfig, out: Option<&Path>) -> PathBuf {
    match (out, &config.outputs.directory) {
        (Some(dir), _) => dir.to_path_buf(),
        (None, Some(dir)) => dir.clone(),
        (None, None) => Path::new("out").join(&config.name),
    }
}

/// Runs one scenario and writes its files. Returns the lines to print.
fn execute(config: &ScenarioConfig, dir: &Path) -> Result<String, (u8, String)> {
    let report = run_scenario(config).map_err(|e| match e {
        RunError::Config(_) => (EXIT_CONFIG, e.to_string()),
        other => (EXIT_FAILED, other.to_string()),
    })?;
    let files = emit_outputs(&report, dir).map_err(|e| (EXIT_FAILED, e.to_string()))?;
    let mut text = format!(
        "{}: {} after {} steps in {:.3} s\n",
        config.name,
        report.status.name(),
        report.steps,
        report.wall_time.as_secs_f64()
    );
    for (name, value) in &report.metrics {
        text.push_str(&format!("  {name} = {value:.10e}\n"));
    }
    for f in files {
        text.push_str(&format!("  wrote {}\n", f.display()));
    }
    if report.status != RunStatus::Completed {
        let reason = report.failure.unwrap_or_default();
        return Err((EXIT_FAILED, format!("{text}{}: {reason}", config.name)));
    }
    Ok(text)
}

fn sweep(dir: &Path, out: Option<&Path>) -> Result<String, (u8, String)> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| (EXIT_CONFIG, format!("{}: {e}", dir.display())))?
        .flatten()
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|e| e == "toml"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err((EXIT_CONFIG, format!("{}: no *.toml configs", dir.display())));
    }
    let mut configs = Vec::new();
    let mut errors = Vec::new();
    for p in &paths {
        match load(p) {
            Ok(c) => configs.push(c),
            Err((_, e)) => errors.push(e),
        }
    }
    if !errors.is_empty() {
        return Err((EXIT_CONFIG, errors.join("\n")));
    }
    let mut names: Vec<&str> = configs.iter().map(|c| c.name.as_str()).collect();
    names.sort_unstable();
    if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
        return Err((
            EXIT_CONFIG,
            format!("name: two configs share the name {:?}", w[0]),
        ));
    }
    let results: Vec<_> = std::thread::scope(|s| {
        let handles: Vec<_> = configs
            .iter()
            .map(|c| {
                let dir = match out {
                    Some(root) => root.join(&c.name),
                    None => output_dir(c, None),
                };
                s.spawn(move || execute(c, &dir))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("scenario thread panicked"))
            .collect()
    });
    let mut text = String::new();
    let mut code = None;
    for r in results {
        match r {
            Ok(t) => text.push_str(&t),
            Err((c, t)) => {
                code = Some(code.map_or(c, |old: u8| old.max(c)));
                text.push_str(&t);
                text.push('\n');
            }
        }
    }
    match code {
        Some(c) => Err((c, text)),
        None => Ok(text),
    }
}

fn check(out: Option<&Path>) -> Result<String, (u8, String)> {
    let dir = out.map_or_else(|| PathBuf::from("out/check"), Path::to_path_buf);
    let results = run_checks(&dir).map_err(|e| (EXIT_FAILED, e.to_string()))?;
    let mut text = String::new();
    for r in &results {
        text.push_str(&r.line());
        text.push('\n');
    }
    let failed = results.iter().filter(|r| !r.pass()).count();
    text.push_str(&format!(
        "{} of {} criteria passed\n",
        results.len() - failed,
        results.len()
    ));
    if failed > 0 {
        Err((EXIT_FAILED, text))
    } else {
        Ok(text)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = cli.out.as_deref();
    let modes = [
        cli.command.is_some(),
        cli.preset.is_some(),
        cli.list_presets,
        cli.sweep.is_some(),
        cli.check,
    ];
    if modes.iter().filter(|m| **m).count() != 1 {
        eprintln!("give exactly one of: run <config>, --preset, --list-presets, --sweep, --check");
        return ExitCode::from(EXIT_CONFIG);
    }
    let result = if cli.list_presets {
        Ok(PRESETS
            .iter()
            .map(|p| format!("{:<18} {}\n", p.name, p.description))
            .collect())
    } else if let Some(name) = &cli.preset {
        match preset_config(name) {
            Some(c) => execute(&c, &output_dir(&c, out)),
            None => Err((
                EXIT_CONFIG,
                format!("--preset: unknown preset {name:?}; see --list-presets"),
            )),
        }
    } else if let Some(dir) = &cli.sweep {
        sweep(dir, out)
    } else if cli.check {
        check(out)
    } else if let Some(Command::Run { config }) = &cli.command {
        load(config).and_then(|c| execute(&c, &output_dir(&c, out)))
    } else {
        unreachable!("one mode is set")
    };
    match result {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err((code, text)) => {
            eprintln!("{text}");
            ExitCode::from(code)
        }
    }
}
