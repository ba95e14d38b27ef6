use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use supermode_cli::output::write_report;
use supermode_cli::{execute, parse_scenario, preset, presets, CliError, Format, Scenario};

#[derive(Debug, Parser)]
#[command(name = "supermode", version, about = "Spectra of fiber-coupled atom-cavity chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario file or a built-in preset.
    Simulate {
        /// Scenario file (JSON).
        #[arg(required_unless_present = "preset", conflicts_with = "preset")]
        scenario: Option<PathBuf>,
        /// Built-in scenario name (see `presets`).
        #[arg(long)]
        preset: Option<String>,
        /// Output directory; overrides the scenario's `output.path`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Cross-check every emitted point against the direct solver.
        #[arg(long)]
        oracle_check: bool,
        /// Relative tolerance for the oracle check.
        #[arg(long)]
        tolerance: Option<f64>,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Parse and validate a scenario file without running it.
    Validate { scenario: PathBuf },
    /// List the built-in scenarios.
    Presets,
}

fn read_scenario(path: &Path) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_scenario(&text)
}

fn simulate(
    file: Option<PathBuf>,
    preset_name: Option<String>,
    out: Option<PathBuf>,
    oracle_check: bool,
    tolerance: Option<f64>,
    format: Option<Format>,
) -> Result<(), CliError> {
    let (mut scenario, default_dir) = match (file, preset_name) {
        (Some(path), _) => (read_scenario(&path)?, PathBuf::from("out")),
        (None, Some(name)) => (preset(&name)?, PathBuf::from(format!("{name}_out"))),
        (None, None) => unreachable!("clap requires one of the two"),
    };
    scenario.oracle_check.enabled |= oracle_check;
    if let Some(t) = tolerance {
        scenario.oracle_check.tolerance = t;
    }
    if let Some(f) = format {
        scenario.output.format = f;
    }
    let dir = out.or_else(|| scenario.output.path.clone()).unwrap_or(default_dir);

    let report = execute(&scenario)?;
    let written = write_report(&report, &dir, scenario.output.format)?;
    for path in &written {
        println!("{}", path.display());
    }
    let saturated = report.saturated_points();
    if saturated > 0 {
        eprintln!("warning: {saturated} point(s) exceed the weak-excitation threshold");
    }
    if let Some(o) = report.oracle {
        eprintln!(
            "oracle: {} points, max relative discrepancy T {:.3e}, R {:.3e}",
            o.checked, o.max_transmission, o.max_reflection
        );
    }
    report.oracle_gate()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate {
            scenario,
            preset,
            out,
            oracle_check,
            tolerance,
            format,
        } => simulate(scenario, preset, out, oracle_check, tolerance, format),
        Command::Validate { scenario } => read_scenario(&scenario).map(|s| {
            let tasks: Vec<&str> = s.tasks.iter().map(|t| t.name()).collect();
            println!("ok: {} subsystem(s), tasks: {}", s.chain.len(), tasks.join(", "));
        }),
        Command::Presets => {
            for p in presets() {
                println!("{:<6} {}", p.name, p.description);
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
