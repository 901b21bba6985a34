//! `flatflow` command-line front end.
//!
//! Exit status: 0 when every check passes, 1 when a check fails, 2 for
//! invalid input, 3 for solver or calibration failures.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use flatflow::calibration::Calibration;
use flatflow::config::{ExperimentSpec, Preset};
use flatflow::experiments::{barrier_verify, calibrate_preset};
use flatflow::io::{grid_set_to_text, read_snapshot, read_text, write_profile_csv};
use flatflow::run::{print_summary, run_config, write_outcome};
use flatflow::{Error, Result};
use flatflow_core::axisym::profile_extract;

#[derive(Parser)]
#[command(name = "flatflow", version, about = "Discrete flat flow experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum DumpFormat {
    /// Plain grid dump, one cell per line.
    Grid,
    /// Profile `g(x1)` of a solid of revolution about the `x1` axis.
    CsvProfile,
}

#[derive(Subcommand)]
enum Command {
    /// Run the preset named in a configuration file.
    Run {
        config: PathBuf,
        /// Output directory, overriding `[experiment] output`.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Calibration file for `barrier_verify`.
        #[arg(long)]
        calibration: Option<PathBuf>,
    },
    /// Measure the barrier constants; writes `calibration.ini`.
    Calibrate {
        config: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Check the barrier against the flow with a given calibration.
    VerifyBarrier {
        config: PathBuf,
        #[arg(long)]
        calibration: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print a stored snapshot.
    Dump {
        #[arg(long)]
        snapshot: PathBuf,
        #[arg(long, value_enum, default_value = "grid")]
        format: DumpFormat,
    },
}

fn load_with_preset(path: &PathBuf, preset: Preset) -> Result<(String, ExperimentSpec)> {
    let text = read_text(path)?;
    // The subcommand fixes the preset; any configured one is replaced.
    let mut ini = flatflow::ini::Ini::parse(&text)?;
    ini.set("experiment", "preset", preset.name());
    Ok((text, ExperimentSpec::from_ini(&ini)?))
}

fn execute(cli: Cli) -> Result<bool> {
    let mut stdout = std::io::stdout().lock();
    let io_err = |source| Error::Io { path: "<stdout>".into(), source };
    match cli.command {
        Command::Run { config, output, calibration } => {
            let (_, outcome) = run_config(&config, calibration.as_deref(), output.as_deref())?;
            print_summary(&mut stdout, &outcome.summary).map_err(io_err)?;
            Ok(outcome.summary.passed())
        }
        Command::Calibrate { config, output } => {
            let (text, spec) = load_with_preset(&config, Preset::Calibrate)?;
            let outcome = calibrate_preset(&spec)?;
            write_outcome(output.as_ref().unwrap_or(&spec.output), &text, &outcome)?;
            print_summary(&mut stdout, &outcome.summary).map_err(io_err)?;
            Ok(outcome.summary.passed())
        }
        Command::VerifyBarrier { config, calibration, output } => {
            let (text, spec) = load_with_preset(&config, Preset::BarrierVerify)?;
            let cal = Calibration::read(&calibration)?;
            let outcome = barrier_verify(&spec, &cal)?;
            write_outcome(output.as_ref().unwrap_or(&spec.output), &text, &outcome)?;
            print_summary(&mut stdout, &outcome.summary).map_err(io_err)?;
            Ok(outcome.summary.passed())
        }
        Command::Dump { snapshot, format } => {
            let snap = read_snapshot(&snapshot)?;
            match format {
                DumpFormat::Grid => stdout.write_all(grid_set_to_text(&snap.set).as_bytes()).map_err(io_err)?,
                DumpFormat::CsvProfile => write_profile_csv(&mut stdout, &profile_extract(&snap.set, 0)?)?,
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
