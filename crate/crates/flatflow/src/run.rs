//! Output directory of a run.
//!
//! ```text
//! <output>/
//!   config.ini                    copy of the input configuration
//!   summary.csv                   preset,check,measured,expected,passed
//!   trajectory.csv                primary run, one row per step
//!   trajectory_<label>.csv        further runs
//!   snapshots/<label>/k000012.rle stored sets
//!   <extra>.csv, calibration.ini  preset-specific tables
//! ```
//!
//! Every file is a function of the configuration alone, so repeated runs
//! produce identical directories.

use std::fs;
use std::path::Path;

use crate::calibration::Calibration;
use crate::config::ExperimentSpec;
use crate::experiments::{run_preset, Outcome, Summary};
use crate::io::{write_snapshot, write_text, write_trajectory_csv};
use crate::{Error, Result};

pub const SUMMARY_COLUMNS: [&str; 5] = ["preset", "check", "measured", "expected", "passed"];

/// `summary.csv` contents, with the energy inequality as the last row.
pub fn summary_csv(summary: &Summary) -> Result<String> {
    let mut out = csv::Writer::from_writer(Vec::new());
    out.write_record(SUMMARY_COLUMNS)?;
    for c in summary.rows() {
        out.write_record([summary.preset.name(), &c.name, &c.measured, &c.expected, if c.passed { "true" } else { "false" }])?;
    }
    let bytes = out.into_inner().map_err(|e| Error::Config(format!("summary: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

/// Writes `outcome` under `dir`, replacing files of a previous run.
pub fn write_outcome(dir: &Path, config_text: &str, outcome: &Outcome) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_text(&dir.join("config.ini"), config_text)?;
    write_text(&dir.join("summary.csv"), &summary_csv(&outcome.summary)?)?;
    for (j, run) in outcome.runs.iter().enumerate() {
        let name = if j == 0 { "trajectory.csv".to_string() } else { format!("trajectory_{}.csv", run.label) };
        let mut csv = Vec::new();
        write_trajectory_csv(&mut csv, &run.trajectory, &run.derived)?;
        write_text(&dir.join(name), &String::from_utf8(csv).expect("csv is utf-8"))?;
        let snaps = dir.join("snapshots").join(&run.label);
        if snaps.exists() {
            fs::remove_dir_all(&snaps).map_err(|e| Error::io(&snaps, e))?;
        }
        fs::create_dir_all(&snaps).map_err(|e| Error::io(&snaps, e))?;
        for s in &run.trajectory.snapshots {
            write_snapshot(&snaps.join(format!("k{:06}.rle", s.k)), s.k, s.t, &s.set)?;
        }
    }
    for (name, contents) in &outcome.files {
        write_text(&dir.join(name), contents)?;
    }
    Ok(())
}

/// Parses the configuration at `path`, runs its preset and writes the
/// output directory (`output` overrides the configured one).
pub fn run_config(path: &Path, calibration: Option<&Path>, output: Option<&Path>) -> Result<(ExperimentSpec, Outcome)> {
    let text = crate::io::read_text(path)?;
    let spec = ExperimentSpec::from_text(&text).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        other => other,
    })?;
    let cal = calibration.map(Calibration::read).transpose()?;
    let outcome = run_preset(&spec, cal.as_ref())?;
    write_outcome(output.unwrap_or(&spec.output), &text, &outcome)?;
    Ok((spec, outcome))
}

/// Prints the summary table to `w`.
pub fn print_summary(w: &mut impl std::io::Write, summary: &Summary) -> std::io::Result<()> {
    writeln!(w, "{}: {}", summary.preset.name(), summary.statement)?;
    for c in summary.rows() {
        writeln!(
            w,
            "  [{}] {}: {} (expected {})",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.measured,
            c.expected
        )?;
    }
    writeln!(w, "{}", if summary.passed() { "PASSED" } else { "FAILED" })
}
