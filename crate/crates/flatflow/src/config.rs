//! Run configuration.
//!
//! ```text
//! [grid]
//! n = 2               # dimension
//! spacing = 0.001953125
//! extent = 1.0        # optional box side; default fits the initial data
//!
//! [step]
//! h = 2e-3            # required
//! horizon = 0.04      # or `steps = 20`
//! pd_tol = 1e-7
//! max_iterations = 20000
//! theta = 0.5
//! band_gamma = 0.5
//! snapshot_stride = 1
//!
//! [forcing]
//! kind = constant     # constant | piecewise | sampled
//! value = 0
//! bound = 0           # C0, defaults to the largest |value|
//!
//! [experiment]
//! preset = shrinking_ball
//! output = out/shrinking_ball
//! seed = 0
//! radius = 0.35
//! ```
//!
//! Lengths are in box units. Grids are centered at the origin of coordinates
//! with an odd number of cells per axis, so the coordinate planes pass
//! through cell centers.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use flatflow_core::flow::{EvolveOptions, ForcingSchedule};
use flatflow_core::solver::StepParams;
use flatflow_core::Grid;

use crate::ini::Ini;
use crate::{Error, Result};

/// Experiment presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Preset {
    ShrinkingBall,
    StationaryBall,
    StationaryUnion,
    TangentBalls,
    Comparison,
    SymmetryCheck,
    BarrierVerify,
    Calibrate,
}

impl Preset {
    pub const ALL: [Preset; 8] = [
        Preset::ShrinkingBall,
        Preset::StationaryBall,
        Preset::StationaryUnion,
        Preset::TangentBalls,
        Preset::Comparison,
        Preset::SymmetryCheck,
        Preset::BarrierVerify,
        Preset::Calibrate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::ShrinkingBall => "shrinking_ball",
            Preset::StationaryBall => "stationary_ball",
            Preset::StationaryUnion => "stationary_union",
            Preset::TangentBalls => "tangent_balls",
            Preset::Comparison => "comparison",
            Preset::SymmetryCheck => "symmetry_check",
            Preset::BarrierVerify => "barrier_verify",
            Preset::Calibrate => "calibrate",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown preset `{s}`")))
    }
}

/// Grid resolution and box.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub n: usize,
    pub spacing: f64,
    /// Box side; `None` lets the experiment size the box to its data.
    pub extent: Option<f64>,
}

impl GridSpec {
    /// Centered grid with the odd cell count nearest `extent / spacing`
    /// along each axis (at least the requested extent).
    pub fn centered(n: usize, spacing: f64, extents: &[f64]) -> Result<Grid> {
        let cells: Vec<usize> = extents
            .iter()
            .map(|&e| {
                let c = (e / spacing - 1e-9).ceil().max(5.0) as usize;
                c | 1
            })
            .collect();
        Ok(Grid::centered(n, &cells, spacing)?)
    }

    /// Grid whose box has half-widths at least `half` (one entry per axis),
    /// unless an explicit extent is configured.
    pub fn grid_for(&self, half: &[f64]) -> Result<Grid> {
        let extents: Vec<f64> = match self.extent {
            Some(e) => vec![e; self.n],
            None => half.iter().take(self.n).map(|h| 2.0 * h).collect(),
        };
        GridSpec::centered(self.n, self.spacing, &extents)
    }
}

/// Time stepping and solver settings.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSpec {
    pub h: f64,
    /// Horizon `T`, if given (directly or as `steps * h`).
    pub horizon: Option<f64>,
    pub pd_tol: f64,
    pub max_iterations: usize,
    pub theta: f64,
    pub band_gamma: f64,
    pub snapshot_stride: usize,
}

impl StepSpec {
    pub fn params(&self, lambda: f64) -> StepParams {
        StepParams {
            pd_tol: self.pd_tol,
            max_iterations: self.max_iterations,
            theta: self.theta,
            band_gamma: self.band_gamma,
            ..StepParams::new(self.h, lambda)
        }
    }

    pub fn with_h(&self, h: f64) -> StepSpec {
        StepSpec { h, ..self.clone() }
    }

    pub fn horizon_or(&self, default: f64) -> f64 {
        self.horizon.unwrap_or(default)
    }

    pub fn evolve_options(&self, horizon: f64) -> EvolveOptions {
        let mut o = EvolveOptions::new(self.params(0.0), horizon);
        o.snapshot_stride = self.snapshot_stride;
        o
    }
}

/// Forcing schedule description.
#[derive(Debug, Clone, PartialEq)]
pub enum ForcingSpec {
    Constant { value: f64, bound: f64 },
    Piecewise { breakpoints: Vec<f64>, values: Vec<f64>, bound: f64 },
    Sampled { spacing: f64, samples: Vec<f64>, bound: f64 },
}

impl ForcingSpec {
    pub fn constant(value: f64) -> Self {
        ForcingSpec::Constant { value, bound: value.abs() }
    }

    pub fn schedule(&self) -> Result<ForcingSchedule> {
        Ok(match self {
            ForcingSpec::Constant { value, bound } => ForcingSchedule::constant(*value, *bound)?,
            ForcingSpec::Piecewise { breakpoints, values, bound } => {
                ForcingSchedule::piecewise_constant(breakpoints.clone(), values.clone(), *bound)?
            }
            ForcingSpec::Sampled { spacing, samples, bound } => {
                ForcingSchedule::sampled(*spacing, samples.clone(), *bound)?
            }
        })
    }

    pub fn bound(&self) -> f64 {
        match self {
            ForcingSpec::Constant { bound, .. }
            | ForcingSpec::Piecewise { bound, .. }
            | ForcingSpec::Sampled { bound, .. } => *bound,
        }
    }

    /// The constant value, for presets that need a constant forcing.
    pub fn constant_value(&self) -> Option<f64> {
        match self {
            ForcingSpec::Constant { value, .. } => Some(*value),
            _ => None,
        }
    }
}

/// Preset-specific parameters; unused ones keep their defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentParams {
    /// Ball radius.
    pub radius: f64,
    /// Distance between the two balls of a separated union.
    pub gap: f64,
    /// Forcing of stationary presets; default `(n-1)/radius`.
    pub lambda: Option<f64>,
    /// Tolerance of the preset's main check; `None` uses the preset default.
    pub tol: Option<f64>,
    /// Randomized cases for `comparison` and `symmetry_check`.
    pub count: usize,
    /// Time steps of first-step sweeps.
    pub hs: Vec<f64>,
    /// Relative margin added to the measured shrink rate.
    pub margin: f64,
    /// Fraction of the fitted neck constant used by the barrier.
    pub safety: f64,
    /// Steps of the shrink-rate calibration run.
    pub calibration_steps: usize,
    /// Largest barrier index scanned by the horizon sweep.
    pub index_cap: usize,
}

impl Default for ExperimentParams {
    fn default() -> Self {
        ExperimentParams {
            radius: 0.25,
            gap: 0.2,
            lambda: None,
            tol: None,
            count: 20,
            hs: vec![4e-4, 1e-4, 2.5e-5],
            margin: 0.25,
            safety: 0.5,
            calibration_steps: 25,
            index_cap: 200,
        }
    }
}

/// A complete run description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub preset: Preset,
    pub grid: GridSpec,
    pub step: StepSpec,
    pub forcing: ForcingSpec,
    pub output: PathBuf,
    pub seed: u64,
    pub params: ExperimentParams,
}

fn parse<T: FromStr>(ini: &Ini, section: &'static str, key: &'static str) -> Result<Option<T>> {
    match ini.get(section, key) {
        None => Ok(None),
        Some(v) => v
            .parse::<T>()
            .map(Some)
            .map_err(|_| Error::Config(format!("[{section}] {key} = `{v}` is not a valid value"))),
    }
}

fn require<T: FromStr>(ini: &Ini, section: &'static str, key: &'static str) -> Result<T> {
    parse(ini, section, key)?.ok_or(Error::MissingKey { section, key })
}

fn list(ini: &Ini, section: &'static str, key: &'static str) -> Result<Option<Vec<f64>>> {
    match ini.get(section, key) {
        None => Ok(None),
        Some(v) => v
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(Some)
            .map_err(|_| Error::Config(format!("[{section}] {key} = `{v}` is not a list of numbers"))),
    }
}

const KNOWN: [(&str, &[&str]); 4] = [
    ("grid", &["n", "spacing", "extent"]),
    ("step", &["h", "horizon", "steps", "pd_tol", "max_iterations", "theta", "band_gamma", "snapshot_stride"]),
    ("forcing", &["kind", "value", "bound", "breakpoints", "values", "spacing", "samples"]),
    (
        "experiment",
        &[
            "preset",
            "output",
            "seed",
            "radius",
            "gap",
            "lambda",
            "tol",
            "count",
            "hs",
            "margin",
            "safety",
            "calibration_steps",
            "index_cap",
        ],
    ),
];

impl ExperimentSpec {
    pub fn from_text(text: &str) -> Result<Self> {
        Self::from_ini(&Ini::parse(text)?)
    }

    pub fn from_ini(ini: &Ini) -> Result<Self> {
        for (section, keys) in KNOWN {
            if let Some(k) = ini.keys(section).find(|k| !keys.contains(k)) {
                return Err(Error::Config(format!("unknown key `{k}` in [{section}]")));
            }
        }
        let preset: Preset = require::<String>(ini, "experiment", "preset")?.parse()?;

        let n: usize = parse(ini, "grid", "n")?.unwrap_or(2);
        if n != 2 && n != 3 {
            return Err(Error::Config(format!("[grid] n = {n}: dimension must be 2 or 3")));
        }
        let h: f64 = require(ini, "step", "h")?;
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Config("[step] h must be positive".into()));
        }
        let spacing: f64 = require(ini, "grid", "spacing")?;
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::Config("[grid] spacing must be positive".into()));
        }
        let grid = GridSpec { n, spacing, extent: parse(ini, "grid", "extent")? };

        let defaults = StepParams::new(h, 0.0);
        let horizon = match (parse::<f64>(ini, "step", "horizon")?, parse::<usize>(ini, "step", "steps")?) {
            (Some(_), Some(_)) => return Err(Error::Config("[step] give either horizon or steps".into())),
            (Some(t), None) => Some(t),
            (None, Some(k)) => Some(k as f64 * h),
            (None, None) => None,
        };
        let step = StepSpec {
            h,
            horizon,
            pd_tol: parse(ini, "step", "pd_tol")?.unwrap_or(defaults.pd_tol),
            max_iterations: parse(ini, "step", "max_iterations")?.unwrap_or(defaults.max_iterations),
            theta: parse(ini, "step", "theta")?.unwrap_or(defaults.theta),
            band_gamma: parse(ini, "step", "band_gamma")?.unwrap_or(defaults.band_gamma),
            snapshot_stride: parse(ini, "step", "snapshot_stride")?.unwrap_or(1),
        };
        step.params(0.0).validate()?;
        if step.snapshot_stride == 0 {
            return Err(Error::Config("[step] snapshot_stride must be positive".into()));
        }

        let forcing = parse_forcing(ini)?;
        forcing.schedule()?;

        let mut p = ExperimentParams::default();
        if let Some(v) = parse(ini, "experiment", "radius")? {
            p.radius = v;
        }
        if let Some(v) = parse(ini, "experiment", "gap")? {
            p.gap = v;
        }
        p.lambda = parse(ini, "experiment", "lambda")?;
        p.tol = parse(ini, "experiment", "tol")?;
        if let Some(v) = parse(ini, "experiment", "count")? {
            p.count = v;
        }
        if let Some(v) = list(ini, "experiment", "hs")? {
            p.hs = v;
        }
        if let Some(v) = parse(ini, "experiment", "margin")? {
            p.margin = v;
        }
        if let Some(v) = parse(ini, "experiment", "safety")? {
            p.safety = v;
        }
        if let Some(v) = parse(ini, "experiment", "calibration_steps")? {
            p.calibration_steps = v;
        }
        if let Some(v) = parse(ini, "experiment", "index_cap")? {
            p.index_cap = v;
        }
        if !(p.radius > 0.0) || p.tol.is_some_and(|t| !(t > 0.0)) {
            return Err(Error::Config("[experiment] radius and tol must be positive".into()));
        }
        if !(p.gap >= 0.0) || !(p.margin >= 0.0) {
            return Err(Error::Config("[experiment] gap and margin must be non-negative".into()));
        }
        if !(p.safety > 0.0 && p.safety <= 1.0) {
            return Err(Error::Config("[experiment] safety must lie in (0, 1]".into()));
        }
        if p.hs.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::Config("[experiment] hs must be positive".into()));
        }

        let output = ini
            .get("experiment", "output")
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("out").join(preset.name()));
        let seed = parse(ini, "experiment", "seed")?.unwrap_or(0);
        let spec = ExperimentSpec { preset, grid, step, forcing, output, seed, params: p };
        spec.check_preset()?;
        Ok(spec)
    }

    /// Preset-specific completeness.
    fn check_preset(&self) -> Result<()> {
        let needs_horizon = matches!(self.preset, Preset::ShrinkingBall);
        if needs_horizon && self.step.horizon.is_none() {
            return Err(Error::MissingKey { section: "step", key: "horizon" });
        }
        let needs_constant = matches!(
            self.preset,
            Preset::ShrinkingBall | Preset::TangentBalls | Preset::BarrierVerify | Preset::Calibrate
        );
        if needs_constant && self.forcing.constant_value().is_none() {
            return Err(Error::Config(format!("preset {} needs a constant forcing", self.preset)));
        }
        // A single time step passes here and fails as a calibration error.
        if matches!(self.preset, Preset::Calibrate | Preset::BarrierVerify | Preset::TangentBalls) && self.params.hs.is_empty() {
            return Err(Error::Config("[experiment] hs must list at least one time step".into()));
        }
        Ok(())
    }
}

fn parse_forcing(ini: &Ini) -> Result<ForcingSpec> {
    let kind = ini.get("forcing", "kind").unwrap_or("constant");
    let bound: Option<f64> = parse(ini, "forcing", "bound")?;
    let max_abs = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    Ok(match kind {
        "constant" => {
            let value: f64 = parse(ini, "forcing", "value")?.unwrap_or(0.0);
            ForcingSpec::Constant { value, bound: bound.unwrap_or(value.abs()) }
        }
        "piecewise" => {
            let breakpoints = list(ini, "forcing", "breakpoints")?.unwrap_or_default();
            let values = list(ini, "forcing", "values")?.ok_or(Error::MissingKey { section: "forcing", key: "values" })?;
            let bound = bound.unwrap_or(max_abs(&values));
            ForcingSpec::Piecewise { breakpoints, values, bound }
        }
        "sampled" => {
            let spacing = require(ini, "forcing", "spacing")?;
            let samples = list(ini, "forcing", "samples")?.ok_or(Error::MissingKey { section: "forcing", key: "samples" })?;
            let bound = bound.unwrap_or(max_abs(&samples));
            ForcingSpec::Sampled { spacing, samples, bound }
        }
        other => return Err(Error::Config(format!("[forcing] unknown kind `{other}`"))),
    })
}
