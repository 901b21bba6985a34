//! Experiment presets.
//!
//! Every preset returns an [`Outcome`] holding a [`Summary`] (one pass/fail
//! [`Check`] per measured property) together with the data behind it. Every
//! step taken by a preset also feeds an [`EnergyTally`] that
//! checks `F(E_{k+1}, E_k) ≤ P(E_k) - Λ|E_k| + ε_pd`.

use flatflow_core::axisym::{neck_radius, rasterize_solid, revolution_mean_curvature, Profile};
use flatflow_core::barrier::{
    admissible_alpha, check_invariants, fit_neck_growth, max_admissible_delta, verify_barrier_inclusion,
    BarrierParams, InvariantReport,
};
use flatflow_core::distance::signed_distance;
use flatflow_core::fit::power_law_fit;
use flatflow_core::flow::{
    check_comparison, evolve_observed, stationarity_ratio, EvolveOptions, ForcingSchedule, Termination, Trajectory,
};
use flatflow_core::grid::{perimeter, schwarz_symmetrize, volume};
use flatflow_core::shapes::{ball, balls, dist2};
use flatflow_core::solver::{energy, mm_step, StepParams};
use flatflow_core::{Grid, GridSet, Point};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::calibration::Calibration;
use crate::config::{ExperimentSpec, GridSpec, Preset};
use crate::io::{write_barrier_csv, Derived};
use crate::{parallel, Error, Result};

/// One measured property.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub measured: String,
    pub expected: String,
    pub passed: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, measured: impl Into<String>, expected: impl Into<String>, passed: bool) -> Self {
        Check { name: name.into(), measured: measured.into(), expected: expected.into(), passed }
    }
}

/// Energy inequality bookkeeping over all steps of a preset.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyTally {
    pub steps: usize,
    pub violations: usize,
    /// Largest `F(E_{k+1}, E_k) - (P(E_k) - Λ|E_k|) - ε_pd`.
    pub worst_excess: f64,
}

impl EnergyTally {
    fn record(&mut self, energy: f64, reference: f64, budget: f64) {
        let excess = energy - reference - budget;
        if self.steps == 0 || excess > self.worst_excess {
            self.worst_excess = excess;
        }
        self.steps += 1;
        if excess > 0.0 {
            self.violations += 1;
        }
    }

    /// Adds every step of a trajectory run with solver tolerance `pd_tol`.
    pub fn add_trajectory(&mut self, traj: &Trajectory, pd_tol: f64) {
        let budget = StepParams { pd_tol, ..StepParams::new(traj.h, 0.0) }.gap_budget(&traj.grid);
        for s in &traj.steps {
            self.record(s.energy, s.reference_energy, budget);
        }
    }

    /// Adds the step `e -> e_min` taken with `p`.
    pub fn add_step(&mut self, e: &GridSet, e_min: &GridSet, p: &StepParams) -> Result<()> {
        let reference = perimeter(e) - p.lambda * volume(e);
        if e.is_empty() {
            // F(∅, ∅) = 0 and the minimizer of an empty set is empty.
            self.record(if e_min.is_empty() { 0.0 } else { f64::INFINITY }, reference, 0.0);
            return Ok(());
        }
        self.record(energy(e_min, e, p)?, reference, p.gap_budget(e.grid()));
        Ok(())
    }

    pub fn merge(&mut self, other: &EnergyTally) {
        if other.steps == 0 {
            return;
        }
        if self.steps == 0 || other.worst_excess > self.worst_excess {
            self.worst_excess = other.worst_excess;
        }
        self.steps += other.steps;
        self.violations += other.violations;
    }

    pub fn check(&self) -> Check {
        Check::new(
            "energy decrease",
            format!("{} violations in {} steps (worst excess {:.3e})", self.violations, self.steps, self.worst_excess),
            "0 violations",
            self.violations == 0,
        )
    }
}

/// Pass/fail record of a preset.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub preset: Preset,
    /// The property the preset exercises.
    pub statement: &'static str,
    pub checks: Vec<Check>,
    pub energy: EnergyTally,
}

impl Summary {
    /// All checks, including the energy inequality.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed) && self.energy.violations == 0
    }

    pub fn rows(&self) -> Vec<Check> {
        let mut rows = self.checks.clone();
        rows.push(self.energy.check());
        rows
    }
}

/// A labeled trajectory with per-step derived quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct Run {
    pub label: String,
    pub trajectory: Trajectory,
    pub derived: Vec<Derived>,
}

/// Everything a preset produces.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub summary: Summary,
    /// The first run is the primary one.
    pub runs: Vec<Run>,
    /// Extra files `(name, contents)` for the run directory.
    pub files: Vec<(String, String)>,
    /// Calibration produced or consumed by the preset.
    pub calibration: Option<Calibration>,
}

/// Radius of the ball with the volume of `set`.
pub fn equivalent_radius(set: &GridSet) -> f64 {
    let v = volume(set);
    match set.grid().dim() {
        2 => (v / std::f64::consts::PI).sqrt(),
        _ => (3.0 * v / (4.0 * std::f64::consts::PI)).cbrt(),
    }
}

/// Distance from `center` to the nearest non-member cell center: every
/// rasterized closed ball about `center` with a smaller radius lies in `set`.
pub fn sampled_inscribed_radius(set: &GridSet, center: &Point) -> f64 {
    let g = set.grid();
    let n = g.dim();
    let mut best = f64::INFINITY;
    for i in 0..g.len() {
        if !set.contains(i) {
            best = best.min(dist2(&g.cell_center(g.coords(i)), center, n));
        }
    }
    // Cells beyond the box are outside the set.
    let edge = g.distance_to_boundary(center) + 0.5 * g.spacing();
    best.sqrt().min(edge)
}

/// Runs `evolve`, recording the equivalent radius (and the neck radius at
/// `x1 = 0` if `neck`) of every produced set. A failed run is an error.
pub fn evolve_measured(
    e0: &GridSet,
    f: &ForcingSchedule,
    opts: &EvolveOptions,
    neck: bool,
) -> Result<(Trajectory, Vec<Derived>)> {
    let mut derived = Vec::new();
    let traj = evolve_observed(e0, f, opts, |k, set| {
        if k > 0 {
            derived.push(Derived { radius: equivalent_radius(set), neck: neck.then(|| neck_radius(set, 0.0)) });
        }
    })?;
    if let Termination::Failed { error, .. } = &traj.termination {
        return Err(Error::Core(error.clone()));
    }
    Ok((traj, derived))
}

fn fmt(v: f64) -> String {
    format!("{v:.6}")
}

fn x1(t: f64) -> Point {
    [t, 0.0, 0.0]
}

/// Box half-widths for data reaching `reach[a]` along each axis, with room
/// for forcing-driven growth over `horizon` and eight cells.
fn half_widths(reach: &[f64], bound: f64, horizon: f64, dx: f64) -> Vec<f64> {
    reach.iter().map(|r| r + bound * horizon + 8.0 * dx).collect()
}

fn reach(n: usize, along: f64, across: f64) -> Vec<f64> {
    let mut v = vec![across; n];
    v[0] = along;
    v
}

/// Radius of a ball under `dr/dt = Λ - (n-1)/r`: closed form for `Λ = 0`,
/// classical Runge-Kutta otherwise; `0` once the ball has vanished.
pub fn ball_radius_oracle(r0: f64, lambda: f64, n: usize, t: f64) -> f64 {
    let c = (n - 1) as f64;
    if lambda == 0.0 {
        return (r0 * r0 - 2.0 * c * t).max(0.0).sqrt();
    }
    let rate = |r: f64| lambda - c / r;
    let steps = ((t / 1e-5).ceil() as usize).max(1);
    let dt = t / steps as f64;
    let mut r = r0;
    for _ in 0..steps {
        let k1 = rate(r);
        let k2 = rate(r + 0.5 * dt * k1);
        let k3 = rate(r + 0.5 * dt * k2);
        let k4 = rate(r + dt * k3);
        r += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if !(r > 0.0) {
            return 0.0;
        }
    }
    r
}

/// Ball of radius `r0` under constant forcing; radius trace against the
/// ball ODE while the oracle radius stays above eight cells.
pub fn shrinking_ball(spec: &ExperimentSpec) -> Result<Outcome> {
    let n = spec.grid.n;
    let r0 = spec.params.radius;
    let lambda = spec.forcing.constant_value().unwrap_or(0.0);
    let horizon = spec.step.horizon_or(0.0);
    let dx = spec.grid.spacing;
    let grid = spec.grid.grid_for(&half_widths(&vec![r0; n], lambda.max(0.0), horizon, dx))?;
    let e0 = ball(&grid, x1(0.0), r0);
    let f = spec.forcing.schedule()?;
    let (traj, derived) = evolve_measured(&e0, &f, &spec.step.evolve_options(horizon), false)?;
    let mut worst = 0.0f64;
    let mut compared = 0;
    for (s, d) in traj.steps.iter().zip(&derived) {
        let r = ball_radius_oracle(r0, lambda, n, s.t);
        if r >= 8.0 * dx {
            worst = worst.max((d.radius - r).abs() / r);
            compared += 1;
        }
    }
    let tol = spec.params.tol.unwrap_or(0.05);
    let mut energy = EnergyTally::default();
    energy.add_trajectory(&traj, spec.step.pd_tol);
    let checks = vec![
        Check::new("radius law max relative error", fmt(worst), format!("<= {tol}"), compared > 0 && worst <= tol),
        Check::new("steps compared", compared.to_string(), "> 0", compared > 0),
    ];
    Ok(Outcome {
        summary: Summary { preset: Preset::ShrinkingBall, statement: "a ball moves by dr/dt = Λ - (n-1)/r", checks, energy },
        runs: vec![Run { label: "main".into(), trajectory: traj, derived }],
        files: Vec::new(),
        calibration: None,
    })
}

fn stationary_lambda(spec: &ExperimentSpec) -> f64 {
    spec.params.lambda.unwrap_or((spec.grid.n - 1) as f64 / spec.params.radius)
}

fn run_constant(
    spec: &ExperimentSpec,
    e0: &GridSet,
    lambda: f64,
    horizon: f64,
    neck: bool,
) -> Result<(Trajectory, Vec<Derived>)> {
    let f = ForcingSchedule::constant(lambda, lambda.abs())?;
    evolve_measured(e0, &f, &spec.step.evolve_options(horizon), neck)
}

/// Ball of radius `r` with `Λ = (n-1)/r`; must stay within `tol` in
/// relative symmetric difference.
pub fn stationary_ball(spec: &ExperimentSpec) -> Result<Outcome> {
    let n = spec.grid.n;
    let r = spec.params.radius;
    let lambda = stationary_lambda(spec);
    let horizon = spec.step.horizon_or(40.0 * spec.step.h);
    let grid = spec.grid.grid_for(&half_widths(&vec![r; n], lambda.abs(), horizon, spec.grid.spacing))?;
    let (traj, derived) = run_constant(spec, &ball(&grid, x1(0.0), r), lambda, horizon, false)?;
    let ratio = stationarity_ratio(&traj)?;
    let tol = spec.params.tol.unwrap_or(0.02);
    let mut energy = EnergyTally::default();
    energy.add_trajectory(&traj, spec.step.pd_tol);
    let checks = vec![Check::new("stationary ratio", fmt(ratio), format!("<= {tol}"), ratio <= tol)];
    Ok(Outcome {
        summary: Summary { preset: Preset::StationaryBall, statement: "balls of radius (n-1)/Λ are stationary", checks, energy },
        runs: vec![Run { label: "main".into(), trajectory: traj, derived }],
        files: Vec::new(),
        calibration: None,
    })
}

/// Two balls of radius `r` at distance `gap` stay put under `Λ = (n-1)/r`;
/// the same balls made tangent grow a neck and move.
pub fn stationary_union(spec: &ExperimentSpec) -> Result<Outcome> {
    let n = spec.grid.n;
    let r = spec.params.radius;
    let gap = spec.params.gap;
    let lambda = stationary_lambda(spec);
    let horizon = spec.step.horizon_or(40.0 * spec.step.h);
    let dx = spec.grid.spacing;
    let tol = spec.params.tol.unwrap_or(0.02);
    let cases = [(r + 0.5 * gap, "separated"), (r, "tangent")];
    let results = parallel::map(&cases, |&(offset, label)| -> Result<Run> {
        let grid = spec.grid.grid_for(&half_widths(&reach(n, offset + r, r), lambda.abs(), horizon, dx))?;
        let e0 = balls(&grid, &[(x1(-offset), r), (x1(offset), r)]);
        let (trajectory, derived) = run_constant(spec, &e0, lambda, horizon, true)?;
        Ok(Run { label: label.into(), trajectory, derived })
    });
    let runs = results.into_iter().collect::<Result<Vec<_>>>()?;
    let mut energy = EnergyTally::default();
    for run in &runs {
        energy.add_trajectory(&run.trajectory, spec.step.pd_tol);
    }
    let separated = stationarity_ratio(&runs[0].trajectory)?;
    let tangent = stationarity_ratio(&runs[1].trajectory)?;
    let neck = runs[1].derived.first().and_then(|d| d.neck).unwrap_or(0.0);
    let tdx = runs[1].trajectory.grid.spacing();
    let checks = vec![
        Check::new("separated union stationary ratio", fmt(separated), format!("<= {tol}"), separated <= tol),
        Check::new("tangent union stationary ratio", fmt(tangent), format!("> {tol}"), tangent > tol),
        Check::new("tangent union first-step neck", fmt(neck), format!(">= 4dx = {}", fmt(4.0 * tdx)), neck >= 4.0 * tdx),
    ];
    Ok(Outcome {
        summary: Summary {
            preset: Preset::StationaryUnion,
            statement: "unions of balls of radius (n-1)/Λ at positive distance are stationary; tangent ones are not",
            checks,
            energy,
        },
        runs,
        files: Vec::new(),
        calibration: None,
    })
}

/// First step from two tangent balls at time step `h` on a grid with
/// `Δx = min(spacing, √h/8)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstStep {
    pub h: f64,
    pub dx: f64,
    /// `neck_radius(E^{h,1}, 0)`.
    pub neck: f64,
    pub band_width_observed: f64,
    pub energy: EnergyTally,
}

/// One step from `B(-r e1, r) ∪ B(r e1, r)` under constant forcing
/// `lambda`, for each `h`.
pub fn tangent_first_steps(spec: &ExperimentSpec, hs: &[f64], lambda: f64) -> Result<Vec<FirstStep>> {
    let n = spec.grid.n;
    let r = spec.params.radius;
    let results = parallel::map(hs, |&h| -> Result<FirstStep> {
        let dx = spec.grid.spacing.min(h.sqrt() / 8.0);
        let grid = GridSpec { spacing: dx, ..spec.grid.clone() }.grid_for(&half_widths(&reach(n, 2.0 * r, r), lambda.abs(), h, dx))?;
        let e0 = balls(&grid, &[(x1(-r), r), (x1(r), r)]);
        let p = spec.step.with_h(h).params(lambda);
        let (e1, report) = mm_step(&e0, &p)?;
        let mut energy = EnergyTally::default();
        energy.add_step(&e0, &e1, &p)?;
        Ok(FirstStep { h, dx, neck: neck_radius(&e1, 0.0), band_width_observed: report.band_width_observed, energy })
    });
    results.into_iter().collect()
}

/// Tangent balls: first-step necks across `hs` (with the `h^{1/4}` law when
/// there are several), and, when a horizon is configured, growth of the neck
/// and shrinkage of the balls over `(h, T]`.
pub fn tangent_balls(spec: &ExperimentSpec) -> Result<Outcome> {
    let n = spec.grid.n;
    let r = spec.params.radius;
    let lambda = spec.forcing.constant_value().unwrap_or(0.0);
    let mut energy = EnergyTally::default();
    let mut checks = Vec::new();
    let firsts = tangent_first_steps(spec, &spec.params.hs, lambda)?;
    for fs in &firsts {
        energy.merge(&fs.energy);
        checks.push(Check::new(
            format!("first-step neck at h={}", fs.h),
            fmt(fs.neck),
            format!(">= 4dx = {}", fmt(4.0 * fs.dx)),
            fs.neck >= 4.0 * fs.dx,
        ));
    }
    if firsts.len() >= 2 {
        let hs: Vec<f64> = firsts.iter().map(|f| f.h).collect();
        let necks: Vec<f64> = firsts.iter().map(|f| f.neck).collect();
        match power_law_fit(&hs, &necks) {
            Ok(fit) => checks.push(Check::new(
                "first-step neck exponent",
                format!("{} (R^2 {:.4}, alpha {:.4})", fmt(fit.slope), fit.r_squared, fit.intercept.exp()),
                "in [0.15, 0.35]",
                (0.15..=0.35).contains(&fit.slope),
            )),
            Err(e) => checks.push(Check::new("first-step neck exponent", e.to_string(), "in [0.15, 0.35]", false)),
        }
    }
    let mut runs = Vec::new();
    if let Some(horizon) = spec.step.horizon {
        let dx = spec.grid.spacing;
        let grid = spec.grid.grid_for(&half_widths(&reach(n, 2.0 * r, r), lambda.abs(), horizon, dx))?;
        let e0 = balls(&grid, &[(x1(-r), r), (x1(r), r)]);
        let f = spec.forcing.schedule()?;
        let (traj, derived) = evolve_measured(&e0, &f, &spec.step.evolve_options(horizon), true)?;
        energy.add_trajectory(&traj, spec.step.pd_tol);
        match fit_neck_growth(&traj, r, horizon) {
            Ok(fit) => {
                checks.push(Check::new(
                    "neck growth slope",
                    format!("{} +- {}", fmt(fit.neck.slope), fmt(fit.neck.slope_ci95())),
                    "> 0",
                    fit.neck.slope > 0.0,
                ));
                checks.push(Check::new(
                    "ball shrink slope",
                    format!("{} +- {}", fmt(fit.shrink.slope), fmt(fit.shrink.slope_ci95())),
                    "> 0",
                    fit.shrink.slope > 0.0,
                ));
            }
            Err(e) => checks.push(Check::new("neck growth fit", e.to_string(), "slopes > 0", false)),
        }
        runs.push(Run { label: "main".into(), trajectory: traj, derived });
    }
    let mut table = String::from("h,dx,neck,band_width_observed\n");
    for fs in &firsts {
        table.push_str(&format!("{},{},{},{}\n", fs.h, fs.dx, fs.neck, fs.band_width_observed));
    }
    Ok(Outcome {
        summary: Summary { preset: Preset::TangentBalls, statement: "tangent balls instantly grow a neck", checks, energy },
        runs,
        files: vec![("first_steps.csv".into(), table)],
        calibration: None,
    })
}

/// One randomized nested pair for the comparison suite.
#[derive(Debug, Clone, PartialEq)]
pub struct NestedPair {
    pub kind: &'static str,
    pub outer: GridSet,
    pub inner: GridSet,
    pub lambda: f64,
    pub lambda_inner: f64,
}

/// Samples of a random profile `g ≥ 0` on `[-1, 1]` vanishing at the endpoints.
fn random_profile(rng: &mut ChaCha8Rng, height: f64) -> Vec<f64> {
    let power = rng.gen_range(0.5..1.0);
    let wobble = rng.gen_range(-0.3..0.3);
    let waves = rng.gen_range(1..=3) as f64;
    (0..=128)
        .map(|j| {
            let u = j as f64 / 64.0 - 1.0;
            let envelope = (1.0 - u * u).max(0.0).powf(power);
            height * envelope * (1.0 + wobble * (std::f64::consts::PI * waves * u).cos())
        })
        .map(|g| g.max(0.0))
        .collect()
}

/// Deterministic corpus of nested pairs `inner ⊂ outer` on `grid`, cycling
/// through balls, unions of two balls and solids of revolution. Inner sets
/// keep at least three cells from the complement of the outer set.
pub fn nested_pairs(grid: &Grid, count: usize, seed: u64) -> Result<Vec<NestedPair>> {
    let n = grid.dim();
    let dx = grid.spacing();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for j in 0..count {
        let mut c = [0.0; 3];
        for v in c.iter_mut().take(n) {
            *v = rng.gen_range(-0.05..0.05);
        }
        let lambda = rng.gen_range(0.0..4.0);
        let lambda_inner = if rng.gen_bool(0.25) { lambda } else { lambda - rng.gen_range(0.0..2.0) };
        let (kind, outer, inner) = match j % 3 {
            0 => {
                let big = rng.gen_range(0.15..0.3);
                let small = rng.gen_range(0.4 * big..big - 6.0 * dx);
                let room = big - small - 3.0 * dx;
                let mut ci = c;
                ci[0] += rng.gen_range(-0.7..0.7) * room;
                ("ball", ball(grid, c, big), ball(grid, ci, small))
            }
            1 => {
                let s = rng.gen_range(0.1..0.18);
                let (r1, r2) = (rng.gen_range(0.12..0.2), rng.gen_range(0.12..0.2));
                let (c1, c2) = ([c[0] - s, c[1], c[2]], [c[0] + s, c[1], c[2]]);
                let (q1, q2) = (rng.gen_range(3.0 * dx..0.5 * r1), rng.gen_range(3.0 * dx..0.5 * r2));
                ("union", balls(grid, &[(c1, r1), (c2, r2)]), balls(grid, &[(c1, r1 - q1), (c2, r2 - q2)]))
            }
            _ => {
                let half = rng.gen_range(0.25..0.35);
                let height = rng.gen_range(0.12..0.2);
                let g = random_profile(&mut rng, height);
                let depth = rng.gen_range(3.0 * dx..0.4 * height);
                let outer = rasterize_solid(&Profile::sampled(-half, half, g)?, grid, &c)?;
                let d = signed_distance(&outer);
                let inner = GridSet::empty(grid);
                let inner = outer.members().filter(|&i| d.get(i) < -depth).fold(inner, |mut s, i| {
                    s.insert(i);
                    s
                });
                ("revolution", outer, inner)
            }
        };
        let inner = inner.intersection(&outer)?;
        out.push(NestedPair { kind, outer, inner, lambda, lambda_inner });
    }
    Ok(out)
}

/// Randomized comparison suite: one step of each nested pair; the inner
/// minimizer may exceed the outer one by at most one boundary ring.
pub fn comparison(spec: &ExperimentSpec) -> Result<Outcome> {
    let grid = spec.grid.grid_for(&vec![0.5; spec.grid.n])?;
    let count = spec.params.count;
    let pairs = nested_pairs(&grid, count, spec.seed)?;
    let results = parallel::map(&pairs, |pair| -> Result<(usize, usize, EnergyTally)> {
        let p = spec.step.params(pair.lambda);
        let pi = spec.step.params(pair.lambda_inner);
        let out = check_comparison(&pair.outer, &pair.inner, pair.lambda, pair.lambda_inner, &p)?;
        let mut tally = EnergyTally::default();
        tally.add_step(&pair.outer, &out.outer, &p)?;
        tally.add_step(&pair.inner, &out.inner, &pi)?;
        Ok((out.excess_cells, out.budget_cells, tally))
    });
    let mut energy = EnergyTally::default();
    let mut failed = Vec::new();
    let mut table = String::from("case,kind,lambda,lambda_inner,excess_cells,budget_cells,passed\n");
    for (j, (pair, res)) in pairs.iter().zip(results).enumerate() {
        let (excess, budget, tally) = res?;
        energy.merge(&tally);
        if excess > budget {
            failed.push(j);
        }
        table.push_str(&format!(
            "{j},{},{},{},{excess},{budget},{}\n",
            pair.kind,
            pair.lambda,
            pair.lambda_inner,
            excess <= budget
        ));
    }
    let checks = vec![Check::new(
        "nested pairs within one ring",
        format!("{}/{} (failed: {:?})", count - failed.len(), count, failed),
        format!("{count}/{count}"),
        failed.is_empty() && count > 0,
    )];
    Ok(Outcome {
        summary: Summary { preset: Preset::Comparison, statement: "minimizers of nested sets stay nested", checks, energy },
        runs: Vec::new(),
        files: vec![("comparison.csv".into(), table)],
        calibration: None,
    })
}

/// Randomized symmetry suite: one step of Schwarz-symmetric solids of
/// revolution about the `x1` axis; the result must equal its own
/// symmetrization within one boundary ring.
pub fn symmetry_check(spec: &ExperimentSpec) -> Result<Outcome> {
    let grid = spec.grid.grid_for(&vec![0.5; spec.grid.n])?;
    let count = spec.params.count;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut cases = Vec::with_capacity(count);
    for _ in 0..count {
        let half = rng.gen_range(0.2..0.4);
        let height = rng.gen_range(0.1..0.25);
        let g = random_profile(&mut rng, height);
        let lambda = rng.gen_range(0.0..4.0);
        let set = rasterize_solid(&Profile::sampled(-half, half, g)?, &grid, &x1(0.0))?;
        cases.push((set, lambda));
    }
    let results = parallel::map(&cases, |(e0, lambda)| -> Result<(usize, usize, usize, EnergyTally)> {
        let p = spec.step.params(*lambda);
        let (e1, _) = mm_step(e0, &p)?;
        let input_asym = e0.symmetric_difference_count(&schwarz_symmetrize(e0, 0)?)?;
        let asym = e1.symmetric_difference_count(&schwarz_symmetrize(&e1, 0)?)?;
        let mut tally = EnergyTally::default();
        tally.add_step(e0, &e1, &p)?;
        Ok((input_asym, asym, e1.boundary_ring().count(), tally))
    });
    let mut energy = EnergyTally::default();
    let mut failed = Vec::new();
    let mut inputs_symmetric = true;
    let mut table = String::from("case,lambda,input_asymmetry_cells,asymmetry_cells,budget_cells,passed\n");
    for (j, ((_, lambda), res)) in cases.iter().zip(results).enumerate() {
        let (input_asym, asym, budget, tally) = res?;
        energy.merge(&tally);
        inputs_symmetric &= input_asym == 0;
        if asym > budget {
            failed.push(j);
        }
        table.push_str(&format!("{j},{lambda},{input_asym},{asym},{budget},{}\n", asym <= budget));
    }
    let checks = vec![
        Check::new("inputs Schwarz symmetric", inputs_symmetric.to_string(), "true", inputs_symmetric),
        Check::new(
            "outputs symmetric within one ring",
            format!("{}/{} (failed: {:?})", count - failed.len(), count, failed),
            format!("{count}/{count}"),
            failed.is_empty() && count > 0,
        ),
    ];
    Ok(Outcome {
        summary: Summary { preset: Preset::SymmetryCheck, statement: "one step preserves Schwarz symmetry", checks, energy },
        runs: Vec::new(),
        files: vec![("symmetry.csv".into(), table)],
        calibration: None,
    })
}

/// Empirical barrier constants.
///
/// `η` is the largest rate `(r - ρ_k)/(k h)` over a run of a single ball of
/// radius `r` under the configured forcing, where `ρ_k` is the distance from
/// the center to the nearest non-member cell center, inflated by the margin.
/// `α` is the smallest `neck / h^{1/4}` over first steps from tangent balls
/// across `hs`; the log-log fit of those necks must have `R² ≥ 0.9`.
pub fn calibrate(spec: &ExperimentSpec) -> Result<(Calibration, EnergyTally)> {
    let n = spec.grid.n;
    let r = spec.params.radius;
    let value = spec.forcing.constant_value().ok_or_else(|| Error::Config("calibration needs a constant forcing".into()))?;
    let bound = spec.forcing.bound();
    let h = spec.step.h;
    let dx = spec.grid.spacing;
    if spec.params.hs.len() < 2 {
        return Err(Error::Calibration("the neck law fit needs at least two time steps in hs".into()));
    }
    let steps = spec.params.calibration_steps.max(1);
    let horizon = steps as f64 * h;
    let mut energy = EnergyTally::default();

    let grid = spec.grid.grid_for(&half_widths(&vec![r; n], bound, horizon, dx))?;
    let (traj, _) = run_constant(spec, &ball(&grid, x1(0.0), r), value, horizon, false)?;
    energy.add_trajectory(&traj, spec.step.pd_tol);
    let mut eta_measured = 0.0f64;
    for s in traj.snapshots.iter().filter(|s| s.k > 0) {
        let rho = sampled_inscribed_radius(&s.set, &x1(0.0));
        eta_measured = eta_measured.max((r - rho) / s.t);
    }
    let mut gamma_emp = traj.steps.iter().map(|s| s.report.band_width_observed / h.sqrt()).fold(0.0, f64::max);

    let firsts = tangent_first_steps(spec, &spec.params.hs, value)?;
    for fs in &firsts {
        energy.merge(&fs.energy);
        gamma_emp = gamma_emp.max(fs.band_width_observed / fs.h.sqrt());
    }
    let hs: Vec<f64> = firsts.iter().map(|f| f.h).collect();
    let necks: Vec<f64> = firsts.iter().map(|f| f.neck).collect();
    let fit = power_law_fit(&hs, &necks).map_err(|e| Error::Calibration(e.to_string()))?;
    if fit.r_squared < 0.9 {
        return Err(Error::Calibration(format!("neck law fit has R^2 = {:.4} < 0.9", fit.r_squared)));
    }
    let alpha_fit = firsts.iter().map(|f| f.neck / f.h.powf(0.25)).fold(f64::INFINITY, f64::min);
    let cal = Calibration {
        n,
        radius: r,
        forcing: value,
        c0: bound,
        h,
        spacing: dx,
        eta_measured,
        margin: spec.params.margin,
        eta: eta_measured.max(0.0) * (1.0 + spec.params.margin),
        alpha_fit,
        neck_exponent: fit.slope,
        neck_r_squared: fit.r_squared,
        gamma_emp,
    };
    Ok((cal, energy))
}

/// The `calibrate` preset.
pub fn calibrate_preset(spec: &ExperimentSpec) -> Result<Outcome> {
    let (cal, energy) = calibrate(spec)?;
    let checks = vec![
        Check::new("neck law R^2", format!("{:.4}", cal.neck_r_squared), ">= 0.9", cal.neck_r_squared >= 0.9),
        Check::new("shrink rate eta", fmt(cal.eta), ">= 0", cal.eta >= 0.0),
        Check::new("neck constant alpha", fmt(cal.alpha_fit), "> 0", cal.alpha_fit > 0.0),
    ];
    Ok(Outcome {
        summary: Summary { preset: Preset::Calibrate, statement: "empirical barrier constants", checks, energy },
        runs: Vec::new(),
        files: vec![("calibration.ini".into(), cal.to_text())],
        calibration: Some(cal),
    })
}

/// Barrier constants for a calibrated run, with the swept horizon.
pub fn barrier_params(spec: &ExperimentSpec, cal: &Calibration) -> Result<(BarrierParams, Vec<InvariantReport>)> {
    let n = spec.grid.n;
    let r = spec.params.radius;
    let c0 = spec.forcing.bound();
    let mismatch = [
        ("n", cal.n != n),
        ("radius", cal.radius != r),
        ("c0", cal.c0 != c0),
        ("forcing", Some(cal.forcing) != spec.forcing.constant_value()),
    ];
    if let Some((key, _)) = mismatch.iter().find(|m| m.1) {
        return Err(Error::Config(format!("calibration `{key}` does not match the run")));
    }
    let h = spec.step.h;
    let probe = BarrierParams::new(n, r, c0, cal.eta, 1.0, 0.0, h)?;
    let alpha = admissible_alpha(cal.alpha_fit, spec.params.safety, r, probe.lambda0(), c0, h);
    let p = BarrierParams { alpha, ..probe };
    let sweep = max_admissible_delta(&p, spec.params.index_cap)?;
    let p = p.with_delta(sweep.delta);
    let reports = (1..=p.max_index()).map(|i| check_invariants(&p, i)).collect::<flatflow_core::Result<Vec<_>>>()?;
    Ok((p, reports))
}

/// Barrier verification: sweep the horizon, run the tangent balls for
/// `floor(δ/h) + 1` steps and check `G_i ⊂ E^{h,i}` and all invariants.
pub fn barrier_verify(spec: &ExperimentSpec, cal: &Calibration) -> Result<Outcome> {
    let n = spec.grid.n;
    let r = spec.params.radius;
    let (p, reports) = barrier_params(spec, cal)?;
    let steps = p.max_index();
    let horizon = steps as f64 * p.h;
    let dx = spec.grid.spacing;
    let grid = spec.grid.grid_for(&half_widths(&reach(n, 2.0 * r, r), p.c0, horizon, dx))?;
    let e0 = balls(&grid, &[(x1(-r), r), (x1(r), r)]);
    let opts = EvolveOptions { snapshot_stride: 1, ..spec.step.evolve_options(horizon) };
    let (traj, derived) = evolve_measured(&e0, &spec.forcing.schedule()?, &opts, true)?;
    let mut energy = EnergyTally::default();
    energy.add_trajectory(&traj, spec.step.pd_tol);
    let inclusion = verify_barrier_inclusion(&traj, &p)?;
    let failing: Vec<(usize, &'static str)> =
        reports.iter().filter_map(|rep| rep.first_failure().map(|w| (rep.step.index, w))).collect();
    let min_margin = reports.iter().map(|rep| rep.certificate.margin()).fold(f64::INFINITY, f64::min);
    let worst = inclusion.rows.iter().max_by_key(|row| row.gap_cells).copied();
    let checks = vec![
        Check::new(
            "barrier constants",
            format!("eta {} alpha {} Lambda0 {} delta {} ({} indices)", fmt(p.eta), fmt(p.alpha), p.lambda0(), fmt(p.delta), steps),
            ">= 2 indices",
            steps >= 2,
        ),
        Check::new("invariant chain", format!("{} failing indices {:?}", failing.len(), failing), "none failing", failing.is_empty()),
        Check::new("curvature certificate margin", fmt(min_margin), ">= 0", min_margin >= 0.0),
        Check::new(
            "barrier inclusion",
            format!(
                "{}/{} indices (first failure {:?}, worst gap {:?})",
                inclusion.rows.iter().filter(|row| row.passed()).count(),
                steps,
                inclusion.first_failure(),
                worst.map(|w| (w.index, w.gap_cells, w.budget_cells))
            ),
            format!("{steps}/{steps} within one ring"),
            inclusion.passed() && inclusion.rows.len() == steps,
        ),
    ];
    let mut csv = Vec::new();
    write_barrier_csv(&mut csv, p.h, &reports, &inclusion.rows)?;
    Ok(Outcome {
        summary: Summary { preset: Preset::BarrierVerify, statement: "the explicit barrier stays inside the flow", checks, energy },
        runs: vec![Run { label: "main".into(), trajectory: traj, derived }],
        files: vec![("barrier.csv".into(), String::from_utf8(csv).expect("csv is utf-8"))],
        calibration: Some(cal.clone()),
    })
}

/// Mean curvature of the cylinder and sphere profiles against their closed
/// forms: largest absolute deviation over interior sample points.
pub fn curvature_oracle_error(n: usize) -> Result<f64> {
    let mut worst = 0.0f64;
    let (radius, len) = (0.3, 0.8);
    let cylinder = Profile::constant(radius, -len, len)?;
    let sphere = Profile::circle_arc(radius, 0.1)?;
    for j in 1..64 {
        let u = j as f64 / 64.0;
        let x = -len + 2.0 * len * u;
        let expected = (n - 2) as f64 / radius;
        worst = worst.max((revolution_mean_curvature(&cylinder, x, n)? - expected).abs());
        let xs = 0.1 - radius + 2.0 * radius * u;
        let expected = (n - 1) as f64 / radius;
        worst = worst.max((revolution_mean_curvature(&sphere, xs, n)? - expected).abs());
    }
    Ok(worst)
}

/// Runs a preset. `barrier_verify` calibrates first unless a calibration
/// is given.
pub fn run_preset(spec: &ExperimentSpec, calibration: Option<&Calibration>) -> Result<Outcome> {
    match spec.preset {
        Preset::ShrinkingBall => shrinking_ball(spec),
        Preset::StationaryBall => stationary_ball(spec),
        Preset::StationaryUnion => stationary_union(spec),
        Preset::TangentBalls => tangent_balls(spec),
        Preset::Comparison => comparison(spec),
        Preset::SymmetryCheck => symmetry_check(spec),
        Preset::Calibrate => calibrate_preset(spec),
        Preset::BarrierVerify => match calibration {
            Some(cal) => barrier_verify(spec, cal),
            None => {
                let (cal, tally) = calibrate(spec)?;
                let mut out = barrier_verify(spec, &cal)?;
                out.summary.energy.merge(&tally);
                out.files.push(("calibration.ini".into(), cal.to_text()));
                Ok(out)
            }
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ExperimentParams, ForcingSpec, StepSpec};

    fn spec(preset: Preset, spacing: f64, h: f64) -> ExperimentSpec {
        ExperimentSpec {
            preset,
            grid: GridSpec { n: 2, spacing, extent: None },
            step: StepSpec {
                h,
                horizon: None,
                pd_tol: 1e-6,
                max_iterations: 20000,
                theta: 0.5,
                band_gamma: 0.5,
                snapshot_stride: 1,
            },
            forcing: ForcingSpec::constant(0.0),
            output: "unused".into(),
            seed: 7,
            params: ExperimentParams::default(),
        }
    }

    #[test]
    fn oracle_closed_form_and_ode_agree() {
        for t in [0.0, 0.01, 0.03] {
            let closed = ball_radius_oracle(0.35, 0.0, 2, t);
            assert!((closed - (0.35f64 * 0.35 - 2.0 * t).sqrt()).abs() < 1e-15);
        }
        // Λ = (n-1)/r keeps the radius; a tiny Λ tracks the closed form.
        assert!((ball_radius_oracle(0.25, 4.0, 2, 0.1) - 0.25).abs() < 1e-12);
        let tiny = ball_radius_oracle(0.35, 1e-12, 2, 0.03);
        assert!((tiny - ball_radius_oracle(0.35, 0.0, 2, 0.03)).abs() < 1e-9);
        assert_eq!(ball_radius_oracle(0.1, 1e-9, 2, 1.0), 0.0);
    }

    #[test]
    fn sampled_inscribed_radius_of_rasterized_ball() {
        let grid = GridSpec::centered(2, 1.0 / 64.0, &[1.0, 1.0]).unwrap();
        let b = flatflow_core::shapes::closed_ball(&grid, x1(0.0), 0.3);
        let rho = sampled_inscribed_radius(&b, &x1(0.0));
        assert!(rho > 0.3 && rho < 0.3 + grid.spacing());
        // Every closed ball of smaller radius is contained.
        let smaller = flatflow_core::shapes::closed_ball(&grid, x1(0.0), rho - 1e-12);
        assert!(smaller.is_subset(&b).unwrap());
        assert!(!flatflow_core::shapes::closed_ball(&grid, x1(0.0), rho).is_subset(&b).unwrap());
    }

    #[test]
    fn nested_pairs_are_nested_and_deterministic() {
        let grid = GridSpec::centered(2, 1.0 / 64.0, &[1.0, 1.0]).unwrap();
        let a = nested_pairs(&grid, 9, 3).unwrap();
        assert_eq!(a, nested_pairs(&grid, 9, 3).unwrap());
        for pair in &a {
            assert!(pair.inner.is_subset(&pair.outer).unwrap());
            assert!(!pair.inner.is_empty());
            assert!(pair.lambda_inner <= pair.lambda);
        }
        assert_ne!(a, nested_pairs(&grid, 9, 4).unwrap());
    }

    #[test]
    fn energy_tally_counts() {
        let mut t = EnergyTally::default();
        t.record(1.0, 2.0, 0.0);
        t.record(2.5, 2.0, 0.1);
        assert_eq!((t.steps, t.violations), (2, 1));
        assert!((t.worst_excess - 0.4).abs() < 1e-12);
        let mut u = EnergyTally::default();
        u.merge(&t);
        assert_eq!(u, t);
    }

    #[test]
    fn stationary_ball_coarse() {
        let mut s = spec(Preset::StationaryBall, 1.0 / 64.0, 0.016);
        s.step.horizon = Some(5.0 * 0.016);
        // Sixteen cells per radius: the lattice alone moves a few percent.
        s.params.tol = Some(0.1);
        let out = stationary_ball(&s).unwrap();
        assert!(out.summary.passed(), "{:?}", out.summary);
        assert_eq!(out.runs[0].trajectory.steps.len(), 5);
    }

    #[test]
    fn curvature_oracle_is_exact() {
        assert!(curvature_oracle_error(2).unwrap() < 1e-10);
        assert!(curvature_oracle_error(3).unwrap() < 1e-10);
    }
}
