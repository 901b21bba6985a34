//! Approximate flat flows: iterated minimizing-movement steps driven by a
//! time-dependent forcing, plus stationarity and comparison checks.
//!
//! With time step `h` the scheme produces `E^{h,0} = E0` and
//! `E^{h,k+1} = mm_step(E^{h,k})` with forcing constant equal to the mean of
//! `f` over `[kh, (k+1)h]`; the discrete flow is `E^h_t = E^{h,k}` for
//! `kh ≤ t < (k+1)h`.

use alloc::vec;
use alloc::vec::Vec;

use crate::distance::signed_distance;
use crate::grid::{perimeter, symmetric_difference_volume, volume, GridSet};
use crate::solver::{energy_with_distance, mm_step, mm_step_with_distance, StepParams, StepReport};
use crate::{Error, Grid, Result};

/// A bounded forcing `f: [0, ∞) -> ℝ` with `|f| ≤ C0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForcingSchedule {
    kind: Kind,
    bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Constant(f64),
    /// `values[0]` on `[0, breakpoints[0])`, `values[j]` on
    /// `[breakpoints[j-1], breakpoints[j])`, the last value afterwards.
    Piecewise { breakpoints: Vec<f64>, values: Vec<f64> },
    /// Linear interpolation of `samples[j]` at `t = j · spacing`, held
    /// constant after the last sample.
    Sampled { spacing: f64, samples: Vec<f64> },
}

impl ForcingSchedule {
    pub fn constant(value: f64, bound: f64) -> Result<Self> {
        Self::checked(Kind::Constant(value), bound)
    }

    /// Right-continuous step function: `values.len() == breakpoints.len() + 1`
    /// and breakpoints strictly increasing and positive.
    pub fn piecewise_constant(breakpoints: Vec<f64>, values: Vec<f64>, bound: f64) -> Result<Self> {
        if values.len() != breakpoints.len() + 1 {
            return Err(Error::InvalidParameter("piecewise forcing needs one more value than breakpoints"));
        }
        let mut prev = 0.0;
        for &b in &breakpoints {
            if !(b > prev) || !b.is_finite() {
                return Err(Error::InvalidParameter("breakpoints must be positive and increasing"));
            }
            prev = b;
        }
        Self::checked(Kind::Piecewise { breakpoints, values }, bound)
    }

    /// Piecewise-linear forcing through `samples[j]` at `t = j · spacing`.
    pub fn sampled(spacing: f64, samples: Vec<f64>, bound: f64) -> Result<Self> {
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::InvalidParameter("sample spacing must be positive"));
        }
        if samples.is_empty() {
            return Err(Error::InvalidParameter("sampled forcing needs at least one sample"));
        }
        Self::checked(Kind::Sampled { spacing, samples }, bound)
    }

    fn checked(kind: Kind, bound: f64) -> Result<Self> {
        if !(bound >= 0.0 && bound.is_finite()) {
            return Err(Error::InvalidParameter("forcing bound must be finite and non-negative"));
        }
        let values: &[f64] = match &kind {
            Kind::Constant(v) => core::slice::from_ref(v),
            Kind::Piecewise { values, .. } => values,
            Kind::Sampled { samples, .. } => samples,
        };
        for &value in values {
            if !value.is_finite() {
                return Err(Error::InvalidParameter("forcing values must be finite"));
            }
            if value.abs() > bound {
                return Err(Error::ForcingBound { value, bound });
            }
        }
        Ok(ForcingSchedule { kind, bound })
    }

    /// The bound `C0`.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            Kind::Constant(_) => "constant",
            Kind::Piecewise { .. } => "piecewise-constant",
            Kind::Sampled { .. } => "sampled",
        }
    }

    pub fn value_at(&self, t: f64) -> f64 {
        match &self.kind {
            Kind::Constant(v) => *v,
            Kind::Piecewise { breakpoints, values } => {
                let j = breakpoints.partition_point(|&b| b <= t);
                values[j]
            }
            Kind::Sampled { spacing, samples } => {
                let u = t / spacing;
                let last = samples.len() - 1;
                if u >= last as f64 {
                    return samples[last];
                }
                let j = libm::floor(u.max(0.0)) as usize;
                let frac = u - j as f64;
                samples[j] + frac * (samples[j + 1] - samples[j])
            }
        }
    }

    /// `∫_0^t f`.
    fn integral(&self, t: f64) -> f64 {
        match &self.kind {
            Kind::Constant(v) => v * t,
            Kind::Piecewise { breakpoints, values } => {
                let mut acc = 0.0;
                let mut start = 0.0;
                for (j, &b) in breakpoints.iter().enumerate() {
                    if t <= b {
                        return acc + values[j] * (t - start);
                    }
                    acc += values[j] * (b - start);
                    start = b;
                }
                acc + values[values.len() - 1] * (t - start)
            }
            Kind::Sampled { spacing, samples } => {
                let mut acc = 0.0;
                let last = samples.len() - 1;
                for j in 0..last {
                    let t0 = j as f64 * spacing;
                    let t1 = t0 + spacing;
                    if t <= t1 {
                        let ft = self.value_at(t);
                        return acc + 0.5 * (t - t0) * (samples[j] + ft);
                    }
                    acc += 0.5 * spacing * (samples[j] + samples[j + 1]);
                }
                acc + samples[last] * (t - last as f64 * spacing)
            }
        }
    }

    /// Mean of `f` over `[a, b]`, `0 ≤ a < b`.
    pub fn mean(&self, a: f64, b: f64) -> f64 {
        if let Kind::Constant(v) = self.kind {
            return v;
        }
        (self.integral(b) - self.integral(a)) / (b - a)
    }
}

/// `f̄(h, k)`, the mean of `f` over `[kh, (k+1)h]`.
pub fn step_average_forcing(f: &ForcingSchedule, h: f64, k: usize) -> f64 {
    let a = k as f64 * h;
    f.mean(a, a + h)
}

/// Options of [`evolve`].
#[derive(Debug, Clone, PartialEq)]
pub struct EvolveOptions {
    /// Per-step solver parameters; the forcing constant is overwritten each
    /// step.
    pub step: StepParams,
    /// Horizon `T`; the flow runs `ceil(T / h)` steps.
    pub horizon: f64,
    /// Keep every `snapshot_stride`-th set (plus the first and last).
    pub snapshot_stride: usize,
    /// Reject grids with `Δx > √h / 8`.
    pub enforce_resolution: bool,
    /// Required clearance between `E0` and the box boundary, in cells, on
    /// top of `C0 · T`; `None` skips the check and relies on contact
    /// detection alone.
    pub padding_cells: Option<usize>,
}

impl EvolveOptions {
    pub fn new(step: StepParams, horizon: f64) -> Self {
        EvolveOptions { step, horizon, snapshot_stride: 1, enforce_resolution: true, padding_cells: Some(4) }
    }

    /// Number of steps `ceil(T / h)`, guarded against rounding of `T / h`.
    pub fn steps(&self) -> usize {
        let q = self.horizon / self.step.h;
        let n = libm::round(q);
        if (q - n).abs() < 1e-9 {
            n as usize
        } else {
            libm::ceil(q) as usize
        }
    }
}

/// Record of one step `E^{h,k-1} -> E^{h,k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    /// Index `k ≥ 1` of the produced set.
    pub k: usize,
    /// `t = k h`.
    pub t: f64,
    /// Forcing constant of the step.
    pub lambda: f64,
    pub report: StepReport,
    /// `|E^{h,k}|`.
    pub volume: f64,
    /// `P(E^{h,k})`.
    pub perimeter: f64,
    /// `F(E^{h,k}, E^{h,k-1})` with the measured perimeter.
    pub energy: f64,
    /// `P(E^{h,k-1}) - Λ |E^{h,k-1}|`, the value of the functional's
    /// non-dissipative part at the previous set.
    pub reference_energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub k: usize,
    pub t: f64,
    pub set: GridSet,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    Completed,
    /// The step producing `E^{h,step}` failed; the trajectory holds the
    /// steps before it.
    Failed { step: usize, error: Error },
}

/// Output of [`evolve`].
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub h: f64,
    pub grid: Grid,
    pub initial: GridSet,
    pub steps: Vec<StepRecord>,
    /// Ordered by `k`; always starts with `k = 0`.
    pub snapshots: Vec<Snapshot>,
    pub termination: Termination,
}

impl Trajectory {
    pub fn is_complete(&self) -> bool {
        self.termination == Termination::Completed
    }

    pub fn snapshot(&self, k: usize) -> Option<&GridSet> {
        self.snapshots.binary_search_by_key(&k, |s| s.k).ok().map(|i| &self.snapshots[i].set)
    }

    pub fn last(&self) -> &GridSet {
        &self.snapshots[self.snapshots.len() - 1].set
    }

    /// Steps violating `energy ≤ reference_energy + budget`.
    pub fn energy_violations(&self, budget: f64) -> usize {
        self.steps.iter().filter(|s| s.energy > s.reference_energy + budget).count()
    }
}

/// Cell layers next to the box boundary that an evolving set may not enter.
/// The outermost layer is pinned empty by the solver.
const CONTACT_LAYERS: usize = 2;

/// Runs the approximate flat flow from `e0`.
///
/// Precondition failures (resolution coupling, padding) are returned as
/// errors. A failure during the run ends the trajectory early and is
/// recorded in [`Trajectory::termination`].
pub fn evolve(e0: &GridSet, f: &ForcingSchedule, opts: &EvolveOptions) -> Result<Trajectory> {
    evolve_observed(e0, f, opts, |_, _| {})
}

/// [`evolve`] calling `observe(k, E^{h,k})` on every set, including `E0`.
pub fn evolve_observed(
    e0: &GridSet,
    f: &ForcingSchedule,
    opts: &EvolveOptions,
    mut observe: impl FnMut(usize, &GridSet),
) -> Result<Trajectory> {
    let p = &opts.step;
    p.validate()?;
    if !(opts.horizon > 0.0 && opts.horizon.is_finite()) {
        return Err(Error::InvalidParameter("horizon must be positive"));
    }
    if opts.snapshot_stride == 0 {
        return Err(Error::InvalidParameter("snapshot stride must be positive"));
    }
    let g = e0.grid().clone();
    let limit = libm::sqrt(p.h) / 8.0;
    if opts.enforce_resolution && g.spacing() > limit {
        return Err(Error::ResolutionCoupling { spacing: g.spacing(), limit });
    }
    if let Some(cells) = opts.padding_cells {
        check_padding(e0, f.bound() * opts.horizon + cells as f64 * g.spacing())?;
    }

    let steps = opts.steps();
    let mut traj = Trajectory {
        h: p.h,
        grid: g.clone(),
        initial: e0.clone(),
        steps: Vec::with_capacity(steps),
        snapshots: vec![Snapshot { k: 0, t: 0.0, set: e0.clone() }],
        termination: Termination::Completed,
    };
    observe(0, e0);
    let mut current = e0.clone();
    let mut current_perimeter = perimeter(&current);
    let mut current_volume = volume(&current);
    for k in 1..=steps {
        let lambda = step_average_forcing(f, p.h, k - 1);
        let sp = p.with_lambda(lambda);
        let outcome = if current.is_empty() {
            mm_step(&current, &sp).map(|(s, r)| (s, r, 0.0))
        } else {
            let d = signed_distance(&current);
            mm_step_with_distance(&current, &d, &sp)
                .and_then(|(s, r)| energy_with_distance(&s, &d, &sp).map(|e| (s, r, e)))
        };
        let (next, report, energy) = match outcome {
            Ok(v) => v,
            Err(error) => {
                traj.termination = Termination::Failed { step: k, error };
                break;
            }
        };
        if next.touches_boundary(CONTACT_LAYERS) {
            traj.termination = Termination::Failed { step: k, error: Error::BoundaryContact { step: k } };
            break;
        }
        let next_perimeter = perimeter(&next);
        let next_volume = volume(&next);
        traj.steps.push(StepRecord {
            k,
            t: k as f64 * p.h,
            lambda,
            report,
            volume: next_volume,
            perimeter: next_perimeter,
            energy,
            reference_energy: current_perimeter - lambda * current_volume,
        });
        observe(k, &next);
        if k % opts.snapshot_stride == 0 || k == steps {
            traj.snapshots.push(Snapshot { k, t: k as f64 * p.h, set: next.clone() });
        }
        current = next;
        current_perimeter = next_perimeter;
        current_volume = next_volume;
    }
    if !traj.is_complete() {
        let k = traj.steps.len();
        if traj.snapshots[traj.snapshots.len() - 1].k != k {
            traj.snapshots.push(Snapshot { k, t: k as f64 * p.h, set: current });
        }
    }
    Ok(traj)
}

/// Requires every member of `e0` to keep at least `clearance` from the box
/// boundary.
fn check_padding(e0: &GridSet, clearance: f64) -> Result<()> {
    let g = e0.grid();
    let Some((lo, hi)) = e0.bounding_box() else {
        return Ok(());
    };
    let shape = g.shape();
    let mut cells = usize::MAX;
    for a in 0..g.dim() {
        cells = cells.min(lo[a]).min(shape[a] - 1 - hi[a]);
    }
    if (cells as f64) * g.spacing() < clearance {
        return Err(Error::Precondition("initial set is too close to the box boundary"));
    }
    Ok(())
}

/// `sup_t |E_t Δ E0| / |E0|` over the stored snapshots.
pub fn stationarity_ratio(traj: &Trajectory) -> Result<f64> {
    let v0 = volume(&traj.initial);
    if !(v0 > 0.0) {
        return Err(Error::EmptySet);
    }
    if traj.snapshots.len() < 2 {
        return Err(Error::MissingSnapshots);
    }
    let mut worst = 0.0f64;
    for s in &traj.snapshots {
        worst = worst.max(symmetric_difference_volume(&s.set, &traj.initial)? / v0);
    }
    Ok(worst)
}

/// Whether the trajectory stays within relative symmetric difference `tol`
/// of its initial set. An incomplete run is not stationary.
pub fn is_stationary(traj: &Trajectory, tol: f64) -> Result<bool> {
    Ok(stationarity_ratio(traj)? <= tol && traj.is_complete())
}

/// Outcome of [`check_comparison`].
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonOutcome {
    /// `#(E'_min \ E_min)`.
    pub excess_cells: usize,
    /// Allowed excess: one boundary ring of `E'_min`.
    pub budget_cells: usize,
    pub outer: GridSet,
    pub inner: GridSet,
}

impl ComparisonOutcome {
    pub fn passed(&self) -> bool {
        self.excess_cells <= self.budget_cells
    }
}

/// One step of each of `E` (forcing `Λ`) and `E' ⊂ E` (forcing `Λ' ≤ Λ`)
/// and the excess of `E'_min` over `E_min`.
///
/// With `Λ' = Λ` the inner set must keep a clearance of `2Δx` from the
/// complement of `E`.
pub fn check_comparison(
    outer: &GridSet,
    inner: &GridSet,
    lambda: f64,
    lambda_inner: f64,
    p: &StepParams,
) -> Result<ComparisonOutcome> {
    outer.grid().check_same(inner.grid())?;
    if lambda_inner > lambda {
        return Err(Error::Precondition("inner forcing exceeds outer forcing"));
    }
    if !inner.is_subset(outer)? {
        return Err(Error::Precondition("inner set is not contained in outer set"));
    }
    let d = signed_distance(outer);
    if lambda_inner == lambda && outer != inner {
        let clearance = 2.0 * outer.grid().spacing();
        if inner.members().any(|i| d.get(i) > -clearance) {
            return Err(Error::Precondition("inner set lacks 2 cells of clearance"));
        }
    }
    let (outer_min, _) = if outer.is_empty() {
        mm_step(outer, &p.with_lambda(lambda))?
    } else {
        mm_step_with_distance(outer, &d, &p.with_lambda(lambda))?
    };
    let (inner_min, _) = mm_step(inner, &p.with_lambda(lambda_inner))?;
    Ok(ComparisonOutcome {
        excess_cells: inner_min.difference_count(&outer_min)?,
        budget_cells: inner_min.boundary_ring().count(),
        outer: outer_min,
        inner: inner_min,
    })
}
