//! Explicit discrete barriers for two tangent balls.
//!
//! For balls `B(∓r e1, r)` touching at the origin the barrier at step `i` is
//!
//! ```text
//! G_i = C(φ_i, [-d_i, d_i]) ∪ B̄(-r e1, r_i) ∪ B̄(r e1, r_i),
//! φ_i(t) = (a_i / 2)(t² - d_i²) + l_i,
//! ```
//!
//! with `r_i = r - η h i`, `l_i = Λ0 h (i-1) + α h^{1/4}`,
//! `d_i = 2 η h (i-1) + α h^{1/2}`, `a_i = Λ0^{1/2} / l_i` and
//! `Λ0 = max{4η², 2⁹(n-2)², 1}`. The module evaluates the sequence, checks
//! the algebraic chain that makes `G_i` a barrier, picks the largest horizon
//! `δ` for which the chain holds, and compares barriers with simulated flows.

use alloc::vec::Vec;

use crate::axisym::{inscribed_ball_radius, mean_curvature_formula, neck_radius, rasterize_solid, Profile};
use crate::fit::{linear_fit, LinearFit};
use crate::flow::Trajectory;
use crate::grid::{Grid, GridSet};
use crate::shapes::closed_ball;
use crate::{Error, Result};

/// Constants of the barrier family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierParams {
    /// Dimension, 2 or 3.
    pub n: usize,
    /// Radius of the two tangent balls.
    pub r: f64,
    /// Forcing bound `C0`.
    pub c0: f64,
    /// Ball shrink rate per unit time.
    pub eta: f64,
    /// Neck seed constant.
    pub alpha: f64,
    /// Time horizon `δ`.
    pub delta: f64,
    /// Time step.
    pub h: f64,
}

impl BarrierParams {
    pub fn new(n: usize, r: f64, c0: f64, eta: f64, alpha: f64, delta: f64, h: f64) -> Result<Self> {
        let p = BarrierParams { n, r, c0, eta, alpha, delta, h };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n != 2 && self.n != 3 {
            return Err(Error::Dimension(self.n));
        }
        if !(self.r > 0.0 && self.r.is_finite()) {
            return Err(Error::InvalidParameter("barrier radius must be positive"));
        }
        if !(self.c0 >= 0.0 && self.c0.is_finite()) {
            return Err(Error::InvalidParameter("forcing bound must be non-negative"));
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(Error::InvalidParameter("shrink rate must be non-negative"));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidParameter("neck seed constant must be positive"));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidParameter("horizon must be non-negative"));
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::InvalidParameter("time step must be positive"));
        }
        Ok(())
    }

    /// `Λ0 = max{4η², 2⁹(n-2)², 1}`.
    pub fn lambda0(&self) -> f64 {
        let m = (self.n as f64 - 2.0) * (self.n as f64 - 2.0);
        (4.0 * self.eta * self.eta).max(512.0 * m).max(1.0)
    }

    /// Largest admissible index `floor(δ/h) + 1`, guarded against rounding
    /// of `δ/h`.
    pub fn max_index(&self) -> usize {
        let q = self.delta / self.h;
        let k = libm::round(q);
        let k = if (q - k).abs() < 1e-9 { k } else { libm::floor(q) };
        k as usize + 1
    }

    pub fn with_delta(self, delta: f64) -> Self {
        BarrierParams { delta, ..self }
    }

    /// Horizon admitting exactly the indices `1..=max_index`.
    pub fn delta_for_index(&self, max_index: usize) -> f64 {
        self.h * max_index.saturating_sub(1) as f64
    }

    /// Unchecked sequence values at `i`.
    fn values(&self, i: usize) -> BarrierStep {
        let lambda0 = self.lambda0();
        let k = i as f64 - 1.0;
        let l = lambda0 * self.h * k + self.alpha * libm::pow(self.h, 0.25);
        let d = 2.0 * self.eta * self.h * k + self.alpha * libm::sqrt(self.h);
        BarrierStep {
            index: i,
            r_i: self.r - self.eta * self.h * i as f64,
            l_i: l,
            d_i: d,
            a_i: libm::sqrt(lambda0) / l,
        }
    }
}

/// Sequence values at one index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierStep {
    pub index: usize,
    pub r_i: f64,
    pub l_i: f64,
    pub d_i: f64,
    pub a_i: f64,
}

impl BarrierStep {
    /// The neck profile `φ_i` on `[-d_i, d_i]`.
    pub fn profile(&self) -> Result<Profile> {
        Profile::parabola(self.a_i, self.d_i, self.l_i, 0.0)
    }

    /// `φ_i(0) = l_i - a_i d_i² / 2`.
    pub fn neck_height(&self) -> f64 {
        self.l_i - 0.5 * self.a_i * self.d_i * self.d_i
    }

    fn phi(&self, t: f64) -> f64 {
        0.5 * self.a_i * (t * t - self.d_i * self.d_i) + self.l_i
    }
}

/// Sequence values at `i ∈ 1..=floor(δ/h)+1`.
///
/// Fails with [`Error::BarrierIndex`] outside that range and with
/// [`Error::BarrierParameters`] when `a_i d_i > 1`.
pub fn barrier_sequence(p: &BarrierParams, i: usize) -> Result<BarrierStep> {
    p.validate()?;
    let max = p.max_index();
    if i == 0 || i > max {
        return Err(Error::BarrierIndex { index: i, max });
    }
    let s = p.values(i);
    if s.a_i * s.d_i > 1.0 {
        return Err(Error::BarrierParameters { index: i });
    }
    Ok(s)
}

/// `φ_i(t)`; fails with [`Error::ProfileDomain`] for `|t| > d_i`.
pub fn phi(step: &BarrierStep, t: f64) -> Result<f64> {
    if !(t.abs() <= step.d_i) {
        return Err(Error::ProfileDomain);
    }
    Ok(step.phi(t))
}

/// `G_i` rasterized at cell centers, with the tangency point at the
/// coordinate origin.
pub fn barrier_set(p: &BarrierParams, i: usize, grid: &Grid) -> Result<GridSet> {
    if grid.dim() != p.n {
        return Err(Error::GridMismatch);
    }
    let s = barrier_sequence(p, i)?;
    for axis in 0..p.n {
        let reach = if axis == 0 { p.r + s.r_i.max(0.0) } else { s.r_i.max(0.0) };
        let o = grid.origin()[axis];
        if -reach < o || reach > o + grid.extent(axis) {
            return Err(Error::OutOfBox);
        }
    }
    let neck = rasterize_solid(&s.profile()?, grid, &[0.0; 3])?;
    if s.r_i <= 0.0 {
        return Ok(neck);
    }
    let left = closed_ball(grid, [-p.r, 0.0, 0.0], s.r_i);
    let right = closed_ball(grid, [p.r, 0.0, 0.0], s.r_i);
    neck.union(&left)?.union(&right)
}

/// `r_i² - (r - d_i)² ≥ l_i²`: the rims of the neck lie in the balls.
pub fn verify_head_containment(p: &BarrierParams, i: usize) -> Result<bool> {
    p.validate()?;
    let max = p.max_index();
    if i == 0 || i > max {
        return Err(Error::BarrierIndex { index: i, max });
    }
    Ok(head_contained(p, &p.values(i)))
}

fn head_contained(p: &BarrierParams, s: &BarrierStep) -> bool {
    s.r_i > 0.0 && s.r_i * s.r_i - (p.r - s.d_i) * (p.r - s.d_i) >= s.l_i * s.l_i
}

/// Longest neck rim `l` for which the curvature bound
/// `-Λ0^{1/2} / (2^{5/2} l)` is at most `-(5Λ0 + C0)`.
pub fn certificate_length(lambda0: f64, c0: f64) -> f64 {
    libm::sqrt(lambda0) / (libm::pow(2.0, 2.5) * (5.0 * lambda0 + c0))
}

/// Worst mean curvature of the lifted neck profiles at one index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureCertificate {
    /// Largest `H` of `C(φ_i - τ)` over `|t| ≤ d_i` and lifts `τ` with
    /// `φ_i(t) - τ ≥ l_i / 4`.
    pub worst: f64,
    /// `-Λ0^{1/2} / (2^{5/2} l_i)`.
    pub bound: f64,
    /// `-(5Λ0 + C0)`.
    pub target: f64,
}

impl CurvatureCertificate {
    /// `target - worst`; non-negative when the certificate holds.
    pub fn margin(&self) -> f64 {
        self.target - self.worst
    }

    pub fn holds(&self) -> bool {
        self.worst <= self.bound && self.worst <= self.target
    }
}

/// Exact worst case of the curvature of the lifted profiles.
///
/// With `s = (a t)² ∈ [0, (a d)²]` and the smallest admissible radius
/// `g = l / 4`, `H(s) = -a (1+s)^{-3/2} + c (1+s)^{-1/2}` with
/// `c = 4 (n-2) / l`; its only interior critical point is `1 + s = 3a / c`.
pub fn curvature_certificate(p: &BarrierParams, s: &BarrierStep) -> CurvatureCertificate {
    let g = 0.25 * s.l_i;
    let h_at = |u: f64| mean_curvature_formula(g, libm::sqrt(u), s.a_i, p.n);
    let top = (s.a_i * s.d_i) * (s.a_i * s.d_i);
    let mut worst = h_at(0.0).max(h_at(top));
    if p.n > 2 {
        let c = (p.n as f64 - 2.0) / g;
        let crit = 3.0 * s.a_i / c - 1.0;
        if crit > 0.0 && crit < top {
            worst = worst.max(h_at(crit));
        }
    }
    let lambda0 = p.lambda0();
    CurvatureCertificate {
        worst,
        bound: -libm::sqrt(lambda0) / (libm::pow(2.0, 2.5) * s.l_i),
        target: -(5.0 * lambda0 + p.c0),
    }
}

/// Invariants of the barrier chain at one index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantReport {
    pub step: BarrierStep,
    /// `Λ0^{1/2} d_i ≤ l_i`.
    pub rim_ratio: bool,
    /// `a_i d_i ≤ 1`, so `φ_i` is 1-Lipschitz.
    pub lipschitz: bool,
    /// `l_i / 2 ≤ φ_i ≤ l_i`.
    pub phi_bounds: bool,
    pub head_containment: bool,
    /// `|φ_i - φ_{i-1}| ≤ 2Λ0 h` on `[-d_{i-1}, d_{i-1}]` (true at `i = 1`).
    pub closeness: bool,
    /// Largest distance from `G_i` to `G_{i-1}` minus `4Λ0 h`
    /// (`-4Λ0 h` at `i = 1`); non-positive when the nesting band holds.
    pub nesting_excess: f64,
    pub certificate: CurvatureCertificate,
}

impl InvariantReport {
    /// All invariants, including the sampled nesting check.
    pub fn passed(&self) -> bool {
        self.rim_ratio
            && self.lipschitz
            && self.phi_bounds
            && self.head_containment
            && self.closeness
            && self.nesting_excess <= 0.0
            && self.certificate.holds()
    }

    /// Name of the first failing invariant.
    pub fn first_failure(&self) -> Option<&'static str> {
        if !self.rim_ratio {
            Some("rim ratio")
        } else if !self.lipschitz {
            Some("lipschitz")
        } else if !self.phi_bounds {
            Some("profile bounds")
        } else if !self.head_containment {
            Some("head containment")
        } else if !self.closeness {
            Some("closeness")
        } else if self.nesting_excess > 0.0 {
            Some("nesting band")
        } else if !self.certificate.holds() {
            Some("curvature certificate")
        } else {
            None
        }
    }
}

/// Invariants at an admissible index.
pub fn check_invariants(p: &BarrierParams, i: usize) -> Result<InvariantReport> {
    p.validate()?;
    let max = p.max_index();
    if i == 0 || i > max {
        return Err(Error::BarrierIndex { index: i, max });
    }
    Ok(invariants_at(p, i))
}

/// Samples of the upper neck boundary used by the nesting check.
const NESTING_SAMPLES: usize = 4096;

fn invariants_at(p: &BarrierParams, i: usize) -> InvariantReport {
    let s = p.values(i);
    let lambda0 = p.lambda0();
    let height = s.neck_height();
    let (closeness, nesting_excess) = if i == 1 {
        (true, -4.0 * lambda0 * p.h)
    } else {
        let prev = p.values(i - 1);
        // φ_i - φ_{i-1} is monotone in t², so its extremes sit at 0 and d_{i-1}.
        let at = |t: f64| (s.phi(t) - prev.phi(t)).abs();
        let close = at(0.0).max(at(prev.d_i)) <= 2.0 * lambda0 * p.h;
        (close, nesting_distance(p, &s, &prev) - 4.0 * lambda0 * p.h)
    };
    InvariantReport {
        step: s,
        rim_ratio: libm::sqrt(lambda0) * s.d_i <= s.l_i,
        lipschitz: s.a_i * s.d_i <= 1.0,
        phi_bounds: height >= 0.5 * s.l_i && height <= s.l_i,
        head_containment: head_contained(p, &s),
        closeness,
        nesting_excess,
        certificate: curvature_certificate(p, &s),
    }
}

/// Largest distance from a point of the neck of `G_i` to `G_{i-1}`.
///
/// Both sets are solids of revolution whose slices are centered disks, so
/// the distance is computed in the meridian half-plane and only the upper
/// boundary `(t, φ_i(t))` of the neck needs sampling. The balls of `G_i` lie
/// inside those of `G_{i-1}`.
fn nesting_distance(p: &BarrierParams, s: &BarrierStep, prev: &BarrierStep) -> f64 {
    let m = NESTING_SAMPLES;
    let curve: Vec<(f64, f64)> = (0..=m)
        .map(|j| {
            let t = prev.d_i * (2.0 * j as f64 / m as f64 - 1.0);
            (t, prev.phi(t))
        })
        .collect();
    let dist_seg = |x: f64, y: f64, a: (f64, f64), b: (f64, f64)| {
        let (dx, dy) = (b.0 - a.0, b.1 - a.1);
        let len2 = dx * dx + dy * dy;
        let u = if len2 > 0.0 { (((x - a.0) * dx + (y - a.1) * dy) / len2).clamp(0.0, 1.0) } else { 0.0 };
        libm::hypot(x - a.0 - u * dx, y - a.1 - u * dy)
    };
    let mut worst = 0.0f64;
    for j in 0..=m {
        let x = s.d_i * (2.0 * j as f64 / m as f64 - 1.0);
        let y = s.phi(x);
        let mut d = f64::INFINITY;
        for c in [-p.r, p.r] {
            d = d.min((libm::hypot(x - c, y) - prev.r_i).max(0.0));
        }
        if x.abs() <= prev.d_i && y <= prev.phi(x) {
            d = 0.0;
        }
        if d > 0.0 {
            for end in [-prev.d_i, prev.d_i] {
                d = d.min(dist_seg(x, y, (end, 0.0), (end, prev.l_i)));
            }
            // Only chords within `d` of `x` along the axis can be closer.
            let to_index = |t: f64| ((t / prev.d_i + 1.0) * 0.5 * m as f64).clamp(0.0, m as f64);
            let lo = libm::floor(to_index(x - d)) as usize;
            let hi = (libm::ceil(to_index(x + d)) as usize).min(m);
            for w in curve[lo..=hi].windows(2) {
                d = d.min(dist_seg(x, y, w[0], w[1]));
            }
        }
        worst = worst.max(d);
    }
    worst
}

/// Cells of `G_i` farther than `4Λ0 h + Δx` from `G_{i-1}`, measured with
/// the grid signed distance; the grid counterpart of the nesting band.
pub fn nesting_violations(p: &BarrierParams, i: usize, grid: &Grid) -> Result<usize> {
    if i < 2 {
        return Err(Error::BarrierIndex { index: i, max: p.max_index() });
    }
    let current = barrier_set(p, i, grid)?;
    let prev = barrier_set(p, i - 1, grid)?;
    let d = crate::distance::signed_distance(&prev);
    let limit = 4.0 * p.lambda0() * p.h + grid.spacing();
    Ok(current.members().filter(|&k| d.get(k) > limit).count())
}

/// Result of the horizon sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaSweep {
    /// Largest horizon for which every index passes; a multiple of `h`.
    pub delta: f64,
    pub max_index: usize,
    /// Reports for `1..=max_index`, followed by the first failing index if
    /// the sweep stopped on a failure.
    pub reports: Vec<InvariantReport>,
    /// First failing index and invariant, `None` when the cap was reached.
    pub stopped_by: Option<(usize, &'static str)>,
}

/// Largest `δ` (a multiple of `h`) such that every index `i ≤ δ/h + 1`
/// passes all invariants, scanning at most `index_cap` indices. The `delta`
/// field of `p` is ignored.
///
/// Fails with [`Error::BarrierParameters`] when already `i = 1` fails.
pub fn max_admissible_delta(p: &BarrierParams, index_cap: usize) -> Result<DeltaSweep> {
    p.validate()?;
    if index_cap == 0 {
        return Err(Error::InvalidParameter("index cap must be positive"));
    }
    let mut reports = Vec::new();
    let mut stopped_by = None;
    for i in 1..=index_cap {
        let rep = invariants_at(p, i);
        reports.push(rep);
        if let Some(what) = rep.first_failure() {
            stopped_by = Some((i, what));
            break;
        }
    }
    let max_index = match stopped_by {
        Some((1, _)) => return Err(Error::BarrierParameters { index: 1 }),
        Some((i, _)) => i - 1,
        None => index_cap,
    };
    Ok(DeltaSweep { delta: p.delta_for_index(max_index), max_index, reports, stopped_by })
}

/// Neck seed constant used for a barrier run: a safety fraction of the
/// fitted constant, capped by `r/4` and by the value putting `l_1` at half
/// the certificate length, which leaves room for a positive horizon.
pub fn admissible_alpha(alpha_fit: f64, safety: f64, r: f64, lambda0: f64, c0: f64, h: f64) -> f64 {
    let cert = 0.5 * certificate_length(lambda0, c0) / libm::pow(h, 0.25);
    (safety * alpha_fit).min(0.25 * r).min(cert)
}

/// Inclusion check at one index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InclusionRow {
    pub index: usize,
    pub t: f64,
    /// `#(G_i \ E^{h,i})`.
    pub gap_cells: usize,
    /// Boundary ring cells of `G_i` in the neck slab `|x1| ≤ d_i`.
    pub budget_cells: usize,
}

impl InclusionRow {
    pub fn passed(&self) -> bool {
        self.gap_cells <= self.budget_cells
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InclusionReport {
    pub rows: Vec<InclusionRow>,
}

impl InclusionReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(InclusionRow::passed)
    }

    pub fn first_failure(&self) -> Option<usize> {
        self.rows.iter().find(|r| !r.passed()).map(|r| r.index)
    }
}

/// Compares `G_i` with `E^{h,i}` for every admissible `i` stored in the
/// trajectory.
///
/// Fails with [`Error::GridMismatch`] when the dimensions differ and with
/// [`Error::MissingSnapshots`] when no admissible index is stored.
pub fn verify_barrier_inclusion(traj: &Trajectory, p: &BarrierParams) -> Result<InclusionReport> {
    p.validate()?;
    if traj.grid.dim() != p.n {
        return Err(Error::GridMismatch);
    }
    let dx = traj.grid.spacing();
    let mut rows = Vec::new();
    for i in 1..=p.max_index() {
        let Some(e) = traj.snapshot(i) else {
            continue;
        };
        if e.grid() != &traj.grid {
            return Err(Error::GridMismatch);
        }
        let s = barrier_sequence(p, i)?;
        let g = barrier_set(p, i, &traj.grid)?;
        let ring = g.boundary_ring();
        let budget = ring
            .members()
            .filter(|&k| traj.grid.cell_center(traj.grid.coords(k))[0].abs() <= s.d_i + 0.5 * dx)
            .count();
        rows.push(InclusionRow { index: i, t: i as f64 * traj.h, gap_cells: g.difference_count(e)?, budget_cells: budget });
    }
    if rows.is_empty() {
        return Err(Error::MissingSnapshots);
    }
    Ok(InclusionReport { rows })
}

/// Fitted growth of the neck and shrinkage of the balls.
#[derive(Debug, Clone, PartialEq)]
pub struct NeckGrowthFit {
    /// `neck_radius(E_t, 0)` against `t`.
    pub neck: LinearFit,
    /// `r - inscribed radius` of the balls against `t`.
    pub shrink: LinearFit,
    pub times: Vec<f64>,
    pub necks: Vec<f64>,
    pub shrinks: Vec<f64>,
}

/// Minimum number of samples for [`fit_neck_growth`].
pub const MIN_FIT_SAMPLES: usize = 5;

/// Fits the neck radius at the tangency point and the ball shrinkage over
/// the snapshots with `h < t ≤ t_max`. The balls are `B(∓r e1, r)`; their
/// inscribed radius is the smaller of the two.
///
/// Fails with [`Error::MissingSnapshots`] below [`MIN_FIT_SAMPLES`] samples
/// and with [`Error::DegenerateFit`] when the neck never exceeds `2Δx`.
pub fn fit_neck_growth(traj: &Trajectory, r: f64, t_max: f64) -> Result<NeckGrowthFit> {
    let window: Vec<_> = traj.snapshots.iter().filter(|s| s.t > traj.h * (1.0 + 1e-9) && s.t <= t_max + 1e-12).collect();
    let times: Vec<f64> = window.iter().map(|s| s.t).collect();
    let necks: Vec<f64> = window.iter().map(|s| neck_radius(&s.set, 0.0)).collect();
    let shrinks: Vec<f64> = window
        .iter()
        .map(|s| {
            let left = inscribed_ball_radius(&s.set, &[-r, 0.0, 0.0]);
            let right = inscribed_ball_radius(&s.set, &[r, 0.0, 0.0]);
            r - left.min(right)
        })
        .collect();
    fit_neck_samples(times, necks, shrinks, traj.grid.spacing())
}

/// [`fit_neck_growth`] on precomputed samples.
pub fn fit_neck_samples(times: Vec<f64>, necks: Vec<f64>, shrinks: Vec<f64>, dx: f64) -> Result<NeckGrowthFit> {
    if times.len() < MIN_FIT_SAMPLES || necks.len() != times.len() || shrinks.len() != times.len() {
        return Err(Error::MissingSnapshots);
    }
    if !necks.iter().any(|&v| v > 2.0 * dx) {
        return Err(Error::DegenerateFit("neck never resolved above 2 cells"));
    }
    let neck = linear_fit(&times, &necks)?;
    let shrink = linear_fit(&times, &shrinks)?;
    Ok(NeckGrowthFit { neck, shrink, times, necks, shrinks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::volume;
    use crate::shapes::closed_ball;

    fn params() -> BarrierParams {
        BarrierParams::new(2, 0.25, 4.0, 0.5, 0.06, 0.008, 4e-4).unwrap()
    }

    #[test]
    fn lambda0_examples() {
        let p = BarrierParams::new(2, 0.25, 0.0, 0.4, 0.1, 0.0, 1e-3).unwrap();
        assert_eq!(p.lambda0(), 1.0);
        assert_eq!(BarrierParams { eta: 2.0, ..p }.lambda0(), 16.0);
        assert_eq!(BarrierParams { n: 3, ..p }.lambda0(), 512.0);
    }

    #[test]
    fn first_step_values() {
        let p = params();
        let s = barrier_sequence(&p, 1).unwrap();
        assert!((s.l_i - p.alpha * libm::pow(p.h, 0.25)).abs() < 1e-15);
        assert!((s.d_i - p.alpha * libm::sqrt(p.h)).abs() < 1e-15);
        assert!((s.r_i - (p.r - p.eta * p.h)).abs() < 1e-15);
        assert!((s.a_i - 1.0 / s.l_i).abs() < 1e-9);
    }

    #[test]
    fn radius_tends_to_r() {
        let p = params();
        let mut last = f64::INFINITY;
        for h in [1e-2, 1e-3, 1e-4, 1e-5] {
            let q = BarrierParams { h, delta: 10.0 * h, ..p };
            let e = (q.r - barrier_sequence(&q, 3).unwrap().r_i).abs();
            assert!(e < last);
            last = e;
        }
        assert!(last < 1e-4);
    }

    #[test]
    fn index_range() {
        let p = params();
        assert_eq!(p.max_index(), 21);
        assert!(matches!(barrier_sequence(&p, 0), Err(Error::BarrierIndex { .. })));
        assert!(matches!(barrier_sequence(&p, 22), Err(Error::BarrierIndex { index: 22, max: 21 })));
        let q = p.with_delta(3.0 * p.h);
        assert_eq!(q.max_index(), 4);
    }

    #[test]
    fn long_horizon_breaks_lipschitz() {
        // a_1 d_1 = Λ0^{1/2} h^{1/4} whatever α is; here 4 · 0.316.
        let p = BarrierParams::new(2, 0.25, 0.0, 2.0, 5.0, 0.0, 1e-2).unwrap();
        let s = p.values(1);
        assert!(s.a_i * s.d_i > 1.0);
        assert!(matches!(barrier_sequence(&p, 1), Err(Error::BarrierParameters { index: 1 })));
    }

    #[test]
    fn phi_examples() {
        let p = params();
        for i in 1..=p.max_index() {
            let s = barrier_sequence(&p, i).unwrap();
            assert!((phi(&s, s.d_i).unwrap() - s.l_i).abs() < 1e-15);
            assert!((phi(&s, -s.d_i).unwrap() - s.l_i).abs() < 1e-15);
            let mid = phi(&s, 0.0).unwrap();
            assert!((mid - s.neck_height()).abs() < 1e-15);
            assert!(mid >= 0.5 * s.l_i);
            for j in 0..=16 {
                let t = s.d_i * (j as f64 / 8.0 - 1.0);
                assert!(s.a_i * t.abs() <= 1.0);
                let v = phi(&s, t).unwrap();
                assert!(v >= 0.5 * s.l_i && v <= s.l_i);
            }
            assert_eq!(phi(&s, 1.0001 * s.d_i), Err(Error::ProfileDomain));
        }
    }

    #[test]
    fn profile_matches_phi() {
        let s = barrier_sequence(&params(), 5).unwrap();
        let prof = s.profile().unwrap();
        for t in [-0.9 * s.d_i, 0.0, 0.3 * s.d_i] {
            assert!((prof.value(t).unwrap() - s.phi(t)).abs() < 1e-15);
        }
    }

    #[test]
    fn head_containment_examples() {
        let p = params();
        for i in 1..=p.max_index() {
            assert!(verify_head_containment(&p, i).unwrap());
        }
        // Huge η shrinks the balls past the rim.
        let q = BarrierParams { eta: 200.0, ..p };
        let s = q.values(1);
        assert!(s.r_i < q.r - s.d_i);
        assert!(!verify_head_containment(&q, 1).unwrap());
        // i = 1, α ≤ r/4: r_1² - (r - α h^{1/2})² ≥ (α h^{1/4})².
        let q = BarrierParams { alpha: 0.25 * p.r, h: 1e-6, delta: 0.0, ..p };
        let s = q.values(1);
        let lhs = s.r_i * s.r_i - (q.r - q.alpha * 1e-3) * (q.r - q.alpha * 1e-3);
        assert!(lhs >= q.alpha * q.alpha * 1e-3);
        assert!(verify_head_containment(&q, 1).unwrap());
    }

    #[test]
    fn certificate_closed_form_in_the_plane() {
        // n = 2: H = -a / (1 + (a t)²)^{3/2}, largest at t = ±d.
        let p = params();
        let s = p.values(3);
        let c = curvature_certificate(&p, &s);
        let ad = s.a_i * s.d_i;
        let expected = -s.a_i / libm::pow(1.0 + ad * ad, 1.5);
        assert!((c.worst - expected).abs() < 1e-12 * expected.abs());
        assert!(c.worst <= c.bound);
        assert!((c.target + 9.0).abs() < 1e-15);
    }

    #[test]
    fn certificate_matches_dense_scan_in_space() {
        let p = BarrierParams::new(3, 0.25, 1.0, 0.5, 2e-4, 0.0, 1e-6).unwrap();
        let s = p.values(1);
        let c = curvature_certificate(&p, &s);
        let mut scan = f64::NEG_INFINITY;
        for j in 0..=20000 {
            let t = s.d_i * j as f64 / 20000.0;
            scan = scan.max(mean_curvature_formula(0.25 * s.l_i, s.a_i * t, s.a_i, 3));
        }
        assert!(c.worst >= scan - 1e-9 * scan.abs());
        assert!(c.worst - scan < 1e-6 * scan.abs());
        assert!(c.worst <= c.bound);
    }

    #[test]
    fn certificate_length_is_sharp() {
        let (lambda0, c0) = (1.0, 4.0);
        let l = certificate_length(lambda0, c0);
        let bound = -libm::sqrt(lambda0) / (libm::pow(2.0, 2.5) * l);
        assert!((bound + 5.0 * lambda0 + c0).abs() < 1e-12);
    }

    #[test]
    fn sweep_stops_at_certificate() {
        let p = params();
        let alpha = admissible_alpha(0.75, 0.5, p.r, p.lambda0(), p.c0, p.h);
        let q = BarrierParams { alpha, ..p };
        let sweep = max_admissible_delta(&q, 10_000).unwrap();
        let (i, what) = sweep.stopped_by.unwrap();
        assert_eq!(what, "curvature certificate");
        assert_eq!(i, sweep.max_index + 1);
        let q = q.with_delta(sweep.delta);
        assert_eq!(q.max_index(), sweep.max_index);
        for i in 1..=q.max_index() {
            let rep = check_invariants(&q, i).unwrap();
            assert!(rep.passed(), "index {i}: {:?}", rep.first_failure());
        }
        let next = invariants_at(&q, sweep.max_index + 1);
        assert!(next.certificate.margin() < 0.0);
        // The seed sits at half the generic certificate length, so at least
        // that many indices pass.
        let lmax = certificate_length(q.lambda0(), q.c0);
        assert!(sweep.max_index as f64 >= 0.5 * lmax / q.h);
    }

    #[test]
    fn sweep_rejects_bad_seed() {
        let p = BarrierParams { alpha: 1.0, ..params() };
        assert_eq!(max_admissible_delta(&p, 100), Err(Error::BarrierParameters { index: 1 }));
    }

    #[test]
    fn nesting_band_continuous_and_grid() {
        let p = params();
        let dx = 1.0 / 512.0;
        let grid = Grid::centered(2, &[528, 272], dx).unwrap();
        for i in [2, 10, p.max_index()] {
            let rep = check_invariants(&p, i).unwrap();
            assert!(rep.closeness);
            assert!(rep.nesting_excess <= 0.0);
            assert_eq!(nesting_violations(&p, i, &grid).unwrap(), 0);
        }
    }

    #[test]
    fn barrier_set_geometry() {
        let p = params();
        let dx = 1.0 / 512.0;
        let grid = Grid::centered(2, &[528, 272], dx).unwrap();
        let s = barrier_sequence(&p, 1).unwrap();
        let g = barrier_set(&p, 1, &grid).unwrap();
        let b1 = closed_ball(&grid, [-p.r, 0.0, 0.0], s.r_i);
        let b2 = closed_ball(&grid, [p.r, 0.0, 0.0], s.r_i);
        assert!(b1.is_subset(&g).unwrap() && b2.is_subset(&g).unwrap());
        let neck = rasterize_solid(&Profile::constant(0.5 * s.l_i, -s.d_i, s.d_i).unwrap(), &grid, &[0.0; 3]).unwrap();
        assert!(neck.is_subset(&g).unwrap());
        assert!(volume(&g) >= volume(&b1.union(&b2).unwrap()));
        // With an even cell count the slice through x1 = 0 sits Δx/2 off the
        // tangency plane, where the shrunk balls still reach; use a grid with
        // a cell centered on the plane.
        let odd = Grid::centered(2, &[529, 272], dx).unwrap();
        let measured = neck_radius(&barrier_set(&p, 1, &odd).unwrap(), 0.0);
        assert!((measured - s.neck_height()).abs() <= dx, "{measured} vs {}", s.neck_height());
        let small = Grid::centered(2, &[500, 272], dx).unwrap();
        assert_eq!(barrier_set(&p, 1, &small), Err(Error::OutOfBox));
        let space = Grid::centered(3, &[8, 8, 8], dx).unwrap();
        assert_eq!(barrier_set(&p, 1, &space), Err(Error::GridMismatch));
    }

    fn trajectory_of(sets: Vec<GridSet>, h: f64) -> Trajectory {
        use crate::flow::{Snapshot, Termination};
        let grid = sets[0].grid().clone();
        Trajectory {
            h,
            grid,
            initial: sets[0].clone(),
            steps: Vec::new(),
            snapshots: sets.into_iter().enumerate().map(|(k, set)| Snapshot { k, t: k as f64 * h, set }).collect(),
            termination: Termination::Completed,
        }
    }

    #[test]
    fn inclusion_self_and_balls_only() {
        let dx = 1.0 / 512.0;
        let grid = Grid::centered(2, &[528, 272], dx).unwrap();
        let p = BarrierParams { alpha: 0.3, ..params() }.with_delta(4.0 * 4e-4);
        let own: Vec<GridSet> =
            (0..=p.max_index()).map(|i| barrier_set(&p, i.max(1), &grid).unwrap()).collect();
        let rep = verify_barrier_inclusion(&trajectory_of(own, p.h), &p).unwrap();
        assert_eq!(rep.rows.len(), p.max_index());
        assert!(rep.passed());
        assert!(rep.rows.iter().all(|r| r.gap_cells == 0));

        let balls: Vec<GridSet> = (0..=p.max_index())
            .map(|i| {
                let s = p.values(i.max(1));
                closed_ball(&grid, [-p.r, 0.0, 0.0], s.r_i).union(&closed_ball(&grid, [p.r, 0.0, 0.0], s.r_i)).unwrap()
            })
            .collect();
        let rep = verify_barrier_inclusion(&trajectory_of(balls, p.h), &p).unwrap();
        for row in &rep.rows {
            assert!(p.values(row.index).neck_height() > dx);
            assert!(!row.passed(), "{row:?}");
        }
        assert_eq!(rep.first_failure(), Some(1));
    }

    #[test]
    fn inclusion_errors() {
        let dx = 1.0 / 512.0;
        let grid = Grid::centered(2, &[528, 272], dx).unwrap();
        let p = params();
        let traj = trajectory_of(alloc::vec![GridSet::empty(&grid)], p.h);
        assert_eq!(verify_barrier_inclusion(&traj, &p), Err(Error::MissingSnapshots));
        let q = BarrierParams { n: 3, ..p };
        assert_eq!(verify_barrier_inclusion(&traj, &q), Err(Error::GridMismatch));
    }

    #[test]
    fn neck_fit_on_exact_data() {
        let times: Vec<f64> = (1..=8).map(|k| k as f64 * 1e-3).collect();
        let necks: Vec<f64> = times.iter().map(|t| 0.3 * t + 0.01).collect();
        let shrinks: Vec<f64> = times.iter().map(|t| 0.5 * t).collect();
        let f = fit_neck_samples(times, necks, shrinks, 1e-3).unwrap();
        assert!((f.neck.slope - 0.3).abs() < 1e-12);
        assert!(f.neck.max_abs_residual() < 1e-15);
        assert!((f.shrink.slope - 0.5).abs() < 1e-12);
    }

    #[test]
    fn neck_fit_degenerate() {
        let dx = 1.0 / 128.0;
        let grid = Grid::centered(2, &[160, 80], dx).unwrap();
        let two = closed_ball(&grid, [-0.25, 0.0, 0.0], 0.2).union(&closed_ball(&grid, [0.25, 0.0, 0.0], 0.2)).unwrap();
        let traj = trajectory_of(alloc::vec![two; 8], 1e-3);
        assert!(matches!(fit_neck_growth(&traj, 0.25, 1.0), Err(Error::DegenerateFit(_))));
        let short = trajectory_of(alloc::vec![GridSet::empty(&grid); 4], 1e-3);
        assert_eq!(fit_neck_growth(&short, 0.25, 1.0).map(|_| ()), Err(Error::MissingSnapshots));
    }
}
