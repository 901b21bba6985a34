//! One minimizing-movement step.
//!
//! Given a set `E`, a time step `h` and a forcing constant `Λ`, the step
//! minimizes
//!
//! ```text
//! F(F, E) = P(F) + (1/h) ∫_F d̄_E - Λ |F|
//! ```
//!
//! over sets `F`. The set problem is relaxed to `w: grid -> [0, 1]`,
//!
//! ```text
//! min_w  TV(w) + Σ w (d̄_E / h - Λ) Δx^n,
//! ```
//!
//! with the isotropic forward-difference total variation, and solved as the
//! saddle point problem `min_w max_{|φ| ≤ 1} <∇w, φ> + <w, potential>` by the
//! Chambolle-Pock iteration. The duality gap certifies the relaxed
//! minimizer; the step result is the superlevel set `{w > θ}`.
//!
//! Minimizers differ from `E` only where `|d̄_E| ≲ γ √h`, so cells far inside
//! (outside) `E` are pinned to `1` (`0`) and only a band around the
//! interface is iterated. The band is widened and the step redone whenever
//! the computed change reaches its edge.

use alloc::vec;
use alloc::vec::Vec;

use crate::distance::signed_distance;
use crate::grid::{
    discrete_total_variation, max_abs_on_difference, perimeter, volume, Grid, GridSet, ScalarField,
};
use crate::{Error, Result};

/// Parameters of one step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepParams {
    /// Time step, `0 < h ≤ 1`.
    pub h: f64,
    /// Forcing constant of the step.
    pub lambda: f64,
    /// Stopping tolerance on the duality gap, normalized per grid cell: the
    /// iteration stops once `gap / (Δx^(n-1) · #cells) ≤ pd_tol`.
    pub pd_tol: f64,
    pub max_iterations: usize,
    /// Threshold level `θ ∈ (0, 1)`; cells with `w > θ` form the new set.
    pub theta: f64,
    /// Initial half-width of the active band in units of `√h`.
    pub band_gamma: f64,
    /// Ratio `τ / σ` of the primal and dual step sizes (`τ σ · 4n < 1`).
    pub step_ratio: f64,
    /// Calibrated distance-band constant; when set, a step whose movement
    /// exceeds `gamma_emp √h` is flagged in its report.
    pub gamma_emp: Option<f64>,
}

impl StepParams {
    pub fn new(h: f64, lambda: f64) -> Self {
        StepParams {
            h,
            lambda,
            pd_tol: 1e-7,
            max_iterations: 20_000,
            theta: 0.5,
            band_gamma: 0.5,
            step_ratio: 1.0,
            gamma_emp: None,
        }
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        StepParams { lambda, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h <= 1.0) {
            return Err(Error::InvalidParameter("time step h must lie in (0, 1]"));
        }
        if !self.lambda.is_finite() {
            return Err(Error::InvalidParameter("forcing constant must be finite"));
        }
        if !(self.pd_tol > 0.0) {
            return Err(Error::InvalidParameter("pd_tol must be positive"));
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(Error::InvalidParameter("threshold must lie in (0, 1)"));
        }
        if !(self.band_gamma > 0.0) {
            return Err(Error::InvalidParameter("band_gamma must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter("max_iterations must be positive"));
        }
        Ok(())
    }

    /// The gap tolerance expressed in energy units on `grid`.
    pub fn gap_budget(&self, grid: &Grid) -> f64 {
        self.pd_tol * grid.len() as f64 * grid.face_area()
    }
}

/// Diagnostics of one step.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StepReport {
    /// `F(E, E)` with the solver's discrete perimeter
    /// ([`discrete_total_variation`]).
    pub energy_before: f64,
    /// `F(E_min, E)`, same functional as `energy_before`.
    pub energy_after: f64,
    /// Final primal-dual gap of the relaxed problem, in energy units.
    pub pd_gap: f64,
    pub iterations: usize,
    /// `max |d̄_E|` over `E Δ E_min`.
    pub band_width_observed: f64,
    /// Half-width of the active band the step was solved on.
    pub band_half_width: f64,
    /// Movement exceeded `gamma_emp √h`.
    pub band_warning: bool,
}

/// Solution of the relaxed problem.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxedSolution {
    pub w: ScalarField,
    /// Primal-dual gap in energy units.
    pub gap: f64,
    pub iterations: usize,
}

/// `P(F) + (1/h) ∫_F d̄_E - Λ |F|` with `d̄_E = signed_distance(E)`.
///
/// Returns [`Error::UnboundedEnergy`] when `E` is empty and `F` is not.
pub fn energy(f: &GridSet, e: &GridSet, p: &StepParams) -> Result<f64> {
    f.grid().check_same(e.grid())?;
    if f.is_empty() {
        return Ok(0.0);
    }
    if e.is_empty() {
        return Err(Error::UnboundedEnergy);
    }
    energy_with_distance(f, &signed_distance(e), p)
}

/// [`energy`] with a precomputed signed distance of the reference set.
pub fn energy_with_distance(f: &GridSet, d: &ScalarField, p: &StepParams) -> Result<f64> {
    functional(f, d, p, perimeter)
}

/// The set functional the solver minimizes: [`energy_with_distance`] with
/// the perimeter replaced by [`discrete_total_variation`].
pub fn discrete_energy_with_distance(f: &GridSet, d: &ScalarField, p: &StepParams) -> Result<f64> {
    functional(f, d, p, discrete_total_variation)
}

fn functional(f: &GridSet, d: &ScalarField, p: &StepParams, per: fn(&GridSet) -> f64) -> Result<f64> {
    f.grid().check_same(d.grid())?;
    if f.is_empty() {
        return Ok(0.0);
    }
    let mut dissipation = 0.0;
    for i in f.members() {
        let v = d.get(i);
        if !v.is_finite() {
            return Err(Error::UnboundedEnergy);
        }
        dissipation += v;
    }
    let cv = f.grid().cell_volume();
    Ok(per(f) + dissipation * cv / p.h - p.lambda * volume(f))
}

/// `{w > θ}`.
pub fn threshold(w: &ScalarField, theta: f64) -> GridSet {
    let mut s = GridSet::empty(w.grid());
    for (i, &v) in w.values().iter().enumerate() {
        if v > theta {
            s.insert(i);
        }
    }
    s
}

/// Minimizes `TV(w) + Σ w · potential · Δx^n` over `w ∈ [0, 1]` on the
/// whole grid (Neumann boundary), starting from `w = 1{potential < 0}`.
pub fn relaxed_minimize(potential: &ScalarField, p: &StepParams) -> Result<RelaxedSolution> {
    p.validate()?;
    if potential.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("potential must be finite"));
    }
    let g = potential.grid();
    let dx = g.spacing();
    let state = vec![CellState::Active; g.len()];
    let q: Vec<f64> = potential.values().iter().map(|v| v * dx).collect();
    let w0: Vec<f64> = potential.values().iter().map(|&v| if v < 0.0 { 1.0 } else { 0.0 }).collect();
    let mut problem = BandProblem::new(g, &state, q, w0, None);
    let out = problem.solve(p)?;
    Ok(RelaxedSolution {
        w: ScalarField::from_values(g, problem.w).expect("grid sized"),
        gap: out.gap_cells * g.face_area(),
        iterations: out.iterations,
    })
}

/// Smallest active band half-width, in cells.
const MIN_BAND_CELLS: f64 = 6.0;
/// A change within this many cells of the band edge triggers widening.
const BAND_EDGE_CELLS: f64 = 2.0;
/// Levels whose sets must stay clear of the band edge.
const EDGE_LEVELS: [f64; 2] = [0.1, 0.9];

/// One minimizing-movement step: returns `E_min` and its report.
pub fn mm_step(e: &GridSet, p: &StepParams) -> Result<(GridSet, StepReport)> {
    p.validate()?;
    let g = e.grid();
    if e.is_empty() {
        return Ok((GridSet::empty(g), StepReport::default()));
    }
    let d = signed_distance(e);
    mm_step_with_distance(e, &d, p)
}

/// [`mm_step`] with the signed distance of `e` already computed.
pub fn mm_step_with_distance(e: &GridSet, d: &ScalarField, p: &StepParams) -> Result<(GridSet, StepReport)> {
    p.validate()?;
    let g = e.grid();
    g.check_same(d.grid())?;
    if e.is_empty() {
        return Ok((GridSet::empty(g), StepReport::default()));
    }
    let dx = g.spacing();
    let max_abs = d.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut half_width = (p.band_gamma * libm::sqrt(p.h)).max(MIN_BAND_CELLS * dx);
    let shape = g.shape();
    let warm_phi = normal_field(d);
    loop {
        let state: Vec<CellState> = (0..g.len())
            .map(|i| {
                let c = g.coords(i);
                let outer = (0..g.dim()).any(|a| c[a] == 0 || c[a] + 1 == shape[a]);
                let v = d.get(i);
                if outer {
                    CellState::Zero
                } else if v.abs() <= half_width {
                    CellState::Active
                } else if v < 0.0 {
                    CellState::One
                } else {
                    CellState::Zero
                }
            })
            .collect();
        let q: Vec<f64> = d.values().iter().map(|v| (v / p.h - p.lambda) * dx).collect();
        let w0: Vec<f64> = (0..g.len()).map(|i| if e.contains(i) { 1.0 } else { 0.0 }).collect();
        let mut problem = BandProblem::new(g, &state, q, w0, Some(&warm_phi));
        let out = problem.solve(p)?;
        let w = ScalarField::from_values(g, problem.w).expect("grid sized");
        let e_min = threshold(&w, p.theta);
        let moved = max_abs_on_difference(e, &e_min, d)?;
        // `{w > 0.9} ⊂ {w > s} ⊂ {w > 0.1}` for every level in between, so
        // the two extremes bound the reach of all level sets; fractional
        // values next to a pinned cell mean the band constraint is active.
        let mut reach = moved;
        for level in EDGE_LEVELS {
            reach = reach.max(max_abs_on_difference(e, &threshold(&w, level), d)?);
        }
        if reach > half_width - BAND_EDGE_CELLS * dx && half_width < max_abs {
            half_width *= 2.0;
            continue;
        }
        let energy_before = discrete_energy_with_distance(e, d, p)?;
        let energy_after = discrete_energy_with_distance(&e_min, d, p)?;
        let band_warning = p.gamma_emp.is_some_and(|gamma| moved > gamma * libm::sqrt(p.h));
        let report = StepReport {
            energy_before,
            energy_after,
            pd_gap: out.gap_cells * g.face_area(),
            iterations: out.iterations,
            band_width_observed: moved,
            band_half_width: half_width,
            band_warning,
        };
        return Ok((e_min, report));
    }
}

/// Unit field `-∇⁺d / |∇⁺d|`, the inward normal of the level sets of `d`;
/// used to warm-start the dual variable.
fn normal_field(d: &ScalarField) -> [Vec<f64>; 3] {
    let g = d.grid();
    let shape = g.shape();
    let strides = g.strides();
    let mut out = [vec![0.0; g.len()], vec![0.0; g.len()], vec![0.0; g.len()]];
    for i in 0..g.len() {
        let c = g.coords(i);
        let mut grad = [0.0; 3];
        let mut norm2 = 0.0;
        for a in 0..g.dim() {
            if c[a] + 1 < shape[a] {
                let gd = d.get(i + strides[a]) - d.get(i);
                if gd.is_finite() {
                    grad[a] = gd;
                    norm2 += gd * gd;
                }
            }
        }
        if norm2 > 0.0 {
            let inv = 1.0 / libm::sqrt(norm2);
            for a in 0..g.dim() {
                out[a][i] = -grad[a] * inv;
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CellState {
    Active,
    Zero,
    One,
}

struct SolveOutcome {
    gap_cells: f64,
    iterations: usize,
}

/// Relaxed problem restricted to the active cells, in cell units: the
/// objective is `Σ_D |∇w| + Σ_A q w` with `q = potential · Δx`.
struct BandProblem {
    dim: usize,
    cells_total: usize,
    strides: [usize; 3],
    /// Active cells.
    active: Vec<u32>,
    /// Bit `a` set: cell has a forward neighbor along `a`; bit `a + 3`: a
    /// backward neighbor.
    active_mask: Vec<u8>,
    /// Cells carrying a dual variable: every cell whose forward difference
    /// touches an active cell.
    dual: Vec<u32>,
    dual_mask: Vec<u8>,
    /// Pinned cells of value one adjacent to the dual cells.
    pinned_one: Vec<u32>,
    pinned_one_mask: Vec<u8>,
    q: Vec<f64>,
    w: Vec<f64>,
    w_bar: Vec<f64>,
    phi: [Vec<f64>; 3],
}

impl BandProblem {
    fn new(g: &Grid, state: &[CellState], q: Vec<f64>, w0: Vec<f64>, warm_phi: Option<&[Vec<f64>; 3]>) -> Self {
        let dim = g.dim();
        let shape = g.shape();
        let strides = g.strides();
        let n = g.len();
        let mask_of = |i: usize| -> u8 {
            let c = g.coords(i);
            let mut m = 0u8;
            for a in 0..dim {
                if c[a] + 1 < shape[a] {
                    m |= 1 << a;
                }
                if c[a] > 0 {
                    m |= 1 << (a + 3);
                }
            }
            m
        };
        let mut w = w0;
        for (i, s) in state.iter().enumerate() {
            match s {
                CellState::Zero => w[i] = 0.0,
                CellState::One => w[i] = 1.0,
                CellState::Active => {}
            }
        }
        let mut active = Vec::new();
        let mut active_mask = Vec::new();
        let mut is_dual = vec![false; n];
        for i in 0..n {
            if state[i] == CellState::Active {
                let m = mask_of(i);
                active.push(i as u32);
                active_mask.push(m);
                is_dual[i] = true;
                for a in 0..dim {
                    if m & (1 << (a + 3)) != 0 {
                        is_dual[i - strides[a]] = true;
                    }
                }
            }
        }
        let mut dual = Vec::new();
        let mut dual_mask = Vec::new();
        let mut touched = vec![false; n];
        for i in 0..n {
            if is_dual[i] {
                let m = mask_of(i);
                dual.push(i as u32);
                dual_mask.push(m);
                touched[i] = true;
                for a in 0..dim {
                    if m & (1 << a) != 0 {
                        touched[i + strides[a]] = true;
                    }
                }
            }
        }
        let mut pinned_one = Vec::new();
        let mut pinned_one_mask = Vec::new();
        for i in 0..n {
            if touched[i] && state[i] == CellState::One {
                pinned_one.push(i as u32);
                pinned_one_mask.push(mask_of(i));
            }
        }
        let mut phi = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        if let Some(warm) = warm_phi {
            for (&i, &m) in dual.iter().zip(&dual_mask) {
                let i = i as usize;
                for a in 0..dim {
                    if m & (1 << a) != 0 {
                        phi[a][i] = warm[a][i];
                    }
                }
            }
        }
        let w_bar = w.clone();
        BandProblem {
            dim,
            cells_total: n,
            strides,
            active,
            active_mask,
            dual,
            dual_mask,
            pinned_one,
            pinned_one_mask,
            q,
            w,
            w_bar,
            phi,
        }
    }

    fn solve(&mut self, p: &StepParams) -> Result<SolveOutcome> {
        const CHECK_EVERY: usize = 20;
        let tol = p.pd_tol * self.cells_total as f64;
        let step = 0.99 / libm::sqrt(4.0 * self.dim as f64);
        let tau = step * libm::sqrt(p.step_ratio);
        let sigma = step / libm::sqrt(p.step_ratio);
        let mut iterations = 0;
        let mut gap = self.gap();
        while gap > tol {
            if iterations >= p.max_iterations {
                return Err(Error::NonConvergence { iterations, gap });
            }
            for _ in 0..CHECK_EVERY {
                match self.dim {
                    2 => self.iterate::<2>(tau, sigma),
                    _ => self.iterate::<3>(tau, sigma),
                }
            }
            iterations += CHECK_EVERY;
            gap = self.gap();
        }
        Ok(SolveOutcome { gap_cells: gap.max(0.0), iterations })
    }

    #[inline(always)]
    fn iterate<const N: usize>(&mut self, tau: f64, sigma: f64) {
        let strides = self.strides;
        for (&i, &m) in self.dual.iter().zip(&self.dual_mask) {
            let i = i as usize;
            let wi = self.w_bar[i];
            let mut v = [0.0; N];
            let mut norm2 = 0.0;
            for a in 0..N {
                if m & (1 << a) != 0 {
                    let g = self.w_bar[i + strides[a]] - wi;
                    v[a] = self.phi[a][i] + sigma * g;
                    norm2 += v[a] * v[a];
                }
            }
            let scale = if norm2 > 1.0 { 1.0 / libm::sqrt(norm2) } else { 1.0 };
            for a in 0..N {
                if m & (1 << a) != 0 {
                    self.phi[a][i] = v[a] * scale;
                }
            }
        }
        for (k, &j) in self.active.iter().enumerate() {
            let j = j as usize;
            let m = self.active_mask[k];
            let mut div = 0.0;
            for a in 0..N {
                div += self.phi[a][j];
                if m & (1 << (a + 3)) != 0 {
                    div -= self.phi[a][j - strides[a]];
                }
            }
            let old = self.w[j];
            let new = (old + tau * (div - self.q[j])).clamp(0.0, 1.0);
            self.w[j] = new;
            self.w_bar[j] = 2.0 * new - old;
        }
    }

    fn divergence(&self, j: usize, m: u8) -> f64 {
        let mut div = 0.0;
        for a in 0..self.dim {
            div += self.phi[a][j];
            if m & (1 << (a + 3)) != 0 {
                div -= self.phi[a][j - self.strides[a]];
            }
        }
        div
    }

    /// Primal-dual gap of the restricted problem, in cell units.
    fn gap(&self) -> f64 {
        let mut primal = 0.0;
        for (&i, &m) in self.dual.iter().zip(&self.dual_mask) {
            let i = i as usize;
            let mut s = 0.0;
            for a in 0..self.dim {
                if m & (1 << a) != 0 {
                    let g = self.w[i + self.strides[a]] - self.w[i];
                    s += g * g;
                }
            }
            primal += libm::sqrt(s);
        }
        let mut dual = 0.0;
        for (&j, &m) in self.active.iter().zip(&self.active_mask) {
            let j = j as usize;
            primal += self.q[j] * self.w[j];
            dual += (self.q[j] - self.divergence(j, m)).min(0.0);
        }
        for (&j, &m) in self.pinned_one.iter().zip(&self.pinned_one_mask) {
            dual -= self.divergence(j as usize, m);
        }
        primal - dual
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes::ball;

    fn grid2(cells: usize, spacing: f64) -> Grid {
        Grid::centered(2, &[cells, cells], spacing).unwrap()
    }

    /// Radius of the disc with the same area.
    fn area_radius(s: &GridSet) -> f64 {
        libm::sqrt(volume(s) / core::f64::consts::PI)
    }

    #[test]
    fn params_validation() {
        assert!(StepParams::new(0.0, 0.0).validate().is_err());
        let mut p = StepParams::new(1e-3, 0.0);
        p.theta = 1.0;
        assert!(p.validate().is_err());
        assert!(StepParams::new(1e-3, 4.0).validate().is_ok());
    }

    #[test]
    fn threshold_examples() {
        let g = grid2(9, 0.1);
        assert!(threshold(&ScalarField::constant(&g, 0.0), 0.5).is_empty());
        assert_eq!(threshold(&ScalarField::constant(&g, 1.0), 0.5), GridSet::full(&g));
        let b = ball(&g, [0.0; 3], 0.25);
        let w = ScalarField::from_fn(&g, |p| if p[0] * p[0] + p[1] * p[1] < 0.0625 { 1.0 } else { 0.0 });
        for theta in [0.1, 0.5, 0.9] {
            assert_eq!(threshold(&w, theta), b);
        }
        // Ties at the threshold are excluded.
        assert!(threshold(&ScalarField::constant(&g, 0.5), 0.5).is_empty());
    }

    #[test]
    fn energy_examples() {
        let g = grid2(129, 1.0 / 128.0);
        let p = StepParams::new(1e-2, 3.0);
        let e = ball(&g, [0.0; 3], 0.3);
        assert_eq!(energy(&GridSet::empty(&g), &e, &p).unwrap(), 0.0);
        assert_eq!(energy(&e, &GridSet::empty(&g), &p), Err(Error::UnboundedEnergy));
        // Direct cellwise summation oracle.
        let d = signed_distance(&e);
        let mut moment = 0.0;
        for i in 0..g.len() {
            if e.contains(i) {
                assert!(d.get(i) < 0.0);
                moment += d.get(i) * g.cell_volume();
            }
        }
        let expected = perimeter(&e) + moment / p.h - p.lambda * volume(&e);
        let got = energy(&e, &e, &p).unwrap();
        assert!((got - expected).abs() < 1e-9 * expected.abs().max(1.0));
        // The dissipation term is strictly negative for F = E.
        let p0 = StepParams::new(1e-2, 0.0);
        assert!(energy(&e, &e, &p0).unwrap() < perimeter(&e));
    }

    #[test]
    fn relaxed_minimize_constant_potentials() {
        let g = grid2(32, 1.0 / 32.0);
        let p = StepParams::new(1e-2, 0.0);
        let sol = relaxed_minimize(&ScalarField::constant(&g, 1.0), &p).unwrap();
        assert!(sol.w.values().iter().all(|&v| v == 0.0));
        let sol = relaxed_minimize(&ScalarField::constant(&g, -1.0), &p).unwrap();
        assert!(sol.w.values().iter().all(|&v| v == 1.0));
        assert!(relaxed_minimize(&ScalarField::constant(&g, f64::INFINITY), &p).is_err());
    }

    #[test]
    fn relaxed_minimize_keeps_critical_ball() {
        // potential = d/h - (n-1)/r: the ball of radius r is a critical point.
        let g = grid2(257, 1.0 / 256.0);
        let r = 0.25;
        let h = 1e-3;
        let e = ball(&g, [0.0; 3], r);
        let d = signed_distance(&e);
        let pot = ScalarField::from_values(&g, d.values().iter().map(|v| v / h - 1.0 / r).collect()).unwrap();
        let sol = relaxed_minimize(&pot, &StepParams::new(h, 0.0)).unwrap();
        let set = threshold(&sol.w, 0.5);
        assert!((area_radius(&set) - r).abs() <= 2.0 * g.spacing());
    }

    #[test]
    fn empty_set_stays_empty() {
        let g = grid2(16, 1.0 / 16.0);
        let (s, rep) = mm_step(&GridSet::empty(&g), &StepParams::new(1e-2, 2.0)).unwrap();
        assert!(s.is_empty());
        assert_eq!(rep.iterations, 0);
    }

    #[test]
    fn critical_ball_is_stationary() {
        let g = grid2(257, 1.0 / 256.0);
        let r = 0.25;
        let e = ball(&g, [0.0; 3], r);
        let (s, rep) = mm_step(&e, &StepParams::new(1e-3, 1.0 / r)).unwrap();
        assert!((area_radius(&s) - r).abs() <= 2.0 * g.spacing());
        assert!(rep.energy_after <= rep.energy_before + StepParams::new(1e-3, 4.0).gap_budget(&g));
    }

    /// Scalar-scan oracle for the unforced ball step: minimize
    /// `ρ ↦ 2πρ + (1/h) ∫_{B_ρ} d̄ - Λπρ²` with the exact radial distance
    /// `d̄(s) = s - r`.
    fn radial_oracle(r: f64, h: f64, lambda: f64) -> f64 {
        use core::f64::consts::PI;
        let energy = |rho: f64| {
            // ∫_0^ρ (s - r) 2πs ds
            let diss = 2.0 * PI * (rho * rho * rho / 3.0 - r * rho * rho / 2.0);
            2.0 * PI * rho + diss / h - lambda * PI * rho * rho
        };
        let mut best = (f64::INFINITY, 0.0);
        let steps = 200_000;
        for k in 0..=steps {
            let rho = 1.5 * r * k as f64 / steps as f64;
            let e = energy(rho);
            if e < best.0 {
                best = (e, rho);
            }
        }
        best.1
    }

    #[test]
    fn unforced_ball_step_matches_radial_oracle() {
        let r = 1.0;
        let h = 1e-3;
        let oracle = radial_oracle(r, h, 0.0);
        // Frozen reference from the oracle: ρ* = (r + sqrt(r² - 4h)) / 2.
        assert!((oracle - 0.998_998_998).abs() < 1e-5, "{oracle}");
        let dx = 1.0 / 256.0;
        let g = Grid::centered(2, &[577, 577], dx).unwrap();
        let e = ball(&g, [0.0; 3], r);
        let (s, _) = mm_step(&e, &StepParams::new(h, 0.0)).unwrap();
        // Radii measured against the rasterized initial radius.
        let measured = area_radius(&s) - area_radius(&e) + r;
        assert!((measured - oracle).abs() <= h * h + 2.0 * dx, "{measured} vs {oracle}");
    }
}
