//! Solids of revolution about a coordinate axis.
//!
//! A profile `g ≥ 0` on `[a, b]` generates
//! `C(g, [a, b]) = {(x1, x') : x1 ∈ [a, b], |x'| ≤ g(x1)}`, rotated about the
//! `x1`-axis. With the boundary oriented by its inner normal, its mean
//! curvature at the point over `x1` is
//!
//! ```text
//! H = -g'' / (1 + g'²)^(3/2) + (n - 2) / (g (1 + g'²)^(1/2)).
//! ```

use alloc::vec::Vec;

use crate::grid::{Grid, GridSet, Point};
use crate::{Error, Result};

/// Closed form attached to a profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProfileShape {
    /// Samples only; derivatives by finite differences.
    Sampled,
    /// `g ≡ radius`.
    Constant { radius: f64 },
    /// `g(x) = sqrt(radius² - (x - center)²)`.
    CircleArc { radius: f64, center: f64 },
    /// `g(x) = (curvature / 2)((x - center)² - half_width²) + rim`, the
    /// parabolic neck profile with value `rim` at `center ± half_width`.
    Parabola { curvature: f64, half_width: f64, rim: f64, center: f64 },
}

/// A non-negative profile sampled at uniform spacing on `[a, b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    a: f64,
    b: f64,
    samples: Vec<f64>,
    shape: ProfileShape,
}

/// Samples stored with closed-form profiles.
pub const DEFAULT_SAMPLES: usize = 257;

impl Profile {
    /// Profile through `samples` at `a + j (b - a) / (len - 1)`.
    pub fn sampled(a: f64, b: f64, samples: Vec<f64>) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidParameter("profile interval must satisfy a < b"));
        }
        if samples.len() < 2 {
            return Err(Error::InvalidParameter("profile needs at least two samples"));
        }
        if samples.iter().any(|&g| !(g >= 0.0) || !g.is_finite()) {
            return Err(Error::InvalidParameter("profile values must be finite and non-negative"));
        }
        Ok(Profile { a, b, samples, shape: ProfileShape::Sampled })
    }

    pub fn constant(radius: f64, a: f64, b: f64) -> Result<Self> {
        if !(radius >= 0.0) {
            return Err(Error::InvalidParameter("radius must be non-negative"));
        }
        Self::closed_form(ProfileShape::Constant { radius }, a, b)
    }

    /// Upper half circle; rotating it gives the ball `B(center e1, radius)`.
    pub fn circle_arc(radius: f64, center: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidParameter("radius must be positive"));
        }
        Self::closed_form(ProfileShape::CircleArc { radius, center }, center - radius, center + radius)
    }

    /// Parabola on `[center - half_width, center + half_width]`.
    pub fn parabola(curvature: f64, half_width: f64, rim: f64, center: f64) -> Result<Self> {
        if !(half_width > 0.0) || !(curvature >= 0.0) {
            return Err(Error::InvalidParameter("parabola needs positive half-width and curvature >= 0"));
        }
        if rim - 0.5 * curvature * half_width * half_width < 0.0 {
            return Err(Error::InvalidParameter("parabola dips below zero"));
        }
        let shape = ProfileShape::Parabola { curvature, half_width, rim, center };
        Self::closed_form(shape, center - half_width, center + half_width)
    }

    fn closed_form(shape: ProfileShape, a: f64, b: f64) -> Result<Self> {
        if !(a < b) {
            return Err(Error::InvalidParameter("profile interval must satisfy a < b"));
        }
        let mut p = Profile { a, b, samples: Vec::new(), shape };
        let m = DEFAULT_SAMPLES - 1;
        p.samples = (0..=m).map(|j| p.exact(a + (b - a) * j as f64 / m as f64)[0]).collect();
        Ok(p)
    }

    /// `[g, g', g'']` of a closed-form profile.
    fn exact(&self, x: f64) -> [f64; 3] {
        match self.shape {
            ProfileShape::Sampled => unreachable!("sampled profiles have no closed form"),
            ProfileShape::Constant { radius } => [radius, 0.0, 0.0],
            ProfileShape::CircleArc { radius, center } => {
                let u = x - center;
                let g2 = (radius * radius - u * u).max(0.0);
                let g = libm::sqrt(g2);
                // g' = -u/g, g'' = -r²/g³.
                [g, -u / g, -radius * radius / (g * g2)]
            }
            ProfileShape::Parabola { curvature, half_width, rim, center } => {
                let u = x - center;
                [0.5 * curvature * (u * u - half_width * half_width) + rim, curvature * u, curvature]
            }
        }
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Sample spacing `δs`.
    pub fn spacing(&self) -> f64 {
        (self.b - self.a) / (self.samples.len() - 1) as f64
    }

    pub fn shape(&self) -> ProfileShape {
        self.shape
    }

    /// Abscissa of sample `j`.
    pub fn abscissa(&self, j: usize) -> f64 {
        self.a + j as f64 * self.spacing()
    }

    /// `g(x)`: exact for closed forms, linear interpolation otherwise;
    /// `None` outside `[a, b]`.
    pub fn value(&self, x: f64) -> Option<f64> {
        if !(x >= self.a && x <= self.b) {
            return None;
        }
        if self.shape != ProfileShape::Sampled {
            return Some(self.exact(x)[0]);
        }
        let u = (x - self.a) / self.spacing();
        let last = self.samples.len() - 1;
        let j = (libm::floor(u) as usize).min(last - 1);
        let t = u - j as f64;
        Some(self.samples[j] + t * (self.samples[j + 1] - self.samples[j]))
    }

    pub fn max_value(&self) -> f64 {
        let sampled = self.samples.iter().fold(0.0f64, |m, &g| m.max(g));
        match self.shape {
            ProfileShape::CircleArc { radius, .. } => radius,
            ProfileShape::Parabola { rim, .. } => rim,
            _ => sampled,
        }
    }

    /// `[g, g', g'']` at an interior point.
    ///
    /// Sampled profiles use central differences at spacings `δs` and `2δs`
    /// combined by Richardson extrapolation at the neighboring nodes,
    /// interpolated linearly in between.
    pub fn derivatives(&self, x: f64) -> Result<[f64; 3]> {
        if !(x > self.a && x < self.b) {
            return Err(Error::ProfileDomain);
        }
        if self.shape != ProfileShape::Sampled {
            return Ok(self.exact(x));
        }
        let last = self.samples.len() - 1;
        if last < 2 {
            return Err(Error::ProfileDomain);
        }
        let u = (x - self.a) / self.spacing();
        let j = libm::floor(u) as usize;
        let t = u - j as f64;
        if t < 1e-9 {
            return Ok(self.node_derivatives(j.clamp(1, last - 1)));
        }
        let lo = self.node_derivatives(j.clamp(1, last - 1));
        let hi = self.node_derivatives((j + 1).clamp(1, last - 1));
        let g = self.value(x).expect("inside domain");
        Ok([g, lo[1] + t * (hi[1] - lo[1]), lo[2] + t * (hi[2] - lo[2])])
    }

    fn node_derivatives(&self, j: usize) -> [f64; 3] {
        let s = &self.samples;
        let d = self.spacing();
        let d1 = |k: usize| (s[j + k] - s[j - k]) / (2.0 * k as f64 * d);
        let d2 = |k: usize| (s[j + k] - 2.0 * s[j] + s[j - k]) / (k as f64 * k as f64 * d * d);
        if j >= 2 && j + 2 < s.len() {
            [s[j], (4.0 * d1(1) - d1(2)) / 3.0, (4.0 * d2(1) - d2(2)) / 3.0]
        } else {
            [s[j], d1(1), d2(1)]
        }
    }
}

/// Mean curvature of a solid of revolution from the profile value and its
/// first two derivatives.
pub fn mean_curvature_formula(g: f64, g1: f64, g2: f64, n: usize) -> f64 {
    let q = 1.0 + g1 * g1;
    -g2 / (q * libm::sqrt(q)) + (n as f64 - 2.0) / (g * libm::sqrt(q))
}

/// Mean curvature of `C(g, [a, b])` in `ℝⁿ` at the boundary point over `x1`.
///
/// Fails with [`Error::ProfileDomain`] at the endpoints or where `g = 0`.
pub fn revolution_mean_curvature(g: &Profile, x1: f64, n: usize) -> Result<f64> {
    if n != 2 && n != 3 {
        return Err(Error::Dimension(n));
    }
    let [v, d1, d2] = g.derivatives(x1)?;
    if !(v > 0.0) {
        return Err(Error::ProfileDomain);
    }
    Ok(mean_curvature_formula(v, d1, d2, n))
}

/// Cells `(x1, x')` with `x1 - center_1 ∈ [a, b]` and
/// `|x' - center'| ≤ g(x1 - center_1)`, tested at cell centers.
pub fn rasterize_solid(g: &Profile, grid: &Grid, center: &Point) -> Result<GridSet> {
    let n = grid.dim();
    let (a, b) = g.domain();
    let reach = g.max_value();
    let mut lo = [0.0; 3];
    let mut hi = [0.0; 3];
    lo[0] = center[0] + a;
    hi[0] = center[0] + b;
    for axis in 1..n {
        lo[axis] = center[axis] - reach;
        hi[axis] = center[axis] + reach;
    }
    for axis in 0..n {
        let o = grid.origin()[axis];
        if lo[axis] < o || hi[axis] > o + grid.extent(axis) {
            return Err(Error::OutOfBox);
        }
    }
    Ok(GridSet::from_fn(grid, |p| {
        let Some(r) = g.value(p[0] - center[0]) else {
            return false;
        };
        let rho2: f64 = (1..n).map(|i| (p[i] - center[i]) * (p[i] - center[i])).sum();
        rho2 <= r * r
    }))
}

/// Largest `s` such that the slice of `set` at layer `layer` along `axis`
/// contains the union of cells meeting the `(n-1)`-ball of radius `s` about
/// the axis line. Cells are closed squares; the region beyond the box is
/// outside the set.
fn inscribed_radius(set: &GridSet, axis: usize, layer: usize) -> f64 {
    let g = set.grid();
    let n = g.dim();
    let dx = g.spacing();
    let shape = g.shape();
    let others: Vec<usize> = (0..n).filter(|&a| a != axis).collect();
    // Offset of the axis line in cell units along each transverse axis.
    let axis_pos: Vec<f64> = others.iter().map(|&a| g.to_cell_units(a, 0.0)).collect();
    let mut best = f64::INFINITY;
    // Box edges.
    for (k, &a) in others.iter().enumerate() {
        best = best.min(axis_pos[k].min(shape[a] as f64 - axis_pos[k]));
    }
    let dims: Vec<usize> = others.iter().map(|&a| shape[a]).collect();
    let count: usize = dims.iter().product();
    for flat in 0..count {
        let mut c = [0usize; 3];
        c[axis] = layer;
        let mut rest = flat;
        let mut dist2 = 0.0;
        for (k, &a) in others.iter().enumerate().rev() {
            let i = rest % dims[k];
            rest /= dims[k];
            c[a] = i;
            // Distance from the axis to the closed cell interval [i, i + 1].
            let p = axis_pos[k];
            let gap = if p < i as f64 {
                i as f64 - p
            } else if p > (i + 1) as f64 {
                p - (i + 1) as f64
            } else {
                0.0
            };
            dist2 += gap * gap;
        }
        if dist2 < best * best && !set.contains(g.index(c)) {
            best = libm::sqrt(dist2);
        }
    }
    best * dx
}

/// Largest `s` such that the cells meeting the open ball `B(center, s)` are
/// all members of `set`: the distance from `center` to the nearest non-member
/// closed cell, capped by the distance to the box boundary.
pub fn inscribed_ball_radius(set: &GridSet, center: &Point) -> f64 {
    let g = set.grid();
    let n = g.dim();
    let dx = g.spacing();
    let shape = g.shape();
    let pos: Vec<f64> = (0..n).map(|a| g.to_cell_units(a, center[a])).collect();
    let mut best = (0..n).fold(f64::INFINITY, |m, a| m.min(pos[a].min(shape[a] as f64 - pos[a])));
    if !(best > 0.0) {
        return 0.0;
    }
    for idx in 0..g.len() {
        if set.contains(idx) {
            continue;
        }
        let c = g.coords(idx);
        let mut dist2 = 0.0;
        for a in 0..n {
            let lo = c[a] as f64;
            let gap = if pos[a] < lo {
                lo - pos[a]
            } else if pos[a] > lo + 1.0 {
                pos[a] - lo - 1.0
            } else {
                0.0
            };
            dist2 += gap * gap;
        }
        if dist2 < best * best {
            best = libm::sqrt(dist2);
        }
    }
    best * dx
}

/// Largest radius `s` such that the centered `(n-1)`-disk of radius `s` in
/// the slice through `x1` is covered by member cells (`0` when the slice
/// misses the set). The slice is the layer of cells containing `x1`; outside
/// the box the result is `0`.
pub fn neck_radius(set: &GridSet, x1: f64) -> f64 {
    match set.grid().nearest_layer(0, x1) {
        Some(layer) => inscribed_radius(set, 0, layer),
        None => 0.0,
    }
}

/// Per-layer inscribed radius along `axis`: the sampled profile of the
/// largest solid of revolution about the axis line (through the origin of
/// the transverse coordinates) contained in `set`, sampled at the cell
/// centers between the first and last layers meeting the set.
pub fn profile_extract(set: &GridSet, axis: usize) -> Result<Profile> {
    let g = set.grid();
    if axis >= g.dim() {
        return Err(Error::InvalidParameter("axis out of range"));
    }
    let (lo, hi) = set.bounding_box().ok_or(Error::EmptySet)?;
    let (first, last) = if lo[axis] < hi[axis] {
        (lo[axis], hi[axis])
    } else if hi[axis] + 1 < g.shape()[axis] {
        (lo[axis], hi[axis] + 1)
    } else {
        (lo[axis] - 1, hi[axis])
    };
    let samples: Vec<f64> = (first..=last).map(|layer| inscribed_radius(set, axis, layer)).collect();
    let center = |layer: usize| g.origin()[axis] + (layer as f64 + 0.5) * g.spacing();
    Profile::sampled(center(first), center(last), samples)
}
