//! Rasterizers for the simple shapes used throughout the experiments.

use crate::grid::{Grid, GridSet, Point};

/// Squared Euclidean distance over the first `dim` coordinates.
#[inline]
pub fn dist2(a: &Point, b: &Point, dim: usize) -> f64 {
    (0..dim).map(|i| (a[i] - b[i]) * (a[i] - b[i])).sum()
}

/// Open ball `B(center, radius)` sampled at cell centers.
pub fn ball(grid: &Grid, center: Point, radius: f64) -> GridSet {
    let n = grid.dim();
    let r2 = radius * radius;
    GridSet::from_fn(grid, |p| dist2(p, &center, n) < r2)
}

/// Closed ball `B̄(center, radius)` sampled at cell centers.
pub fn closed_ball(grid: &Grid, center: Point, radius: f64) -> GridSet {
    let n = grid.dim();
    let r2 = radius * radius;
    GridSet::from_fn(grid, |p| dist2(p, &center, n) <= r2)
}

/// Union of open balls.
pub fn balls(grid: &Grid, balls: &[(Point, f64)]) -> GridSet {
    let n = grid.dim();
    GridSet::from_fn(grid, |p| balls.iter().any(|(c, r)| dist2(p, c, n) < r * r))
}

/// `x1`-axis offset helper: the point `center + t e1`.
pub fn along_x1(center: &Point, t: f64) -> Point {
    let mut p = *center;
    p[0] += t;
    p
}
