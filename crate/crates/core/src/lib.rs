//! Minimizing-movement (flat flow) scheme for mean curvature flow with a
//! bounded forcing term, on uniform 2D and 3D grids.
//!
//! One step of the scheme replaces a set `E` by a minimizer of
//!
//! ```text
//! F  ->  P(F) + (1/h) ∫_F d_E dx - Λ |F|
//! ```
//!
//! where `d_E` is the signed distance to `E` (negative inside). The step is
//! computed through the convex relaxation over `w: grid -> [0, 1]` with a
//! total-variation perimeter, solved by a primal-dual iteration with a
//! certified duality gap, followed by thresholding.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, configuration
//! and the command-line front end live in the `flatflow` crate.
//!
//! Module map:
//!
//! - [`grid`]: grids, cell sets, scalar fields and set measurements.
//! - [`distance`]: signed distance transforms.
//! - [`solver`]: the single minimizing-movement step.
//! - [`flow`]: forcing schedules and trajectories, with stationarity and
//!   comparison checks.
//! - [`axisym`]: solids of revolution, their mean curvature and neck
//!   measurements.
//! - [`barrier`]: the explicit discrete barrier family for tangent balls.
//! - [`fit`]: small least-squares helpers used by calibration and fits.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod axisym;
pub mod barrier;
pub mod distance;
mod error;
pub mod fit;
pub mod flow;
pub mod grid;
pub mod shapes;
pub mod solver;

pub use error::{Error, Result};
pub use grid::{Grid, GridSet, Point, ScalarField};
