//! Ordinary least-squares line fits.

use alloc::vec::Vec;

use crate::{Error, Result};

/// `y ≈ slope · x + intercept`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination; `1` when the data are exactly linear.
    pub r_squared: f64,
    /// Standard error of the slope (`0` with only two points).
    pub slope_stderr: f64,
    /// `y_i - (slope · x_i + intercept)`.
    pub residuals: Vec<f64>,
}

impl LinearFit {
    /// Half-width of the two-sided 95% confidence interval of the slope.
    pub fn slope_ci95(&self) -> f64 {
        let dof = self.residuals.len().saturating_sub(2);
        student_t975(dof) * self.slope_stderr
    }

    pub fn max_abs_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()))
    }

    pub fn predict(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }
}

/// Least-squares line through `(x_i, y_i)`.
///
/// Fails with [`Error::DegenerateFit`] on malformed input (fewer than two
/// points, mismatched lengths or non-finite values) and when either
/// coordinate has no spread.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() {
        return Err(Error::DegenerateFit("x and y differ in length"));
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::DegenerateFit("fewer than two points"));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::DegenerateFit("non-finite data"));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
        syy += (yi - my) * (yi - my);
    }
    if !(sxx > 0.0) {
        return Err(Error::DegenerateFit("all abscissae coincide"));
    }
    if !(syy > 0.0) {
        return Err(Error::DegenerateFit("zero variance in the data"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = x.iter().zip(y).map(|(&xi, &yi)| yi - (slope * xi + intercept)).collect();
    let sse: f64 = residuals.iter().map(|r| r * r).sum();
    let r_squared = (1.0 - sse / syy).clamp(0.0, 1.0);
    let slope_stderr = if n > 2 { libm::sqrt(sse / (nf - 2.0) / sxx) } else { 0.0 };
    Ok(LinearFit { slope, intercept, r_squared, slope_stderr, residuals })
}

/// Fit of `y ≈ c · x^p` on logarithmic axes; `slope` is the exponent `p` and
/// `intercept` is `ln c`.
pub fn power_law_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.iter().chain(y).any(|&v| !(v > 0.0)) {
        return Err(Error::DegenerateFit("power law needs positive data"));
    }
    let lx: Vec<f64> = x.iter().map(|&v| libm::log(v)).collect();
    let ly: Vec<f64> = y.iter().map(|&v| libm::log(v)).collect();
    linear_fit(&lx, &ly)
}

/// 0.975 quantile of Student's t distribution.
fn student_t975(dof: usize) -> f64 {
    const TABLE: [f64; 30] = [
        12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228, 2.201, 2.179, 2.160,
        2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086, 2.080, 2.074, 2.069, 2.064, 2.060, 2.056,
        2.052, 2.048, 2.045, 2.042,
    ];
    match dof {
        0 => f64::INFINITY,
        1..=30 => TABLE[dof - 1],
        31..=60 => 2.0,
        _ => 1.96,
    }
}
