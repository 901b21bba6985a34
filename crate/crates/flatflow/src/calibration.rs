//! Empirical barrier constants and their file format.
//!
//! ```text
//! [calibration]
//! n = 2
//! radius = 0.25
//! forcing = 4
//! c0 = 4
//! h = 0.0004
//! spacing = 0.001953125
//! eta_measured = 0.5725
//! margin = 0.25
//! eta = 0.7156
//! alpha_fit = 0.7803
//! neck_exponent = 0.2371
//! neck_r_squared = 0.99999
//! gamma_emp = 1.245
//! ```
//!
//! Values are written with shortest round-trip formatting, so a calibration
//! survives a write/read cycle bit for bit.

use std::path::Path;
use std::str::FromStr;

use crate::ini::Ini;
use crate::{Error, Result};

const SECTION: &str = "calibration";

/// Constants measured by the `calibrate` preset.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub n: usize,
    /// Radius of the calibration balls.
    pub radius: f64,
    /// Constant forcing value of the calibration runs.
    pub forcing: f64,
    /// Forcing bound `C0`.
    pub c0: f64,
    /// Time step of the shrink-rate run.
    pub h: f64,
    pub spacing: f64,
    /// Largest observed shrink rate of a single ball.
    pub eta_measured: f64,
    /// Relative margin; `eta = eta_measured · (1 + margin)`.
    pub margin: f64,
    pub eta: f64,
    /// Smallest `neck / h^{1/4}` over the first-step sweep.
    pub alpha_fit: f64,
    /// Log-log slope of first-step necks against `h`.
    pub neck_exponent: f64,
    pub neck_r_squared: f64,
    /// Largest `band_width_observed / √h` seen during calibration.
    pub gamma_emp: f64,
}

fn field<T: FromStr>(ini: &Ini, path: &Path, key: &str) -> Result<T> {
    let v = ini
        .get(SECTION, key)
        .ok_or_else(|| Error::format(path, format!("missing `{key}` in [{SECTION}]")))?;
    v.parse().map_err(|_| Error::format(path, format!("[{SECTION}] {key} = `{v}` is not a valid value")))
}

impl Calibration {
    pub fn to_text(&self) -> String {
        let mut ini = Ini::default();
        ini.set(SECTION, "n", self.n.to_string());
        for (key, v) in [
            ("radius", self.radius),
            ("forcing", self.forcing),
            ("c0", self.c0),
            ("h", self.h),
            ("spacing", self.spacing),
            ("eta_measured", self.eta_measured),
            ("margin", self.margin),
            ("eta", self.eta),
            ("alpha_fit", self.alpha_fit),
            ("neck_exponent", self.neck_exponent),
            ("neck_r_squared", self.neck_r_squared),
            ("gamma_emp", self.gamma_emp),
        ] {
            ini.set(SECTION, key, v.to_string());
        }
        ini.to_text()
    }

    /// Parses a calibration file; `path` is used in error messages only.
    pub fn from_text(path: &Path, text: &str) -> Result<Self> {
        let ini = Ini::parse(text).map_err(|e| Error::format(path, e.to_string()))?;
        if !ini.has_section(SECTION) {
            return Err(Error::format(path, format!("missing [{SECTION}] section")));
        }
        let cal = Calibration {
            n: field(&ini, path, "n")?,
            radius: field(&ini, path, "radius")?,
            forcing: field(&ini, path, "forcing")?,
            c0: field(&ini, path, "c0")?,
            h: field(&ini, path, "h")?,
            spacing: field(&ini, path, "spacing")?,
            eta_measured: field(&ini, path, "eta_measured")?,
            margin: field(&ini, path, "margin")?,
            eta: field(&ini, path, "eta")?,
            alpha_fit: field(&ini, path, "alpha_fit")?,
            neck_exponent: field(&ini, path, "neck_exponent")?,
            neck_r_squared: field(&ini, path, "neck_r_squared")?,
            gamma_emp: field(&ini, path, "gamma_emp")?,
        };
        if !(cal.alpha_fit > 0.0 && cal.radius > 0.0) {
            return Err(Error::format(path, "alpha_fit and radius must be positive"));
        }
        if !(cal.eta >= 0.0 && cal.c0 >= 0.0) {
            return Err(Error::format(path, "eta and c0 must be non-negative"));
        }
        Ok(cal)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_text(path, &crate::io::read_text(path)?)
    }
}
