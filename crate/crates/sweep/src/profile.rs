use std::fmt;
use std::str::FromStr;

use crate::error::SweepError;

/// Numerical tolerances for a run and the width of the verification bands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TolerancePolicy {
    pub name: &'static str,
    /// Truncation convergence tolerance.
    pub dim_tol: f64,
    /// Largest steady-state residual accepted in a row.
    pub residual_max: f64,
    /// Multiplier applied to every verification band.
    pub band_scale: f64,
}

impl TolerancePolicy {
    pub const DEFAULT: Self = Self {
        name: "default",
        dim_tol: 1e-8,
        residual_max: 1e-8,
        band_scale: 1.0,
    };

    pub const LOOSE: Self = Self {
        name: "loose",
        dim_tol: 1e-6,
        residual_max: 1e-6,
        band_scale: 1.5,
    };

    pub fn band(&self, tol: f64) -> f64 {
        tol * self.band_scale
    }
}

impl Default for TolerancePolicy {
    fn default() -> Self {
        Self::DEFAULT
    }
}

impl FromStr for TolerancePolicy {
    type Err = SweepError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "default" => Ok(Self::DEFAULT),
            "loose" => Ok(Self::LOOSE),
            other => Err(SweepError::UnknownProfile(other.to_string())),
        }
    }
}

impl fmt::Display for TolerancePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} (dim_tol={:e}, residual_max={:e}, band_scale={})",
            self.name, self.dim_tol, self.residual_max, self.band_scale
        )
    }
}
