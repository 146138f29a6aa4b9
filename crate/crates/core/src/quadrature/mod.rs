//! Controlled-accuracy integration of 2pi-periodic integrands, smooth or with
//! one integrable singularity, in one and two variables.

pub mod gauss_kronrod;
mod periodic;
mod two_d;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use periodic::{integrate_periodic, integrate_singular_periodic, SingularityClass};
pub use two_d::{geometric_breaks, integrate_2d, iterated, iterated_with, GradedInterval, IteratedResult, Layout};

/// Tolerances and refinement limits shared by every rule in this module.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Doubling cap for trapezoid rules; also scales the segment budget of
    /// the adaptive rules.
    pub max_levels: u32,
    /// Power of the algebraic mesh grading toward a singular point.
    pub grading_exponent: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            max_levels: 22,
            grading_exponent: 3.0,
        }
    }
}

impl QuadratureSpec {
    pub fn new(rel_tol: f64, abs_tol: f64, max_levels: u32, grading_exponent: f64) -> Result<Self> {
        let spec = Self {
            rel_tol,
            abs_tol,
            max_levels,
            grading_exponent,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_tolerances(rel_tol: f64, abs_tol: f64) -> Result<Self> {
        Self::new(rel_tol, abs_tol, 22, 3.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol <= 1e-2) {
            return Err(Error::InvalidSpec(format!(
                "rel_tol = {} outside (0, 1e-2]",
                self.rel_tol
            )));
        }
        if !(self.abs_tol > 0.0 && self.abs_tol.is_finite()) {
            return Err(Error::InvalidSpec(format!("abs_tol = {} must be positive", self.abs_tol)));
        }
        if self.max_levels < 4 {
            return Err(Error::InvalidSpec(format!("max_levels = {} below 4", self.max_levels)));
        }
        if !(self.grading_exponent >= 1.0 && self.grading_exponent.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "grading_exponent = {} below 1",
                self.grading_exponent
            )));
        }
        Ok(())
    }

    pub fn tolerance_for(&self, value: f64) -> f64 {
        (self.rel_tol * value.abs()).max(self.abs_tol)
    }

    pub(crate) fn segment_budget(&self) -> usize {
        100 * self.max_levels as usize
    }

    pub(crate) fn adaptive(&self, factor: f64) -> gauss_kronrod::AdaptiveControl {
        gauss_kronrod::AdaptiveControl {
            rel_tol: self.rel_tol * factor,
            abs_tol: self.abs_tol * factor,
            max_segments: self.segment_budget(),
        }
    }
}

/// Outcome of one quadrature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadResult<T> {
    pub value: T,
    pub err_estimate: f64,
    pub evaluations: usize,
    pub converged: bool,
}

impl<T> QuadResult<T> {
    pub fn map<U>(self, f: impl FnOnce(T) -> U) -> QuadResult<U> {
        QuadResult {
            value: f(self.value),
            err_estimate: self.err_estimate,
            evaluations: self.evaluations,
            converged: self.converged,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_validation() {
        assert!(QuadratureSpec::default().validate().is_ok());
        assert!(QuadratureSpec::new(0.0, 1e-12, 22, 3.0).is_err());
        assert!(QuadratureSpec::new(0.1, 1e-12, 22, 3.0).is_err());
        assert!(QuadratureSpec::new(1e-6, 0.0, 22, 3.0).is_err());
        assert!(QuadratureSpec::new(1e-6, 1e-12, 3, 3.0).is_err());
        assert!(QuadratureSpec::new(1e-6, 1e-12, 4, 0.5).is_err());
        assert!(QuadratureSpec::new(1e-2, 1e-12, 4, 1.0).is_ok());
    }
}
