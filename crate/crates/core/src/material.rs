//! Physical material constants and the dimensionless groups derived from them.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub const MU0: f64 = 4.0 * PI * 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams {
    /// Saturation magnetization, A/m.
    pub ms: f64,
    /// Exchange constant, J/m.
    pub a_ex: f64,
    /// Uniaxial anisotropy constant, J/m^3.
    pub ku: f64,
    /// Gyromagnetic ratio, rad/(s T).
    pub gamma: f64,
    /// Vacuum permeability, T m/A.
    pub mu0: f64,
    /// Length scale used for rescaling (domain diameter), m.
    pub length: f64,
    pub alpha: f64,
}

impl MaterialParams {
    /// Permalloy-like defaults; `length` is set by the caller from the sample geometry.
    pub fn permalloy(length: f64) -> Self {
        Self { ms: 8.0e5, a_ex: 1.3e-11, ku: 1.0e2, gamma: 1.76e11, mu0: MU0, length, alpha: 0.1 }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [("ms", self.ms), ("a_ex", self.a_ex), ("gamma", self.gamma), ("mu0", self.mu0), ("length", self.length)];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Validation(format!("material.{name} must be positive, got {v}")));
            }
        }
        if !(self.ku >= 0.0) {
            return Err(Error::Validation(format!("material.ku must be >= 0, got {}", self.ku)));
        }
        if !(self.alpha >= 0.0) {
            return Err(Error::Validation(format!("material.alpha must be >= 0, got {}", self.alpha)));
        }
        Ok(())
    }

    /// `Q = Ku / (mu0 Ms^2)`.
    pub fn q(&self) -> f64 {
        self.ku / (self.mu0 * self.ms * self.ms)
    }

    /// `eps = A / (mu0 Ms^2 L^2)`.
    pub fn eps(&self) -> f64 {
        self.a_ex / (self.mu0 * self.ms * self.ms * self.length * self.length)
    }

    /// Seconds per unit of dimensionless time, `(mu0 gamma Ms)^-1`.
    pub fn time_unit(&self) -> f64 {
        1.0 / (self.mu0 * self.gamma * self.ms)
    }

    pub fn to_dimensionless_time(&self, seconds: f64) -> f64 {
        seconds / self.time_unit()
    }

    pub fn to_seconds(&self, t: f64) -> f64 {
        t * self.time_unit()
    }

    pub fn to_dimensionless_length(&self, meters: f64) -> f64 {
        meters / self.length
    }

    /// Applied induction `mu0 H` in tesla to the dimensionless field `H / Ms`.
    pub fn tesla_to_field(&self, b: f64) -> f64 {
        b / (self.mu0 * self.ms)
    }

    pub fn field_to_tesla(&self, h: f64) -> f64 {
        h * self.mu0 * self.ms
    }
}
