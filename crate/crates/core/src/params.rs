//! Physical constants and couplings shared by all constructions.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ParamsError {
    #[error("parameter {name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
}

/// Couplings and constants. The natural-units default sets every constant
/// to 1 with a unit gap; all formulas keep the symbols so dimensional
/// parameter sets work unchanged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysParams {
    /// Fermi velocity.
    pub v_f: f64,
    /// Spin-orbit gap (half the band gap).
    pub delta_so: f64,
    /// Rashba coupling.
    pub lambda_r: f64,
    /// Perpendicular magnetic field.
    pub b_field: f64,
    pub hbar: f64,
    /// Elementary charge magnitude; the electron carries -e.
    pub e_charge: f64,
    /// Carrier mass, used only by the Landau-level path.
    pub mass: f64,
    /// Speed of light, appears only in eB/c factors.
    pub c_light: f64,
}

impl PhysParams {
    /// hbar = v_F = e = c = m = 1, delta_so = 1, lambda_R = B = 0.
    pub fn natural() -> Self {
        Self {
            v_f: 1.0,
            delta_so: 1.0,
            lambda_r: 0.0,
            b_field: 0.0,
            hbar: 1.0,
            e_charge: 1.0,
            mass: 1.0,
            c_light: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), ParamsError> {
        for (name, value) in [
            ("v_f", self.v_f),
            ("hbar", self.hbar),
            ("e_charge", self.e_charge),
            ("mass", self.mass),
            ("c_light", self.c_light),
        ] {
            if value <= 0.0 {
                return Err(ParamsError::NonPositive { name, value });
            }
        }
        Ok(())
    }

    /// Planck constant h = 2 pi hbar.
    pub fn planck(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.hbar
    }
}

impl Default for PhysParams {
    fn default() -> Self {
        Self::natural()
    }
}
