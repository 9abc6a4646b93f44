//! Special functions: spherical Bessel/Hankel tables and normalized
//! associated Legendre functions, with overflow-safe scaled representations.

mod bessel;
mod legendre;

pub use bessel::{
    spherical_h2, spherical_h2_prime, spherical_j, spherical_j_prime, spherical_y,
    spherical_y_prime, Scaled, SphericalBesselTable, MAX_ARGUMENT, MAX_ORDER,
};
pub use legendre::{normalized_legendre, normalized_legendre_column};

use num_complex::Complex64;

/// A complex value with an exponent factored out: the represented number is
/// `value * exp(log_scale)`. The pair stays finite even where the plain value
/// over- or underflows `f64`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpecialFunctionValue {
    pub value: Complex64,
    pub log_scale: f64,
}

impl SpecialFunctionValue {
    /// Reconstructs the plain value, erroring instead of overflowing.
    pub fn to_complex(&self, what: &'static str, l: usize, x: f64) -> crate::Result<Complex64> {
        if self.value == Complex64::ZERO {
            return Ok(Complex64::ZERO);
        }
        let log_mag = self.value.norm().ln() + self.log_scale;
        if log_mag > 700.0 {
            return Err(crate::Error::Range { what, l, x });
        }
        Ok(self.value * self.log_scale.exp())
    }
}
