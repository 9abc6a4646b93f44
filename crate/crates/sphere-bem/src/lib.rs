//! Semi-analytic spectra of boundary-element matrices on the unit sphere.
//!
//! Discretizing the acoustic single-layer, hypersingular, or identity operator
//! on a uniform `(phi, z)` grid of the sphere yields a matrix that a DFT in the
//! azimuthal index turns into a block-diagonal one. Each block is a rapidly
//! converging series of rank-one terms built from spherical Bessel functions
//! and Legendre moments of the basis profiles, so matrix eigenvalues can be
//! computed semi-analytically and compared against the closed-form operator
//! spectrum. The crate assembles those blocks, matches their eigenvalues to
//! the operator's, and measures the relative spectral error under
//! wavelength-proportional grid refinement.

pub use nalgebra;
pub use num_complex;

pub mod assign;
pub mod basis;
pub mod blocks;
pub mod circulant;
pub mod eigen;
pub mod grid;
pub mod quad;
pub mod reference;
pub mod report;
pub mod spectrum;
pub mod specfun;
pub mod spectral_error;












/// Unified error type for every fallible operation in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A value is finite in scaled form but not representable as `f64`.
    #[error("{what} at l={l}, x={x} is outside the representable f64 range")]
    Range { what: &'static str, l: usize, x: f64 },
    /// A truncated series hit its term cap before meeting the tail criterion.
    #[error("series for p={p}, s-branch {s} saturated at l_cap={l_cap} (relative tail {tail:.3e})")]
    Saturation { p: i64, s: i64, l_cap: usize, tail: f64 },
    /// The dense eigensolver failed to converge.
    #[error("eigensolver failed: {0}")]
    Eigen(String),
    /// Inconsistent matrix/vector dimensions.
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    /// An invalid run configuration.
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
