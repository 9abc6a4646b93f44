//! The uniform `(phi, z)` partition of the unit sphere.
//!
//! An odd count `V` of subdivisions in each coordinate gives `V^2` cells of
//! equal area `4 pi / V^2`: azimuth nodes `phi_m = 2 pi m / V` and height
//! nodes `z_nu = 1 - 2 nu / V`. Equal-area cells are what make a single DFT
//! in the azimuthal index block-diagonalize the discretized operators.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereGrid {
    v: usize,
}

impl SphereGrid {
    /// `v` must be odd and at least 3.
    pub fn new(v: usize) -> Result<Self> {
        if v < 3 || v % 2 == 0 {
            return Err(Error::Domain(format!(
                "grid subdivision count must be odd and >= 3, got {v}"
            )));
        }
        Ok(Self { v })
    }

    pub fn v(&self) -> usize {
        self.v
    }

    /// Azimuthal step `2 pi / V`.
    pub fn h_phi(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.v as f64
    }

    /// Height step `2 / V`.
    pub fn h_z(&self) -> f64 {
        2.0 / self.v as f64
    }

    /// Cell area `h_phi * h_z = 4 pi / V^2`, identical for every cell.
    pub fn cell_area(&self) -> f64 {
        self.h_phi() * self.h_z()
    }

    /// `phi_m = 2 pi m / V` for `m = 0..V`.
    pub fn phi_node(&self, m: usize) -> f64 {
        debug_assert!(m < self.v);
        2.0 * std::f64::consts::PI * m as f64 / self.v as f64
    }

    /// `z_nu = 1 - 2 nu / V` for `nu = 0..=V`; exact at both poles.
    pub fn z_node(&self, nu: usize) -> f64 {
        debug_assert!(nu <= self.v);
        1.0 - 2.0 * nu as f64 / self.v as f64
    }

    /// The `n`-th height cell as `(lower, upper)`, counted from the north pole.
    pub fn z_cell(&self, n: usize) -> (f64, f64) {
        (self.z_node(n + 1), self.z_node(n))
    }

    pub fn z_cell_midpoint(&self, n: usize) -> f64 {
        1.0 - (2.0 * n as f64 + 1.0) / self.v as f64
    }

    /// Number of unknowns `V^2` of the discretized operators.
    pub fn unknowns(&self) -> usize {
        self.v * self.v
    }

    /// Balanced azimuthal frequencies `-(V-1)/2 ..= (V-1)/2`.
    pub fn balanced_frequencies(&self) -> impl Iterator<Item = i64> {
        let half = (self.v as i64 - 1) / 2;
        -half..=half
    }
}
