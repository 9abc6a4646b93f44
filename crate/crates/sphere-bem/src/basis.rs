//! Separable basis families on the sphere grid and their two ingredient
//! integrals: azimuthal Fourier coefficients and Legendre moments in `z`.
//!
//! A basis function indexed by `(n, m)` is `alpha * b_n(z) * c_m(phi)`:
//!
//! - `Patch`: `b_n` is the indicator of the `n`-th height cell and `c_m` the
//!   indicator of `[phi_m - h/2, phi_m + h/2)`.
//! - `Pyramid`: `b_n` is the unit hat of half-width `h_z` centered on the
//!   `n`-th cell midpoint (truncated at the poles) and `c_m` the periodic
//!   unit hat of half-width `h_phi` centered on `phi_m`.
//!
//! Centering the azimuthal profiles on the nodes keeps their Fourier
//! coefficients real: `sinc(pi p / M)` for patches and `sinc^2` for pyramids.
//! The family's normalization constant `1/sqrt(2)` calibrates the patch Gram
//! block to the identity in the completeness limit.

use serde::{Deserialize, Serialize};

use crate::grid::SphereGrid;
use crate::quad;
use crate::specfun::normalized_legendre_column;
use crate::{Error, Result};

/// Amplitude making the Gram block of either family tend to the identity
/// (patches exactly; pyramids to their overlap stencil of unit row sum).
pub const NORMALIZATION_CONSTANT: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisKind {
    Patch,
    Pyramid,
}

impl std::fmt::Display for BasisKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BasisKind::Patch => "patch",
            BasisKind::Pyramid => "pyramid",
        })
    }
}

impl std::str::FromStr for BasisKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "patch" => Ok(BasisKind::Patch),
            "pyramid" => Ok(BasisKind::Pyramid),
            other => {
                Err(Error::Config(format!("unknown basis kind '{other}' (patch or pyramid)")))
            }
        }
    }
}

/// A basis family: profile kind plus its calibrated amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasisFamily {
    pub kind: BasisKind,
    pub normalization: f64,
}

impl BasisFamily {
    pub fn new(kind: BasisKind) -> Self {
        Self { kind, normalization: NORMALIZATION_CONSTANT }
    }
}

/// Azimuthal Fourier coefficient `(1/h) ∫ c_0(phi) e^{i p phi} dphi` of the
/// node-centered unit profile on a grid with `m` azimuthal cells: `sinc(pi
/// p/m)` for patches, `sinc^2(pi p/m)` for pyramids. Multiples of `m` are
/// special-cased so aliased branches vanish identically rather than to
/// rounding noise.
pub fn fourier_coefficient(kind: BasisKind, p: i64, m: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::Domain("azimuthal cell count must be positive".into()));
    }
    let m_i = m as i64;
    if p.rem_euclid(m_i) == 0 {
        return Ok(if p == 0 { 1.0 } else { 0.0 });
    }
    let t = std::f64::consts::PI * p as f64 / m as f64;
    let sinc = t.sin() / t;
    Ok(match kind {
        BasisKind::Patch => sinc,
        BasisKind::Pyramid => sinc * sinc,
    })
}

/// Value of the azimuthal profile of basis `m` at `phi` (unit amplitude,
/// periodic).
pub fn phi_profile(kind: BasisKind, grid: &SphereGrid, m: usize, phi: f64) -> f64 {
    let h = grid.h_phi();
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut d = (phi - grid.phi_node(m)).rem_euclid(two_pi);
    if d > std::f64::consts::PI {
        d -= two_pi;
    }
    match kind {
        BasisKind::Patch => {
            // Half-open support [-h/2, h/2) so the patches tile the circle.
            if (-0.5 * h..0.5 * h).contains(&d) {
                1.0
            } else {
                0.0
            }
        }
        BasisKind::Pyramid => (1.0 - d.abs() / h).max(0.0),
    }
}

/// Value of the height profile of basis `n` at `z` (unit amplitude).
pub fn z_profile(kind: BasisKind, grid: &SphereGrid, n: usize, z: f64) -> f64 {
    match kind {
        BasisKind::Patch => {
            let (lo, hi) = grid.z_cell(n);
            // Half-open [lo, hi) except the south cell, which closes at -1.
            if (lo <= z && z < hi) || (n + 1 == grid.v() && z == -1.0) {
                1.0
            } else {
                0.0
            }
        }
        BasisKind::Pyramid => {
            if !(-1.0..=1.0).contains(&z) {
                return 0.0;
            }
            let h = grid.h_z();
            (1.0 - (z - grid.z_cell_midpoint(n)).abs() / h).max(0.0)
        }
    }
}

/// Legendre moments of the height profiles: `values[l][n] = alpha *
/// ∫ Pbar_l^|q|(z) b_n(z) dz` for every degree `l = 0..=l_max` at once.
#[derive(Debug, Clone)]
pub struct MomentTable {
    pub family: BasisFamily,
    pub q: i64,
    /// `values[l]` is the length-`V` moment vector of degree `l`; identically
    /// zero for `l < |q|`.
    pub values: Vec<Vec<f64>>,
}

impl MomentTable {
    pub fn vector(&self, l: usize) -> &[f64] {
        &self.values[l]
    }

    pub fn l_max(&self) -> usize {
        self.values.len() - 1
    }
}

/// A panel of the height axis on which every active profile is linear.
struct Panel {
    z_lo: f64,
    z_hi: f64,
    /// `(basis index, value at z_lo, value at z_hi)`.
    active: Vec<(usize, f64, f64)>,
}

fn panels(kind: BasisKind, grid: &SphereGrid) -> Vec<Panel> {
    let v = grid.v();
    match kind {
        BasisKind::Patch => (0..v)
            .map(|n| {
                let (lo, hi) = grid.z_cell(n);
                Panel { z_lo: lo, z_hi: hi, active: vec![(n, 1.0, 1.0)] }
            })
            .collect(),
        BasisKind::Pyramid => {
            let h = grid.h_z();
            let hat = |n: usize, z: f64| (1.0 - (z - grid.z_cell_midpoint(n)).abs() / h).max(0.0);
            let mut cuts = Vec::with_capacity(v + 2);
            cuts.push(1.0);
            cuts.extend((0..v).map(|n| grid.z_cell_midpoint(n)));
            cuts.push(-1.0);
            cuts.windows(2)
                .map(|w| {
                    let (hi, lo) = (w[0], w[1]);
                    let active = (0..v)
                        .filter_map(|n| {
                            let (a, b) = (hat(n, lo), hat(n, hi));
                            (a > 0.0 || b > 0.0).then_some((n, a, b))
                        })
                        .collect();
                    Panel { z_lo: lo, z_hi: hi, active }
                })
                .collect()
        }
    }
}

/// Builds the moment table for azimuthal frequency `q` up to degree `l_max`.
///
/// The integral is taken in `theta = acos(z)`: the integrand `Pbar_l^|q|(cos
/// theta) * b_n(cos theta) * sin(theta)` is analytic on each panel (the
/// `sqrt(1-z^2)` endpoint singularity of odd orders disappears), so panelwise
/// Gauss-Legendre converges fast; the node count scales with the number of
/// Legendre oscillations a panel spans.
pub fn moment_table(
    grid: &SphereGrid,
    family: BasisFamily,
    q: i64,
    l_max: usize,
) -> Result<MomentTable> {
    let v = grid.v();
    let order = q.unsigned_abs() as usize;
    let mut values = vec![vec![0.0; v]; l_max + 1];
    let mut column = vec![0.0; l_max + 1];
    for panel in panels(family.kind, grid) {
        let theta_a = panel.z_hi.clamp(-1.0, 1.0).acos();
        let theta_b = panel.z_lo.clamp(-1.0, 1.0).acos();
        let width = theta_b - theta_a;
        if width <= 0.0 {
            continue;
        }
        let nodes = 12 + (0.7 * l_max as f64 * width).ceil() as usize;
        let rule = quad::cached(nodes)?;
        for (theta, w) in rule.mapped(theta_a, theta_b) {
            let z = theta.cos();
            let jacobian = theta.sin();
            normalized_legendre_column(q, z, &mut column)?;
            for &(n, at_lo, at_hi) in &panel.active {
                // Linear interpolation of the profile across the panel.
                let t = (z - panel.z_lo) / (panel.z_hi - panel.z_lo);
                let profile = at_lo + (at_hi - at_lo) * t;
                let c = w * jacobian * profile * family.normalization;
                for (row, &pl) in values.iter_mut().zip(&column).skip(order) {
                    row[n] += c * pl;
                }
            }
        }
    }
    for row in values.iter_mut().take(order.min(l_max + 1)) {
        row.fill(0.0);
    }
    Ok(MomentTable { family, q, values })
}

/// The degree-`l` moment vector alone; see [`moment_table`] for batches.
pub fn legendre_moment_vector(
    grid: &SphereGrid,
    family: BasisFamily,
    q: i64,
    l: usize,
) -> Result<Vec<f64>> {
    Ok(moment_table(grid, family, q, l)?.values.swap_remove(l))
}
