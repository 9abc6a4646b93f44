//! The azimuthal DFT that block-diagonalizes the discretized operators, and
//! the permutation that gathers the transformed matrix into its blocks.
//!
//! With unknowns indexed `u = n*M + m` (height-major), conjugating by
//! `I_N ⊗ D_M` turns azimuthal convolution structure into a multiplication
//! per frequency; regrouping indices as `v = p_idx*N + n` then exposes one
//! `N x N` block per balanced frequency `p`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::{Error, Result};

/// Unitary DFT eigenvector matrix: column `p + (m-1)/2` holds the normalized
/// circulant eigenvector `e^{-i p phi_mu} / sqrt(m)` of the balanced
/// frequency `p`; `m` must be odd.
pub fn dft_eigenvector_matrix(m: usize) -> Result<DMatrix<Complex64>> {
    if m == 0 || m % 2 == 0 {
        return Err(Error::Domain(format!("DFT size must be odd and positive, got {m}")));
    }
    let half = (m as i64 - 1) / 2;
    let scale = 1.0 / (m as f64).sqrt();
    Ok(DMatrix::from_fn(m, m, |mu, col| {
        let p = col as i64 - half;
        let angle = -2.0 * std::f64::consts::PI * p as f64 * mu as f64 / m as f64;
        Complex64::from_polar(scale, angle)
    }))
}

/// Permutation taking the height-major flat index to the frequency-grouped
/// one: `perm[p_idx*n + nn] = nn*m + p_idx`. Applying it as
/// `Y[v][w] = X[perm[v]][perm[w]]` is the congruence `P^T X P`.
pub fn spectral_permutation(m: usize, n: usize) -> Result<Vec<usize>> {
    if m == 0 || n == 0 {
        return Err(Error::Domain("permutation sizes must be positive".into()));
    }
    let mut perm = Vec::with_capacity(m * n);
    for p_idx in 0..m {
        for nn in 0..n {
            perm.push(nn * m + p_idx);
        }
    }
    Ok(perm)
}

/// `Y[v][w] = X[perm[v]][perm[w]]`.
pub fn apply_permutation(x: &DMatrix<Complex64>, perm: &[usize]) -> Result<DMatrix<Complex64>> {
    let size = x.nrows();
    if x.ncols() != size || perm.len() != size {
        return Err(Error::Dimension(format!(
            "permutation of length {} cannot reorder a {}x{} matrix",
            perm.len(),
            x.nrows(),
            x.ncols()
        )));
    }
    Ok(DMatrix::from_fn(size, size, |v, w| x[(perm[v], perm[w])]))
}
