//! Normalized associated Legendre functions on `[-1, 1]`.
//!
//! The normalization makes the square integrate to 2 over `[-1, 1]`:
//! `Pbar_l^p = sqrt((2l+1) (l-|p|)! / (l+|p|)!) P_l^|p|`, with the positive
//! sign convention `Pbar_m^m > 0` (no Condon-Shortley phase; only squared
//! products of these functions ever enter downstream formulas). The upward
//! recurrence in `l` at fixed `|p|` is the numerically stable direction and
//! keeps every intermediate O(sqrt(l)).

use crate::{Error, Result};

fn check_z(z: f64) -> Result<()> {
    if !z.is_finite() || z.abs() > 1.0 {
        return Err(Error::Domain(format!("Legendre argument must be in [-1, 1], got {z}")));
    }
    Ok(())
}

/// `Pbar_l^p(z)` for a single `(l, p)`; requires `|p| <= l`.
pub fn normalized_legendre(l: usize, p: i64, z: f64) -> Result<f64> {
    let m = p.unsigned_abs() as usize;
    if m > l {
        return Err(Error::Domain(format!("Legendre order |p|={m} exceeds degree l={l}")));
    }
    check_z(z)?;
    let mut column = vec![0.0; l + 1];
    fill_column(m, z, &mut column);
    Ok(column[l])
}

/// Fills `out[l] = Pbar_l^p(z)` for `l = 0..out.len()-1`; entries with
/// `l < |p|` are zero.
pub fn normalized_legendre_column(p: i64, z: f64, out: &mut [f64]) -> Result<()> {
    if out.is_empty() {
        return Err(Error::Dimension("Legendre column needs at least one slot".into()));
    }
    check_z(z)?;
    fill_column(p.unsigned_abs() as usize, z, out);
    Ok(())
}

fn fill_column(m: usize, z: f64, out: &mut [f64]) {
    out.fill(0.0);
    let l_max = out.len() - 1;
    if m > l_max {
        return;
    }
    let somx2 = ((1.0 - z) * (1.0 + z)).max(0.0).sqrt();
    // Seed Pbar_m^m = prod_{k=1..m} sqrt((2k+1)/(2k)) * somx2; underflows to
    // zero only within O(ulp) of the poles, where the true value is below
    // f64's minimum positive anyway.
    let mut seed = 1.0;
    for k in 1..=m {
        seed *= (((2 * k + 1) as f64) / ((2 * k) as f64)).sqrt() * somx2;
    }
    out[m] = seed;
    if m == l_max {
        return;
    }
    out[m + 1] = z * ((2 * m + 3) as f64).sqrt() * seed;
    for l in m + 2..=l_max {
        let lf = l as f64;
        let mf = m as f64;
        let a = (((2.0 * lf - 1.0) * (2.0 * lf + 1.0)) / ((lf - mf) * (lf + mf))).sqrt();
        let b = (((2.0 * lf + 1.0) * (lf - 1.0 - mf) * (lf - 1.0 + mf))
            / ((2.0 * lf - 3.0) * (lf - mf) * (lf + mf)))
            .sqrt();
        out[l] = a * z * out[l - 1] - b * out[l - 2];
    }
}
