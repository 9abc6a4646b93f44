//! Minimum-cost rectangular assignment by shortest augmenting paths.
//!
//! Classic Jonker-Volgenant / Hungarian scheme with dual potentials: rows are
//! inserted one at a time and each insertion grows a shortest augmenting path
//! in `O(rows * cols)`. Deterministic for ties, which matters because matched
//! spectra are written to byte-compared output files.

use crate::{Error, Result};

/// Assigns each row to a distinct column minimizing the total cost.
/// `cost` is row-major with `rows <= cols`; returns `assignment[row] = col`.
pub fn min_cost_assignment(cost: &[f64], rows: usize, cols: usize) -> Result<Vec<usize>> {
    if rows == 0 {
        return Ok(Vec::new());
    }
    if cols < rows {
        return Err(Error::Dimension(format!(
            "assignment needs cols >= rows, got {rows}x{cols}"
        )));
    }
    if cost.len() != rows * cols {
        return Err(Error::Dimension(format!(
            "cost matrix length {} does not match {rows}x{cols}",
            cost.len()
        )));
    }
    if cost.iter().any(|c| !c.is_finite()) {
        return Err(Error::Domain("assignment costs must be finite".into()));
    }

    // 1-indexed internals; column 0 is the virtual root of each path search.
    let inf = f64::INFINITY;
    let mut u = vec![0.0; rows + 1];
    let mut v = vec![0.0; cols + 1];
    let mut col_row = vec![0usize; cols + 1]; // row matched to column (0 = free)
    let mut way = vec![0usize; cols + 1];

    for row in 1..=rows {
        col_row[0] = row;
        let mut j0 = 0usize;
        let mut min_v = vec![inf; cols + 1];
        let mut used = vec![false; cols + 1];
        loop {
            used[j0] = true;
            let i0 = col_row[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=cols {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1) * cols + (j - 1)] - u[i0] - v[j];
                if cur < min_v[j] {
                    min_v[j] = cur;
                    way[j] = j0;
                }
                if min_v[j] < delta {
                    delta = min_v[j];
                    j1 = j;
                }
            }
            for j in 0..=cols {
                if used[j] {
                    u[col_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_v[j] -= delta;
                }
            }
            j0 = j1;
            if col_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            col_row[j0] = col_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assignment = vec![usize::MAX; rows];
    for j in 1..=cols {
        if col_row[j] != 0 {
            assignment[col_row[j] - 1] = j - 1;
        }
    }
    debug_assert!(assignment.iter().all(|&c| c != usize::MAX));
    Ok(assignment)
}

/// Total cost of an assignment.
pub fn assignment_cost(cost: &[f64], cols: usize, assignment: &[usize]) -> f64 {
    assignment.iter().enumerate().map(|(r, &c)| cost[r * cols + c]).sum()
}
