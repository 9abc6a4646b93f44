//! Dense complex eigenvalues via a backward-stable Schur decomposition.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::assign::min_cost_assignment;
use crate::{Error, Result};

/// Eigenvalues of a general complex matrix, sorted lexicographically by
/// `(re, im)` so downstream output is deterministic. Convergence failure is
/// an explicit error, never a silent wrong answer.
pub fn eigenvalues(matrix: &DMatrix<Complex64>) -> Result<Vec<Complex64>> {
    let n = matrix.nrows();
    if n != matrix.ncols() {
        return Err(Error::Dimension(format!(
            "eigenvalues need a square matrix, got {}x{}",
            n,
            matrix.ncols()
        )));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    if matrix.iter().any(|e| !e.re.is_finite() || !e.im.is_finite()) {
        return Err(Error::Eigen("matrix contains non-finite entries".into()));
    }
    let schur = matrix
        .clone()
        .try_schur(1e-15, 40 * n + 2000)
        .ok_or_else(|| Error::Eigen(format!("Schur iteration did not converge for n={n}")))?;
    let mut eigs: Vec<Complex64> = schur
        .eigenvalues()
        .ok_or_else(|| Error::Eigen("Schur form yielded no eigenvalues".into()))?
        .iter()
        .copied()
        .collect();
    eigs.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(eigs)
}

/// Worst pair distance between two equal-length eigenvalue multisets under
/// the total-distance-minimizing pairing, relative to the largest magnitude
/// present. Zero means the multisets agree exactly.
pub fn relative_multiset_distance(a: &[Complex64], b: &[Complex64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!(
            "multisets of {} and {} eigenvalues cannot be paired",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Ok(0.0);
    }
    let n = a.len();
    let mut cost = vec![0.0; n * n];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            cost[i * n + j] = (x - y).norm();
        }
    }
    let assignment = min_cost_assignment(&cost, n, n)?;
    let scale = a
        .iter()
        .chain(b.iter())
        .map(|e| e.norm())
        .fold(0.0, f64::max)
        .max(1e-300);
    let worst = assignment
        .iter()
        .enumerate()
        .map(|(i, &j)| cost[i * n + j])
        .fold(0.0, f64::max);
    Ok(worst / scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn diagonal_matrix_returns_its_diagonal() {
        let d = [Complex64::new(3.0, -1.0), Complex64::new(-2.0, 0.5), Complex64::new(0.0, 2.0)];
        let m = DMatrix::from_fn(3, 3, |i, j| if i == j { d[i] } else { Complex64::ZERO });
        let eigs = eigenvalues(&m).unwrap();
        let mut want = d.to_vec();
        want.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        for (g, w) in eigs.iter().zip(&want) {
            assert!((g - w).norm() < 1e-13);
        }
    }

    #[test]
    fn two_by_two_closed_form() {
        // [[1, 2], [3, 4]] has eigenvalues (5 +/- sqrt(33)) / 2.
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(1.0, 0.0),
                Complex64::new(2.0, 0.0),
                Complex64::new(3.0, 0.0),
                Complex64::new(4.0, 0.0),
            ],
        );
        let eigs = eigenvalues(&m).unwrap();
        let s = 33f64.sqrt();
        assert_relative_eq!(eigs[0].re, (5.0 - s) / 2.0, max_relative = 1e-12);
        assert_relative_eq!(eigs[1].re, (5.0 + s) / 2.0, max_relative = 1e-12);
        assert!(eigs[0].im.abs() < 1e-12 && eigs[1].im.abs() < 1e-12);
    }

    #[test]
    fn defective_matrix_returns_repeated_eigenvalue() {
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[Complex64::ZERO, Complex64::ONE, Complex64::ZERO, Complex64::ZERO],
        );
        let eigs = eigenvalues(&m).unwrap();
        assert!(eigs.iter().all(|e| e.norm() < 1e-7));
    }

    #[test]
    fn recovers_prescribed_spectrum_of_similarity_transforms() {
        // Build A = Q T Q^H with unitary Q and triangular T carrying known,
        // well-separated eigenvalues on its diagonal.
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for n in [3usize, 8, 17, 33] {
            let want: Vec<Complex64> = (0..n)
                .map(|i| Complex64::new(i as f64 + 1.0, ((i * 7) % 5) as f64 - 2.0))
                .collect();
            let raw = DMatrix::from_fn(n, n, |_, _| {
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            });
            let q = raw.qr().q();
            let mut t = DMatrix::from_fn(n, n, |i, j| {
                if j > i {
                    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                } else {
                    Complex64::ZERO
                }
            });
            for i in 0..n {
                t[(i, i)] = want[i];
            }
            let a = &q * t * q.adjoint();
            let eigs = eigenvalues(&a).unwrap();
            let mut sorted = want.clone();
            sorted.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
            for (g, w) in eigs.iter().zip(&sorted) {
                assert!((g - w).norm() < 1e-9, "n={n}: got {g}, want {w}");
            }
        }
    }

    #[test]
    fn trace_matches_eigenvalue_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let n = rng.gen_range(2..24);
            let m = DMatrix::from_fn(n, n, |_, _| {
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            });
            let eigs = eigenvalues(&m).unwrap();
            let sum: Complex64 = eigs.iter().sum();
            let trace: Complex64 = (0..n).map(|i| m[(i, i)]).sum();
            assert!((sum - trace).norm() < 1e-10 * m.norm().max(1.0));
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let rect = DMatrix::<Complex64>::zeros(2, 3);
        assert!(eigenvalues(&rect).is_err());
        let mut nan = DMatrix::<Complex64>::zeros(2, 2);
        nan[(0, 0)] = Complex64::new(f64::NAN, 0.0);
        assert!(eigenvalues(&nan).is_err());
        assert_eq!(eigenvalues(&DMatrix::<Complex64>::zeros(0, 0)).unwrap(), vec![]);
    }
}
