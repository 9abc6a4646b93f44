//! Reference assembly routes that cross-check the frequency-block path.
//!
//! Three independent oracles at small `V`:
//!
//! - the full `V^2 x V^2` matrix built element by element from the same
//!   rank-one expansion, exercising the flat `u = n*M + m` indexing that the
//!   block route never touches;
//! - its explicit DFT block-diagonalization `P^T (I (x) D)^H A (I (x) D) P`,
//!   which must reproduce the directly assembled blocks and leave nothing in
//!   the off-diagonal blocks;
//! - a direct-quadrature Galerkin assembly of the single-layer matrix from
//!   the kernel `e^{-ikR} / (4 pi R)`, sharing nothing with the expansion
//!   except the basis profiles.
//!
//! Matrices are exportable to a CSV dump and a small binary format (row-major,
//! complex stored as interleaved real/imag `f64` pairs, little-endian).

use std::io::{BufRead, Read, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;
#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::basis::{moment_table, BasisFamily, BasisKind};
use crate::blocks::{TermStream, TruncationMode, TruncationPolicy};
use crate::circulant::{apply_permutation, dft_eigenvector_matrix, spectral_permutation};
use crate::grid::SphereGrid;
use crate::quad;
use crate::spectrum::OperatorKind;
use crate::{Error, Result};

/// Largest `V` the element-level routes accept; beyond this the `O(V^4)`
/// storage and quadruple loops stop being oracle-priced.
pub const MAX_REFERENCE_V: usize = 9;

/// A discretized operator as the flat `V^2 x V^2` matrix.
#[derive(Debug, Clone)]
pub struct FullMatrix {
    pub kind: OperatorKind,
    pub ka: f64,
    pub v: usize,
    /// Row/column index `u = n*M + m`: height cell `n` outer, azimuth `m`
    /// inner.
    pub matrix: DMatrix<Complex64>,
}

impl FullMatrix {
    /// Largest relative Frobenius deviation of any `(n, n')` azimuthal
    /// sub-block from its closest circulant matrix (the one averaging each
    /// wrapped diagonal). Shift invariance in `phi` forces this to rounding
    /// level.
    pub fn circulant_deviation(&self) -> f64 {
        let v = self.v;
        let mut worst: f64 = 0.0;
        for n in 0..v {
            for np in 0..v {
                let block = self.matrix.view((n * v, np * v), (v, v));
                let mut diag_mean = vec![Complex64::ZERO; v];
                for mu in 0..v {
                    for mv in 0..v {
                        diag_mean[(mu + v - mv) % v] += block[(mu, mv)];
                    }
                }
                for d in &mut diag_mean {
                    *d /= v as f64;
                }
                let mut dev = 0.0;
                let mut norm = 0.0;
                for mu in 0..v {
                    for mv in 0..v {
                        let e = block[(mu, mv)];
                        dev += (e - diag_mean[(mu + v - mv) % v]).norm_sqr();
                        norm += e.norm_sqr();
                    }
                }
                if norm > 0.0 {
                    worst = worst.max((dev / norm).sqrt());
                }
            }
        }
        worst
    }
}

fn check_reference_scale(v: usize) -> Result<()> {
    if v > MAX_REFERENCE_V {
        return Err(Error::Config(format!(
            "full-matrix reference routes are oracles for V <= {MAX_REFERENCE_V}, got V={v}"
        )));
    }
    Ok(())
}

/// Assembles the full matrix element by element from the modal expansion.
///
/// Each element is the alias/degree sum of quadruple products: two Legendre
/// moments in `z`, two azimuthal factors `e^{-i q phi}` with the profile's
/// Fourier coefficient, times the operator eigenvalue. The term set is the
/// one the block route sums, so the policy must be fixed-degree; the two
/// routes then differ only by grouping and rounding.
pub fn assemble_full_modal(
    grid: &SphereGrid,
    kind: OperatorKind,
    test_family: BasisFamily,
    source_family: BasisFamily,
    ka: f64,
    policy: TruncationPolicy,
) -> Result<FullMatrix> {
    check_reference_scale(grid.v())?;
    if policy.mode != TruncationMode::FixedDegree {
        return Err(Error::Config(
            "full-matrix reference assembly needs a fixed-degree policy so both routes \
             sum the identical term set"
                .into(),
        ));
    }
    let stream = TermStream { grid, kind, test_family, source_family, ka, policy };
    let lambdas = stream.eigenvalue_table()?;
    let v = grid.v();
    let same_family = test_family == source_family;
    let mut matrix = DMatrix::<Complex64>::zeros(v * v, v * v);
    for p in grid.balanced_frequencies() {
        for branch in stream.branches(p)? {
            let q = branch.q;
            let order = q.unsigned_abs() as usize;
            if order > policy.l_cap {
                continue;
            }
            let test_moments = moment_table(grid, test_family, q, policy.l_cap)?;
            let source_moments = if same_family {
                None
            } else {
                Some(moment_table(grid, source_family, q, policy.l_cap)?)
            };
            let source_ref = source_moments.as_ref().unwrap_or(&test_moments);
            let mut z_part = DMatrix::<Complex64>::zeros(v, v);
            for (l, &lambda) in lambdas.iter().enumerate().skip(order) {
                let t = test_moments.vector(l);
                let f = source_ref.vector(l);
                for (n, &tv) in t.iter().enumerate() {
                    if tv == 0.0 {
                        continue;
                    }
                    let row_scale = lambda * tv;
                    for (np, &fv) in f.iter().enumerate() {
                        z_part[(n, np)] += row_scale * fv;
                    }
                }
            }
            // The block prefactor V/2 spreads over the M grid phases.
            let scale = Complex64::from(branch.coefficient / v as f64);
            let phases: Vec<Complex64> = (0..v)
                .map(|m| Complex64::from_polar(1.0, -(q as f64) * grid.phi_node(m)))
                .collect();
            for n in 0..v {
                for np in 0..v {
                    let zf = scale * z_part[(n, np)];
                    if zf == Complex64::ZERO {
                        continue;
                    }
                    for m in 0..v {
                        let left = zf * phases[m];
                        for mp in 0..v {
                            matrix[(n * v + m, np * v + mp)] += left * phases[mp].conj();
                        }
                    }
                }
            }
        }
    }
    Ok(FullMatrix { kind, ka, v, matrix })
}

/// The full matrix carried into its frequency blocks.
#[derive(Debug, Clone)]
pub struct DiagonalizedBlocks {
    /// Balanced frequencies, ascending; `blocks[i]` belongs to
    /// `frequencies[i]`.
    pub frequencies: Vec<i64>,
    pub blocks: Vec<DMatrix<Complex64>>,
    /// Frobenius mass outside the diagonal blocks, relative to the whole.
    pub off_diagonal_residual: f64,
}

/// Conjugates by the azimuthal DFT and regroups by frequency:
/// `P^T (I (x) D)^H A (I (x) D) P`. The input need not be exactly
/// block-circulant; whatever fails to diagonalize lands in the residual.
pub fn block_diagonalize(full: &FullMatrix) -> Result<DiagonalizedBlocks> {
    let v = full.v;
    if full.matrix.nrows() != v * v || full.matrix.ncols() != v * v {
        return Err(Error::Dimension(format!(
            "full matrix for V={v} must be {0}x{0}, got {1}x{2}",
            v * v,
            full.matrix.nrows(),
            full.matrix.ncols()
        )));
    }
    let d = dft_eigenvector_matrix(v)?;
    let big = DMatrix::<Complex64>::identity(v, v).kronecker(&d);
    let transformed = big.adjoint() * &full.matrix * &big;
    let perm = spectral_permutation(v, v)?;
    let grouped = apply_permutation(&transformed, &perm)?;
    let half = (v as i64 - 1) / 2;
    let mut frequencies = Vec::with_capacity(v);
    let mut blocks = Vec::with_capacity(v);
    for i in 0..v {
        frequencies.push(i as i64 - half);
        blocks.push(grouped.view((i * v, i * v), (v, v)).clone_owned());
    }
    let mut off_mass = 0.0;
    for row in 0..v * v {
        for col in 0..v * v {
            if row / v != col / v {
                off_mass += grouped[(row, col)].norm_sqr();
            }
        }
    }
    let total = grouped.norm_squared();
    let off_diagonal_residual = if total > 0.0 { (off_mass / total).sqrt() } else { 0.0 };
    Ok(DiagonalizedBlocks { frequencies, blocks, off_diagonal_residual })
}

/// Accuracy bookkeeping of the direct-quadrature assembly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureReport {
    /// Largest relative change of any element when the deepest subdivision
    /// level is added.
    pub max_refinement_step: f64,
    /// Elements whose last refinement step exceeded `target`.
    pub flagged_elements: usize,
    pub target: f64,
}

/// A rectangle in `(z, phi)` cell coordinates.
#[derive(Debug, Clone, Copy)]
struct Rect {
    z_lo: f64,
    z_hi: f64,
    p_lo: f64,
    p_hi: f64,
}

impl Rect {
    fn is_empty(&self) -> bool {
        self.z_hi - self.z_lo <= 0.0 || self.p_hi - self.p_lo <= 0.0
    }
}

fn surface_point(z: f64, phi: f64) -> [f64; 3] {
    let s = (1.0 - z * z).max(0.0).sqrt();
    [s * phi.cos(), s * phi.sin(), z]
}

fn chord(a: [f64; 3], b: [f64; 3]) -> f64 {
    let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}

/// `e^{-i ka R} / (4 pi R)` between surface points.
fn kernel(ka: f64, r: [f64; 3], rp: [f64; 3]) -> Complex64 {
    let dist = chord(r, rp);
    Complex64::from_polar(1.0, -ka * dist) / (4.0 * std::f64::consts::PI * dist)
}

/// Plain tensor Gauss rule over a rectangle.
fn gl_rect(
    rule: &quad::GaussLegendre,
    rect: Rect,
    ka: f64,
    r: [f64; 3],
) -> Complex64 {
    let mut acc = Complex64::ZERO;
    for (z, wz) in rule.mapped(rect.z_lo, rect.z_hi) {
        for (phi, wp) in rule.mapped(rect.p_lo, rect.p_hi) {
            acc += kernel(ka, r, surface_point(z, phi)) * (wz * wp);
        }
    }
    acc
}

/// Integrates over a rectangle whose integrand is singular at the corner
/// `(cz, cp)` by splitting into quadrants and recursing on the corner one.
/// Returns the `depth`-level value and the one-level-coarser value, whose
/// difference estimates the remaining truncation.
fn gl_corner(
    rule: &quad::GaussLegendre,
    rect: Rect,
    cz: f64,
    cp: f64,
    ka: f64,
    r: [f64; 3],
    depth: usize,
) -> (Complex64, Complex64) {
    if depth == 0 || rect.is_empty() {
        let v = gl_rect(rule, rect, ka, r);
        return (v, v);
    }
    let mz = 0.5 * (rect.z_lo + rect.z_hi);
    let mp = 0.5 * (rect.p_lo + rect.p_hi);
    // The quadrant keeping the singular corner.
    let corner = Rect {
        z_lo: if cz <= mz { rect.z_lo } else { mz },
        z_hi: if cz <= mz { mz } else { rect.z_hi },
        p_lo: if cp <= mp { rect.p_lo } else { mp },
        p_hi: if cp <= mp { mp } else { rect.p_hi },
    };
    let mut smooth = Complex64::ZERO;
    for (z_lo, z_hi) in [(rect.z_lo, mz), (mz, rect.z_hi)] {
        for (p_lo, p_hi) in [(rect.p_lo, mp), (mp, rect.p_hi)] {
            if z_lo == corner.z_lo && p_lo == corner.p_lo {
                continue;
            }
            smooth += gl_rect(rule, Rect { z_lo, z_hi, p_lo, p_hi }, ka, r);
        }
    }
    let (fine, _) = gl_corner(rule, corner, cz, cp, ka, r, depth - 1);
    (smooth + fine, smooth + gl_rect(rule, corner, ka, r))
}

/// Inner integral of the kernel over `cell` for a fixed outer point, picking
/// the plain rule far from the singularity and corner-refined subdivision
/// near it. Returns the value and its one-level-coarser companion.
fn inner_integral(
    rule: &quad::GaussLegendre,
    cell: Rect,
    ka: f64,
    z_r: f64,
    phi_r: f64,
    depth: usize,
) -> (Complex64, Complex64) {
    // Nearest periodic image of the outer azimuth to the cell's center.
    let center = 0.5 * (cell.p_lo + cell.p_hi);
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut dphi = (phi_r - center).rem_euclid(two_pi);
    if dphi > std::f64::consts::PI {
        dphi -= two_pi;
    }
    let phi_local = center + dphi;
    let r = surface_point(z_r, phi_r);
    let cz = z_r.clamp(cell.z_lo, cell.z_hi);
    let cp = phi_local.clamp(cell.p_lo, cell.p_hi);
    let diameter = chord(
        surface_point(cell.z_lo, cell.p_lo),
        surface_point(cell.z_hi, cell.p_hi),
    )
    .max(chord(surface_point(cell.z_lo, cell.p_hi), surface_point(cell.z_hi, cell.p_lo)));
    if chord(r, surface_point(cz, cp)) > diameter {
        let v = gl_rect(rule, cell, ka, r);
        return (v, v);
    }
    // Split at the nearest point so every piece sees the singularity at one
    // corner.
    let mut fine = Complex64::ZERO;
    let mut coarse = Complex64::ZERO;
    for (z_lo, z_hi) in [(cell.z_lo, cz), (cz, cell.z_hi)] {
        for (p_lo, p_hi) in [(cell.p_lo, cp), (cp, cell.p_hi)] {
            let rect = Rect { z_lo, z_hi, p_lo, p_hi };
            if rect.is_empty() {
                continue;
            }
            let (f, c) = gl_corner(rule, rect, cz, cp, ka, r, depth);
            fine += f;
            coarse += c;
        }
    }
    (fine, coarse)
}

/// Assembles the single-layer matrix by direct quadrature of
/// `2 (k/A) alpha_t alpha_f iint G` over cell pairs. Patch profiles only, at
/// oracle scale; the per-element accuracy target is `1e-3` relative and
/// elements missing it are counted in the report.
pub fn assemble_quadrature_single_layer(
    grid: &SphereGrid,
    ka: f64,
    test_family: BasisFamily,
    source_family: BasisFamily,
) -> Result<(FullMatrix, QuadratureReport)> {
    let v = grid.v();
    if v > 5 {
        return Err(Error::Config(format!(
            "direct quadrature is an oracle for V <= 5, got V={v}"
        )));
    }
    if ka <= 0.0 || ka > 3.0 {
        return Err(Error::Config(format!(
            "direct quadrature is calibrated for 0 < ka <= 3, got ka={ka}"
        )));
    }
    if test_family.kind != BasisKind::Patch || source_family.kind != BasisKind::Patch {
        return Err(Error::Config(
            "direct quadrature supports the patch family only".into(),
        ));
    }
    let rule = quad::cached(8)?;
    let depth = 4;
    let target = 1e-3;
    let h = grid.h_phi();
    let cell = |n: usize, m: usize| {
        let (z_lo, z_hi) = grid.z_cell(n);
        let p = grid.phi_node(m);
        Rect { z_lo, z_hi, p_lo: p - 0.5 * h, p_hi: p + 0.5 * h }
    };
    let scale = 2.0 * (ka / grid.cell_area()) * test_family.normalization
        * source_family.normalization;
    let size = v * v;
    let row_of = |u: usize| -> (Vec<Complex64>, Vec<f64>) {
        let (n, m) = (u / v, u % v);
        let outer = cell(n, m);
        let mut row = vec![Complex64::ZERO; size];
        let mut steps = vec![0.0; size];
        for up in 0..size {
            let inner_cell = cell(up / v, up % v);
            let mut fine = Complex64::ZERO;
            let mut coarse = Complex64::ZERO;
            for (z, wz) in rule.mapped(outer.z_lo, outer.z_hi) {
                for (phi, wp) in rule.mapped(outer.p_lo, outer.p_hi) {
                    let (f, c) = inner_integral(&rule, inner_cell, ka, z, phi, depth);
                    let w = wz * wp;
                    fine += f * w;
                    coarse += c * w;
                }
            }
            row[up] = fine * scale;
            let denom = fine.norm().max(1e-300);
            steps[up] = (fine - coarse).norm() / denom;
        }
        (row, steps)
    };
    #[cfg(feature = "parallel")]
    let rows: Vec<(Vec<Complex64>, Vec<f64>)> = (0..size).into_par_iter().map(row_of).collect();
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<(Vec<Complex64>, Vec<f64>)> = (0..size).map(row_of).collect();

    let mut matrix = DMatrix::<Complex64>::zeros(size, size);
    let mut max_refinement_step: f64 = 0.0;
    let mut flagged_elements = 0usize;
    for (u, (row, steps)) in rows.into_iter().enumerate() {
        for (up, value) in row.into_iter().enumerate() {
            matrix[(u, up)] = value;
        }
        for s in steps {
            max_refinement_step = max_refinement_step.max(s);
            if s > target {
                flagged_elements += 1;
            }
        }
    }
    Ok((
        FullMatrix { kind: OperatorKind::SingleLayer, ka, v, matrix },
        QuadratureReport { max_refinement_step, flagged_elements, target },
    ))
}

const MATRIX_MAGIC: &[u8; 8] = b"SBEMMatC";

/// Writes a complex matrix as magic, `u64` rows/cols, then row-major
/// `(re, im)` `f64` pairs, all little-endian.
pub fn write_matrix_binary<W: Write>(out: &mut W, matrix: &DMatrix<Complex64>) -> Result<()> {
    out.write_all(MATRIX_MAGIC)?;
    out.write_all(&(matrix.nrows() as u64).to_le_bytes())?;
    out.write_all(&(matrix.ncols() as u64).to_le_bytes())?;
    for i in 0..matrix.nrows() {
        for j in 0..matrix.ncols() {
            let e = matrix[(i, j)];
            out.write_all(&e.re.to_le_bytes())?;
            out.write_all(&e.im.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Reads a matrix written by [`write_matrix_binary`].
pub fn read_matrix_binary<R: Read>(input: &mut R) -> Result<DMatrix<Complex64>> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != MATRIX_MAGIC {
        return Err(Error::Config("not a matrix dump: bad magic".into()));
    }
    let mut word = [0u8; 8];
    input.read_exact(&mut word)?;
    let rows = u64::from_le_bytes(word) as usize;
    input.read_exact(&mut word)?;
    let cols = u64::from_le_bytes(word) as usize;
    if rows.checked_mul(cols).map_or(true, |n| n > (1 << 28)) {
        return Err(Error::Config(format!("matrix dump of {rows}x{cols} is implausible")));
    }
    let mut matrix = DMatrix::<Complex64>::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            input.read_exact(&mut word)?;
            let re = f64::from_le_bytes(word);
            input.read_exact(&mut word)?;
            let im = f64::from_le_bytes(word);
            matrix[(i, j)] = Complex64::new(re, im);
        }
    }
    Ok(matrix)
}

/// Writes a complex matrix as CSV: one line per row, interleaved
/// `re,im` columns at full precision, after a shape comment.
pub fn write_matrix_csv<W: Write>(out: &mut W, matrix: &DMatrix<Complex64>) -> Result<()> {
    writeln!(
        out,
        "# rows={} cols={} layout=row-major columns=re,im interleaved",
        matrix.nrows(),
        matrix.ncols()
    )?;
    for i in 0..matrix.nrows() {
        let mut line = String::with_capacity(matrix.ncols() * 48);
        for j in 0..matrix.ncols() {
            if j > 0 {
                line.push(',');
            }
            let e = matrix[(i, j)];
            line.push_str(&format!("{:.17e},{:.17e}", e.re, e.im));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Reads a matrix written by [`write_matrix_csv`].
pub fn read_matrix_csv<R: BufRead>(input: R) -> Result<DMatrix<Complex64>> {
    let mut rows: Vec<Vec<Complex64>> = Vec::new();
    for line in input.lines() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() % 2 != 0 {
            return Err(Error::Config(format!(
                "CSV matrix row has {} fields, expected interleaved re,im pairs",
                fields.len()
            )));
        }
        let mut row = Vec::with_capacity(fields.len() / 2);
        for pair in fields.chunks(2) {
            let re: f64 = pair[0]
                .trim()
                .parse()
                .map_err(|e| Error::Config(format!("bad CSV float '{}': {e}", pair[0])))?;
            let im: f64 = pair[1]
                .trim()
                .parse()
                .map_err(|e| Error::Config(format!("bad CSV float '{}': {e}", pair[1])))?;
            row.push(Complex64::new(re, im));
        }
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Config("ragged CSV matrix".into()));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Config("empty CSV matrix".into()));
    }
    let (nr, nc) = (rows.len(), rows[0].len());
    Ok(DMatrix::from_fn(nr, nc, |i, j| rows[i][j]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocks::assemble_block;
    use crate::eigen::eigenvalues;

    fn grid(v: usize) -> SphereGrid {
        SphereGrid::new(v).unwrap()
    }

    fn family(kind: BasisKind) -> BasisFamily {
        BasisFamily::new(kind)
    }

    fn sorted_eigs(m: &DMatrix<Complex64>) -> Vec<Complex64> {
        let mut e = eigenvalues(m).unwrap();
        e.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
        e
    }

    #[test]
    fn full_modal_rejects_large_v_and_adaptive_policies() {
        let g = grid(5);
        let fam = family(BasisKind::Patch);
        let adaptive = TruncationPolicy::default_for(BasisKind::Patch, 5, 1.0);
        assert!(matches!(
            assemble_full_modal(&g, OperatorKind::Identity, fam, fam, 1.0, adaptive),
            Err(Error::Config(_))
        ));
        let big = grid(11);
        assert!(matches!(
            assemble_full_modal(
                &big,
                OperatorKind::Identity,
                fam,
                fam,
                1.0,
                TruncationPolicy::fixed(2, 60)
            ),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn full_modal_gram_of_patches_tends_to_identity() {
        let g = grid(3);
        let fam = family(BasisKind::Patch);
        let full = assemble_full_modal(
            &g,
            OperatorKind::Identity,
            fam,
            fam,
            1.0,
            TruncationPolicy::fixed(12, 900),
        )
        .unwrap();
        for i in 0..9 {
            for j in 0..9 {
                let want = if i == j { 1.0 } else { 0.0 };
                let got = full.matrix[(i, j)];
                assert!(
                    (got.re - want).abs() < 1e-2 && got.im.abs() < 1e-12,
                    "({i},{j}): {got}"
                );
            }
        }
    }

    #[test]
    fn full_modal_matrix_is_block_circulant() {
        let g = grid(5);
        let fam = family(BasisKind::Pyramid);
        let full = assemble_full_modal(
            &g,
            OperatorKind::SingleLayer,
            fam,
            fam,
            2.0,
            TruncationPolicy::fixed(4, 80),
        )
        .unwrap();
        assert!(full.circulant_deviation() < 1e-12, "{}", full.circulant_deviation());
    }

    #[test]
    fn eigenvalue_multisets_agree_across_routes() {
        for (kind, basis) in [
            (OperatorKind::SingleLayer, BasisKind::Pyramid),
            (OperatorKind::Hypersingular, BasisKind::Pyramid),
            (OperatorKind::SingleLayer, BasisKind::Patch),
        ] {
            let g = grid(5);
            let fam = family(basis);
            let policy = TruncationPolicy::fixed(4, 80);
            let full = assemble_full_modal(&g, kind, fam, fam, 2.0, policy).unwrap();
            let full_eigs = sorted_eigs(&full.matrix);
            let mut union = Vec::new();
            for p in g.balanced_frequencies() {
                let block = assemble_block(&g, kind, fam, fam, 2.0, p, policy).unwrap();
                union.extend(eigenvalues(&block.matrix).unwrap());
            }
            union.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
            let scale = full_eigs.iter().map(|e| e.norm()).fold(0.0, f64::max);
            for (a, b) in full_eigs.iter().zip(&union) {
                assert!(
                    (a - b).norm() <= 1e-8 * scale,
                    "{kind} {basis}: {a} vs {b} (scale {scale})"
                );
            }
        }
    }

    #[test]
    fn diagonalization_reproduces_the_directly_assembled_blocks() {
        let g = grid(5);
        let fam = family(BasisKind::Pyramid);
        let policy = TruncationPolicy::fixed(4, 80);
        let full =
            assemble_full_modal(&g, OperatorKind::SingleLayer, fam, fam, 2.0, policy).unwrap();
        let diag = block_diagonalize(&full).unwrap();
        assert_eq!(diag.frequencies, vec![-2, -1, 0, 1, 2]);
        assert!(diag.off_diagonal_residual < 1e-10, "{}", diag.off_diagonal_residual);
        for (i, &p) in diag.frequencies.iter().enumerate() {
            let direct =
                assemble_block(&g, OperatorKind::SingleLayer, fam, fam, 2.0, p, policy).unwrap();
            let distance = (&diag.blocks[i] - &direct.matrix).norm();
            assert!(
                distance < 1e-10 * direct.matrix.norm().max(1e-300),
                "p={p}: {distance}"
            );
        }
    }

    #[test]
    fn diagonalization_round_trips_a_synthetic_block_circulant() {
        // Deterministic pseudo-random generator values.
        let v = 5usize;
        let mut state = 0x243f6a8885a308d3u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let mut full = DMatrix::<Complex64>::zeros(v * v, v * v);
        for n in 0..v {
            for np in 0..v {
                let gen: Vec<Complex64> =
                    (0..v).map(|_| Complex64::new(next(), next())).collect();
                for mu in 0..v {
                    for mv in 0..v {
                        full[(n * v + mu, np * v + mv)] = gen[(mu + v - mv) % v];
                    }
                }
            }
        }
        let wrapped = FullMatrix { kind: OperatorKind::Identity, ka: 1.0, v, matrix: full.clone() };
        let diag = block_diagonalize(&wrapped).unwrap();
        assert!(diag.off_diagonal_residual < 1e-13, "residual {}", diag.off_diagonal_residual);
        // Rebuild and compare: inverse congruence through the inverse
        // permutation, then the DFT similarity undone.
        let mut grouped = DMatrix::<Complex64>::zeros(v * v, v * v);
        for (i, block) in diag.blocks.iter().enumerate() {
            for a in 0..v {
                for b in 0..v {
                    grouped[(i * v + a, i * v + b)] = block[(a, b)];
                }
            }
        }
        let perm = spectral_permutation(v, v).unwrap();
        let mut inverse = vec![0usize; perm.len()];
        for (i, &t) in perm.iter().enumerate() {
            inverse[t] = i;
        }
        let unpermuted = apply_permutation(&grouped, &inverse).unwrap();
        let d = dft_eigenvector_matrix(v).unwrap();
        let big = DMatrix::<Complex64>::identity(v, v).kronecker(&d);
        let rebuilt = &big * unpermuted * big.adjoint();
        assert!((rebuilt - full).norm() < 1e-12);
    }

    #[test]
    fn quadrature_single_layer_matches_the_modal_route() {
        let g = grid(3);
        let fam = family(BasisKind::Patch);
        let (quad_full, report) =
            assemble_quadrature_single_layer(&g, 1.0, fam, fam).unwrap();
        assert!(report.max_refinement_step < 0.05, "{report:?}");
        let modal = assemble_full_modal(
            &g,
            OperatorKind::SingleLayer,
            fam,
            fam,
            1.0,
            TruncationPolicy::fixed(12, 300),
        )
        .unwrap();
        let a = sorted_eigs(&quad_full.matrix);
        let b = sorted_eigs(&modal.matrix);
        let scale = b.iter().map(|e| e.norm()).fold(0.0, f64::max);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() <= 2e-3 * scale, "{x} vs {y}");
        }
    }

    #[test]
    fn quadrature_matrix_is_symmetric_and_diagonally_positive() {
        let g = grid(3);
        let fam = family(BasisKind::Patch);
        let (full, _) = assemble_quadrature_single_layer(&g, 1.0, fam, fam).unwrap();
        let m = &full.matrix;
        let norm = m.norm();
        for i in 0..9 {
            assert!(m[(i, i)].re > 0.0, "diagonal {i}: {}", m[(i, i)]);
            for j in 0..i {
                assert!(
                    (m[(i, j)] - m[(j, i)]).norm() < 1e-3 * norm,
                    "asymmetry at ({i},{j})"
                );
            }
        }
    }

    #[test]
    fn quadrature_rejects_out_of_scale_requests() {
        let fam = family(BasisKind::Patch);
        let pyr = family(BasisKind::Pyramid);
        assert!(assemble_quadrature_single_layer(&grid(7), 1.0, fam, fam).is_err());
        assert!(assemble_quadrature_single_layer(&grid(3), 5.0, fam, fam).is_err());
        assert!(assemble_quadrature_single_layer(&grid(3), 1.0, pyr, fam).is_err());
    }

    #[test]
    fn binary_dump_round_trips_exactly() {
        let m = DMatrix::from_fn(3, 4, |i, j| {
            Complex64::new(i as f64 * 1.7 - 2.0, (j as f64).exp())
        });
        let mut buf = Vec::new();
        write_matrix_binary(&mut buf, &m).unwrap();
        let back = read_matrix_binary(&mut buf.as_slice()).unwrap();
        assert_eq!(m, back);
        let mut bad = buf.clone();
        bad[0] ^= 0xff;
        assert!(read_matrix_binary(&mut bad.as_slice()).is_err());
    }

    #[test]
    fn csv_dump_round_trips_exactly() {
        let m = DMatrix::from_fn(2, 3, |i, j| {
            Complex64::new(1.0 / (i as f64 + 3.0), -031.25 * j as f64)
        });
        let mut buf = Vec::new();
        write_matrix_csv(&mut buf, &m).unwrap();
        let back = read_matrix_csv(buf.as_slice()).unwrap();
        assert_eq!(m, back);
        assert!(read_matrix_csv(&b"1.0,2.0,3.0\n"[..]).is_err());
        assert!(read_matrix_csv(&b"# only a comment\n"[..]).is_err());
    }
}
