//! Semi-analytic assembly of the frequency blocks of the discretized
//! operators.
//!
//! After the azimuthal DFT, the block of balanced frequency `p` is a series
//! of rank-one terms over aliased frequencies `q = p + s*M` and degrees
//! `l >= |q|`:
//!
//! `B_p = (V/2) * sum_s T_{-q} F_q * sum_l lambda_l * t_l^q (f_l^q)^T`
//!
//! where `t_l^q`, `f_l^q` are the Legendre moment vectors of the test and
//! source height profiles (normalization folded in), `T`, `F` the azimuthal
//! Fourier coefficients, and `lambda_l` the operator eigenvalue. The sign
//! convention follows the matrix definition `(k/A) * iint t G f`: on the
//! unit sphere the kernel expands as `G = (1/k) * sum lambda_l^S Y Y*`, so
//! every operator gets the same positive prefactor and each block's
//! spectrum approximates the operator eigenvalues directly.
//!
//! Truncation is controlled per `s`-branch: either a fixed degree cap (what
//! the two-route equivalence checks need: both routes must sum the identical
//! term set), or an adaptive tail criterion that stops once `tail_window`
//! consecutive terms each move the Frobenius norm by less than `tail_tol`
//! relatively. Slowly decaying series (patches under the hypersingular
//! operator genuinely diverge) are reported as saturated rather than
//! silently truncated; `strict` mode turns that into an error.

use nalgebra::DMatrix;
use num_complex::Complex64;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{fourier_coefficient, moment_table, BasisFamily};
use crate::grid::SphereGrid;
use crate::spectrum::{spectrum_table, OperatorKind};
use crate::{Error, Result};

/// How far the degree/alias sums run and when they stop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    /// Alias branches `|s| <= s_max`.
    pub s_max: i64,
    /// Hard cap on the degree `l` of every branch.
    pub l_cap: usize,
    /// Relative Frobenius increment below which a term counts as tail.
    pub tail_tol: f64,
    /// Consecutive tail terms required to stop a branch.
    pub tail_window: usize,
    pub mode: TruncationMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TruncationMode {
    /// Stop each branch by the tail criterion; record saturation when the
    /// cap is reached first, or error when `strict` is set.
    Adaptive { strict: bool },
    /// Sum every branch exactly to `l_cap`; reproducible term sets.
    FixedDegree,
}

impl TruncationPolicy {
    /// Defaults tuned per family: patch coefficient tails decay like `1/l`
    /// in the moments (so more alias branches matter) while pyramid tails
    /// fall one power faster.
    pub fn default_for(basis: crate::basis::BasisKind, v: usize, ka: f64) -> Self {
        let s_max = match basis {
            crate::basis::BasisKind::Patch => 24,
            crate::basis::BasisKind::Pyramid => 6,
        };
        Self {
            s_max,
            l_cap: (8 * v).max((2.0 * ka).ceil() as usize + 200),
            tail_tol: 1e-10,
            tail_window: 5,
            mode: TruncationMode::Adaptive { strict: false },
        }
    }

    pub fn fixed(s_max: i64, l_cap: usize) -> Self {
        Self { s_max, l_cap, tail_tol: 0.0, tail_window: 0, mode: TruncationMode::FixedDegree }
    }

    fn validate(&self, grid: &SphereGrid, p: i64) -> Result<()> {
        if self.s_max < 0 {
            return Err(Error::Config(format!("s_max must be non-negative, got {}", self.s_max)));
        }
        let needed = grid.v() + p.unsigned_abs() as usize;
        if self.l_cap < needed {
            return Err(Error::Config(format!(
                "l_cap {} too small for V={} and p={p}: the block needs degrees up to {}",
                self.l_cap,
                grid.v(),
                needed
            )));
        }
        Ok(())
    }
}

/// Where one alias branch stopped and why.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchReport {
    pub s: i64,
    pub q: i64,
    /// Last degree actually summed; `None` when the branch was skipped
    /// because its Fourier coefficient product is exactly zero.
    pub l_end: Option<usize>,
    /// Relative Frobenius increment of the last term.
    pub last_increment: f64,
    /// True when the branch hit `l_cap` with the tail criterion unmet.
    pub saturated: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TruncationReport {
    pub branches: Vec<BranchReport>,
}

impl TruncationReport {
    /// True when any branch hit the cap before its tail criterion.
    pub fn saturated(&self) -> bool {
        self.branches.iter().any(|b| b.saturated)
    }
}

/// One assembled frequency block.
#[derive(Debug, Clone)]
pub struct ModalBlock {
    pub p: i64,
    pub matrix: DMatrix<Complex64>,
    pub truncation: TruncationReport,
}

/// The rank-one term stream of one block; shared verbatim by the full-matrix
/// reference assembly so the two routes sum identical term sets.
pub(crate) struct TermStream<'a> {
    pub grid: &'a SphereGrid,
    pub kind: OperatorKind,
    pub test_family: BasisFamily,
    pub source_family: BasisFamily,
    pub ka: f64,
    pub policy: TruncationPolicy,
}

pub(crate) struct Branch {
    pub s: i64,
    pub q: i64,
    /// `sign * (V/2) * T_{-q} * F_q`.
    pub coefficient: f64,
}

impl TermStream<'_> {
    /// Non-vanishing alias branches for block `p`, in deterministic order
    /// `s = -s_max ..= s_max`.
    pub fn branches(&self, p: i64) -> Result<Vec<Branch>> {
        let m = self.grid.v();
        let prefactor = 0.5 * m as f64;
        let mut out = Vec::new();
        for s in -self.policy.s_max..=self.policy.s_max {
            let q = p + s * m as i64;
            let t = fourier_coefficient(self.test_family.kind, -q, m)?;
            let f = fourier_coefficient(self.source_family.kind, q, m)?;
            let coefficient = prefactor * t * f;
            if coefficient != 0.0 {
                out.push(Branch { s, q, coefficient });
            }
        }
        Ok(out)
    }

    /// Operator eigenvalues `lambda_0 ..= lambda_l_cap`.
    pub fn eigenvalue_table(&self) -> Result<Vec<Complex64>> {
        spectrum_table(self.kind, self.ka, self.policy.l_cap)
    }
}

/// Assembles the frequency-`p` block of the discretized operator.
pub fn assemble_block(
    grid: &SphereGrid,
    kind: OperatorKind,
    test_family: BasisFamily,
    source_family: BasisFamily,
    ka: f64,
    p: i64,
    policy: TruncationPolicy,
) -> Result<ModalBlock> {
    let stream = TermStream { grid, kind, test_family, source_family, ka, policy };
    let lambdas = stream.eigenvalue_table()?;
    assemble_block_with(&stream, &lambdas, p)
}

fn assemble_block_with(
    stream: &TermStream<'_>,
    lambdas: &[Complex64],
    p: i64,
) -> Result<ModalBlock> {
    let grid = stream.grid;
    let policy = stream.policy;
    policy.validate(grid, p)?;
    let v = grid.v();
    let mut matrix = DMatrix::<Complex64>::zeros(v, v);
    let mut report = TruncationReport::default();
    let same_family = stream.test_family == stream.source_family;

    for branch in stream.branches(p)? {
        let q = branch.q;
        let order = q.unsigned_abs() as usize;
        if order > policy.l_cap {
            report.branches.push(BranchReport {
                s: branch.s,
                q,
                l_end: None,
                last_increment: 0.0,
                saturated: false,
            });
            continue;
        }
        let test_moments = moment_table(grid, stream.test_family, q, policy.l_cap)?;
        let source_moments = if same_family {
            None
        } else {
            Some(moment_table(grid, stream.source_family, q, policy.l_cap)?)
        };
        let source_ref = source_moments.as_ref().unwrap_or(&test_moments);

        let mut consecutive_tail = 0usize;
        let mut l_end = order;
        let mut last_increment = f64::INFINITY;
        let mut saturated = false;
        for (l, &lambda) in lambdas.iter().enumerate().skip(order) {
            let t = test_moments.vector(l);
            let f = source_ref.vector(l);
            let scale = lambda * branch.coefficient;
            let t_norm: f64 = t.iter().map(|a| a * a).sum::<f64>().sqrt();
            let f_norm: f64 = f.iter().map(|a| a * a).sum::<f64>().sqrt();
            let increment = scale.norm() * t_norm * f_norm;
            for (row, &tv) in t.iter().enumerate() {
                if tv == 0.0 {
                    continue;
                }
                let row_scale = scale * tv;
                for (col, &fv) in f.iter().enumerate() {
                    matrix[(row, col)] += row_scale * fv;
                }
            }
            l_end = l;
            if policy.mode == TruncationMode::FixedDegree {
                continue;
            }
            let total = matrix.norm();
            last_increment = if total > 0.0 { increment / total } else { f64::INFINITY };
            if last_increment < policy.tail_tol {
                consecutive_tail += 1;
                if consecutive_tail >= policy.tail_window {
                    break;
                }
            } else {
                consecutive_tail = 0;
            }
            if l == policy.l_cap {
                saturated = true;
            }
        }
        if policy.mode == TruncationMode::FixedDegree {
            last_increment = 0.0;
            saturated = false;
        }
        if saturated {
            if let TruncationMode::Adaptive { strict: true } = policy.mode {
                return Err(Error::Saturation {
                    p,
                    s: branch.s,
                    l_cap: policy.l_cap,
                    tail: last_increment,
                });
            }
        }
        report.branches.push(BranchReport {
            s: branch.s,
            q,
            l_end: Some(l_end),
            last_increment,
            saturated,
        });
    }
    Ok(ModalBlock { p, matrix, truncation: report })
}

/// Assembles the blocks of every balanced frequency, ordered by `p`.
pub fn assemble_all_blocks(
    grid: &SphereGrid,
    kind: OperatorKind,
    test_family: BasisFamily,
    source_family: BasisFamily,
    ka: f64,
    policy: TruncationPolicy,
) -> Result<Vec<ModalBlock>> {
    let stream = TermStream { grid, kind, test_family, source_family, ka, policy };
    let lambdas = stream.eigenvalue_table()?;
    let ps: Vec<i64> = grid.balanced_frequencies().collect();
    #[cfg(feature = "parallel")]
    {
        ps.par_iter().map(|&p| assemble_block_with(&stream, &lambdas, p)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        ps.iter().map(|&p| assemble_block_with(&stream, &lambdas, p)).collect()
    }
}

/// Deviation of the identity-operator (Gram) `p = 0` block from the identity
/// matrix at a series of degree caps: `(cap, ||B(cap) - I||_F / ||I||_F)`
/// per cap.
///
/// With the patch family the block tends to the identity exactly, which is
/// the calibration check for the normalization constant; pyramid curves
/// plateau at their overlap stencil's distance from the identity.
pub fn gram_convergence_curve(
    grid: &SphereGrid,
    family: BasisFamily,
    caps: &[usize],
) -> Result<Vec<(usize, f64)>> {
    if caps.is_empty() {
        return Err(Error::Config("gram convergence needs at least one degree cap".into()));
    }
    let mut sorted = caps.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted[0] < grid.v() {
        return Err(Error::Config(format!(
            "smallest degree cap {} must be at least V={}",
            sorted[0],
            grid.v()
        )));
    }
    let l_max = *sorted.last().expect("non-empty");
    // Only the s = 0 branch survives at p = 0 (aliased Fourier coefficients
    // vanish identically), so the block is a plain degree sum that can be
    // grown incrementally.
    let moments = moment_table(grid, family, 0, l_max)?;
    let v = grid.v();
    let prefactor = 0.5 * v as f64;
    let mut matrix = DMatrix::<f64>::zeros(v, v);
    let mut out = Vec::with_capacity(sorted.len());
    let mut l = 0usize;
    for &cap in &sorted {
        while l <= cap {
            let t = moments.vector(l);
            for (row, &tv) in t.iter().enumerate() {
                for (col, &fv) in t.iter().enumerate() {
                    matrix[(row, col)] += prefactor * tv * fv;
                }
            }
            l += 1;
        }
        let mut distance_sq = 0.0;
        for row in 0..v {
            for col in 0..v {
                let want = if row == col { 1.0 } else { 0.0 };
                distance_sq += (matrix[(row, col)] - want).powi(2);
            }
        }
        out.push((cap, (distance_sq / v as f64).sqrt()));
    }
    Ok(out)
}
