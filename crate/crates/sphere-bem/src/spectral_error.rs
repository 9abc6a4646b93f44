//! Matching of block eigenvalues to spectral indices, relative spectral
//! errors, and constant-`hk` frequency sweeps with scaling-exponent fits.
//!
//! The block of frequency `p` has `V` eigenvalues, of which `V - |p|`
//! correspond to operator eigenvalues of degrees `l = |p| .. V-1`. The
//! correspondence is recovered as the one-to-one assignment minimizing the
//! total principal-log distance `sum |Log lambda_hat - Log lambda|`; the
//! log metric keeps magnitudes that span orders of magnitude comparable,
//! so elliptic-region eigenvalues cannot collapse onto one another. The
//! `|p|` eigenvalues left without a reference are reported, not dropped.
//!
//! Matched records at `l <= ka` are flagged reliable; beyond the turning
//! point the correspondence is heuristic and excluded from sweep
//! statistics. Reference eigenvalues below magnitude 1e-14 sit on an
//! interior resonance where the relative error is undefined; such records
//! are flagged and carry no error value.

use num_complex::Complex64;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assign::min_cost_assignment;
use crate::basis::BasisFamily;
use crate::blocks::{assemble_all_blocks, ModalBlock, TruncationPolicy};
use crate::eigen::eigenvalues;
use crate::grid::SphereGrid;
use crate::spectrum::{
    classify_region, spectrum_table, OperatorKind, SpectralRegion, DEFAULT_TRANSITION_WINDOW,
};
use crate::{Error, Result};

/// Reference magnitudes below this sit on an interior resonance.
pub const RESONANCE_THRESHOLD: f64 = 1e-14;

/// One matched (matrix eigenvalue, operator eigenvalue) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralErrorRecord {
    pub kind: OperatorKind,
    pub l: usize,
    pub p: i64,
    pub ka: f64,
    pub matrix_eigenvalue: Complex64,
    pub operator_eigenvalue: Complex64,
    /// `(matrix - operator) / operator`; absent on resonance-excluded rows.
    pub relative_error: Option<Complex64>,
    pub region: SpectralRegion,
    /// True for `l <= ka`, where the correspondence is well defined.
    pub reliable: bool,
    pub resonance_excluded: bool,
}

impl SpectralErrorRecord {
    pub fn error_magnitude(&self) -> Option<f64> {
        self.relative_error.map(|e| e.norm())
    }
}

/// Matching result for one block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub p: i64,
    pub ka: f64,
    /// Records in ascending `l`.
    pub records: Vec<SpectralErrorRecord>,
    /// Block eigenvalues without a reference degree, ascending `(re, im)`.
    pub unmatched: Vec<Complex64>,
}

fn principal_log(z: Complex64) -> Complex64 {
    let norm = z.norm().max(1e-300);
    Complex64::new(norm.ln(), z.im.atan2(z.re))
}

/// Matches the eigenvalues of block `p` against the operator eigenvalues
/// of degrees `l = |p| .. V-1`.
pub fn match_block(
    kind: OperatorKind,
    ka: f64,
    p: i64,
    block_eigenvalues: &[Complex64],
    transition_window: f64,
) -> Result<MatchReport> {
    let v = block_eigenvalues.len();
    let order = p.unsigned_abs() as usize;
    if v == 0 || order >= v {
        return Err(Error::Dimension(format!(
            "block p={p} needs more than |p| eigenvalues, got {v}"
        )));
    }
    let mut eigs = block_eigenvalues.to_vec();
    eigs.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).expect("finite eigenvalues"));
    let table = spectrum_table(kind, ka, v - 1)?;
    let references = &table[order..];

    let rows = references.len();
    let mut cost = vec![0.0; rows * v];
    for (i, &lam) in references.iter().enumerate() {
        let log_ref = principal_log(lam);
        for (j, &e) in eigs.iter().enumerate() {
            cost[i * v + j] = (principal_log(e) - log_ref).norm();
        }
    }
    let assignment = min_cost_assignment(&cost, rows, v)?;

    let mut taken = vec![false; v];
    let mut records = Vec::with_capacity(rows);
    for (i, &j) in assignment.iter().enumerate() {
        taken[j] = true;
        let l = order + i;
        let lam = references[i];
        let resonance_excluded = lam.norm() < RESONANCE_THRESHOLD;
        let relative_error =
            if resonance_excluded { None } else { Some((eigs[j] - lam) / lam) };
        records.push(SpectralErrorRecord {
            kind,
            l,
            p,
            ka,
            matrix_eigenvalue: eigs[j],
            operator_eigenvalue: lam,
            relative_error,
            region: classify_region(l, ka, transition_window)?,
            reliable: l as f64 <= ka + 1e-9,
            resonance_excluded,
        });
    }
    let unmatched = eigs
        .iter()
        .zip(&taken)
        .filter(|(_, &t)| !t)
        .map(|(&e, _)| e)
        .collect();
    Ok(MatchReport { p, ka, records, unmatched })
}

/// Assembles, diagonalizes, and matches every block of one grid.
pub fn match_all_blocks(
    grid: &SphereGrid,
    kind: OperatorKind,
    test_family: BasisFamily,
    source_family: BasisFamily,
    ka: f64,
    policy: TruncationPolicy,
    transition_window: f64,
) -> Result<Vec<MatchReport>> {
    let blocks = assemble_all_blocks(grid, kind, test_family, source_family, ka, policy)?;
    match_assembled_blocks(kind, ka, &blocks, transition_window)
}

/// Matches blocks that are already assembled.
pub fn match_assembled_blocks(
    kind: OperatorKind,
    ka: f64,
    blocks: &[ModalBlock],
    transition_window: f64,
) -> Result<Vec<MatchReport>> {
    let match_one = |b: &ModalBlock| -> Result<MatchReport> {
        let eigs = eigenvalues(&b.matrix)?;
        match_block(kind, ka, b.p, &eigs, transition_window)
    };
    #[cfg(feature = "parallel")]
    {
        blocks.par_iter().map(match_one).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        blocks.iter().map(match_one).collect()
    }
}

/// Nearest odd integer; exact ties round up.
pub fn round_to_odd(x: f64) -> Result<usize> {
    if !x.is_finite() || x < 1.0 {
        return Err(Error::Config(format!("cannot round {x} to an odd cell count")));
    }
    let f = x.floor() as i64;
    let lower = if f % 2 == 0 { f - 1 } else { f };
    let upper = lower + 2;
    let v = if x - (lower as f64) < upper as f64 - x { lower } else { upper };
    Ok(v.max(1) as usize)
}

/// Least-squares fit of `log y = a + slope * log x`; returns
/// `(slope, rms residual in log y)`.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    if points.len() < 2 {
        return Err(Error::Config("power-law fit needs at least two points".into()));
    }
    if !points.iter().all(|&(x, y)| x > 0.0 && y > 0.0) {
        return Err(Error::Domain("power-law fit needs positive coordinates".into()));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("power-law fit needs distinct abscissae".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 =
        logs.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    Ok((slope, (rss / n).sqrt()))
}

/// One frequency point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub ka: f64,
    pub v: usize,
    /// Largest reliable transition-region error magnitude.
    pub max_transition_error: f64,
}

/// Scaling fit of the transition-region error over a constant-`hk` sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub kind: OperatorKind,
    pub c_v: f64,
    pub transition_window: f64,
    pub points: Vec<SweepPoint>,
    pub fitted_exponent: f64,
    pub fit_residual: f64,
}

/// Sweep configuration; `c_v` scales the grid as `V = round_to_odd(c_v * ka)`.
#[derive(Debug, Clone, Copy)]
pub struct SweepConfig {
    pub c_v: f64,
    pub transition_window: f64,
    /// Overrides `TruncationPolicy::default_for` when set.
    pub policy: Option<TruncationPolicy>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { c_v: 1.0, transition_window: DEFAULT_TRANSITION_WINDOW, policy: None }
    }
}

/// Runs a constant-`hk` sweep: for each `ka`, assembles all blocks on the
/// proportionally refined grid, matches eigenvalues, takes the largest
/// reliable transition-region `|E|`, and fits `log max|E|` against
/// `log ka`.
pub fn hf_sweep(
    kind: OperatorKind,
    test_family: BasisFamily,
    source_family: BasisFamily,
    ka_list: &[f64],
    config: SweepConfig,
) -> Result<SweepResult> {
    if ka_list.len() < 4 {
        return Err(Error::Config(format!(
            "sweep needs at least 4 frequencies, got {}",
            ka_list.len()
        )));
    }
    if !ka_list.windows(2).all(|w| w[1] > w[0]) {
        return Err(Error::Config("sweep frequencies must be strictly increasing".into()));
    }
    let sweep_point = |&ka: &f64| -> Result<SweepPoint> {
        let v = round_to_odd(config.c_v * ka)?;
        if v < 5 {
            return Err(Error::Config(format!(
                "sweep point ka={ka} gives V={v}; need V >= 5"
            )));
        }
        let grid = SphereGrid::new(v)?;
        let policy = config
            .policy
            .unwrap_or_else(|| TruncationPolicy::default_for(test_family.kind, v, ka));
        let reports =
            match_all_blocks(&grid, kind, test_family, source_family, ka, policy, config.transition_window)?;
        let max_transition_error = reports
            .iter()
            .flat_map(|r| &r.records)
            .filter(|rec| rec.reliable && rec.region == SpectralRegion::Transition)
            .filter_map(|rec| rec.error_magnitude())
            .fold(0.0, f64::max);
        if max_transition_error == 0.0 {
            return Err(Error::Domain(format!(
                "no reliable transition-region records at ka={ka}, V={v}"
            )));
        }
        Ok(SweepPoint { ka, v, max_transition_error })
    };
    #[cfg(feature = "parallel")]
    let points: Vec<SweepPoint> = ka_list.par_iter().map(sweep_point).collect::<Result<_>>()?;
    #[cfg(not(feature = "parallel"))]
    let points: Vec<SweepPoint> = ka_list.iter().map(sweep_point).collect::<Result<_>>()?;

    let (fitted_exponent, fit_residual) = fit_power_law(
        &points.iter().map(|pt| (pt.ka, pt.max_transition_error)).collect::<Vec<_>>(),
    )?;
    Ok(SweepResult {
        kind,
        c_v: config.c_v,
        transition_window: config.transition_window,
        points,
        fitted_exponent,
        fit_residual,
    })
}
