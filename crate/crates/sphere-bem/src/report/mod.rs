//! Run configuration, persistence, and the four report commands behind the
//! command-line front end: Gram convergence, spectrum overlays, the
//! high-frequency error sweep, and the cross-route oracle checks.
//!
//! Every command writes the exact configuration it ran with into its output
//! directory, emits CSV with a schema header comment, and produces the same
//! bytes on every rerun with the same configuration.

pub mod svg;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::{BasisFamily, BasisKind};
use crate::blocks::{
    assemble_all_blocks, assemble_block, gram_convergence_curve, ModalBlock, TruncationPolicy,
};
use crate::eigen::{eigenvalues, relative_multiset_distance};
use crate::grid::SphereGrid;
use crate::reference::{
    assemble_full_modal, assemble_quadrature_single_layer, block_diagonalize,
    write_matrix_binary, write_matrix_csv,
};
use crate::spectral_error::{
    hf_sweep, match_assembled_blocks, MatchReport, SweepConfig, SweepResult,
};
use crate::spectrum::{spectrum_table, OperatorKind, DEFAULT_TRANSITION_WINDOW};
use crate::{Error, Result};
use svg::{Figure, Series};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    Csv,
    Json,
    Svg,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            "svg" => Ok(OutputFormat::Svg),
            other => Err(Error::Config(format!(
                "unknown output format '{other}' (csv, json, or svg)"
            ))),
        }
    }
}

/// Parameters of one command run. Unset optionals fall back to per-command
/// defaults; the resolved struct is serialized next to the outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct RunConfig {
    /// Operators to process; empty means the command's default set.
    pub kinds: Vec<OperatorKind>,
    pub ka: Option<f64>,
    /// Sweep frequencies; empty means the default grid.
    pub ka_list: Vec<f64>,
    pub v: Option<usize>,
    /// Grid scale of sweeps: `V = round_to_odd(cells_per_ka * ka)`.
    pub cells_per_ka: f64,
    pub basis_test: Option<BasisKind>,
    pub basis_source: Option<BasisKind>,
    pub s_max: Option<i64>,
    pub l_cap: Option<usize>,
    pub tail_tol: Option<f64>,
    pub transition_window: f64,
    /// Pass/fail bound; meaning is command-specific.
    pub threshold: Option<f64>,
    /// Spectrum: process every frequency block instead of `p = 0` only.
    pub all_blocks: bool,
    /// Oracle check: also run the direct-quadrature route.
    pub quadrature: bool,
    /// Oracle check: corrupt one matrix entry first; the checks must fail.
    pub corrupt_self_test: bool,
    /// Oracle check: dump the assembled full matrices next to the report.
    pub dump_matrices: bool,
    pub formats: Vec<OutputFormat>,
    pub out: PathBuf,
    /// Seed for synthetic data in self-tests.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            kinds: Vec::new(),
            ka: None,
            ka_list: Vec::new(),
            v: None,
            cells_per_ka: 1.0,
            basis_test: None,
            basis_source: None,
            s_max: None,
            l_cap: None,
            tail_tol: None,
            transition_window: DEFAULT_TRANSITION_WINDOW,
            threshold: None,
            all_blocks: false,
            quadrature: false,
            corrupt_self_test: false,
            dump_matrices: false,
            formats: vec![OutputFormat::Csv, OutputFormat::Json, OutputFormat::Svg],
            out: PathBuf::from("out"),
            seed: 7,
        }
    }
}

impl RunConfig {
    /// Loads a JSON config file.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    fn wants(&self, format: OutputFormat) -> bool {
        self.formats.contains(&format)
    }

    fn policy(&self, basis: BasisKind, v: usize, ka: f64) -> TruncationPolicy {
        let mut policy = TruncationPolicy::default_for(basis, v, ka);
        if let Some(s) = self.s_max {
            policy.s_max = s;
        }
        if let Some(c) = self.l_cap {
            policy.l_cap = c;
        }
        if let Some(t) = self.tail_tol {
            policy.tail_tol = t;
        }
        policy
    }

    fn config_line(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// What a finished command reports back to the front end.
#[derive(Debug, Clone)]
pub struct CommandOutcome {
    /// `0` success, `1` a configured tolerance failed.
    pub exit_code: i32,
    pub summary: String,
    pub files: Vec<PathBuf>,
}

fn prepare_out_dir(config: &RunConfig) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(&config.out)?;
    let path = config.out.join("config.json");
    let mut text = serde_json::to_string_pretty(config)?;
    text.push('\n');
    std::fs::write(&path, text)?;
    Ok(vec![path])
}

fn write_file(files: &mut Vec<PathBuf>, path: PathBuf, contents: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(&path, contents)?;
    files.push(path);
    Ok(())
}

fn csv_preamble(schema: &str, config: &RunConfig) -> Result<String> {
    Ok(format!("# schema={schema} v1\n# config={}\n", config.config_line()?))
}

fn json_pretty<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

fn opt_float(value: Option<f64>) -> String {
    value.map(|v| format!("{v:.17e}")).unwrap_or_default()
}

/// Gram-block convergence: distance of the `p = 0` identity-operator block
/// from the identity over a log-spaced degree grid. Exit code 1 when the
/// final deviation misses the threshold (default `1e-2`).
pub fn run_gram_convergence(config: &RunConfig) -> Result<CommandOutcome> {
    let v = config.v.unwrap_or(15);
    let basis = config.basis_test.unwrap_or(BasisKind::Patch);
    let family = BasisFamily::new(basis);
    let grid = SphereGrid::new(v)?;
    let threshold = config.threshold.unwrap_or(1e-2);

    let lo = (v as f64).ln();
    let hi = (50 * v) as f64;
    let span = hi.ln() - lo;
    let mut caps: Vec<usize> =
        (0..14).map(|i| (lo + span * i as f64 / 13.0).exp().round() as usize).collect();
    caps.dedup();
    let curve = gram_convergence_curve(&grid, family, &caps)?;
    let final_deviation = curve.last().expect("non-empty curve").1;
    let pass = final_deviation < threshold;

    let mut files = prepare_out_dir(config)?;
    if config.wants(OutputFormat::Csv) {
        let mut csv = csv_preamble("gram-convergence", config)?;
        csv.push_str("degree_cap,deviation\n");
        for &(cap, dev) in &curve {
            let _ = writeln!(csv, "{cap},{dev:.17e}");
        }
        write_file(&mut files, config.out.join("gram_convergence.csv"), csv)?;
    }
    if config.wants(OutputFormat::Json) {
        #[derive(Serialize)]
        struct GramSummary<'a> {
            v: usize,
            basis: BasisKind,
            threshold: f64,
            final_deviation: f64,
            pass: bool,
            curve: &'a [(usize, f64)],
        }
        let summary =
            GramSummary { v, basis, threshold, final_deviation, pass, curve: &curve };
        write_file(
            &mut files,
            config.out.join("gram_convergence.json"),
            json_pretty(&summary)?,
        )?;
    }
    if config.wants(OutputFormat::Svg) {
        let figure = gram_convergence_figure(v, basis, &curve);
        write_file(&mut files, config.out.join("gram_convergence.svg"), figure.render())?;
    }

    Ok(CommandOutcome {
        exit_code: i32::from(!pass),
        summary: format!(
            "gram-convergence: V={v} {basis}, deviation {final_deviation:.3e} at L={} \
             (threshold {threshold:.1e}) -> {}",
            caps.last().expect("non-empty caps"),
            if pass { "pass" } else { "FAIL" }
        ),
        files,
    })
}

/// Log-log curve of the Gram-block deviation against the degree cap.
pub fn gram_convergence_figure(v: usize, basis: BasisKind, curve: &[(usize, f64)]) -> Figure {
    let points: Vec<(f64, f64)> = curve.iter().map(|&(c, d)| (c as f64, d)).collect();
    Figure::new(
        format!("Gram block distance to identity (V={v}, {basis})"),
        "degree cap L",
        "relative Frobenius deviation",
    )
    .log_log()
    .with(Series::line(basis.to_string(), points))
}

/// Complex-plane overlay of the continuous and matched matrix spectra.
pub fn spectrum_plane_figure(
    kind: OperatorKind,
    ka: f64,
    operator: &[Complex64],
    reports: &[MatchReport],
) -> Figure {
    Figure::new(format!("{kind} spectrum at ka={ka}"), "Re", "Im")
        .with(Series::scatter(
            "operator",
            operator.iter().map(|e| (e.re, e.im)).collect(),
        ))
        .with(Series::scatter(
            "matrix",
            reports
                .iter()
                .flat_map(|r| &r.records)
                .map(|r| (r.matrix_eigenvalue.re, r.matrix_eigenvalue.im))
                .collect(),
        ))
}

/// Eigenvalue magnitude against degree, matrix markers over the operator curve.
pub fn spectrum_magnitude_figure(
    kind: OperatorKind,
    ka: f64,
    operator: &[Complex64],
    reports: &[MatchReport],
) -> Figure {
    let mut figure = Figure::new(
        format!("{kind} eigenvalue magnitudes at ka={ka}"),
        "degree l",
        "|eigenvalue|",
    )
    .with(Series::line(
        "operator",
        operator.iter().enumerate().map(|(l, e)| (l as f64, e.norm())).collect(),
    ))
    .with(Series::scatter(
        "matrix",
        reports
            .iter()
            .flat_map(|r| &r.records)
            .map(|r| (r.l as f64, r.matrix_eigenvalue.norm()))
            .collect(),
    ));
    figure.log_y = true;
    figure
}

fn default_spectrum_v(ka: f64) -> usize {
    // Smallest odd V with l_max = V - 1 >= ka.
    let need = ka.ceil() as usize + 1;
    let v = if need % 2 == 0 { need + 1 } else { need };
    v.max(3)
}

fn spectrum_csv(reports: &[MatchReport], schema_config: &str) -> String {
    let mut csv = String::from(schema_config);
    csv.push_str(
        "matched,p,l,region,reliable,matrix_re,matrix_im,operator_re,operator_im,error_abs\n",
    );
    for report in reports {
        for r in &report.records {
            let _ = writeln!(
                csv,
                "1,{},{},{},{},{:.17e},{:.17e},{:.17e},{:.17e},{}",
                r.p,
                r.l,
                r.region,
                u8::from(r.reliable),
                r.matrix_eigenvalue.re,
                r.matrix_eigenvalue.im,
                r.operator_eigenvalue.re,
                r.operator_eigenvalue.im,
                opt_float(r.error_magnitude()),
            );
        }
        for e in &report.unmatched {
            let _ = writeln!(csv, "0,{},,,0,{:.17e},{:.17e},,,", report.p, e.re, e.im);
        }
    }
    csv
}

/// Matched spectra of the discretized operators at one frequency: tables and
/// overlay plots per operator kind, `p = 0` by default.
pub fn run_spectrum(config: &RunConfig) -> Result<CommandOutcome> {
    let ka = config.ka.unwrap_or(30.0);
    let kinds = if config.kinds.is_empty() {
        vec![OperatorKind::SingleLayer, OperatorKind::Hypersingular]
    } else {
        config.kinds.clone()
    };
    let v = config.v.unwrap_or_else(|| default_spectrum_v(ka));
    let basis_test = config.basis_test.unwrap_or(BasisKind::Pyramid);
    let basis_source = config.basis_source.unwrap_or(basis_test);
    let test_family = BasisFamily::new(basis_test);
    let source_family = BasisFamily::new(basis_source);
    let grid = SphereGrid::new(v)?;

    let mut files = prepare_out_dir(config)?;
    let mut summary = format!("spectrum: ka={ka} V={v} {basis_test}/{basis_source}");
    for kind in kinds {
        let policy = config.policy(basis_test, v, ka);
        let blocks: Vec<ModalBlock> = if config.all_blocks {
            assemble_all_blocks(&grid, kind, test_family, source_family, ka, policy)?
        } else {
            vec![assemble_block(&grid, kind, test_family, source_family, ka, 0, policy)?]
        };
        let reports =
            match_assembled_blocks(kind, ka, &blocks, config.transition_window)?;
        let slug = kind.to_string().replace('-', "_");

        if config.wants(OutputFormat::Csv) {
            let csv = spectrum_csv(&reports, &csv_preamble("spectrum", config)?);
            write_file(&mut files, config.out.join(format!("spectrum_{slug}.csv")), csv)?;
        }
        if config.wants(OutputFormat::Json) {
            write_file(
                &mut files,
                config.out.join(format!("spectrum_{slug}.json")),
                json_pretty(&reports)?,
            )?;
        }
        if config.wants(OutputFormat::Svg) {
            let operator = spectrum_table(kind, ka, v - 1)?;
            write_file(
                &mut files,
                config.out.join(format!("spectrum_{slug}_plane.svg")),
                spectrum_plane_figure(kind, ka, &operator, &reports).render(),
            )?;
            write_file(
                &mut files,
                config.out.join(format!("spectrum_{slug}_magnitude.svg")),
                spectrum_magnitude_figure(kind, ka, &operator, &reports).render(),
            )?;
        }

        let reliable: Vec<f64> = reports
            .iter()
            .flat_map(|r| &r.records)
            .filter(|r| r.reliable)
            .filter_map(|r| r.error_magnitude())
            .collect();
        let worst = reliable.iter().cloned().fold(0.0, f64::max);
        let _ = write!(
            summary,
            "; {kind}: {} reliable records, max |E| {worst:.3e}",
            reliable.len()
        );
    }

    Ok(CommandOutcome { exit_code: 0, summary, files })
}

/// Constant-`hk` frequency sweep of the transition-region error with a
/// power-law fit. Exit code 1 when a threshold is configured and some fit
/// residual exceeds it.
pub fn run_error_sweep(config: &RunConfig) -> Result<CommandOutcome> {
    let kinds = if config.kinds.is_empty() {
        vec![OperatorKind::SingleLayer, OperatorKind::Hypersingular]
    } else {
        config.kinds.clone()
    };
    let ka_list: Vec<f64> = if config.ka_list.is_empty() {
        vec![10.0, 15.0, 20.0, 30.0, 40.0]
    } else {
        config.ka_list.clone()
    };
    let basis_test = config.basis_test.unwrap_or(BasisKind::Pyramid);
    let basis_source = config.basis_source.unwrap_or(basis_test);
    let test_family = BasisFamily::new(basis_test);
    let source_family = BasisFamily::new(basis_source);
    let override_policy = if config.s_max.is_some()
        || config.l_cap.is_some()
        || config.tail_tol.is_some()
    {
        let ka_max = ka_list.iter().cloned().fold(0.0, f64::max);
        let v_max = crate::spectral_error::round_to_odd(config.cells_per_ka * ka_max)?;
        Some(config.policy(basis_test, v_max, ka_max))
    } else {
        None
    };
    let sweep_config = SweepConfig {
        c_v: config.cells_per_ka,
        transition_window: config.transition_window,
        policy: override_policy,
    };

    let mut files = prepare_out_dir(config)?;
    let mut summary = String::from("error-sweep:");
    let mut exit_code = 0;
    for kind in kinds {
        let result = hf_sweep(kind, test_family, source_family, &ka_list, sweep_config)?;
        let slug = kind.to_string().replace('-', "_");
        if config.wants(OutputFormat::Csv) {
            let mut csv = csv_preamble("error-sweep", config)?;
            csv.push_str("ka,v,max_transition_error\n");
            for point in &result.points {
                let _ = writeln!(
                    csv,
                    "{},{},{:.17e}",
                    point.ka, point.v, point.max_transition_error
                );
            }
            write_file(&mut files, config.out.join(format!("error_sweep_{slug}.csv")), csv)?;
        }
        if config.wants(OutputFormat::Json) {
            write_file(
                &mut files,
                config.out.join(format!("error_sweep_{slug}.json")),
                json_pretty(&result)?,
            )?;
        }
        if config.wants(OutputFormat::Svg) {
            write_file(
                &mut files,
                config.out.join(format!("error_sweep_{slug}.svg")),
                sweep_figure(&result).render(),
            )?;
        }
        let _ = write!(
            summary,
            " {kind}: exponent {:+.4} (residual {:.4});",
            result.fitted_exponent, result.fit_residual
        );
        if let Some(bound) = config.threshold {
            if result.fit_residual > bound {
                exit_code = 1;
            }
        }
    }

    Ok(CommandOutcome { exit_code, summary, files })
}

/// Log-log sweep points with the fitted power-law guide line.
pub fn sweep_figure(result: &SweepResult) -> Figure {
    let points: Vec<(f64, f64)> =
        result.points.iter().map(|p| (p.ka, p.max_transition_error)).collect();
    // Least-squares intercept for the fitted guide line.
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mean_x = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let intercept = mean_y - result.fitted_exponent * mean_x;
    let fit: Vec<(f64, f64)> = [points[0].0, points[points.len() - 1].0]
        .iter()
        .map(|&ka| (ka, (intercept + result.fitted_exponent * ka.ln()).exp()))
        .collect();
    let mut fit_series =
        Series::line(format!("fit slope {:+.3}", result.fitted_exponent), fit);
    fit_series.markers = false;
    Figure::new(
        format!(
            "{} transition error, V = round_odd({} ka)",
            result.kind, result.c_v
        ),
        "ka",
        "max transition |E|",
    )
    .log_log()
    .with(Series::scatter("measured", points))
    .with(fit_series)
}

#[derive(Debug, Serialize)]
struct OracleCheckEntry {
    kind: OperatorKind,
    v: usize,
    multiset_deviation: f64,
    off_diagonal_residual: f64,
    p0_block_distance: f64,
    pass: bool,
}

#[derive(Debug, Serialize)]
struct QuadratureCheckEntry {
    v: usize,
    ka: f64,
    eigenvalue_deviation: f64,
    max_refinement_step: f64,
    pass: bool,
}

#[derive(Debug, Serialize)]
struct OracleCheckSummary {
    ka: f64,
    multiset_tolerance: f64,
    residual_tolerance: f64,
    entries: Vec<OracleCheckEntry>,
    quadrature: Option<QuadratureCheckEntry>,
    pass: bool,
}

/// Cross-route oracle checks at small `V`: the full modal matrix against the
/// union of block eigenvalues, its explicit block-diagonalization, and
/// optionally the direct-quadrature route. Exit code 1 on any mismatch.
pub fn run_oracle_check(config: &RunConfig) -> Result<CommandOutcome> {
    let ka = config.ka.unwrap_or(2.0);
    let kinds = if config.kinds.is_empty() { OperatorKind::ALL.to_vec() } else { config.kinds.clone() };
    let vs: Vec<usize> = config.v.map(|v| vec![v]).unwrap_or_else(|| vec![3, 5]);
    let basis_test = config.basis_test.unwrap_or(BasisKind::Pyramid);
    let basis_source = config.basis_source.unwrap_or(basis_test);
    let test_family = BasisFamily::new(basis_test);
    let source_family = BasisFamily::new(basis_source);
    let multiset_tolerance = 1e-8;
    let residual_tolerance = 1e-10;

    let mut files = prepare_out_dir(config)?;
    let mut entries = Vec::new();
    let mut all_pass = true;
    for &v in &vs {
        let grid = SphereGrid::new(v)?;
        for &kind in &kinds {
            let policy = TruncationPolicy::fixed(
                config.s_max.unwrap_or(6),
                config.l_cap.unwrap_or(8 * v + 40),
            );
            let mut full =
                assemble_full_modal(&grid, kind, test_family, source_family, ka, policy)?;
            if config.corrupt_self_test {
                let bump = 0.05 * full.matrix.norm().max(1.0);
                full.matrix[(0, 0)] += Complex64::new(bump, 0.0);
            }
            let full_eigs = eigenvalues(&full.matrix)?;
            let mut union = Vec::with_capacity(v * v);
            for p in grid.balanced_frequencies() {
                let block =
                    assemble_block(&grid, kind, test_family, source_family, ka, p, policy)?;
                union.extend(eigenvalues(&block.matrix)?);
            }
            let multiset = relative_multiset_distance(&full_eigs, &union)?;
            let diagonalized = block_diagonalize(&full)?;
            let p0_index = diagonalized
                .frequencies
                .iter()
                .position(|&p| p == 0)
                .expect("p = 0 block");
            let direct =
                assemble_block(&grid, kind, test_family, source_family, ka, 0, policy)?;
            let p0_block_distance = (&diagonalized.blocks[p0_index] - &direct.matrix).norm()
                / direct.matrix.norm().max(1e-300);
            let pass = multiset <= multiset_tolerance
                && diagonalized.off_diagonal_residual < residual_tolerance
                && p0_block_distance < residual_tolerance;
            all_pass &= pass;
            if config.dump_matrices {
                let slug = kind.to_string().replace('-', "_");
                let bin_path = config.out.join(format!("full_modal_{slug}_v{v}.bin"));
                let mut bin = std::fs::File::create(&bin_path)?;
                write_matrix_binary(&mut bin, &full.matrix)?;
                files.push(bin_path);
                let csv_path = config.out.join(format!("full_modal_{slug}_v{v}.csv"));
                let mut csv = Vec::new();
                write_matrix_csv(&mut csv, &full.matrix)?;
                write_file(&mut files, csv_path, csv)?;
            }
            entries.push(OracleCheckEntry {
                kind,
                v,
                multiset_deviation: multiset,
                off_diagonal_residual: diagonalized.off_diagonal_residual,
                p0_block_distance,
                pass,
            });
        }
    }

    let quadrature = if config.quadrature {
        let grid = SphereGrid::new(3)?;
        let quad_ka = 1.0;
        let patch = BasisFamily::new(BasisKind::Patch);
        let (quad_full, quad_report) =
            assemble_quadrature_single_layer(&grid, quad_ka, patch, patch)?;
        let modal = assemble_full_modal(
            &grid,
            OperatorKind::SingleLayer,
            patch,
            patch,
            quad_ka,
            TruncationPolicy::fixed(12, 300),
        )?;
        let deviation =
            relative_multiset_distance(&eigenvalues(&quad_full.matrix)?, &eigenvalues(&modal.matrix)?)?;
        let pass = deviation <= 2e-3;
        all_pass &= pass;
        Some(QuadratureCheckEntry {
            v: 3,
            ka: quad_ka,
            eigenvalue_deviation: deviation,
            max_refinement_step: quad_report.max_refinement_step,
            pass,
        })
    } else {
        None
    };

    let summary_data = OracleCheckSummary {
        ka,
        multiset_tolerance,
        residual_tolerance,
        entries,
        quadrature,
        pass: all_pass,
    };
    if config.wants(OutputFormat::Json) {
        write_file(&mut files, config.out.join("oracle_check.json"), json_pretty(&summary_data)?)?;
    }

    let mut summary = format!("oracle-check: ka={ka} {basis_test}/{basis_source}");
    for e in &summary_data.entries {
        let _ = write!(
            summary,
            "; {} V={}: multiset {:.2e}, off-diag {:.2e}, p0 {:.2e} -> {}",
            e.kind,
            e.v,
            e.multiset_deviation,
            e.off_diagonal_residual,
            e.p0_block_distance,
            if e.pass { "ok" } else { "MISMATCH" }
        );
    }
    if let Some(q) = &summary_data.quadrature {
        let _ = write!(
            summary,
            "; quadrature V={} ka={}: deviation {:.2e} -> {}",
            q.v,
            q.ka,
            q.eigenvalue_deviation,
            if q.pass { "ok" } else { "MISMATCH" }
        );
    }

    Ok(CommandOutcome { exit_code: i32::from(!all_pass), summary, files })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scratch_dir(name: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("sphere-bem-report-{name}"));
        let _ = std::fs::remove_dir_all(&dir);
        dir
    }

    #[test]
    fn config_round_trips_through_json() {
        let config = RunConfig {
            kinds: vec![OperatorKind::Hypersingular],
            ka: Some(12.5),
            v: Some(7),
            basis_test: Some(BasisKind::Patch),
            threshold: Some(2e-3),
            all_blocks: true,
            ..RunConfig::default()
        };
        let text = serde_json::to_string_pretty(&config).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(config, back);
        assert!(serde_json::from_str::<RunConfig>("{\"no-such-field\":1}").is_err());
        assert_eq!(serde_json::from_str::<RunConfig>("{}").unwrap(), RunConfig::default());
    }

    #[test]
    fn gram_convergence_writes_deterministic_reports() {
        let out = scratch_dir("gram");
        let config = RunConfig {
            v: Some(3),
            threshold: Some(0.1),
            out: out.clone(),
            ..RunConfig::default()
        };
        let outcome = run_gram_convergence(&config).unwrap();
        assert_eq!(outcome.exit_code, 0, "{}", outcome.summary);
        let csv_path = out.join("gram_convergence.csv");
        let first = std::fs::read(&csv_path).unwrap();
        assert!(String::from_utf8_lossy(&first).starts_with("# schema=gram-convergence v1\n"));
        let written: RunConfig =
            serde_json::from_str(&std::fs::read_to_string(out.join("config.json")).unwrap())
                .unwrap();
        assert_eq!(written, config);
        run_gram_convergence(&config).unwrap();
        assert_eq!(first, std::fs::read(&csv_path).unwrap(), "rerun changed bytes");
        assert!(out.join("gram_convergence.svg").exists());
        let _ = std::fs::remove_dir_all(&out);
    }

    #[test]
    fn gram_convergence_fails_unreachable_thresholds() {
        let out = scratch_dir("gram-fail");
        let config = RunConfig {
            v: Some(3),
            threshold: Some(1e-9),
            formats: vec![OutputFormat::Csv],
            out: out.clone(),
            ..RunConfig::default()
        };
        let outcome = run_gram_convergence(&config).unwrap();
        assert_eq!(outcome.exit_code, 1);
        assert!(outcome.summary.contains("FAIL"));
        let _ = std::fs::remove_dir_all(&out);
    }

    fn max_reliable_error(out: &Path, slug: &str) -> f64 {
        let json = std::fs::read_to_string(out.join(format!("spectrum_{slug}.json"))).unwrap();
        let reports: Vec<MatchReport> = serde_json::from_str(&json).unwrap();
        assert_eq!(reports.len(), 1, "p = 0 only");
        assert!(reports[0].unmatched.is_empty(), "square block leaves no leftovers");
        reports
            .iter()
            .flat_map(|r| &r.records)
            .filter(|r| r.reliable)
            .filter_map(|r| r.error_magnitude())
            .fold(0.0, f64::max)
    }

    #[test]
    fn spectrum_smoke_run_matches_reliably() {
        // At two grid cells per wavelength the reliable-region errors sit
        // around 0.4; refining to six cells per wavelength pulls every
        // reliable record under 0.2.
        let out = scratch_dir("spectrum");
        let coarse = RunConfig {
            ka: Some(5.0),
            v: Some(11),
            out: out.clone(),
            ..RunConfig::default()
        };
        let outcome = run_spectrum(&coarse).unwrap();
        assert_eq!(outcome.exit_code, 0);
        for slug in ["single_layer", "hypersingular"] {
            let worst = max_reliable_error(&out, slug);
            assert!(worst < 0.6, "{slug} max reliable |E| = {worst}");
            assert!(out.join(format!("spectrum_{slug}_plane.svg")).exists());
            assert!(out.join(format!("spectrum_{slug}_magnitude.svg")).exists());
        }
        let fine = RunConfig {
            v: Some(31),
            formats: vec![OutputFormat::Json],
            ..coarse.clone()
        };
        run_spectrum(&fine).unwrap();
        for slug in ["single_layer", "hypersingular"] {
            let worst = max_reliable_error(&out, slug);
            assert!(worst < 0.2, "{slug} refined max reliable |E| = {worst}");
        }
        let _ = std::fs::remove_dir_all(&out);
    }

    #[test]
    fn identity_spectrum_clusters_at_one() {
        let out = scratch_dir("spectrum-identity");
        let config = RunConfig {
            kinds: vec![OperatorKind::Identity],
            ka: Some(5.0),
            v: Some(11),
            basis_test: Some(BasisKind::Patch),
            formats: vec![OutputFormat::Json],
            out: out.clone(),
            ..RunConfig::default()
        };
        run_spectrum(&config).unwrap();
        let worst = max_reliable_error(&out, "identity");
        assert!(worst < 0.05, "identity eigenvalues spread {worst} from 1");
        let _ = std::fs::remove_dir_all(&out);
    }

    #[test]
    fn identity_error_sweep_is_flat() {
        let out = scratch_dir("sweep");
        let config = RunConfig {
            kinds: vec![OperatorKind::Identity],
            ka_list: vec![4.0, 5.0, 6.0, 7.0],
            cells_per_ka: 2.0,
            out: out.clone(),
            formats: vec![OutputFormat::Csv, OutputFormat::Json, OutputFormat::Svg],
            ..RunConfig::default()
        };
        let outcome = run_error_sweep(&config).unwrap();
        assert_eq!(outcome.exit_code, 0);
        let json = std::fs::read_to_string(out.join("error_sweep_identity.json")).unwrap();
        let result: SweepResult = serde_json::from_str(&json).unwrap();
        assert_eq!(result.points.len(), 4);
        assert!(result.fitted_exponent.abs() < 0.6, "{}", result.fitted_exponent);
        assert!(out.join("error_sweep_identity.svg").exists());
        let _ = std::fs::remove_dir_all(&out);
    }

    #[test]
    fn oracle_check_passes_and_detects_corruption() {
        let out = scratch_dir("oracle");
        let config = RunConfig {
            v: Some(3),
            kinds: vec![OperatorKind::SingleLayer],
            dump_matrices: true,
            out: out.clone(),
            ..RunConfig::default()
        };
        let outcome = run_oracle_check(&config).unwrap();
        assert_eq!(outcome.exit_code, 0, "{}", outcome.summary);
        assert!(out.join("oracle_check.json").exists());
        assert!(out.join("full_modal_single_layer_v3.bin").exists());
        let corrupt = RunConfig { corrupt_self_test: true, ..config.clone() };
        let outcome = run_oracle_check(&corrupt).unwrap();
        assert_eq!(outcome.exit_code, 1, "corruption must be detected");
        assert!(outcome.summary.contains("MISMATCH"));
        let _ = std::fs::remove_dir_all(&out);
    }
}
