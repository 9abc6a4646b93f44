//! Browser bindings for the sphere boundary-element spectral reports.
//!
//! Each export takes plain numbers and strings and returns an SVG or JSON
//! string, so the page needs no glue beyond `innerHTML`. The `*_impl`
//! functions carry the logic and compile on any target; the `wasm_bindgen`
//! wrappers only translate errors.

use sphere_bem::basis::{BasisFamily, BasisKind};
use sphere_bem::blocks::{assemble_block, gram_convergence_curve, TruncationPolicy};
use sphere_bem::grid::SphereGrid;
use sphere_bem::num_complex::Complex64;
use sphere_bem::report::{
    gram_convergence_figure, spectrum_magnitude_figure, spectrum_plane_figure, sweep_figure,
};
use sphere_bem::spectral_error::{hf_sweep, match_assembled_blocks, MatchReport, SweepConfig};
use sphere_bem::spectrum::{spectrum_table, OperatorKind, DEFAULT_TRANSITION_WINDOW};
use sphere_bem::Result;
use wasm_bindgen::prelude::*;

const SPECTRUM_V_LIMIT: usize = 61;

fn spectrum_data(kind: &str, ka: f64, v: usize) -> Result<(Vec<Complex64>, Vec<MatchReport>)> {
    let kind: OperatorKind = kind.parse()?;
    if v > SPECTRUM_V_LIMIT {
        return Err(sphere_bem::Error::Config(format!(
            "V={v} is too large for an interactive run (limit {SPECTRUM_V_LIMIT})"
        )));
    }
    let grid = SphereGrid::new(v)?;
    let family = BasisFamily::new(BasisKind::Pyramid);
    let policy = TruncationPolicy::default_for(BasisKind::Pyramid, v, ka);
    let block = assemble_block(&grid, kind, family, family, ka, 0, policy)?;
    let reports = match_assembled_blocks(kind, ka, &[block], DEFAULT_TRANSITION_WINDOW)?;
    let operator = spectrum_table(kind, ka, v - 1)?;
    Ok((operator, reports))
}

/// Complex-plane overlay of the `p = 0` matrix spectrum and the operator
/// eigenvalues, as an SVG document.
pub fn spectrum_plane_svg_impl(kind: &str, ka: f64, v: usize) -> Result<String> {
    let (operator, reports) = spectrum_data(kind, ka, v)?;
    Ok(spectrum_plane_figure(kind.parse()?, ka, &operator, &reports).render())
}

/// Eigenvalue magnitudes against degree, as an SVG document.
pub fn spectrum_magnitude_svg_impl(kind: &str, ka: f64, v: usize) -> Result<String> {
    let (operator, reports) = spectrum_data(kind, ka, v)?;
    Ok(spectrum_magnitude_figure(kind.parse()?, ka, &operator, &reports).render())
}

/// Matched `p = 0` records as a JSON array of match reports.
pub fn spectrum_records_json_impl(kind: &str, ka: f64, v: usize) -> Result<String> {
    let (_, reports) = spectrum_data(kind, ka, v)?;
    Ok(serde_json::to_string(&reports)?)
}

/// Gram-block convergence curve over a short log-spaced degree grid.
pub fn gram_convergence_svg_impl(v: usize, max_cap: usize) -> Result<String> {
    if v > 31 || max_cap > 4000 {
        return Err(sphere_bem::Error::Config(format!(
            "V={v}, max cap {max_cap} is too large for an interactive run"
        )));
    }
    if max_cap <= v {
        return Err(sphere_bem::Error::Config(format!(
            "max cap {max_cap} must exceed V={v}"
        )));
    }
    let grid = SphereGrid::new(v)?;
    let lo = (v as f64).ln();
    let span = (max_cap as f64).ln() - lo;
    let mut caps: Vec<usize> =
        (0..10).map(|i| (lo + span * i as f64 / 9.0).exp().round() as usize).collect();
    caps.dedup();
    let curve = gram_convergence_curve(&grid, BasisFamily::new(BasisKind::Patch), &caps)?;
    Ok(gram_convergence_figure(v, BasisKind::Patch, &curve).render())
}

/// Small transition-error sweep over `ka = 6, 8, 10, 12` with a fitted
/// power law, as an SVG document.
pub fn error_sweep_svg_impl(kind: &str, cells_per_ka: f64) -> Result<String> {
    let kind: OperatorKind = kind.parse()?;
    if !(0.5..=4.0).contains(&cells_per_ka) {
        return Err(sphere_bem::Error::Config(format!(
            "cells-per-ka {cells_per_ka} outside the interactive range [0.5, 4]"
        )));
    }
    let family = BasisFamily::new(BasisKind::Pyramid);
    let config = SweepConfig { c_v: cells_per_ka, ..SweepConfig::default() };
    let result = hf_sweep(kind, family, family, &[6.0, 8.0, 10.0, 12.0], config)?;
    Ok(sweep_figure(&result).render())
}

fn to_js<T>(result: Result<T>) -> std::result::Result<T, JsValue> {
    result.map_err(|e| JsValue::from_str(&e.to_string()))
}

#[wasm_bindgen]
pub fn spectrum_plane_svg(kind: &str, ka: f64, v: usize) -> std::result::Result<String, JsValue> {
    to_js(spectrum_plane_svg_impl(kind, ka, v))
}

#[wasm_bindgen]
pub fn spectrum_magnitude_svg(
    kind: &str,
    ka: f64,
    v: usize,
) -> std::result::Result<String, JsValue> {
    to_js(spectrum_magnitude_svg_impl(kind, ka, v))
}

#[wasm_bindgen]
pub fn spectrum_records_json(
    kind: &str,
    ka: f64,
    v: usize,
) -> std::result::Result<String, JsValue> {
    to_js(spectrum_records_json_impl(kind, ka, v))
}

#[wasm_bindgen]
pub fn gram_convergence_svg(v: usize, max_cap: usize) -> std::result::Result<String, JsValue> {
    to_js(gram_convergence_svg_impl(v, max_cap))
}

#[wasm_bindgen]
pub fn error_sweep_svg(kind: &str, cells_per_ka: f64) -> std::result::Result<String, JsValue> {
    to_js(error_sweep_svg_impl(kind, cells_per_ka))
}
