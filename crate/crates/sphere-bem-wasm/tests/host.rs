//! Host-side checks of the binding logic; the thin `wasm_bindgen` wrappers
//! add only error translation on top of these functions.

use sphere_bem_wasm::{
    error_sweep_svg_impl, gram_convergence_svg_impl, spectrum_magnitude_svg_impl,
    spectrum_plane_svg_impl, spectrum_records_json_impl,
};

fn assert_svg(text: &str) {
    assert!(text.starts_with("<svg"), "not an svg document");
    assert!(text.trim_end().ends_with("</svg>"));
}

#[test]
fn spectrum_bindings_produce_svg_and_json() {
    assert_svg(&spectrum_plane_svg_impl("single-layer", 5.0, 11).unwrap());
    assert_svg(&spectrum_magnitude_svg_impl("hypersingular", 5.0, 11).unwrap());
    let json = spectrum_records_json_impl("single-layer", 5.0, 11).unwrap();
    let reports: serde_json::Value = serde_json::from_str(&json).unwrap();
    let records = reports[0]["records"].as_array().unwrap();
    assert_eq!(records.len(), 11);
    assert_eq!(records[0]["l"], 0);
}

#[test]
fn gram_and_sweep_bindings_produce_svg() {
    assert_svg(&gram_convergence_svg_impl(5, 100).unwrap());
    assert_svg(&error_sweep_svg_impl("identity", 2.0).unwrap());
}

#[test]
fn interactive_limits_are_enforced() {
    assert!(spectrum_plane_svg_impl("single-layer", 5.0, 63).is_err());
    assert!(spectrum_plane_svg_impl("nonsense", 5.0, 11).is_err());
    assert!(gram_convergence_svg_impl(5, 4).is_err());
    assert!(gram_convergence_svg_impl(33, 100).is_err());
    assert!(error_sweep_svg_impl("single-layer", 9.0).is_err());
}
