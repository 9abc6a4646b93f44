//! End-to-end runs of the installed binary: exit codes, file outputs, and
//! config-file overrides.

use std::path::PathBuf;
use std::process::{Command, Output};

fn scratch_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("sphere-bem-cli-{name}"));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sphere-bem"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn exit_code(output: &Output) -> i32 {
    output.status.code().expect("no signal")
}

#[test]
fn gram_convergence_passes_and_respects_threshold() {
    let out = scratch_dir("gram");
    let out_arg = out.to_str().unwrap();
    let output = run(&[
        "gram-convergence",
        "--V",
        "3",
        "--threshold",
        "0.1",
        "--out",
        out_arg,
    ]);
    assert_eq!(exit_code(&output), 0, "{output:?}");
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("pass"), "{stdout}");
    assert!(out.join("gram_convergence.csv").exists());
    assert!(out.join("gram_convergence.svg").exists());
    assert!(out.join("config.json").exists());

    let output = run(&[
        "gram-convergence",
        "--V",
        "3",
        "--threshold",
        "1e-9",
        "--out",
        out_arg,
    ]);
    assert_eq!(exit_code(&output), 1, "unreachable threshold exits 1");
    let _ = std::fs::remove_dir_all(&out);
}

#[test]
fn flags_override_config_file() {
    let out = scratch_dir("override");
    std::fs::create_dir_all(&out).unwrap();
    let config_path = out.join("in.json");
    std::fs::write(
        &config_path,
        format!(
            "{{\"v\": 5, \"threshold\": 1e-9, \"out\": {:?}}}",
            out.to_str().unwrap()
        ),
    )
    .unwrap();
    let output = run(&[
        "gram-convergence",
        "--config",
        config_path.to_str().unwrap(),
        "--V",
        "3",
        "--threshold",
        "0.1",
    ]);
    assert_eq!(exit_code(&output), 0, "{output:?}");
    let written: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("config.json")).unwrap()).unwrap();
    assert_eq!(written["v"], 3, "flag wins over file");
    assert_eq!(written["threshold"], 0.1);
    let _ = std::fs::remove_dir_all(&out);
}

#[test]
fn invalid_configuration_exits_2() {
    let out = scratch_dir("invalid");
    let out_arg = out.to_str().unwrap();
    // Even V is rejected by the grid.
    let output = run(&["gram-convergence", "--V", "4", "--out", out_arg]);
    assert_eq!(exit_code(&output), 2, "{output:?}");
    assert!(!String::from_utf8_lossy(&output.stderr).is_empty());
    // A sweep needs at least four frequencies.
    let output = run(&["error-sweep", "--ka-list", "2,3", "--out", out_arg]);
    assert_eq!(exit_code(&output), 2, "{output:?}");
    // Unknown enum values are usage errors.
    let output = run(&["spectrum", "--kind", "nonsense", "--out", out_arg]);
    assert_eq!(exit_code(&output), 2, "{output:?}");
    // Malformed config files are configuration errors.
    std::fs::create_dir_all(&out).unwrap();
    let bad = out.join("bad.json");
    std::fs::write(&bad, "{\"no-such-field\": 1}").unwrap();
    let output = run(&["spectrum", "--config", bad.to_str().unwrap()]);
    assert_eq!(exit_code(&output), 2, "{output:?}");
    let _ = std::fs::remove_dir_all(&out);
}

#[test]
fn spectrum_writes_per_kind_reports() {
    let out = scratch_dir("spectrum");
    let output = run(&[
        "spectrum",
        "--ka",
        "2",
        "--V",
        "5",
        "--kind",
        "single-layer,hypersingular",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&output), 0, "{output:?}");
    for slug in ["single_layer", "hypersingular"] {
        let csv_path = out.join(format!("spectrum_{slug}.csv"));
        let csv = std::fs::read_to_string(&csv_path).unwrap();
        assert!(csv.starts_with("# schema=spectrum v1\n"), "{csv_path:?}");
        assert!(out.join(format!("spectrum_{slug}.json")).exists());
        assert!(out.join(format!("spectrum_{slug}_plane.svg")).exists());
    }
    let _ = std::fs::remove_dir_all(&out);
}

#[test]
fn oracle_check_round_trips_and_detects_corruption() {
    let out = scratch_dir("oracle");
    let out_arg = out.to_str().unwrap();
    let base = [
        "oracle-check",
        "--V",
        "3",
        "--kind",
        "single-layer",
        "--out",
        out_arg,
    ];
    let output = run(&base);
    assert_eq!(exit_code(&output), 0, "{output:?}");
    assert!(out.join("oracle_check.json").exists());

    let mut corrupt = base.to_vec();
    corrupt.push("--corrupt-self-test");
    let output = run(&corrupt);
    assert_eq!(exit_code(&output), 1, "{output:?}");
    assert!(String::from_utf8_lossy(&output.stdout).contains("MISMATCH"));
    let _ = std::fs::remove_dir_all(&out);
}
