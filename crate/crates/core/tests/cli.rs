use std::path::{Path, PathBuf};
use std::process::Command;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn run(out: &Path, args: &[&str]) -> i32 {
    let status = Command::new(env!("CARGO_BIN_EXE_elastic-finsler"))
        .current_dir(root())
        .arg("--out-dir")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs");
    status.status.code().expect("exit code")
}

fn validate(out: &Path, report: &str, schema: &str) -> serde_json::Value {
    let schema: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(root().join("book/src/schemas").join(schema)).unwrap()).unwrap();
    let value: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join(report)).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator.iter_errors(&value).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{report}: {errors:?}");
    value
}

#[test]
fn classify2d_verdicts_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["classify2d", "--tensor", "data/tensors/iso_2_1.toml"]), 0);
    let v = validate(dir.path(), "classify2d.json", "classify2d.schema.json");
    assert_eq!(v["R"], "-81/1");
    assert_eq!(v["multiple_eigenvalue"], false);
    assert_eq!(run(dir.path(), &["classify2d", "--tensor", "data/tensors/iso_degenerate.toml"]), 3);
    assert_eq!(run(dir.path(), &["classify2d", "--tensor", "data/tensors/iso3d.toml"]), 2);
    assert_eq!(run(dir.path(), &["classify2d", "--tensor", "data/missing.toml"]), 2);
    assert_eq!(run(dir.path(), &["classify2d"]), 2);
}

#[test]
fn slowness_and_gap_tables() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["slowness", "--tensor", "data/tensors/iso3d.toml", "--samples", "512"]), 0);
    let csv = std::fs::read_to_string(dir.path().join("slowness.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "theta,phi,s1,s2,s3");
    assert_eq!(lines.len(), 513);
    assert_eq!(run(dir.path(), &["gap", "--tensor", "data/tensors/orthotropic_2d.toml", "--samples", "256"]), 0);
    let v = validate(dir.path(), "gap.json", "gap.schema.json");
    assert_eq!(v["separate"], true);
    assert_eq!(run(dir.path(), &["gap", "--tensor", "data/tensors/iso_degenerate.toml", "--samples", "256"]), 3);
}

#[test]
fn singularity_reports() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["singularity", "--tensor", "data/tensors/iso3d.toml"]), 3);
    let v = validate(dir.path(), "singularity.json", "singularity.schema.json");
    assert_eq!(v["variety_smooth"], true);
    assert_eq!(v["squarefree"], false);
    assert_eq!(run(dir.path(), &["singularity", "--tensor", "data/tensors/iso_2_1.toml"]), 0);
    validate(dir.path(), "singularity.json", "singularity.schema.json");
}

#[test]
fn finsler_and_geodesic_commands() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["finsler-check", "--field", "data/fields/perturbed_annulus.toml", "--samples", "30"]), 0);
    let v = validate(dir.path(), "finsler_check.json", "finsler_check.schema.json");
    assert_eq!(v["samples"], 30);
    let code = run(dir.path(), &["geodesic", "--field", "data/fields/unit_speed_annulus.toml", "--x0", "-0.8,0.4", "--y0", "2,0", "--unit-speed"]);
    assert_eq!(code, 0);
    let csv = std::fs::read_to_string(dir.path().join("geodesic.csv")).unwrap();
    assert!(csv.starts_with("t,x1,x2,y1,y2\n"));
    let last: Vec<f64> = csv.lines().last().unwrap().split(',').map(|s| s.parse().unwrap()).collect();
    assert!((last[1] - 0.84f64.sqrt()).abs() < 1e-8 && (last[2] - 0.4).abs() < 1e-8);
    assert_eq!(run(dir.path(), &["geodesic", "--field", "data/fields/unit_speed_annulus.toml", "--x0", "0,0", "--y0", "1,0"]), 2);
}

#[test]
fn traveltime_and_xray_commands() {
    let dir = tempfile::tempdir().unwrap();
    let code = run(dir.path(), &["traveltime", "--field", "data/fields/unit_speed_annulus.toml", "--source", "0,0.5", "--receivers", "8"]);
    assert_eq!(code, 0);
    let csv = std::fs::read_to_string(dir.path().join("traveltime.csv")).unwrap();
    assert_eq!(csv.lines().count(), 9);
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",true")));
    let code = run(dir.path(), &["xray", "--field", "data/fields/unit_speed_annulus.toml", "--points", "4", "--angles", "8"]);
    assert_eq!(code, 0);
    let v = validate(dir.path(), "xray_experiment.json", "xray_experiment.schema.json");
    assert!(v["recovery_rel_err"].as_f64().unwrap() < 1e-3);
    let csv = std::fs::read_to_string(dir.path().join("xray.csv")).unwrap();
    assert_eq!(csv.lines().count(), 33);
}

#[test]
fn appendixb_and_strict_config() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["appendixb", "--field", "data/fields/herglotz_annulus.toml", "--config", "data/run.toml"]), 0);
    let v = validate(dir.path(), "appendixb.json", "appendixb.schema.json");
    assert_eq!(v["fits"].as_array().unwrap().len(), 5);
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[sampling]\nfan_point = 3\n").unwrap();
    assert_eq!(run(dir.path(), &["classify2d", "--tensor", "data/tensors/iso_2_1.toml", "--config", bad.to_str().unwrap()]), 2);
    assert_eq!(run(dir.path(), &["classify2d", "--tensor", "data/tensors/iso_2_1.toml", "--tol-newton", "-1"]), 2);
}
