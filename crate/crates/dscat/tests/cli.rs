//! Integration tests of the installed binary: artifact reproducibility,
//! config layering, and error paths.

use std::path::Path;
use std::process::Command;

fn dscat() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dscat"))
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("missing artifact {}: {e}", path.display()))
}

#[test]
fn identical_config_and_seed_reproduce_outputs_byte_for_byte() {
    let dir_a = tempdir("repro_a");
    let dir_b = tempdir("repro_b");
    for dir in [&dir_a, &dir_b] {
        let status = dscat()
            .args(["--out-dir", dir.to_str().unwrap(), "--seed", "11"])
            .args(["scatter", "--kmax", "2", "--lambda", "0.1875", "--out", "s.csv"])
            .status()
            .unwrap();
        assert!(status.success());
        let status = dscat()
            .args(["--out-dir", dir.to_str().unwrap(), "--seed", "11"])
            .args(["evolve", "--k", "1", "--g-plus", "1", "--n-theta", "64", "--out", "fits.json"])
            .status()
            .unwrap();
        assert!(status.success());
    }
    assert_eq!(read(&dir_a.join("s.csv")), read(&dir_b.join("s.csv")));
    assert_eq!(read(&dir_a.join("fits.json")), read(&dir_b.join("fits.json")));
}

#[test]
fn config_fields_apply_and_flags_override() {
    let dir = tempdir("config");
    let cfg = dir.join("experiment.json");
    std::fs::write(&cfg, r#"{ "roots": { "n": 2, "lambda": 0.25 } }"#).unwrap();

    let out = dscat()
        .args(["--config", cfg.to_str().unwrap(), "--json", "roots"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["payload"]["spectral"]["regime"], "Threshold");

    // explicit flag wins over the config value
    let out = dscat()
        .args(["--config", cfg.to_str().unwrap(), "--json", "roots", "--lambda", "0"])
        .output()
        .unwrap();
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["payload"]["spectral"]["regime"], "IntegerGap");
}

#[test]
fn config_with_unknown_keys_is_rejected() {
    let dir = tempdir("badcfg");
    let cfg = dir.join("experiment.json");
    std::fs::write(&cfg, r#"{ "roots": { "dimension": 2 } }"#).unwrap();
    let out = dscat().args(["--config", cfg.to_str().unwrap(), "roots"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("config parse error"), "stderr: {err}");
}

#[test]
fn invalid_inputs_exit_nonzero() {
    let out = dscat().args(["roots", "--n", "1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = dscat().args(["verify", "--suite", "bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

fn tempdir(tag: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("dscat_test_{tag}_{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
