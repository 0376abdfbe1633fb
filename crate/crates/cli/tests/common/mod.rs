#![allow(dead_code)]

use std::path::PathBuf;

use dlgibbs_cli::{parse_config, ExperimentConfig};

pub fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn config_path(name: &str) -> PathBuf {
    repo_root().join("configs").join(format!("{name}.toml"))
}

pub fn load(name: &str) -> ExperimentConfig {
    let text = std::fs::read_to_string(config_path(name)).unwrap();
    parse_config(&text).unwrap()
}

/// Every shipped config, by file stem.
pub fn all_configs() -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(repo_root().join("configs"))
        .unwrap()
        .filter_map(|e| {
            let p = e.unwrap().path();
            (p.extension()? == "toml").then(|| p.file_stem().unwrap().to_string_lossy().into_owned())
        })
        .collect();
    names.sort();
    names
}

pub fn golden(name: &str) -> String {
    std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)).unwrap()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-10 + 1e-9 * b.abs()
}

/// Header and column lines must match exactly; numeric cells to 1e-9
/// relative, other cells exactly. Floating-point kernels may round
/// differently on other CPUs, so bytes are only compared run-to-run.
pub fn assert_csv_matches(actual: &str, expected: &str) {
    let a: Vec<&str> = actual.lines().collect();
    let e: Vec<&str> = expected.lines().collect();
    assert_eq!(a.len(), e.len(), "row count");
    assert_eq!(a[0], e[0], "header comment");
    assert_eq!(a[1], e[1], "columns");
    for (i, (ra, re)) in a.iter().zip(&e).enumerate().skip(2) {
        let ca: Vec<&str> = ra.split(',').collect();
        let ce: Vec<&str> = re.split(',').collect();
        assert_eq!(ca.len(), ce.len(), "width at line {}", i + 1);
        for (x, y) in ca.iter().zip(&ce) {
            match (x.parse::<f64>(), y.parse::<f64>()) {
                (Ok(x), Ok(y)) => assert!(close(x, y), "line {}: {x} vs {y}", i + 1),
                _ => assert_eq!(x, y, "line {}", i + 1),
            }
        }
    }
}

/// Recursive numeric comparison of JSON values with the same tolerance.
pub fn assert_json_matches(actual: &serde_json::Value, expected: &serde_json::Value, path: &str) {
    use serde_json::Value::*;
    match (actual, expected) {
        (Number(a), Number(b)) => {
            let (a, b) = (a.as_f64().unwrap(), b.as_f64().unwrap());
            assert!(close(a, b), "{path}: {a} vs {b}");
        }
        (Object(a), Object(b)) => {
            let ka: Vec<_> = a.keys().collect();
            let kb: Vec<_> = b.keys().collect();
            assert_eq!(ka, kb, "{path}: keys");
            for (k, v) in a {
                assert_json_matches(v, &b[k], &format!("{path}.{k}"));
            }
        }
        (Array(a), Array(b)) => {
            assert_eq!(a.len(), b.len(), "{path}: length");
            for (i, (x, y)) in a.iter().zip(b).enumerate() {
                assert_json_matches(x, y, &format!("{path}[{i}]"));
            }
        }
        (a, b) => assert_eq!(a, b, "{path}"),
    }
}
