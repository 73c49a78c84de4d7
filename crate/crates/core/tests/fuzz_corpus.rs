//! Replays the fuzz seed corpora, and every truncation of each seed, through
//! the same round-trip bodies as the fuzz targets.

use std::path::PathBuf;

use blowup_core::config::{LoadedConfig, RunConfig};
use blowup_core::field::{ComplexField, Grid};
use blowup_core::solver::StepMonitor;

fn corpus(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target);
    let mut seeds: Vec<_> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|entry| {
            let path = entry.unwrap().path();
            (
                path.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&path).unwrap(),
            )
        })
        .collect();
    seeds.sort();
    assert!(!seeds.is_empty(), "empty corpus for {target}");
    seeds
}

fn truncations(data: &[u8]) -> impl Iterator<Item = &[u8]> {
    let step = (data.len() / 64).max(1);
    (0..=data.len()).step_by(step).map(move |n| &data[..n])
}

fn config_body(data: &[u8]) -> bool {
    let Ok(text) = std::str::from_utf8(data) else {
        return false;
    };
    match LoadedConfig::parse(text) {
        Ok(loaded) => {
            let again = RunConfig::from_toml(&loaded.config.to_toml()).unwrap();
            assert_eq!(again, loaded.config);
            true
        }
        Err(_) => false,
    }
}

fn monitor_body(data: &[u8]) -> bool {
    let Ok(text) = std::str::from_utf8(data) else {
        return false;
    };
    match StepMonitor::from_csv(text) {
        Ok(m) => {
            let again = StepMonitor::from_csv(&m.to_csv()).unwrap();
            assert_eq!(again.records.len(), m.records.len());
            true
        }
        Err(_) => false,
    }
}

fn snapshot_body(data: &[u8]) -> bool {
    let Some((&shape, rest)) = data.split_first() else {
        return false;
    };
    let grid = Grid::new(
        1 + (shape % 3) as usize,
        2.0,
        if shape & 0x10 == 0 { 8 } else { 16 },
    )
    .unwrap();
    let Ok(text) = std::str::from_utf8(rest) else {
        return false;
    };
    match ComplexField::from_csv(&grid, text) {
        Ok(f) => {
            assert_eq!(ComplexField::from_csv(&grid, &f.to_csv()).unwrap(), f);
            true
        }
        Err(_) => false,
    }
}

fn replay(target: &str, body: fn(&[u8]) -> bool, expect_ok: &[&str]) {
    for (name, data) in corpus(target) {
        let ok = body(&data);
        assert_eq!(ok, expect_ok.contains(&name.as_str()), "{target}/{name}");
        for prefix in truncations(&data) {
            body(prefix);
        }
    }
}

#[test]
fn config_corpus() {
    replay(
        "config",
        config_body,
        &[
            "default.toml",
            "empty.toml",
            "power_law_k8.toml",
            "simulate_forward.toml",
            "two_dim.toml",
            "two_point.toml",
        ],
    );
}

#[test]
fn monitor_corpus() {
    replay(
        "monitor_csv",
        monitor_body,
        &["backward.csv", "forward.csv", "header_only.csv"],
    );
}

#[test]
fn snapshot_corpus() {
    replay(
        "field_snapshot",
        snapshot_body,
        &["line16", "line8", "plane8"],
    );
}
