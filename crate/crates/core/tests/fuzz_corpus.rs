//! Replays the checked-in fuzz corpus through the parsers.

use std::fs;
use std::path::{Path, PathBuf};

use spin_rdp::directions::DirectionSet;
use spin_rdp::experiment::ExperimentConfig;
use spin_rdp::info::{Distribution, JointDistribution};
use spin_rdp::protocol::{decode, Codebook};
use spin_rdp::quantum::{born_joint, QuantumChannelSpec};

fn corpus(target: &str) -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut files: Vec<PathBuf> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    assert!(!files.is_empty(), "empty corpus for {target}");
    files
}

fn text(path: &Path) -> String {
    fs::read_to_string(path).unwrap()
}

#[test]
fn experiment_config_seeds_parse() {
    for path in corpus("experiment_config") {
        let cfg = ExperimentConfig::from_json(&text(&path)).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(ExperimentConfig::from_json(&cfg.to_json()).unwrap().digest(), cfg.digest());
    }
}

#[test]
fn direction_set_seeds_parse() {
    for path in corpus("direction_set") {
        DirectionSet::from_json(&text(&path)).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    }
}

#[test]
fn joint_distribution_seeds_parse() {
    for path in corpus("joint_distribution") {
        JointDistribution::from_json(&text(&path)).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    }
}

#[test]
fn channel_spec_seeds_parse() {
    for path in corpus("channel_spec") {
        let spec = QuantumChannelSpec::from_json(&text(&path)).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        born_joint(&spec).unwrap();
    }
}

#[test]
fn codebook_seeds_decode_or_reject() {
    let mut decoded = 0;
    for path in corpus("codebook_decode") {
        let data = fs::read(&path).unwrap();
        let word = |i: usize| u64::from_le_bytes(data[i..i + 8].try_into().unwrap());
        let weights: Vec<f64> = data[25..].iter().map(|&b| b as f64).collect();
        let total: f64 = weights.iter().sum();
        let q = Distribution::new(weights.iter().map(|w| w / total).collect()).unwrap();
        let cb = Codebook::new(word(0), data[24] as usize, word(16), &q).unwrap();
        if let Ok(entry) = decode(word(8), &cb) {
            assert_eq!(entry.len(), data[24] as usize);
            decoded += 1;
        }
    }
    assert!(decoded >= 2);
}
