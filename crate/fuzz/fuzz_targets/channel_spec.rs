#![no_main]

use libfuzzer_sys::fuzz_target;
use spin_rdp::info::{mutual_information, HOLEVO_SLACK};
use spin_rdp::quantum::{born_joint, QuantumChannelSpec};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(spec) = QuantumChannelSpec::from_json(text) else { return };
    if let Ok(j) = born_joint(&spec) {
        assert!(mutual_information(&j) <= spec.n_spins() as f64 + HOLEVO_SLACK);
    }
});
