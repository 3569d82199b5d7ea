#![no_main]

use libfuzzer_sys::fuzz_target;
use spin_rdp::info::{mutual_information, JointDistribution};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(j) = JointDistribution::from_json(text) {
        let mi = mutual_information(&j);
        assert!(mi.is_finite() && mi >= -1e-9);
        let again = JointDistribution::from_json(&j.to_json()).expect("serialized joint parses");
        assert!(j.max_abs_diff(&again).unwrap() <= 1e-12);
    }
});
