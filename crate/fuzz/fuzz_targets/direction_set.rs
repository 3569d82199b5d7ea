#![no_main]

use libfuzzer_sys::fuzz_target;
use spin_rdp::directions::DirectionSet;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(set) = DirectionSet::from_json(text) {
        let again = DirectionSet::from_json(&set.to_json()).expect("serialized set parses");
        assert_eq!(set.len(), again.len());
    }
});
