#![no_main]

use libfuzzer_sys::fuzz_target;
use spin_rdp::info::Distribution;
use spin_rdp::protocol::{decode, Codebook};

// Layout: seed (8 bytes), index (8), size (8), block length (1), then one
// byte of weight per output symbol.
fuzz_target!(|data: &[u8]| {
    if data.len() < 26 {
        return;
    }
    let word = |i: usize| u64::from_le_bytes(data[i..i + 8].try_into().unwrap());
    let (seed, index, size) = (word(0), word(8), word(16));
    let block_len = data[24] as usize;
    let weights: Vec<f64> = data[25..].iter().take(16).map(|&b| b as f64).collect();
    let total: f64 = weights.iter().sum();
    if total == 0.0 {
        return;
    }
    let Ok(q) = Distribution::new(weights.iter().map(|w| w / total).collect()) else { return };
    let Ok(cb) = Codebook::new(seed, block_len, size, &q) else { return };
    if let Ok(entry) = decode(index, &cb) {
        assert_eq!(entry.len(), block_len);
        for &s in entry.symbols() {
            assert!(q.probs()[s as usize] > 0.0);
        }
        assert_eq!(decode(index, &cb).unwrap(), entry);
    }
});
