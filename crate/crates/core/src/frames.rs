//! Resource arithmetic for reference frames built from spins.
//!
//! With a shared frame, `N` spins (or bits) point a direction with fidelity
//! `1 − c/2^N`; without one, only `1 − c/N²`. Matching the first with the
//! second takes about `2^{N/2}` spins, which bounds the size of any frame
//! that behaves classically.

use std::f64::consts::PI;

use crate::error::{ensure, Result};

/// Largest `N` for which `⌈2^{N/2}⌉` fits in a `u128`.
pub const MAX_FRAME_SPINS: u32 = 254;

fn ceil_pow2_half(n: u32) -> u128 {
    if n.is_multiple_of(2) {
        1u128 << (n / 2)
    } else {
        // √(2^n) is irrational for odd n, so the integer square root is never exact
        (1u128 << n).isqrt() + 1
    }
}

/// Minimum frame size `M ≥ 2^{N/2} − N`, as `⌈2^{N/2}⌉ − N` floored at zero.
pub fn frame_size_lower_bound(n_spins: u32) -> Result<u128> {
    ensure!(
        (1..=MAX_FRAME_SPINS).contains(&n_spins),
        "spin count must be in 1..={MAX_FRAME_SPINS}, got {n_spins}"
    );
    Ok(ceil_pow2_half(n_spins).saturating_sub(n_spins as u128))
}

/// Spins needed without a shared frame to match `N` spins with one, `2^{N/2}`.
pub fn spins_without_frame(n_spins: u32) -> f64 {
    (n_spins as f64 / 2.0).exp2()
}

/// Spin count whose total angular momentum `Nħ/2` reaches `ħ/Δθ`: `2/Δθ`.
pub fn spins_for_angle(delta_theta: f64) -> Result<f64> {
    ensure!(
        delta_theta > 0.0 && delta_theta < PI,
        "angle must be in (0, π), got {delta_theta}"
    );
    Ok(2.0 / delta_theta)
}

/// Bits to index equal planar sectors of width `Δθ`: `⌈log2(2π/Δθ)⌉`.
pub fn bits_for_angle(delta_theta: f64) -> Result<u32> {
    ensure!(
        delta_theta > 0.0 && delta_theta < 2.0 * PI,
        "angle must be in (0, 2π), got {delta_theta}"
    );
    let bits = (2.0 * PI / delta_theta).log2();
    let nearest = bits.round();
    let bits = if (bits - nearest).abs() <= 1e-12 * nearest.max(1.0) {
        nearest
    } else {
        bits.ceil()
    };
    Ok(bits as u32)
}

/// `1 − c/2^N`.
pub fn fidelity_with_frame(n: u32, c: f64) -> f64 {
    1.0 - c / (n as f64).exp2()
}

/// `1 − c/N²`.
pub fn fidelity_without_frame(n: u32, c: f64) -> f64 {
    1.0 - c / (n as f64 * n as f64)
}
