//! Born-rule joints, checked against dense matrices built here.

use std::f64::consts::PI;

use nalgebra::{Complex, DMatrix};
use proptest::prelude::*;

use spin_rdp::directions::{Direction, DirectionSet};
use spin_rdp::info::{mutual_information, Distribution, HOLEVO_SLACK};
use spin_rdp::quantum::{
    born_joint, computational_basis_povm, product_state, random_channel_spec, QuantumChannelSpec, C64,
};

fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    DMatrix::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// `σ_z` acting on spin `k` of `n`, spin 0 most significant.
fn sigma_z_on(k: usize, n: usize) -> DMatrix<C64> {
    let z = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]);
    let id = DMatrix::<C64>::identity(2, 2);
    (0..n).fold(DMatrix::identity(1, 1), |acc, s| kron(&acc, if s == k { &z } else { &id }))
}

fn direction() -> impl Strategy<Value = Direction> {
    (-1.0f64..1.0, 0.0f64..2.0 * PI).prop_map(|(z, phi)| Direction::from_spherical(z.acos(), phi))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn product_state_spin_expectations(d in direction()) {
        let s = product_state(&d, 3).unwrap();
        for k in 0..3 {
            let e = s.expectation(&sigma_z_on(k, 3));
            prop_assert!((e.re - d.z()).abs() < 1e-12);
            prop_assert!(e.im.abs() < 1e-12);
        }
    }

    #[test]
    fn born_probabilities_are_valid(n in 1u32..=3, ni in 1usize..=5, nj in 1usize..=5, seed in any::<u64>()) {
        let spec = random_channel_spec(n, (ni, nj), seed).unwrap();
        let j = born_joint(&spec).unwrap();
        let prior = spec.prior().probs();
        for (i, &pi) in prior.iter().enumerate() {
            let mut row = 0.0;
            for g in 0..nj {
                let p = j.get(i, g);
                prop_assert!((0.0..=1.0 + 1e-12).contains(&p));
                row += p;
            }
            prop_assert!((row - pi).abs() < 1e-9);
        }
        prop_assert!(mutual_information(&j) <= n as f64 + HOLEVO_SLACK);
    }

    #[test]
    fn shared_rotation_leaves_statistics_unchanged(
        n in 1u32..=3,
        seed in any::<u64>(),
        axis in direction(),
        angle in 0.0f64..2.0 * PI,
    ) {
        let spec = random_channel_spec(n, (3, 3), seed).unwrap();
        let rotated = spec.rotated(&axis, angle).unwrap();
        let a = born_joint(&spec).unwrap();
        let b = born_joint(&rotated).unwrap();
        prop_assert!(a.max_abs_diff(&b).unwrap() < 1e-9);
    }

    #[test]
    fn random_specs_are_reproducible(seed in any::<u64>()) {
        let a = random_channel_spec(2, (2, 3), seed).unwrap();
        let b = random_channel_spec(2, (2, 3), seed).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn product_state_amplitudes() {
    let up = product_state(&Direction::PLUS_Z, 2).unwrap();
    let amps: Vec<C64> = up.amplitudes().iter().copied().collect();
    assert_eq!(amps, vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
    let x = product_state(&Direction::PLUS_X, 1).unwrap();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    assert!((x.amplitudes()[0] - c(r, 0.0)).norm() < 1e-15);
    assert!((x.amplitudes()[1] - c(r, 0.0)).norm() < 1e-15);
}

fn z_basis_spec(inputs: Vec<Direction>, prior: Vec<f64>) -> QuantumChannelSpec {
    QuantumChannelSpec::with_product_encodings(
        1,
        DirectionSet::new(inputs).unwrap(),
        Distribution::new(prior).unwrap(),
        DirectionSet::new(vec![Direction::PLUS_Z, Direction::MINUS_Z]).unwrap(),
        computational_basis_povm(1).unwrap(),
    )
    .unwrap()
}

#[test]
fn identity_channel_carries_one_bit() {
    let j = born_joint(&z_basis_spec(vec![Direction::PLUS_Z, Direction::MINUS_Z], vec![0.5, 0.5])).unwrap();
    for (p, e) in j.as_slice().iter().zip([0.5, 0.0, 0.0, 0.5]) {
        assert!((p - e).abs() < 1e-15);
    }
    assert!((mutual_information(&j) - 1.0).abs() < 1e-12);
}

#[test]
fn tilted_input_follows_half_angle_law() {
    let j = born_joint(&z_basis_spec(vec![Direction::from_spherical(PI / 3.0, 0.4)], vec![1.0])).unwrap();
    assert!((j.get(0, 0) - 0.75).abs() < 1e-12);
    assert!((j.get(0, 1) - 0.25).abs() < 1e-12);
}

#[test]
fn spec_json_round_trip() {
    let spec = random_channel_spec(2, (3, 2), 5).unwrap();
    let back = QuantumChannelSpec::from_json(&spec.to_json()).unwrap();
    assert!(born_joint(&spec).unwrap().max_abs_diff(&born_joint(&back).unwrap()).unwrap() < 1e-12);
}
