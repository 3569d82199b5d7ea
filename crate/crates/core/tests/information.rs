//! Information measures and typicality against independent oracles.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{Binomial, Discrete};

use spin_rdp::info::{
    channel_capacity, conditional_entropy, entropy, mutual_information,
    mutual_information_from_entropies, Distribution, JointDistribution,
};
use spin_rdp::typicality::{
    is_jointly_typical, is_strongly_typical, joint_typicality_rate, SymbolSequence, TypicalityParams,
};

fn normalized(weights: Vec<f64>) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    weights.iter().map(|w| w / total).collect()
}

/// Weights with occasional exact zeros and at least one positive entry.
fn weights(len: impl Into<proptest::collection::SizeRange>) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(prop_oneof![1 => Just(0.0), 4 => 0.001f64..1.0], len)
        .prop_filter("some mass", |w| w.iter().any(|&x| x > 0.0))
}

fn joint() -> impl Strategy<Value = JointDistribution> {
    (1usize..=5, 1usize..=5).prop_flat_map(|(r, c)| {
        weights(r * c).prop_map(move |w| JointDistribution::new(r, c, normalized(w)).unwrap())
    })
}

/// Stochastic rows with strictly positive entries.
fn channel() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (2usize..=4, 2usize..=4).prop_flat_map(|(r, c)| {
        proptest::collection::vec(proptest::collection::vec(0.01f64..1.0, c), r)
            .prop_map(|rows| rows.into_iter().map(normalized).collect())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn entropy_within_support_bounds(w in weights(1..=16)) {
        let d = Distribution::new(normalized(w)).unwrap();
        let support = d.probs().iter().filter(|&&p| p > 0.0).count() as f64;
        let h = entropy(&d);
        prop_assert!(h >= -1e-12);
        prop_assert!(h <= support.log2() + 1e-12);
    }

    #[test]
    fn mutual_information_bounds(j in joint()) {
        let mi = mutual_information(&j);
        let hr = entropy(&j.row_marginal());
        let hc = entropy(&j.col_marginal());
        prop_assert!(mi >= -1e-12);
        prop_assert!(mi <= hr.min(hc) + 1e-12);
        prop_assert!((mi - mutual_information_from_entropies(&j)).abs() <= 1e-10);
        prop_assert!((conditional_entropy(&j) - (hc - mi)).abs() <= 1e-10);
    }

    #[test]
    fn capacity_dominates_uniform_input(ch in channel()) {
        // near-degenerate rows converge sublinearly, so stay well above 1e-9
        let tol = 1e-7;
        let cap = channel_capacity(&ch, tol).unwrap();
        let uniform = Distribution::uniform(ch.len()).unwrap();
        let at_uniform = mutual_information(&JointDistribution::from_conditional(&uniform, &ch).unwrap());
        prop_assert!(cap.capacity >= at_uniform - tol);
        prop_assert!(cap.upper_bound >= cap.capacity - 1e-12);
        prop_assert!(cap.upper_bound - cap.capacity <= tol);
        let at_optimum = mutual_information(&JointDistribution::from_conditional(&cap.input, &ch).unwrap());
        prop_assert!((at_optimum - cap.capacity).abs() <= 1e-12);
    }

    #[test]
    fn strong_typicality_monotone_in_epsilon(
        symbols in proptest::collection::vec(0u32..3, 1..60),
        w in proptest::collection::vec(0.05f64..1.0, 3),
        eps in 0.01f64..1.0,
        extra in 0.0f64..1.0,
    ) {
        let p = Distribution::new(normalized(w)).unwrap();
        let a = SymbolSequence::new(symbols.clone(), 3).unwrap();
        let tight = TypicalityParams::new(symbols.len(), eps).unwrap();
        let loose = TypicalityParams::new(symbols.len(), eps + extra).unwrap();
        if is_strongly_typical(&a, &p, &tight).unwrap() {
            prop_assert!(is_strongly_typical(&a, &p, &loose).unwrap());
        }
    }

    #[test]
    fn joint_typicality_monotone_in_epsilon(
        pairs in proptest::collection::vec((0u32..2, 0u32..3), 1..60),
        w in proptest::collection::vec(0.05f64..1.0, 6),
        eps in 0.01f64..1.0,
        extra in 0.0f64..1.0,
    ) {
        let pq = JointDistribution::new(2, 3, normalized(w)).unwrap();
        let a = SymbolSequence::new(pairs.iter().map(|p| p.0).collect(), 2).unwrap();
        let b = SymbolSequence::new(pairs.iter().map(|p| p.1).collect(), 3).unwrap();
        let tight = TypicalityParams::new(pairs.len(), eps).unwrap();
        let loose = TypicalityParams::new(pairs.len(), eps + extra).unwrap();
        if is_jointly_typical(&a, &b, &pq, &tight).unwrap() {
            prop_assert!(is_jointly_typical(&a, &b, &pq, &loose).unwrap());
        }
    }

    #[test]
    fn joint_typicality_matches_count_definition(
        pairs in proptest::collection::vec((0u32..2, 0u32..2), 1..40),
        w in proptest::collection::vec(0.05f64..1.0, 4),
        eps in 0.01f64..2.0,
    ) {
        let pq = JointDistribution::new(2, 2, normalized(w)).unwrap();
        let k = pairs.len();
        let a = SymbolSequence::new(pairs.iter().map(|p| p.0).collect(), 2).unwrap();
        let b = SymbolSequence::new(pairs.iter().map(|p| p.1).collect(), 2).unwrap();
        let params = TypicalityParams::new(k, eps).unwrap();
        let mut counts = [0usize; 4];
        for &(i, j) in &pairs {
            counts[(i * 2 + j) as usize] += 1;
        }
        let expected = (0..4).all(|c| (counts[c] as f64 / k as f64 - pq.as_slice()[c]).abs() < eps / 4.0);
        prop_assert_eq!(is_jointly_typical(&a, &b, &pq, &params).unwrap(), expected);
    }
}

#[test]
fn closed_form_cases() {
    let h = |p: f64| -p * p.log2() - (1.0 - p) * (1.0 - p).log2();
    assert_eq!(entropy(&Distribution::uniform(8).unwrap()), 3.0);
    assert_eq!(entropy(&Distribution::new(vec![1.0]).unwrap()), 0.0);
    let bsc = JointDistribution::binary_symmetric(0.1).unwrap();
    assert!((mutual_information(&bsc) - (1.0 - h(0.1))).abs() < 1e-12);
    assert!((mutual_information(&bsc) - 0.531004).abs() < 5e-7);
    let product = JointDistribution::product(
        &Distribution::new(vec![0.2, 0.8]).unwrap(),
        &Distribution::new(vec![0.5, 0.3, 0.2]).unwrap(),
    )
    .unwrap();
    assert!(mutual_information(&product).abs() < 1e-12);
}

/// Fraction of length-`K` fair-coin sequences with `|#1/K − 1/2| < ε/2`,
/// summed exactly from the binomial pmf.
fn fair_coin_typical_mass(k: u64, eps: f64) -> f64 {
    let b = Binomial::new(0.5, k).unwrap();
    (0..=k)
        .filter(|&c| (c as f64 / k as f64 - 0.5).abs() < eps / 2.0)
        .map(|c| b.pmf(c))
        .sum()
}

#[test]
fn typical_mass_concentrates_like_the_binomial_oracle() {
    use rand::Rng;
    let eps = 0.05;
    let p = Distribution::uniform(2).unwrap();
    let sampler = p.sampler();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut previous = 0.0;
    for k in [100usize, 500, 1000, 2000, 4000] {
        let exact = fair_coin_typical_mass(k as u64, eps);
        assert!(exact > previous, "K = {k}");
        previous = exact;
        let trials = 4000;
        let params = TypicalityParams::new(k, eps).unwrap();
        let hits = (0..trials)
            .filter(|_| {
                let seed: u64 = rng.random();
                let mut local = ChaCha8Rng::seed_from_u64(seed);
                let a = SymbolSequence::sample(&sampler, k, &mut local);
                is_strongly_typical(&a, &p, &params).unwrap()
            })
            .count();
        let measured = hits as f64 / trials as f64;
        let sigma = (exact * (1.0 - exact) / trials as f64).sqrt();
        assert!(
            (measured - exact).abs() <= 3.0 * sigma + 1e-12,
            "K = {k}: measured {measured}, exact {exact}"
        );
    }
    assert!(previous > 0.95, "mass at K = 4000 is {previous}");
}

#[test]
fn product_target_rate_rises_to_one() {
    let pq = JointDistribution::product(
        &Distribution::new(vec![0.5, 0.5]).unwrap(),
        &Distribution::new(vec![0.3, 0.7]).unwrap(),
    )
    .unwrap();
    let rates: Vec<f64> = [50usize, 400, 3000]
        .iter()
        .map(|&k| joint_typicality_rate(&pq, &TypicalityParams::new(k, 0.2).unwrap(), 2000, 4).unwrap())
        .collect();
    assert!(rates[0] < rates[2], "{rates:?}");
    assert!(rates[2] > 0.95, "{rates:?}");
}

#[test]
fn rate_estimate_is_deterministic() {
    let pq = JointDistribution::binary_symmetric(0.3).unwrap();
    let params = TypicalityParams::new(60, 0.4).unwrap();
    let a = joint_typicality_rate(&pq, &params, 5000, 9).unwrap();
    let b = joint_typicality_rate(&pq, &params, 5000, 9).unwrap();
    assert_eq!(a, b);
    let one = joint_typicality_rate(&pq, &params, 1, 9).unwrap();
    assert!(one == 0.0 || one == 1.0);
}
