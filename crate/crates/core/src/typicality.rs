//! Strongly (frequency) typical sets.
//!
//! A length-`K` sequence over an alphabet of size `|i|` is strongly typical
//! for `p` when every symbol frequency satisfies `|#i/K − p_i| < ε/|i|`.
//! A pair of sequences is jointly typical for `p_Q` when every pair
//! frequency satisfies `|#(i,j)/K − p_Q(i,j)| < ε/(|i||j|)`. Both
//! inequalities are strict.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::info::{Distribution, JointDistribution, Sampler};
use crate::rng::{derive_seed, stream_rng, tags};

/// Attempts allowed when rejection-sampling a typical input block.
pub const TYPICAL_INPUT_ATTEMPTS: usize = 10_000;

/// A block of symbol indices over an alphabet of known size.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SymbolSequence {
    symbols: Vec<u32>,
    alphabet: usize,
}

impl SymbolSequence {
    pub fn new(symbols: Vec<u32>, alphabet: usize) -> Result<Self> {
        ensure!(alphabet > 0, "alphabet must be nonempty");
        if let Some((k, &s)) = symbols
            .iter()
            .enumerate()
            .find(|(_, &s)| s as usize >= alphabet)
        {
            return Err(Error::invalid(format!(
                "symbol {s} at position {k} is outside an alphabet of {alphabet}"
            )));
        }
        Ok(SymbolSequence { symbols, alphabet })
    }

    /// Draws `len` i.i.d. symbols from `dist`.
    pub fn sample<R: rand::Rng + ?Sized>(dist: &Sampler, len: usize, rng: &mut R) -> Self {
        SymbolSequence {
            symbols: dist.stream(rng).take(len).collect(),
            alphabet: dist.alphabet(),
        }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn symbols(&self) -> &[u32] {
        &self.symbols
    }

    pub fn symbol_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.alphabet];
        for &s in &self.symbols {
            counts[s as usize] += 1;
        }
        counts
    }
}

/// Block length `K` and tolerance `ε`. Alphabet sizes come from the
/// distributions the parameters are used with.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TypicalityParams {
    pub block_len: usize,
    pub epsilon: f64,
}

impl TypicalityParams {
    pub fn new(block_len: usize, epsilon: f64) -> Result<Self> {
        let params = TypicalityParams { block_len, epsilon };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.block_len >= 1, "block length must be at least 1");
        ensure!(
            self.epsilon.is_finite() && self.epsilon > 0.0,
            "epsilon must be positive, got {}",
            self.epsilon
        );
        Ok(())
    }
}

/// `count[i][j]`: positions where the first sequence holds `i` and the second `j`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairCounts {
    pub rows: usize,
    pub cols: usize,
    pub counts: Vec<u64>,
}

impl PairCounts {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        PairCounts {
            rows,
            cols,
            counts: vec![0; rows * cols],
        }
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.counts[i * self.cols + j]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

pub fn empirical_pair_counts(a: &SymbolSequence, b: &SymbolSequence) -> Result<PairCounts> {
    ensure!(
        a.len() == b.len(),
        "sequence lengths differ: {} vs {}",
        a.len(),
        b.len()
    );
    let mut out = PairCounts::zeros(a.alphabet, b.alphabet);
    for (&x, &y) in a.symbols.iter().zip(&b.symbols) {
        out.counts[x as usize * b.alphabet + y as usize] += 1;
    }
    Ok(out)
}

#[inline]
fn within(count: u64, block_len: usize, target: f64, tolerance: f64) -> bool {
    (count as f64 / block_len as f64 - target).abs() < tolerance
}

pub fn is_strongly_typical(
    a: &SymbolSequence,
    p: &Distribution,
    params: &TypicalityParams,
) -> Result<bool> {
    params.validate()?;
    ensure!(
        a.alphabet == p.len(),
        "sequence alphabet {} does not match distribution size {}",
        a.alphabet,
        p.len()
    );
    ensure!(
        a.len() == params.block_len,
        "sequence length {} does not match block length {}",
        a.len(),
        params.block_len
    );
    let tolerance = params.epsilon / p.len() as f64;
    Ok(a
        .symbol_counts()
        .iter()
        .zip(p.probs())
        .all(|(&c, &q)| within(c, params.block_len, q, tolerance)))
}

pub fn is_jointly_typical(
    a: &SymbolSequence,
    b: &SymbolSequence,
    pq: &JointDistribution,
    params: &TypicalityParams,
) -> Result<bool> {
    params.validate()?;
    check_joint_shapes(a, b, pq, params)?;
    let counts = empirical_pair_counts(a, b)?;
    let tolerance = params.epsilon / (pq.rows() * pq.cols()) as f64;
    Ok(counts
        .counts
        .iter()
        .zip(pq.as_slice())
        .all(|(&c, &q)| within(c, params.block_len, q, tolerance)))
}

fn check_joint_shapes(
    a: &SymbolSequence,
    b: &SymbolSequence,
    pq: &JointDistribution,
    params: &TypicalityParams,
) -> Result<()> {
    ensure!(
        a.alphabet == pq.rows() && b.alphabet == pq.cols(),
        "sequence alphabets ({}, {}) do not match the joint's shape ({}, {})",
        a.alphabet,
        b.alphabet,
        pq.rows(),
        pq.cols()
    );
    ensure!(
        a.len() == params.block_len && b.len() == params.block_len,
        "sequence lengths ({}, {}) do not match block length {}",
        a.len(),
        b.len(),
        params.block_len
    );
    Ok(())
}

/// Inclusive range of counts satisfying the strict frequency condition for
/// one cell. Empty when `lo > hi`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CountWindow {
    pub lo: u64,
    pub hi: u64,
}

impl CountWindow {
    fn for_cell(block_len: usize, target: f64, tolerance: f64) -> Self {
        let k = block_len as u64;
        let ok = |c: u64| within(c, block_len, target, tolerance);
        let nearest = ((target * block_len as f64).round().max(0.0) as u64).min(k);
        let Some(seed) = [nearest, nearest.saturating_sub(1), (nearest + 1).min(k)]
            .into_iter()
            .find(|&c| ok(c))
        else {
            return CountWindow { lo: 1, hi: 0 };
        };
        let guess_lo = ((target - tolerance) * block_len as f64).floor().max(0.0) as u64;
        let guess_hi = (((target + tolerance) * block_len as f64).ceil().max(0.0) as u64).min(k);
        let mut lo = guess_lo.clamp(0, seed);
        while !ok(lo) {
            lo += 1;
        }
        while lo > 0 && ok(lo - 1) {
            lo -= 1;
        }
        let mut hi = guess_hi.clamp(seed, k);
        while !ok(hi) {
            hi -= 1;
        }
        while hi < k && ok(hi + 1) {
            hi += 1;
        }
        CountWindow { lo, hi }
    }

    #[inline]
    pub fn contains(&self, c: u64) -> bool {
        self.lo <= c && c <= self.hi
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi
    }
}

/// The jointly typical set for `(p_Q, K, ε)` compiled to per-cell count windows.
#[derive(Clone, Debug)]
pub struct JointTypicalSet {
    rows: usize,
    cols: usize,
    block_len: usize,
    windows: Vec<CountWindow>,
}

impl JointTypicalSet {
    pub fn new(pq: &JointDistribution, params: &TypicalityParams) -> Result<Self> {
        params.validate()?;
        let tolerance = params.epsilon / (pq.rows() * pq.cols()) as f64;
        Ok(JointTypicalSet {
            rows: pq.rows(),
            cols: pq.cols(),
            block_len: params.block_len,
            windows: pq
                .as_slice()
                .iter()
                .map(|&q| CountWindow::for_cell(params.block_len, q, tolerance))
                .collect(),
        })
    }

    pub fn windows(&self) -> &[CountWindow] {
        &self.windows
    }

    /// True when some cell admits no count at all, so no pair can be typical.
    pub fn is_empty(&self) -> bool {
        self.windows.iter().any(|w| w.is_empty())
    }

    /// True when some output block is jointly typical with an input having
    /// these symbol counts: each row count must lie between the sums of that
    /// row's window bounds. Exact, since the output is unconstrained.
    pub fn admits_input_counts(&self, counts: &[u64]) -> bool {
        counts.len() == self.rows
            && counts.iter().enumerate().all(|(i, &n)| {
                let row = &self.windows[i * self.cols..(i + 1) * self.cols];
                let lo: u64 = row.iter().map(|w| w.lo).sum();
                let hi: u64 = row.iter().map(|w| w.hi).sum();
                lo <= n && n <= hi
            })
    }

    pub fn contains_counts(&self, counts: &PairCounts) -> bool {
        counts.rows == self.rows
            && counts.cols == self.cols
            && counts
                .counts
                .iter()
                .zip(&self.windows)
                .all(|(&c, w)| w.contains(c))
    }

    /// Tests `(input, output)` where `output` is produced lazily one symbol at a
    /// time. Stops drawing as soon as a cell overflows its window; `scratch`
    /// must hold `rows * cols` counters.
    #[inline]
    pub fn matches_streamed<F>(&self, input: &[u32], scratch: &mut [u64], mut next: F) -> bool
    where
        F: FnMut() -> u32,
    {
        debug_assert_eq!(input.len(), self.block_len);
        scratch.iter_mut().for_each(|c| *c = 0);
        for &x in input {
            let cell = x as usize * self.cols + next() as usize;
            scratch[cell] += 1;
            if scratch[cell] > self.windows[cell].hi {
                return false;
            }
        }
        scratch
            .iter()
            .zip(&self.windows)
            .all(|(&c, w)| c >= w.lo)
    }
}

/// Hits and trials from [`joint_typicality_hits`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub hits: u64,
    pub trials: u64,
}

impl RateEstimate {
    pub fn rate(&self) -> f64 {
        self.hits as f64 / self.trials as f64
    }

    /// `log2(rate) / K`; `-inf` when nothing hit.
    pub fn log2_rate_per_symbol(&self, block_len: usize) -> f64 {
        self.rate().log2() / block_len as f64
    }
}

/// Rejection-samples an input block from the row marginal of `pq` until it is
/// strongly typical.
pub fn sample_typical_input(
    pq: &JointDistribution,
    params: &TypicalityParams,
    seed: u64,
) -> Result<SymbolSequence> {
    params.validate()?;
    let marginal = pq.row_marginal();
    let sampler = marginal.sampler();
    let mut rng = stream_rng(derive_seed(seed, tags::INPUT, 0), 0);
    for _ in 0..TYPICAL_INPUT_ATTEMPTS {
        let a = SymbolSequence::sample(&sampler, params.block_len, &mut rng);
        if is_strongly_typical(&a, &marginal, params)? {
            return Ok(a);
        }
    }
    Err(Error::invalid(format!(
        "no strongly typical input found in {TYPICAL_INPUT_ATTEMPTS} draws (K = {}, ε = {})",
        params.block_len, params.epsilon
    )))
}

/// Draws one typical input block, pairs it with `trials` independent output
/// blocks drawn i.i.d. from the column marginal of `pq`, and counts the
/// jointly typical pairs. Deterministic in `seed` for any thread count.
pub fn joint_typicality_hits(
    pq: &JointDistribution,
    params: &TypicalityParams,
    trials: u64,
    seed: u64,
) -> Result<RateEstimate> {
    ensure!(trials >= 1, "need at least one trial");
    let input = sample_typical_input(pq, params, seed)?;
    let set = JointTypicalSet::new(pq, params)?;
    let sampler = pq.col_marginal().sampler();
    let trial_seed = derive_seed(seed, tags::TRIAL, 0);
    let cells = pq.rows() * pq.cols();
    let hits = (0..trials)
        .into_par_iter()
        .map_init(
            || vec![0u64; cells],
            |scratch, t| {
                let mut rng = stream_rng(trial_seed, t);
                let mut stream = sampler.stream(&mut rng);
                set.matches_streamed(input.symbols(), scratch, || stream.next_symbol()) as u64
            },
        )
        .sum();
    Ok(RateEstimate { hits, trials })
}

/// Fraction of random output blocks jointly typical with a fixed typical
/// input block; approximately `2^{-K I}` for large `K`.
pub fn joint_typicality_rate(
    pq: &JointDistribution,
    params: &TypicalityParams,
    trials: u64,
    seed: u64,
) -> Result<f64> {
    Ok(joint_typicality_hits(pq, params, trials, seed)?.rate())
}
