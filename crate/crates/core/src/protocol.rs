//! Remote distribution preparation.
//!
//! Alice and Bob share a table of `T ≈ 2^{K(I+ε)}` output blocks, each `K`
//! symbols drawn i.i.d. from the output marginal of the target joint `p_Q`.
//! Given an input block, Alice sends the 1-based index of the first table
//! entry that is jointly typical with it, or index 1 if there is none. Bob
//! outputs that entry. Per-position pair statistics then approach `p_Q`.
//!
//! The table is never stored: entry `t` is regenerated from counter-mode
//! stream `t` under the table seed, so encoding only pays for the entries it
//! actually inspects (about `2^{K I}` of them).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::directions::{DirectionSet, ScoreFunction};
use crate::error::{ensure, Error, Result};
use crate::info::{mutual_information, Distribution, JointDistribution, Sampler};
use crate::rng::{derive_seed, stream_rng, tags};
use crate::typicality::{
    is_jointly_typical, JointTypicalSet, SymbolSequence, TypicalityParams,
};

pub const MAX_TABLE_LOG2: u32 = 48;
pub const MAX_TABLE_SIZE: u64 = 1 << MAX_TABLE_LOG2;
pub const DEFAULT_SEARCH_CAP: u64 = 1 << 24;

/// Table size `⌈2^{K(I+ε)}⌉`, capped at `2^48`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodebookSize {
    pub entries: u64,
    pub capped: bool,
    /// Uncapped exponent `K(I+ε)`.
    pub log2_entries: f64,
}

impl CodebookSize {
    /// Bits needed to send an index, `⌈log2 T⌉`.
    pub fn index_bits(&self) -> u32 {
        if self.entries <= 1 {
            0
        } else {
            64 - (self.entries - 1).leading_zeros()
        }
    }
}

pub fn codebook_size(mutual_info: f64, block_len: usize, epsilon: f64) -> Result<CodebookSize> {
    ensure!(
        mutual_info.is_finite() && mutual_info >= 0.0,
        "mutual information must be non-negative, got {mutual_info}"
    );
    ensure!(
        epsilon.is_finite() && epsilon >= 0.0,
        "epsilon must be non-negative, got {epsilon}"
    );
    ensure!(block_len >= 1, "block length must be at least 1");
    let mut exponent = block_len as f64 * (mutual_info + epsilon);
    // K(I+ε) that is integral up to rounding gives an exact power of two
    if (exponent - exponent.round()).abs() <= 1e-9 * exponent.max(1.0) {
        exponent = exponent.round();
    }
    if exponent >= MAX_TABLE_LOG2 as f64 {
        return Ok(CodebookSize {
            entries: MAX_TABLE_SIZE,
            capped: exponent > MAX_TABLE_LOG2 as f64,
            log2_entries: exponent,
        });
    }
    Ok(CodebookSize {
        entries: (exponent.exp2().ceil() as u64).max(1),
        capped: false,
        log2_entries: exponent,
    })
}

/// The shared table, addressed by 1-based index.
#[derive(Clone, Debug)]
pub struct Codebook {
    seed: u64,
    block_len: usize,
    size: u64,
    sampler: Sampler,
}

impl Codebook {
    pub fn new(seed: u64, block_len: usize, size: u64, output_marginal: &Distribution) -> Result<Self> {
        ensure!(block_len >= 1, "block length must be at least 1");
        ensure!(
            (1..=MAX_TABLE_SIZE).contains(&size),
            "table size must be in 1..=2^{MAX_TABLE_LOG2}, got {size}"
        );
        Ok(Codebook {
            seed,
            block_len,
            size,
            sampler: output_marginal.sampler(),
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn block_len(&self) -> usize {
        self.block_len
    }

    pub fn size(&self) -> u64 {
        self.size
    }

    pub fn alphabet(&self) -> usize {
        self.sampler.alphabet()
    }

    fn entry_rng(&self, index: u64) -> rand_chacha::ChaCha8Rng {
        stream_rng(self.seed, index)
    }

    /// Entry `index` (1-based).
    pub fn entry(&self, index: u64) -> Result<SymbolSequence> {
        ensure!(
            (1..=self.size).contains(&index),
            "index {index} outside table of {} entries",
            self.size
        );
        let mut rng = self.entry_rng(index);
        Ok(SymbolSequence::sample(&self.sampler, self.block_len, &mut rng))
    }
}

/// Result of scanning the table for an input block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Encoding {
    pub index: u64,
    pub found_typical: bool,
    /// Entries inspected; zero when the input admits no jointly typical output.
    pub scanned: u64,
}

/// The typicality test of one `(p_Q, K, ε)` compiled once for many encodes.
#[derive(Clone, Debug)]
pub struct Encoder {
    rows: usize,
    cols: usize,
    params: TypicalityParams,
    set: JointTypicalSet,
}

impl Encoder {
    pub fn new(pq: &JointDistribution, params: &TypicalityParams) -> Result<Self> {
        Ok(Encoder {
            rows: pq.rows(),
            cols: pq.cols(),
            params: *params,
            set: JointTypicalSet::new(pq, params)?,
        })
    }

    pub fn encode(&self, input: &SymbolSequence, cb: &Codebook, search_cap: u64) -> Result<Encoding> {
        ensure!(
            input.alphabet() == self.rows,
            "input alphabet {} does not match {} input directions",
            input.alphabet(),
            self.rows
        );
        ensure!(
            cb.alphabet() == self.cols,
            "codebook alphabet {} does not match {} guess directions",
            cb.alphabet(),
            self.cols
        );
        ensure!(
            input.len() == self.params.block_len && cb.block_len() == self.params.block_len,
            "block lengths ({}, {}) do not match K = {}",
            input.len(),
            cb.block_len(),
            self.params.block_len
        );
        ensure!(search_cap >= 1, "search cap must be at least 1");
        let limit = search_cap.min(cb.size());
        if self.set.is_empty() || !self.set.admits_input_counts(&input.symbol_counts()) {
            // no entry can match, so a full scan would end in the fallback
            return Ok(Encoding {
                index: 1,
                found_typical: false,
                scanned: 0,
            });
        }
        let mut scratch = vec![0u64; self.rows * self.cols];
        for index in 1..=limit {
            let mut rng = cb.entry_rng(index);
            let mut stream = cb.sampler.stream(&mut rng);
            if self
                .set
                .matches_streamed(input.symbols(), &mut scratch, || stream.next_symbol())
            {
                return Ok(Encoding {
                    index,
                    found_typical: true,
                    scanned: index,
                });
            }
        }
        Ok(Encoding {
            index: 1,
            found_typical: false,
            scanned: limit,
        })
    }
}

/// Index of the first table entry jointly typical with `input`, else `(1, false)`.
pub fn encode(
    input: &SymbolSequence,
    cb: &Codebook,
    pq: &JointDistribution,
    params: &TypicalityParams,
    search_cap: u64,
) -> Result<Encoding> {
    Encoder::new(pq, params)?.encode(input, cb, search_cap)
}

pub fn decode(index: u64, cb: &Codebook) -> Result<SymbolSequence> {
    cb.entry(index)
}

/// One block transmission.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtocolRun {
    pub input: SymbolSequence,
    pub index: u64,
    pub output: SymbolSequence,
    pub found_typical: bool,
    pub scanned: u64,
}

/// A configured protocol instance: target, parameters and table size.
#[derive(Clone, Debug)]
pub struct Protocol {
    pq: JointDistribution,
    params: TypicalityParams,
    encoder: Encoder,
    input_sampler: Sampler,
    output_marginal: Distribution,
    mutual_information: f64,
    table: CodebookSize,
    search_cap: u64,
}

impl Protocol {
    /// Table size from `⌈2^{K(I+ε)}⌉`, search capped at `min(T, 2^24)`.
    pub fn new(pq: &JointDistribution, params: &TypicalityParams) -> Result<Self> {
        let mi = mutual_information(pq).max(0.0);
        let table = codebook_size(mi, params.block_len, params.epsilon)?;
        Protocol::with_table(pq, params, table, DEFAULT_SEARCH_CAP)
    }

    /// Uses an explicit table of `entries` entries.
    pub fn with_table_size(
        pq: &JointDistribution,
        params: &TypicalityParams,
        entries: u64,
        search_cap: u64,
    ) -> Result<Self> {
        ensure!(
            (1..=MAX_TABLE_SIZE).contains(&entries),
            "table size must be in 1..=2^{MAX_TABLE_LOG2}, got {entries}"
        );
        let table = CodebookSize {
            entries,
            capped: false,
            log2_entries: (entries as f64).log2(),
        };
        Protocol::with_table(pq, params, table, search_cap)
    }

    fn with_table(
        pq: &JointDistribution,
        params: &TypicalityParams,
        table: CodebookSize,
        search_cap: u64,
    ) -> Result<Self> {
        params.validate()?;
        ensure!(search_cap >= 1, "search cap must be at least 1");
        Ok(Protocol {
            pq: pq.clone(),
            params: *params,
            encoder: Encoder::new(pq, params)?,
            input_sampler: pq.row_marginal().sampler(),
            output_marginal: pq.col_marginal(),
            mutual_information: mutual_information(pq).max(0.0),
            table,
            search_cap: search_cap.min(table.entries),
        })
    }

    pub fn target(&self) -> &JointDistribution {
        &self.pq
    }

    pub fn params(&self) -> &TypicalityParams {
        &self.params
    }

    pub fn mutual_information(&self) -> f64 {
        self.mutual_information
    }

    pub fn table(&self) -> CodebookSize {
        self.table
    }

    pub fn search_cap(&self) -> u64 {
        self.search_cap
    }

    /// Expected entries scanned per encode is about `2^{K I}`.
    pub fn expected_search_log2(&self) -> f64 {
        self.params.block_len as f64 * self.mutual_information
    }

    /// Conditions under which results may be dominated by fallbacks.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.expected_search_log2() > (self.search_cap as f64).log2() {
            out.push(format!(
                "expected search effort 2^{:.2} exceeds the search cap 2^{:.2}; most runs will fall back to index 1",
                self.expected_search_log2(),
                (self.search_cap as f64).log2()
            ));
        }
        if self.table.capped {
            out.push(format!(
                "table size 2^{:.2} capped at 2^{MAX_TABLE_LOG2}",
                self.table.log2_entries
            ));
        }
        out
    }

    /// Checks that an index fits in the `K·N` bits carried by `n_spins` spins
    /// per position, which requires `ε ≤ N − I`.
    pub fn check_index_budget(&self, n_spins: u32) -> Result<()> {
        let n = n_spins as f64;
        ensure!(
            self.params.epsilon <= n - self.mutual_information + 1e-12,
            "ε = {} exceeds N − I = {}",
            self.params.epsilon,
            n - self.mutual_information
        );
        let budget = self.params.block_len as u64 * n_spins as u64;
        let bits = self.table.index_bits() as u64;
        ensure!(
            bits <= budget,
            "index needs {bits} bits but only {budget} are available"
        );
        Ok(())
    }

    pub fn codebook(&self, seed: u64) -> Codebook {
        Codebook {
            seed,
            block_len: self.params.block_len,
            size: self.table.entries,
            sampler: self.output_marginal.sampler(),
        }
    }

    fn table_seed(master_seed: u64, run: u64, reuse_table: bool) -> u64 {
        if reuse_table {
            derive_seed(master_seed, tags::TABLE, 0)
        } else {
            derive_seed(master_seed, tags::TABLE, run + 1)
        }
    }

    /// Input block for `run`, drawn i.i.d. from the row marginal.
    pub fn input_block(&self, master_seed: u64, run: u64) -> SymbolSequence {
        let mut rng = stream_rng(derive_seed(master_seed, tags::INPUT, 0), run);
        SymbolSequence::sample(&self.input_sampler, self.params.block_len, &mut rng)
    }

    pub fn transmit(&self, input: &SymbolSequence, cb: &Codebook) -> Result<ProtocolRun> {
        let enc = self.encoder.encode(input, cb, self.search_cap)?;
        Ok(ProtocolRun {
            input: input.clone(),
            index: enc.index,
            output: decode(enc.index, cb)?,
            found_typical: enc.found_typical,
            scanned: enc.scanned,
        })
    }

    /// `runs` transmissions of fresh random input blocks. With `reuse_table`
    /// every run shares one table; otherwise each run gets its own.
    pub fn run(&self, runs: u64, master_seed: u64, reuse_table: bool) -> Result<Vec<ProtocolRun>> {
        ensure!(runs >= 1, "need at least one run");
        (0..runs)
            .into_par_iter()
            .map(|r| {
                let cb = self.codebook(Self::table_seed(master_seed, r, reuse_table));
                self.transmit(&self.input_block(master_seed, r), &cb)
            })
            .collect()
    }

    /// Pooled statistics of the same runs as [`Protocol::run`], without
    /// keeping the runs in memory.
    pub fn pooled_statistics(&self, runs: u64, master_seed: u64, reuse_table: bool) -> Result<SingleCopyEstimate> {
        ensure!(runs >= 1, "need at least one run");
        let empty = || Pool::new(self.encoder.rows, self.encoder.cols, self.params.block_len);
        (0..runs)
            .into_par_iter()
            .try_fold(empty, |mut pool, r| {
                let cb = self.codebook(Self::table_seed(master_seed, r, reuse_table));
                pool.add(&self.transmit(&self.input_block(master_seed, r), &cb)?)?;
                Ok::<_, Error>(pool)
            })
            .try_reduce(empty, |a, b| Ok(a.merge(b)))?
            .finish()
    }

    /// Transmits caller-supplied input blocks; run `r` uses the same table as
    /// [`Protocol::run`] would.
    pub fn run_inputs(
        &self,
        inputs: &[SymbolSequence],
        master_seed: u64,
        reuse_table: bool,
    ) -> Result<Vec<ProtocolRun>> {
        inputs
            .par_iter()
            .enumerate()
            .map(|(r, input)| {
                let cb = self.codebook(Self::table_seed(master_seed, r as u64, reuse_table));
                self.transmit(input, &cb)
            })
            .collect()
    }
}

/// Runs the protocol with the default table size and search cap.
pub fn run_protocol(
    pq: &JointDistribution,
    params: &TypicalityParams,
    runs: u64,
    master_seed: u64,
    reuse_table: bool,
) -> Result<Vec<ProtocolRun>> {
    Protocol::new(pq, params)?.run(runs, master_seed, reuse_table)
}

/// Pooled single-copy frequencies with two standard-error estimates per cell.
#[derive(Clone, Debug)]
pub struct SingleCopyEstimate {
    pub joint: JointDistribution,
    /// `sqrt(p(1−p)/n)` over all `n = runs·K` pooled positions.
    pub pooled_sigma: Vec<f64>,
    /// Standard error of the mean of per-run frequencies.
    pub run_sigma: Vec<f64>,
    pub runs: u64,
    pub block_len: usize,
    pub fallback_rate: f64,
    pub mean_index: f64,
}

impl SingleCopyEstimate {
    /// Largest `|p_C − p_Q|` and the pooled sigma of the cell where it occurs.
    pub fn max_error(&self, pq: &JointDistribution) -> Result<(f64, f64)> {
        ensure!(
            pq.rows() == self.joint.rows() && pq.cols() == self.joint.cols(),
            "target shape does not match the estimate"
        );
        Ok(self
            .joint
            .as_slice()
            .iter()
            .zip(pq.as_slice())
            .zip(&self.pooled_sigma)
            .map(|((a, b), &s)| ((a - b).abs(), s))
            .fold((0.0, 0.0), |best, cur| if cur.0 > best.0 { cur } else { best }))
    }
}

/// Integer running sums behind [`SingleCopyEstimate`], so that pooling in
/// any order gives identical results.
#[derive(Clone, Debug)]
struct Pool {
    rows: usize,
    cols: usize,
    block_len: usize,
    counts: Vec<u64>,
    sum_sq: Vec<u128>,
    fallbacks: u64,
    index_sum: u128,
    runs: u64,
}

impl Pool {
    fn new(rows: usize, cols: usize, block_len: usize) -> Self {
        Pool {
            rows,
            cols,
            block_len,
            counts: vec![0; rows * cols],
            sum_sq: vec![0; rows * cols],
            fallbacks: 0,
            index_sum: 0,
            runs: 0,
        }
    }

    fn add(&mut self, run: &ProtocolRun) -> Result<()> {
        ensure!(
            run.input.alphabet() == self.rows
                && run.output.alphabet() == self.cols
                && run.input.len() == self.block_len
                && run.output.len() == self.block_len,
            "run shape does not match the pool"
        );
        let counts = crate::typicality::empirical_pair_counts(&run.input, &run.output)?;
        for (c, (acc, sq)) in counts.counts.iter().zip(self.counts.iter_mut().zip(self.sum_sq.iter_mut())) {
            *acc += c;
            *sq += (*c as u128) * (*c as u128);
        }
        self.fallbacks += (!run.found_typical) as u64;
        self.index_sum += run.index as u128;
        self.runs += 1;
        Ok(())
    }

    fn merge(mut self, other: Pool) -> Pool {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        for (a, b) in self.sum_sq.iter_mut().zip(&other.sum_sq) {
            *a += b;
        }
        self.fallbacks += other.fallbacks;
        self.index_sum += other.index_sum;
        self.runs += other.runs;
        self
    }

    fn finish(self) -> Result<SingleCopyEstimate> {
        ensure!(self.runs >= 1, "no runs to pool");
        let n_runs = self.runs as f64;
        let k = self.block_len as f64;
        let total = n_runs * k;
        let freqs: Vec<f64> = self.counts.iter().map(|&c| c as f64 / total).collect();
        let pooled_sigma = freqs.iter().map(|&p| (p * (1.0 - p) / total).sqrt()).collect();
        let run_sigma = freqs
            .iter()
            .zip(&self.sum_sq)
            .map(|(&mean, &sq)| {
                if self.runs < 2 {
                    return 0.0;
                }
                let mean_sq = sq as f64 / (k * k);
                let var = ((mean_sq - n_runs * mean * mean) / (n_runs - 1.0)).max(0.0);
                (var / n_runs).sqrt()
            })
            .collect();
        Ok(SingleCopyEstimate {
            joint: JointDistribution::new(self.rows, self.cols, freqs)?,
            pooled_sigma,
            run_sigma,
            runs: self.runs,
            block_len: self.block_len,
            fallback_rate: self.fallbacks as f64 / n_runs,
            mean_index: self.index_sum as f64 / n_runs,
        })
    }
}

pub fn single_copy_statistics(runs: &[ProtocolRun]) -> Result<SingleCopyEstimate> {
    ensure!(!runs.is_empty(), "no runs to pool");
    let first = &runs[0];
    ensure!(!first.input.is_empty(), "runs have empty blocks");
    let mut pool = Pool::new(first.input.alphabet(), first.output.alphabet(), first.input.len());
    for run in runs {
        pool.add(run)?;
    }
    pool.finish()
}

/// Classical single-copy joint `p_C`, pooling every position of every run.
pub fn estimate_single_copy_marginals(runs: &[ProtocolRun]) -> Result<JointDistribution> {
    Ok(single_copy_statistics(runs)?.joint)
}

/// Average scores under the target and the simulation, their gap, and the
/// gap bound `ε·f_max`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityGap {
    pub fbar_q: f64,
    pub fbar_c: f64,
    pub gap: f64,
    pub bound: f64,
}

pub fn average_score(
    p: &JointDistribution,
    f: &ScoreFunction,
    inputs: &DirectionSet,
    guesses: &DirectionSet,
) -> Result<f64> {
    ensure!(
        p.rows() == inputs.len() && p.cols() == guesses.len(),
        "joint is {}×{} but there are {} inputs and {} guesses",
        p.rows(),
        p.cols(),
        inputs.len(),
        guesses.len()
    );
    let mut total = 0.0;
    for (i, n) in inputs.iter().enumerate() {
        for (j, m) in guesses.iter().enumerate() {
            total += f.eval(n, m) * p.get(i, j);
        }
    }
    Ok(total)
}

pub fn fidelity_gap(
    pq: &JointDistribution,
    pc: &JointDistribution,
    f: &ScoreFunction,
    inputs: &DirectionSet,
    guesses: &DirectionSet,
    epsilon: f64,
) -> Result<FidelityGap> {
    ensure!(
        pq.rows() == pc.rows() && pq.cols() == pc.cols(),
        "alphabet mismatch: {}×{} vs {}×{}",
        pq.rows(),
        pq.cols(),
        pc.rows(),
        pc.cols()
    );
    f.check_bounded(inputs, guesses)?;
    let fbar_q = average_score(pq, f, inputs, guesses)?;
    let fbar_c = average_score(pc, f, inputs, guesses)?;
    Ok(FidelityGap {
        fbar_q,
        fbar_c,
        gap: (fbar_q - fbar_c).abs(),
        bound: epsilon * f.f_max(),
    })
}

pub const ORACLE_MAX_CELLS: usize = 4;
pub const ORACLE_MAX_BLOCK: usize = 4;
pub const ORACLE_MAX_TABLE: u64 = 6;
pub const ORACLE_MAX_STATES: u64 = 1 << 24;

fn block_symbols(mut id: usize, alphabet: usize, k: usize) -> Vec<u32> {
    let mut out = vec![0u32; k];
    for slot in out.iter_mut() {
        *slot = (id % alphabet) as u32;
        id /= alphabet;
    }
    out
}

/// Exact single-copy joint of the protocol with a fresh `table_size`-entry
/// table, by enumerating every table realization and every input block.
pub fn exact_small_oracle(
    pq: &JointDistribution,
    params: &TypicalityParams,
    table_size: u64,
) -> Result<JointDistribution> {
    params.validate()?;
    let (rows, cols, k) = (pq.rows(), pq.cols(), params.block_len);
    ensure!(
        rows * cols <= ORACLE_MAX_CELLS,
        "oracle limited to {ORACLE_MAX_CELLS} cells, got {rows}×{cols}"
    );
    ensure!(k <= ORACLE_MAX_BLOCK, "oracle limited to K ≤ {ORACLE_MAX_BLOCK}, got {k}");
    ensure!(
        (1..=ORACLE_MAX_TABLE).contains(&table_size),
        "oracle limited to 1 ≤ T ≤ {ORACLE_MAX_TABLE}, got {table_size}"
    );
    let in_blocks = rows.pow(k as u32);
    let out_blocks = cols.pow(k as u32);
    let states = (out_blocks as u64)
        .checked_pow(table_size as u32)
        .and_then(|s| s.checked_mul(in_blocks as u64));
    ensure!(
        states.is_some_and(|s| s <= ORACLE_MAX_STATES),
        "oracle state space exceeds {ORACLE_MAX_STATES}"
    );

    let row_m = pq.row_marginal();
    let col_m = pq.col_marginal();
    let inputs: Vec<SymbolSequence> = (0..in_blocks)
        .map(|id| SymbolSequence::new(block_symbols(id, rows, k), rows))
        .collect::<Result<_>>()?;
    let outputs: Vec<SymbolSequence> = (0..out_blocks)
        .map(|id| SymbolSequence::new(block_symbols(id, cols, k), cols))
        .collect::<Result<_>>()?;
    let weight = |s: &SymbolSequence, d: &Distribution| -> f64 {
        s.symbols().iter().map(|&x| d.get(x as usize)).product()
    };
    let w_in: Vec<f64> = inputs.iter().map(|s| weight(s, &row_m)).collect();
    let w_out: Vec<f64> = outputs.iter().map(|s| weight(s, &col_m)).collect();
    let mut typical = vec![false; in_blocks * out_blocks];
    for (a, x) in inputs.iter().enumerate() {
        for (b, y) in outputs.iter().enumerate() {
            typical[a * out_blocks + b] = is_jointly_typical(x, y, pq, params)?;
        }
    }

    // block_mass[a][b]: probability that input block a is sent and b is output
    let mut block_mass = vec![0.0f64; in_blocks * out_blocks];
    let t = table_size as usize;
    let mut table = vec![0usize; t];
    loop {
        let w_table: f64 = table.iter().map(|&b| w_out[b]).product();
        if w_table > 0.0 {
            for a in 0..in_blocks {
                let chosen = table
                    .iter()
                    .copied()
                    .find(|&b| typical[a * out_blocks + b])
                    .unwrap_or(table[0]);
                block_mass[a * out_blocks + chosen] += w_table * w_in[a];
            }
        }
        // odometer over table realizations
        let mut pos = 0;
        while pos < t {
            table[pos] += 1;
            if table[pos] < out_blocks {
                break;
            }
            table[pos] = 0;
            pos += 1;
        }
        if pos == t {
            break;
        }
    }

    let mut joint = vec![0.0f64; rows * cols];
    for (a, x) in inputs.iter().enumerate() {
        for (b, y) in outputs.iter().enumerate() {
            let m = block_mass[a * out_blocks + b];
            if m == 0.0 {
                continue;
            }
            for (&i, &j) in x.symbols().iter().zip(y.symbols()) {
                joint[i as usize * cols + j as usize] += m / k as f64;
            }
        }
    }
    let total: f64 = joint.iter().sum();
    JointDistribution::new(rows, cols, joint.iter().map(|p| p / total).collect())
}
