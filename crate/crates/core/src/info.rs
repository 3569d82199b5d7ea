//! Discrete distributions, Shannon entropy, mutual information, and the
//! Blahut–Arimoto channel capacity.
//!
//! All logarithms are base 2 and `0 log 0 = 0`.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};

const SUM_TOLERANCE: f64 = 1e-10;

/// Slack on the Holevo bound `I <= N`.
pub const HOLEVO_SLACK: f64 = 1e-9;

fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        p * p.log2()
    } else {
        0.0
    }
}

fn check_probabilities(probs: &[f64], what: &str) -> Result<()> {
    ensure!(!probs.is_empty(), "{what} is empty");
    for (i, &p) in probs.iter().enumerate() {
        ensure!(
            p.is_finite() && p >= 0.0,
            "{what} entry {i} is {p}, expected a finite non-negative value"
        );
    }
    let total: f64 = probs.iter().sum();
    ensure!(
        (total - 1.0).abs() <= SUM_TOLERANCE,
        "{what} sums to {total}, expected 1"
    );
    Ok(())
}

/// A probability vector over `0..len()`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        check_probabilities(&probs, "distribution")?;
        Ok(Distribution { probs })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        ensure!(n > 0, "uniform distribution needs at least one outcome");
        Ok(Distribution {
            probs: vec![1.0 / n as f64; n],
        })
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, i: usize) -> f64 {
        self.probs[i]
    }

    pub fn sampler(&self) -> Sampler {
        Sampler::new(self)
    }
}

impl TryFrom<Vec<f64>> for Distribution {
    type Error = Error;

    fn try_from(probs: Vec<f64>) -> Result<Self> {
        Distribution::new(probs)
    }
}

impl From<Distribution> for Vec<f64> {
    fn from(d: Distribution) -> Self {
        d.probs
    }
}

/// Bits of the uniform variate `U` compared against the CDF.
const UNIFORM_BITS: u32 = 53;
/// Leading bits of `U` resolved by table lookup.
const LEAD_BITS: u32 = 8;
const TAIL_BITS: u32 = UNIFORM_BITS - LEAD_BITS;
const SPLIT: u32 = u32::MAX;

/// Inverse-CDF sampler over a [`Distribution`]. Zero-probability outcomes are
/// never returned.
///
/// A symbol is the first `k` with `U < ⌈c_k 2^53⌉` for a 53-bit uniform `U`
/// and cumulative sums `c_k`, the same rule as comparing a uniform `f64`
/// against the cumulative sums. [`SymbolStream`] resolves most draws from the
/// leading byte of `U` alone.
#[derive(Clone, Debug)]
pub struct Sampler {
    thresholds: Vec<u64>,
    last_positive: u32,
    lead: Box<[u32; 1 << LEAD_BITS]>,
}

impl Sampler {
    pub fn new(dist: &Distribution) -> Self {
        let scale = (UNIFORM_BITS as f64).exp2();
        let mut acc = 0.0;
        let thresholds = dist
            .probs
            .iter()
            .map(|&p| {
                acc += p;
                (acc * scale).ceil().min(scale) as u64
            })
            .collect();
        let last_positive = dist.probs.iter().rposition(|&p| p > 0.0).unwrap_or(0) as u32;
        let mut sampler = Sampler {
            thresholds,
            last_positive,
            lead: Box::new([SPLIT; 1 << LEAD_BITS]),
        };
        for b in 0..1u64 << LEAD_BITS {
            let first = sampler.symbol_of(b << TAIL_BITS);
            let last = sampler.symbol_of(((b + 1) << TAIL_BITS) - 1);
            if first == last {
                sampler.lead[b as usize] = first;
            }
        }
        sampler
    }

    pub fn alphabet(&self) -> usize {
        self.thresholds.len()
    }

    #[inline]
    fn symbol_of(&self, u: u64) -> u32 {
        self.thresholds
            .iter()
            .position(|&t| u < t)
            .map_or(self.last_positive, |k| k as u32)
    }

    /// One draw using 53 fresh bits.
    #[inline]
    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> u32 {
        self.symbol_of(rng.next_u64() >> (64 - UNIFORM_BITS))
    }

    /// Consecutive draws that share each 64-bit word of `rng` output.
    pub fn stream<'a, R: RngCore + ?Sized>(&'a self, rng: &'a mut R) -> SymbolStream<'a, R> {
        SymbolStream {
            sampler: self,
            rng,
            buffer: 0,
            left: 0,
        }
    }
}

/// Draws from a [`Sampler`], eight leading bytes per `u64`.
pub struct SymbolStream<'a, R: RngCore + ?Sized> {
    sampler: &'a Sampler,
    rng: &'a mut R,
    buffer: u64,
    left: u32,
}

impl<R: RngCore + ?Sized> SymbolStream<'_, R> {
    #[inline]
    pub fn next_symbol(&mut self) -> u32 {
        if self.left == 0 {
            self.buffer = self.rng.next_u64();
            self.left = 64 / LEAD_BITS;
        }
        let lead = self.buffer & ((1 << LEAD_BITS) - 1);
        self.buffer >>= LEAD_BITS;
        self.left -= 1;
        let s = self.sampler.lead[lead as usize];
        if s != SPLIT {
            return s;
        }
        let tail = self.rng.next_u64() >> (64 - TAIL_BITS);
        self.sampler.symbol_of(lead << TAIL_BITS | tail)
    }
}

impl<R: RngCore + ?Sized> Iterator for SymbolStream<'_, R> {
    type Item = u32;

    fn next(&mut self) -> Option<u32> {
        Some(self.next_symbol())
    }
}

/// Joint probabilities `p[i][j]` over input index `i` and output index `j`,
/// with cached marginals.
#[derive(Clone, Debug, PartialEq)]
pub struct JointDistribution {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    row_marginal: Vec<f64>,
    col_marginal: Vec<f64>,
    row_labels: Vec<String>,
    col_labels: Vec<String>,
}

impl JointDistribution {
    /// Row-major `rows × cols` joint.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        ensure!(rows > 0 && cols > 0, "joint distribution needs a nonempty alphabet");
        ensure!(
            data.len() == rows * cols,
            "joint distribution has {} entries, expected {rows}×{cols}",
            data.len()
        );
        check_probabilities(&data, "joint distribution")?;
        let mut row_marginal = vec![0.0; rows];
        let mut col_marginal = vec![0.0; cols];
        for i in 0..rows {
            for j in 0..cols {
                let p = data[i * cols + j];
                row_marginal[i] += p;
                col_marginal[j] += p;
            }
        }
        Ok(JointDistribution {
            rows,
            cols,
            data,
            row_marginal,
            col_marginal,
            row_labels: (0..rows).map(|i| i.to_string()).collect(),
            col_labels: (0..cols).map(|j| j.to_string()).collect(),
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        ensure!(!rows.is_empty(), "joint distribution has no rows");
        let cols = rows[0].len();
        ensure!(
            rows.iter().all(|r| r.len() == cols),
            "joint distribution rows have unequal lengths"
        );
        JointDistribution::new(rows.len(), cols, rows.concat())
    }

    /// `p(i, j) = prior(i) · conditional[i][j]`.
    pub fn from_conditional(prior: &Distribution, conditional: &[Vec<f64>]) -> Result<Self> {
        check_stochastic(conditional)?;
        ensure!(
            conditional.len() == prior.len(),
            "prior has {} entries but the channel has {} rows",
            prior.len(),
            conditional.len()
        );
        let cols = conditional[0].len();
        let data = conditional
            .iter()
            .zip(prior.probs())
            .flat_map(|(row, &p)| row.iter().map(move |&w| p * w))
            .collect();
        JointDistribution::new(prior.len(), cols, data)
    }

    pub fn product(p: &Distribution, q: &Distribution) -> Result<Self> {
        let data = p
            .probs()
            .iter()
            .flat_map(|&a| q.probs().iter().map(move |&b| a * b))
            .collect();
        JointDistribution::new(p.len(), q.len(), data)
    }

    /// Uniform binary input through a binary symmetric channel.
    pub fn binary_symmetric(flip: f64) -> Result<Self> {
        ensure!(
            (0.0..=1.0).contains(&flip),
            "flip probability must be in [0, 1], got {flip}"
        );
        JointDistribution::from_conditional(
            &Distribution::uniform(2)?,
            &binary_symmetric_channel(flip),
        )
    }

    pub fn with_labels(mut self, row_labels: Vec<String>, col_labels: Vec<String>) -> Result<Self> {
        ensure!(
            row_labels.len() == self.rows && col_labels.len() == self.cols,
            "label counts ({}, {}) do not match shape ({}, {})",
            row_labels.len(),
            col_labels.len(),
            self.rows,
            self.cols
        );
        self.row_labels = row_labels;
        self.col_labels = col_labels;
        Ok(self)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row_marginal(&self) -> Distribution {
        Distribution {
            probs: self.row_marginal.clone(),
        }
    }

    pub fn col_marginal(&self) -> Distribution {
        Distribution {
            probs: self.col_marginal.clone(),
        }
    }

    pub fn row_labels(&self) -> &[String] {
        &self.row_labels
    }

    pub fn col_labels(&self) -> &[String] {
        &self.col_labels
    }

    /// `p(j | i)`; rows with zero mass come back uniform.
    pub fn conditional(&self) -> Vec<Vec<f64>> {
        (0..self.rows)
            .map(|i| {
                let pi = self.row_marginal[i];
                (0..self.cols)
                    .map(|j| {
                        if pi > 0.0 {
                            self.get(i, j) / pi
                        } else {
                            1.0 / self.cols as f64
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// Largest entrywise absolute difference.
    pub fn max_abs_diff(&self, other: &JointDistribution) -> Result<f64> {
        ensure!(
            self.rows == other.rows && self.cols == other.cols,
            "shape mismatch: {}×{} vs {}×{}",
            self.rows,
            self.cols,
            other.rows,
            other.cols
        );
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: JointFile = serde_json::from_str(text)?;
        file.try_into()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&JointFile::from(self)).expect("joint distributions always serialize")
    }
}

/// On-disk form: `{"rows": [...], "cols": [...], "p": [[...], ...]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointFile {
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    pub p: Vec<Vec<f64>>,
}

impl TryFrom<JointFile> for JointDistribution {
    type Error = Error;

    fn try_from(file: JointFile) -> Result<Self> {
        ensure!(
            file.p.len() == file.rows.len(),
            "{} row labels for {} matrix rows",
            file.rows.len(),
            file.p.len()
        );
        ensure!(
            file.p.iter().all(|r| r.len() == file.cols.len()),
            "matrix rows must each have {} entries",
            file.cols.len()
        );
        JointDistribution::from_rows(&file.p)?.with_labels(file.rows, file.cols)
    }
}

impl From<&JointDistribution> for JointFile {
    fn from(j: &JointDistribution) -> Self {
        JointFile {
            rows: j.row_labels.clone(),
            cols: j.col_labels.clone(),
            p: j.data.chunks(j.cols).map(|r| r.to_vec()).collect(),
        }
    }
}

impl Serialize for JointDistribution {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        JointFile::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for JointDistribution {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        JointFile::deserialize(d)?
            .try_into()
            .map_err(serde::de::Error::custom)
    }
}

pub fn binary_symmetric_channel(flip: f64) -> Vec<Vec<f64>> {
    vec![vec![1.0 - flip, flip], vec![flip, 1.0 - flip]]
}

pub fn binary_entropy(p: f64) -> f64 {
    -plogp(p) - plogp(1.0 - p)
}

/// Shannon entropy in bits.
pub fn entropy(p: &Distribution) -> f64 {
    -p.probs.iter().map(|&x| plogp(x)).sum::<f64>()
}

/// `H(m | n)`, skipping zero-mass rows.
pub fn conditional_entropy(j: &JointDistribution) -> f64 {
    let mut h = 0.0;
    for i in 0..j.rows {
        let pi = j.row_marginal[i];
        if pi <= 0.0 {
            continue;
        }
        for jj in 0..j.cols {
            let p = j.get(i, jj);
            if p > 0.0 {
                h -= p * (p / pi).log2();
            }
        }
    }
    h
}

/// `Σ p(i,j) log [p(i,j) / (p(i) p(j))]` in bits.
pub fn mutual_information(j: &JointDistribution) -> f64 {
    let mut total = 0.0;
    for i in 0..j.rows {
        for jj in 0..j.cols {
            let p = j.get(i, jj);
            if p > 0.0 {
                // dividing in two steps keeps subnormal marginals finite
                total += p * (p / j.row_marginal[i] / j.col_marginal[jj]).log2();
            }
        }
    }
    total
}

/// `H(m) − H(m | n)`, the entropy-difference form of [`mutual_information`].
pub fn mutual_information_from_entropies(j: &JointDistribution) -> f64 {
    entropy(&j.col_marginal()) - conditional_entropy(j)
}

/// Whether `j` respects the Holevo bound for `n_spins` qubits.
pub fn holevo_check(j: &JointDistribution, n_spins: u32) -> bool {
    mutual_information(j) <= n_spins as f64 + HOLEVO_SLACK
}

fn check_stochastic(conditional: &[Vec<f64>]) -> Result<()> {
    ensure!(!conditional.is_empty(), "channel has no rows");
    let cols = conditional[0].len();
    for (i, row) in conditional.iter().enumerate() {
        ensure!(
            row.len() == cols,
            "channel row {i} has {} entries, expected {cols}",
            row.len()
        );
        check_probabilities(row, &format!("channel row {i}"))?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Capacity {
    /// Mutual information at the returned input; within `tolerance` of capacity.
    pub capacity: f64,
    /// Final Blahut–Arimoto upper bound `max_i D(W_i || q)`.
    pub upper_bound: f64,
    pub input: Distribution,
    pub iterations: usize,
}

pub const CAPACITY_MAX_ITERATIONS: usize = 1_000_000;

/// Capacity of the discrete memoryless channel `conditional[i][j] = p(j | i)`
/// by Blahut–Arimoto from the uniform input. Stops once the upper and lower
/// capacity bounds are closer than `tolerance`.
pub fn channel_capacity(conditional: &[Vec<f64>], tolerance: f64) -> Result<Capacity> {
    check_stochastic(conditional)?;
    ensure!(
        tolerance.is_finite() && tolerance > 0.0,
        "tolerance must be positive, got {tolerance}"
    );
    let inputs = conditional.len();
    let outputs = conditional[0].len();
    let mut p = vec![1.0 / inputs as f64; inputs];
    let mut q = vec![0.0; outputs];
    let mut d = vec![0.0; inputs];
    let mut gap = f64::INFINITY;

    for iteration in 0..CAPACITY_MAX_ITERATIONS {
        q.iter_mut().for_each(|x| *x = 0.0);
        for (row, &pi) in conditional.iter().zip(&p) {
            for (qj, &w) in q.iter_mut().zip(row) {
                *qj += pi * w;
            }
        }
        for (di, row) in d.iter_mut().zip(conditional) {
            *di = row
                .iter()
                .zip(&q)
                .filter(|(&w, &qj)| w > 0.0 && qj > 0.0)
                .map(|(&w, &qj)| w * (w / qj).log2())
                .sum();
        }
        let weights: Vec<f64> = p.iter().zip(&d).map(|(&pi, &di)| pi * di.exp2()).collect();
        let norm: f64 = weights.iter().sum();
        let lower = norm.log2();
        let upper = d
            .iter()
            .zip(&p)
            .filter(|(_, &pi)| pi > 0.0)
            .map(|(&di, _)| di)
            .fold(f64::NEG_INFINITY, f64::max);
        gap = upper - lower;
        for (pi, w) in p.iter_mut().zip(&weights) {
            *pi = w / norm;
        }
        if gap < tolerance {
            // the updated input has information at least `lower`
            let input = Distribution { probs: p };
            let joint = JointDistribution::from_conditional(&input, conditional)?;
            return Ok(Capacity {
                capacity: mutual_information(&joint),
                upper_bound: upper,
                input,
                iterations: iteration,
            });
        }
    }
    Err(Error::NotConverged {
        iterations: CAPACITY_MAX_ITERATIONS,
        gap,
    })
}
