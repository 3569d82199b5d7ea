//! Configuration-driven experiments and their on-disk outputs.
//!
//! A config is a JSON document:
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "seed": 42,
//!   "experiment": { "kind": "marginal-convergence", ... }
//! }
//! ```
//!
//! Running one produces a [`RunRecord`]: a CSV summary, optional JSON-lines
//! per-run records, and pass/fail outcomes for the checks built into each
//! experiment kind.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::directions::{DirectionSet, ScoreFunction};
use crate::error::{Error, Result};
use crate::frames;
use crate::info::{
    binary_symmetric_channel, channel_capacity, holevo_check, mutual_information,
    JointDistribution,
};
use crate::protocol::{fidelity_gap, single_copy_statistics, Protocol, ProtocolRun};
use crate::quantum::{binary_symmetric_spin_spec, born_joint, random_channel_spec, QuantumChannelSpec, SpecFile};
use crate::typicality::{empirical_pair_counts, joint_typicality_hits, TypicalityParams};

pub const SCHEMA_VERSION: u32 = 1;
/// Statistical allowance, in standard errors, on every Monte Carlo check.
pub const SIGMAS: f64 = 3.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "ConfigFile", try_from = "ConfigFile")]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub seed: Option<u64>,
    pub experiment: Experiment,
}

/// On-disk layout. The experiment is kept as a raw value so that it can be
/// decoded separately with field paths intact.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    experiment: Value,
}

impl From<ExperimentConfig> for ConfigFile {
    fn from(c: ExperimentConfig) -> Self {
        ConfigFile {
            schema_version: c.schema_version,
            seed: c.seed,
            experiment: c.experiment.to_value(),
        }
    }
}

impl TryFrom<ConfigFile> for ExperimentConfig {
    type Error = Error;

    fn try_from(f: ConfigFile) -> Result<Self> {
        Ok(ExperimentConfig {
            schema_version: f.schema_version,
            seed: f.seed,
            experiment: Experiment::from_value(f.experiment)?,
        })
    }
}

fn path_error<E: std::fmt::Display>(prefix: &str, e: serde_path_to_error::Error<E>) -> Error {
    let inner = e.path().to_string();
    let path = match (prefix, inner.as_str()) {
        (p, ".") | (p, "") => p.to_string(),
        ("", i) => i.to_string(),
        (p, i) => format!("{p}.{i}"),
    };
    Error::config(path, e.into_inner().to_string())
}

/// In JSON an experiment is an object whose `kind` field names the variant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum Experiment {
    /// Protocol runs at several block lengths; checks the single-copy error
    /// bound, the score gap bound, and that the error does not grow with `K`.
    MarginalConvergence {
        channel: ChannelSource,
        k_values: Vec<usize>,
        epsilon: f64,
        runs: u64,
        #[serde(default)]
        reuse_table: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        search_cap: Option<u64>,
    },
    /// One block length; checks the score gap bound.
    FidelityGap {
        channel: ChannelSource,
        k: usize,
        epsilon: f64,
        runs: u64,
    },
    /// Same input block sent twice under a reused and under fresh tables,
    /// then pooled statistics of `runs` blocks through one shared table.
    Reuse {
        channel: ChannelSource,
        k: usize,
        epsilon: f64,
        trials: u64,
        runs: u64,
        /// Block length of the paired trials; defaults to `k`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        trial_k: Option<usize>,
    },
    TypicalityRate {
        channel: ChannelSource,
        k: usize,
        epsilon: f64,
        trials: u64,
        /// When set, require `|log2(rate)/K + I| ≤ tolerance`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tolerance: Option<f64>,
    },
    HolevoFuzz {
        specs: u64,
        max_spins: u32,
        max_inputs: usize,
        max_guesses: usize,
    },
    Capacity {
        channel: CapacityChannel,
        tolerance: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        expect: Option<Expectation>,
    },
    FrameCalc {
        #[serde(default)]
        spins: Vec<u32>,
        #[serde(default)]
        angles: Vec<f64>,
    },
}

impl Experiment {
    /// Decodes the `{"kind": ..., fields...}` form.
    pub fn from_value(value: Value) -> Result<Self> {
        let Value::Object(mut map) = value else {
            return Err(Error::config("experiment", "expected an object"));
        };
        let kind = match map.remove("kind") {
            Some(Value::String(kind)) => kind,
            Some(_) => return Err(Error::config("experiment.kind", "expected a string")),
            None => return Err(Error::config("experiment.kind", "missing field `kind`")),
        };
        let tagged = Value::Object(Map::from_iter([(kind.clone(), Value::Object(map))]));
        serde_path_to_error::deserialize(tagged).map_err(|e| {
            // the first segment is the variant name itself
            let path = e.path().to_string();
            let rest = path.strip_prefix(kind.as_str()).unwrap_or(&path);
            let path = format!("experiment{}", rest).trim_end_matches('.').to_string();
            Error::config(path, e.into_inner().to_string())
        })
    }

    pub fn to_value(&self) -> Value {
        let tagged = serde_json::to_value(self).expect("experiments always serialize");
        let Value::Object(outer) = tagged else {
            unreachable!("struct variants serialize as objects")
        };
        let (kind, inner) = outer.into_iter().next().expect("one variant key");
        let Value::Object(mut fields) = inner else {
            unreachable!("struct variants serialize as objects")
        };
        fields.insert("kind".into(), Value::String(kind));
        Value::Object(fields)
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::MarginalConvergence { .. } => "marginal-convergence",
            Experiment::FidelityGap { .. } => "fidelity-gap",
            Experiment::Reuse { .. } => "reuse",
            Experiment::TypicalityRate { .. } => "typicality-rate",
            Experiment::HolevoFuzz { .. } => "holevo-fuzz",
            Experiment::Capacity { .. } => "capacity",
            Experiment::FrameCalc { .. } => "frame-calc",
        }
    }

    fn needs_seed(&self) -> bool {
        !matches!(
            self,
            Experiment::Capacity { .. } | Experiment::FrameCalc { .. }
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectation {
    pub value: f64,
    pub tolerance: f64,
}

/// Where the target joint comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
#[allow(clippy::large_enum_variant)]
pub enum ChannelSource {
    /// Uniform binary input, crossover `flip`, realized by one spin measured
    /// along z.
    BinarySymmetric { flip: f64 },
    Joint {
        joint: JointDistribution,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        inputs: Option<DirectionSet>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        guesses: Option<DirectionSet>,
    },
    Quantum(Box<SpecFile>),
    QuantumFile(PathBuf),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CapacityChannel {
    BinarySymmetric { flip: f64 },
    /// Rows are `p(j | i)`.
    Conditional(Vec<Vec<f64>>),
}

/// A target joint and, when known, the directions behind its indices.
#[derive(Clone, Debug)]
pub struct ResolvedChannel {
    pub joint: JointDistribution,
    pub inputs: Option<DirectionSet>,
    pub guesses: Option<DirectionSet>,
    pub n_spins: Option<u32>,
}

impl ChannelSource {
    pub fn resolve(&self, base_dir: &Path) -> Result<ResolvedChannel> {
        let from_spec = |spec: QuantumChannelSpec| -> Result<ResolvedChannel> {
            Ok(ResolvedChannel {
                joint: born_joint(&spec)?,
                inputs: Some(spec.inputs().clone()),
                guesses: Some(spec.guesses().clone()),
                n_spins: Some(spec.n_spins()),
            })
        };
        match self {
            ChannelSource::BinarySymmetric { flip } => from_spec(binary_symmetric_spin_spec(*flip)?),
            ChannelSource::Joint {
                joint,
                inputs,
                guesses,
            } => Ok(ResolvedChannel {
                joint: joint.clone(),
                inputs: inputs.clone(),
                guesses: guesses.clone(),
                n_spins: None,
            }),
            ChannelSource::Quantum(file) => from_spec((**file).clone().try_into()?),
            ChannelSource::QuantumFile(path) => {
                let path = base_dir.join(path);
                let text = fs::read_to_string(&path).map_err(|e| {
                    Error::config("experiment.channel.quantum_file", format!("{}: {e}", path.display()))
                })?;
                from_spec(QuantumChannelSpec::from_json(&text)?)
            }
        }
    }
}

impl ExperimentConfig {
    /// Parses and validates; errors carry the JSON path of the offending field.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let file: ConfigFile =
            serde_path_to_error::deserialize(de).map_err(|e| path_error("", e))?;
        let config = ExperimentConfig::try_from(file)?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::config("<file>", format!("{}: {e}", path.display())))?;
        ExperimentConfig::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("configs always serialize")
    }

    /// Hex SHA-256 of the canonical serialization.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::config(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            ));
        }
        let bad = |field: &str, msg: String| Err(Error::config(format!("experiment.{field}"), msg));
        let check_eps = |eps: f64| -> Result<()> {
            if !(eps.is_finite() && eps > 0.0) {
                return bad("epsilon", format!("must be positive, got {eps}"));
            }
            Ok(())
        };
        match &self.experiment {
            Experiment::MarginalConvergence {
                k_values,
                epsilon,
                runs,
                search_cap,
                ..
            } => {
                if k_values.is_empty() {
                    return bad("k_values", "must list at least one block length".into());
                }
                if let Some(i) = k_values.iter().position(|&k| k == 0) {
                    return bad(&format!("k_values[{i}]"), "block length must be at least 1".into());
                }
                check_eps(*epsilon)?;
                if *runs == 0 {
                    return bad("runs", "must be at least 1".into());
                }
                if *search_cap == Some(0) {
                    return bad("search_cap", "must be at least 1".into());
                }
            }
            Experiment::FidelityGap { k, epsilon, runs, .. } => {
                if *k == 0 {
                    return bad("k", "block length must be at least 1".into());
                }
                check_eps(*epsilon)?;
                if *runs == 0 {
                    return bad("runs", "must be at least 1".into());
                }
            }
            Experiment::Reuse {
                k,
                epsilon,
                trials,
                runs,
                trial_k,
                ..
            } => {
                if *k == 0 {
                    return bad("k", "block length must be at least 1".into());
                }
                if *trial_k == Some(0) {
                    return bad("trial_k", "block length must be at least 1".into());
                }
                check_eps(*epsilon)?;
                if *trials == 0 {
                    return bad("trials", "must be at least 1".into());
                }
                if *runs == 0 {
                    return bad("runs", "must be at least 1".into());
                }
            }
            Experiment::TypicalityRate {
                k,
                epsilon,
                trials,
                tolerance,
                ..
            } => {
                if *k == 0 {
                    return bad("k", "block length must be at least 1".into());
                }
                check_eps(*epsilon)?;
                if *trials == 0 {
                    return bad("trials", "must be at least 1".into());
                }
                if tolerance.is_some_and(|t| !(t.is_finite() && t > 0.0)) {
                    return bad("tolerance", "must be positive".into());
                }
            }
            Experiment::HolevoFuzz {
                specs,
                max_spins,
                max_inputs,
                max_guesses,
            } => {
                if *specs == 0 {
                    return bad("specs", "must be at least 1".into());
                }
                if !(1..=6).contains(max_spins) {
                    return bad("max_spins", format!("must be in 1..=6, got {max_spins}"));
                }
                if *max_inputs == 0 || *max_inputs > 64 {
                    return bad("max_inputs", format!("must be in 1..=64, got {max_inputs}"));
                }
                if *max_guesses == 0 || *max_guesses > 64 {
                    return bad("max_guesses", format!("must be in 1..=64, got {max_guesses}"));
                }
            }
            Experiment::Capacity { tolerance, expect, .. } => {
                if !(tolerance.is_finite() && *tolerance > 0.0) {
                    return bad("tolerance", format!("must be positive, got {tolerance}"));
                }
                if expect.is_some_and(|e| !(e.tolerance.is_finite() && e.tolerance > 0.0)) {
                    return bad("expect.tolerance", "must be positive".into());
                }
            }
            Experiment::FrameCalc { spins, angles } => {
                if spins.is_empty() && angles.is_empty() {
                    return bad("spins", "give at least one spin count or angle".into());
                }
                if let Some(i) = spins
                    .iter()
                    .position(|n| !(1..=frames::MAX_FRAME_SPINS).contains(n))
                {
                    return bad(&format!("spins[{i}]"), "out of range".into());
                }
                if let Some(i) = angles
                    .iter()
                    .position(|&a| !(a > 0.0 && a < std::f64::consts::PI))
                {
                    return bad(&format!("angles[{i}]"), "must be in (0, π)".into());
                }
            }
        }
        if self.experiment.needs_seed() && self.seed.is_none() {
            return Err(Error::config("seed", "a seed is required for this experiment kind"));
        }
        Ok(())
    }
}

/// One named check with its measured value and the bound it was held to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub measured: f64,
    pub bound: f64,
    pub passed: bool,
}

impl Assertion {
    fn at_most(name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Assertion {
            name: name.into(),
            measured,
            bound,
            passed: measured <= bound,
        }
    }

    fn below(name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Assertion {
            name: name.into(),
            measured,
            bound,
            passed: measured < bound,
        }
    }

    fn at_least(name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Assertion {
            name: name.into(),
            measured,
            bound,
            passed: measured >= bound,
        }
    }
}

/// Per-run line of the JSON-lines stream.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub block_len: usize,
    pub run: u64,
    pub index: u64,
    pub found_typical: bool,
    pub scanned: u64,
    pub pair_counts: Vec<u64>,
}

impl RunSummary {
    fn from_run(run: u64, r: &ProtocolRun) -> Result<Self> {
        Ok(RunSummary {
            block_len: r.input.len(),
            run,
            index: r.index,
            found_typical: r.found_typical,
            scanned: r.scanned,
            pair_counts: empirical_pair_counts(&r.input, &r.output)?.counts,
        })
    }
}

/// Tabular summary written as CSV.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

pub const PROTOCOL_COLUMNS: [&str; 10] = [
    "K",
    "epsilon",
    "runs",
    "max_marginal_error",
    "fbar_Q",
    "fbar_C",
    "gap",
    "bound",
    "mean_index",
    "fallback_rate",
];

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunRecord {
    pub config_digest: String,
    pub kind: String,
    pub summary: Table,
    pub assertions: Vec<Assertion>,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub runs: Vec<RunSummary>,
}

impl RunRecord {
    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }

    pub fn runs_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for r in &self.runs {
            out.push_str(&serde_json::to_string(r)?);
            out.push('\n');
        }
        Ok(out)
    }

    /// Writes `summary.csv`, `record.json`, and `runs.jsonl` when there are
    /// per-run records.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("summary.csv"), self.summary.to_csv()?)?;
        fs::write(dir.join("record.json"), serde_json::to_string_pretty(self)? + "\n")?;
        if !self.runs.is_empty() {
            fs::write(dir.join("runs.jsonl"), self.runs_jsonl()?)?;
        }
        Ok(())
    }

    pub fn report(&self) -> String {
        let mut out = String::new();
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        for a in &self.assertions {
            let _ = writeln!(
                out,
                "[{}] {}: measured {:.6e}, bound {:.6e}",
                if a.passed { "PASS" } else { "FAIL" },
                a.name,
                a.measured,
                a.bound
            );
        }
        out
    }
}

fn fmt(x: f64) -> String {
    format!("{x}")
}

/// Measured statistics of one protocol experiment at one block length.
#[derive(Clone, Debug)]
pub struct ProtocolStats {
    pub block_len: usize,
    pub epsilon: f64,
    pub runs: u64,
    pub max_error: f64,
    pub max_error_sigma: f64,
    /// `ε / (|i||j|)`.
    pub error_bound: f64,
    pub fbar_q: Option<f64>,
    pub fbar_c: Option<f64>,
    pub gap: Option<f64>,
    pub gap_sigma: Option<f64>,
    pub gap_bound: Option<f64>,
    pub mean_index: f64,
    pub fallback_rate: f64,
}

impl ProtocolStats {
    fn row(&self) -> Vec<String> {
        let opt = |x: Option<f64>| x.map(fmt).unwrap_or_default();
        vec![
            self.block_len.to_string(),
            fmt(self.epsilon),
            self.runs.to_string(),
            fmt(self.max_error),
            opt(self.fbar_q),
            opt(self.fbar_c),
            opt(self.gap),
            opt(self.gap_bound),
            fmt(self.mean_index),
            fmt(self.fallback_rate),
        ]
    }
}

/// Summarizes protocol runs against the target, including the score gap when
/// the channel's directions are known.
pub fn protocol_stats(
    channel: &ResolvedChannel,
    params: &TypicalityParams,
    runs: &[ProtocolRun],
) -> Result<ProtocolStats> {
    let pq = &channel.joint;
    let est = single_copy_statistics(runs)?;
    let (max_error, max_error_sigma) = est.max_error(pq)?;
    let n_pooled = (est.runs as f64) * est.block_len as f64;
    let mut stats = ProtocolStats {
        block_len: params.block_len,
        epsilon: params.epsilon,
        runs: est.runs,
        max_error,
        max_error_sigma,
        error_bound: params.epsilon / (pq.rows() * pq.cols()) as f64,
        fbar_q: None,
        fbar_c: None,
        gap: None,
        gap_sigma: None,
        gap_bound: None,
        mean_index: est.mean_index,
        fallback_rate: est.fallback_rate,
    };
    if let (Some(inputs), Some(guesses)) = (&channel.inputs, &channel.guesses) {
        let f = ScoreFunction::fidelity();
        let g = fidelity_gap(pq, &est.joint, &f, inputs, guesses, params.epsilon)?;
        // multinomial standard error of the pooled average score
        let mut second = 0.0;
        for (i, n) in inputs.iter().enumerate() {
            for (j, m) in guesses.iter().enumerate() {
                second += f.eval(n, m).powi(2) * est.joint.get(i, j);
            }
        }
        let var = (second - g.fbar_c * g.fbar_c).max(0.0);
        stats.fbar_q = Some(g.fbar_q);
        stats.fbar_c = Some(g.fbar_c);
        stats.gap = Some(g.gap);
        stats.gap_sigma = Some((var / n_pooled).sqrt());
        stats.gap_bound = Some(g.bound);
    }
    Ok(stats)
}

fn protocol_for(
    channel: &ResolvedChannel,
    params: &TypicalityParams,
    search_cap: Option<u64>,
    warnings: &mut Vec<String>,
) -> Result<Protocol> {
    let mut protocol = Protocol::new(&channel.joint, params)?;
    if let Some(cap) = search_cap {
        protocol = Protocol::with_table_size(&channel.joint, params, protocol.table().entries, cap)?;
    }
    if let Some(n) = channel.n_spins {
        if let Err(e) = protocol.check_index_budget(n) {
            warnings.push(format!("K = {}: {e}", params.block_len));
        }
    }
    for w in protocol.warnings() {
        warnings.push(format!("K = {}: {w}", params.block_len));
    }
    Ok(protocol)
}

fn push_bound_checks(assertions: &mut Vec<Assertion>, s: &ProtocolStats) {
    assertions.push(Assertion::below(
        format!("K={} max |p_C - p_Q| < eps/(|i||j|) + 3 sigma", s.block_len),
        s.max_error,
        s.error_bound + SIGMAS * s.max_error_sigma,
    ));
    if let (Some(gap), Some(bound), Some(sigma)) = (s.gap, s.gap_bound, s.gap_sigma) {
        assertions.push(Assertion::at_most(
            format!("K={} |fbar_Q - fbar_C| <= eps f_max + 3 sigma", s.block_len),
            gap,
            bound + SIGMAS * sigma,
        ));
    }
}

/// Runs the configured experiment. `base_dir` resolves relative file paths
/// inside the config.
pub fn run_experiment(config: &ExperimentConfig, base_dir: &Path) -> Result<RunRecord> {
    config.validate()?;
    let seed = config.seed.unwrap_or_default();
    let mut record = RunRecord {
        config_digest: config.digest(),
        kind: config.experiment.kind().to_string(),
        summary: Table::default(),
        assertions: Vec::new(),
        warnings: Vec::new(),
        runs: Vec::new(),
    };
    match &config.experiment {
        Experiment::MarginalConvergence {
            channel,
            k_values,
            epsilon,
            runs,
            reuse_table,
            search_cap,
        } => {
            let channel = channel.resolve(base_dir)?;
            let mut table = Table::new(&PROTOCOL_COLUMNS);
            let mut previous: Option<ProtocolStats> = None;
            for &k in k_values {
                let params = TypicalityParams::new(k, *epsilon)?;
                let protocol = protocol_for(&channel, &params, *search_cap, &mut record.warnings)?;
                let results = protocol.run(*runs, seed, *reuse_table)?;
                let stats = protocol_stats(&channel, &params, &results)?;
                push_bound_checks(&mut record.assertions, &stats);
                if let Some(prev) = &previous {
                    let slack = SIGMAS * prev.max_error_sigma.hypot(stats.max_error_sigma);
                    record.assertions.push(Assertion::at_most(
                        format!("K={} error not above K={} error + 3 sigma", k, prev.block_len),
                        stats.max_error,
                        prev.max_error + slack,
                    ));
                }
                for (r, run) in results.iter().enumerate() {
                    record.runs.push(RunSummary::from_run(r as u64, run)?);
                }
                table.push(stats.row());
                previous = Some(stats);
            }
            record.summary = table;
        }
        Experiment::FidelityGap {
            channel,
            k,
            epsilon,
            runs,
        } => {
            let channel = channel.resolve(base_dir)?;
            if channel.inputs.is_none() || channel.guesses.is_none() {
                return Err(Error::config(
                    "experiment.channel",
                    "score gap needs input and guess directions",
                ));
            }
            let params = TypicalityParams::new(*k, *epsilon)?;
            let protocol = protocol_for(&channel, &params, None, &mut record.warnings)?;
            let results = protocol.run(*runs, seed, false)?;
            let stats = protocol_stats(&channel, &params, &results)?;
            push_bound_checks(&mut record.assertions, &stats);
            for (r, run) in results.iter().enumerate() {
                record.runs.push(RunSummary::from_run(r as u64, run)?);
            }
            let mut table = Table::new(&PROTOCOL_COLUMNS);
            table.push(stats.row());
            record.summary = table;
        }
        Experiment::Reuse {
            channel,
            k,
            epsilon,
            trials,
            runs,
            trial_k,
        } => {
            let channel = channel.resolve(base_dir)?;
            let trial_params = TypicalityParams::new(trial_k.unwrap_or(*k), *epsilon)?;
            let trial_protocol = protocol_for(&channel, &trial_params, None, &mut record.warnings)?;
            let check = reuse_check(&trial_protocol, *trials, seed)?;
            let params = TypicalityParams::new(*k, *epsilon)?;
            let protocol = if trial_params.block_len == params.block_len {
                trial_protocol
            } else {
                protocol_for(&channel, &params, None, &mut record.warnings)?
            };
            record.assertions.push(Assertion::at_least(
                "reused table: identical inputs give identical outputs (fraction)",
                check.reused_identical as f64 / check.trials as f64,
                1.0,
            ));
            record.assertions.push(Assertion::at_least(
                "fresh tables: identical inputs give different outputs (fraction)",
                check.fresh_different as f64 / check.trials as f64,
                0.99,
            ));
            let results = protocol.run(*runs, seed, true)?;
            let stats = protocol_stats(&channel, &params, &results)?;
            push_bound_checks(&mut record.assertions, &stats);
            for (r, run) in results.iter().enumerate() {
                record.runs.push(RunSummary::from_run(r as u64, run)?);
            }
            let mut table = Table::new(&PROTOCOL_COLUMNS);
            table.push(stats.row());
            record.summary = table;
        }
        Experiment::TypicalityRate {
            channel,
            k,
            epsilon,
            trials,
            tolerance,
        } => {
            let channel = channel.resolve(base_dir)?;
            let params = TypicalityParams::new(*k, *epsilon)?;
            let est = joint_typicality_hits(&channel.joint, &params, *trials, seed)?;
            let mi = mutual_information(&channel.joint);
            let per_symbol = est.log2_rate_per_symbol(*k);
            let mut table = Table::new(&[
                "K",
                "epsilon",
                "trials",
                "hits",
                "rate",
                "log2_rate_per_symbol",
                "mutual_information",
            ]);
            table.push(vec![
                k.to_string(),
                fmt(*epsilon),
                trials.to_string(),
                est.hits.to_string(),
                fmt(est.rate()),
                fmt(per_symbol),
                fmt(mi),
            ]);
            record.summary = table;
            if let Some(tol) = tolerance {
                let deviation = if per_symbol.is_finite() {
                    (per_symbol + mi).abs()
                } else {
                    f64::INFINITY
                };
                record.assertions.push(Assertion::at_most(
                    "|log2(rate)/K + I|",
                    deviation,
                    *tol,
                ));
            }
        }
        Experiment::HolevoFuzz {
            specs,
            max_spins,
            max_inputs,
            max_guesses,
        } => {
            let fuzz = holevo_fuzz(*specs, *max_spins, *max_inputs, *max_guesses, seed)?;
            let mut table = Table::new(&["n_spins", "specs", "max_mutual_information", "violations"]);
            for row in &fuzz {
                table.push(vec![
                    row.n_spins.to_string(),
                    row.specs.to_string(),
                    fmt(row.max_mutual_information),
                    row.violations.to_string(),
                ]);
            }
            record.summary = table;
            let violations: u64 = fuzz.iter().map(|r| r.violations).sum();
            record
                .assertions
                .push(Assertion::at_most("Holevo violations", violations as f64, 0.0));
        }
        Experiment::Capacity {
            channel,
            tolerance,
            expect,
        } => {
            let conditional = match channel {
                CapacityChannel::BinarySymmetric { flip } => {
                    if !(0.0..=1.0).contains(flip) {
                        return Err(Error::config(
                            "experiment.channel.binary_symmetric.flip",
                            "must be in [0, 1]",
                        ));
                    }
                    binary_symmetric_channel(*flip)
                }
                CapacityChannel::Conditional(rows) => rows.clone(),
            };
            let cap = channel_capacity(&conditional, *tolerance)?;
            let mut table = Table::new(&["capacity", "upper_bound", "iterations", "input"]);
            table.push(vec![
                fmt(cap.capacity),
                fmt(cap.upper_bound),
                cap.iterations.to_string(),
                cap.input
                    .probs()
                    .iter()
                    .map(|p| fmt(*p))
                    .collect::<Vec<_>>()
                    .join(" "),
            ]);
            record.summary = table;
            if let Some(e) = expect {
                record.assertions.push(Assertion::at_most(
                    "|C - expected|",
                    (cap.capacity - e.value).abs(),
                    e.tolerance,
                ));
            }
        }
        Experiment::FrameCalc { spins, angles } => {
            let mut table = Table::new(&[
                "quantity",
                "input",
                "frame_size_lower_bound",
                "spins_without_frame",
                "spins_for_angle",
                "bits_for_angle",
            ]);
            for &n in spins {
                table.push(vec![
                    "spins".into(),
                    n.to_string(),
                    frames::frame_size_lower_bound(n)?.to_string(),
                    fmt(frames::spins_without_frame(n)),
                    String::new(),
                    String::new(),
                ]);
            }
            for &a in angles {
                table.push(vec![
                    "angle".into(),
                    fmt(a),
                    String::new(),
                    String::new(),
                    fmt(frames::spins_for_angle(a)?),
                    frames::bits_for_angle(a)?.to_string(),
                ]);
            }
            record.summary = table;
        }
    }
    Ok(record)
}

/// Outcome counts of sending one input block twice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReuseCheck {
    pub trials: u64,
    pub reused_identical: u64,
    pub fresh_different: u64,
}

/// For each trial, draws an input block and transmits it twice, once with a
/// shared table and once with two fresh tables.
pub fn reuse_check(protocol: &Protocol, trials: u64, seed: u64) -> Result<ReuseCheck> {
    use rayon::prelude::*;
    let outcomes = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<(bool, bool)> {
            let trial_seed = crate::rng::derive_seed(seed, crate::rng::tags::TRIAL, t);
            let input = protocol.input_block(trial_seed, 0);
            let pair = [input.clone(), input];
            let reused = protocol.run_inputs(&pair, trial_seed, true)?;
            let fresh = protocol.run_inputs(&pair, trial_seed, false)?;
            Ok((reused[0].output == reused[1].output, fresh[0].output != fresh[1].output))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ReuseCheck {
        trials,
        reused_identical: outcomes.iter().filter(|o| o.0).count() as u64,
        fresh_different: outcomes.iter().filter(|o| o.1).count() as u64,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolevoRow {
    pub n_spins: u32,
    pub specs: u64,
    pub max_mutual_information: f64,
    pub violations: u64,
}

/// Born-rule joints of `specs` random channel specs, cycling the spin count
/// through `1..=max_spins` and alphabet sizes through `1..=max_*`.
pub fn holevo_fuzz(
    specs: u64,
    max_spins: u32,
    max_inputs: usize,
    max_guesses: usize,
    seed: u64,
) -> Result<Vec<HolevoRow>> {
    use rayon::prelude::*;
    let results = (0..specs)
        .into_par_iter()
        .map(|s| -> Result<(u32, f64, bool)> {
            let n = 1 + (s % max_spins as u64) as u32;
            let h = crate::rng::mix64(seed ^ s);
            let inputs = 1 + (h % max_inputs as u64) as usize;
            let guesses = 1 + ((h >> 32) % max_guesses as u64) as usize;
            let spec = random_channel_spec(n, (inputs, guesses), crate::rng::derive_seed(seed, s, 0))?;
            let joint = born_joint(&spec)?;
            Ok((n, mutual_information(&joint), holevo_check(&joint, n)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((1..=max_spins)
        .map(|n| {
            let mine: Vec<_> = results.iter().filter(|r| r.0 == n).collect();
            HolevoRow {
                n_spins: n,
                specs: mine.len() as u64,
                max_mutual_information: mine.iter().map(|r| r.1).fold(0.0, f64::max),
                violations: mine.iter().filter(|r| !r.2).count() as u64,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentConfig> {
        ExperimentConfig::from_json(text)
    }

    #[test]
    fn parses_minimal_configs() {
        let c = parse(
            r#"{"schema_version":1,"seed":3,"experiment":{"kind":"typicality-rate",
               "channel":{"binary_symmetric":{"flip":0.45}},"k":100,"epsilon":0.05,"trials":10}}"#,
        )
        .unwrap();
        assert_eq!(c.experiment.kind(), "typicality-rate");
        let c = parse(r#"{"schema_version":1,"experiment":{"kind":"frame-calc","spins":[10]}}"#).unwrap();
        assert_eq!(c.seed, None);
    }

    #[test]
    fn errors_carry_field_paths() {
        let err = parse(r#"{"schema_version":1,"seed":1,"experiment":{"kind":"capacity","channel":{"binary_symmetric":{"flip":"x"}},"tolerance":1e-6}}"#)
            .unwrap_err();
        match err {
            Error::Config { path, .. } => assert_eq!(path, "experiment.channel.binary_symmetric.flip"),
            other => panic!("unexpected {other:?}"),
        }
        let err = parse(r#"{"schema_version":1,"seed":1,"experiment":{"kind":"marginal-convergence","channel":{"binary_symmetric":{"flip":0.4}},"k_values":[10,0],"epsilon":0.1,"runs":5}}"#)
            .unwrap_err();
        assert!(matches!(err, Error::Config { ref path, .. } if path == "experiment.k_values[1]"), "{err}");
        let err = parse(r#"{"schema_version":2,"experiment":{"kind":"frame-calc","spins":[1]}}"#).unwrap_err();
        assert!(matches!(err, Error::Config { ref path, .. } if path == "schema_version"));
    }

    #[test]
    fn seed_is_mandatory_for_stochastic_kinds() {
        let err = parse(
            r#"{"schema_version":1,"experiment":{"kind":"typicality-rate",
               "channel":{"binary_symmetric":{"flip":0.45}},"k":100,"epsilon":0.05,"trials":10}}"#,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Config { ref path, .. } if path == "seed"));
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(parse(r#"{"schema_version":1,"bogus":1,"experiment":{"kind":"frame-calc","spins":[1]}}"#).is_err());
        assert!(parse(r#"{"schema_version":1,"experiment":{"kind":"frame-calc","spins":[1],"x":2}}"#).is_err());
        assert!(parse(r#"{"schema_version":1,"experiment":{"kind":"nope"}}"#).is_err());
    }

    #[test]
    fn digest_is_stable_across_round_trip() {
        let c = parse(
            r#"{"schema_version":1,"seed":9,"experiment":{"kind":"fidelity-gap",
               "channel":{"joint":{"joint":{"rows":["a","b"],"cols":["c","d"],"p":[[0.4,0.1],[0.1,0.4]]}}},
               "k":10,"epsilon":0.5,"runs":3}}"#,
        )
        .unwrap();
        let again = parse(&c.to_json()).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.digest(), again.digest());
        let mut other = c.clone();
        other.seed = Some(10);
        assert_ne!(c.digest(), other.digest());
    }

    #[test]
    fn capacity_experiment() {
        let c = parse(
            r#"{"schema_version":1,"experiment":{"kind":"capacity",
               "channel":{"binary_symmetric":{"flip":0.1}},"tolerance":1e-9,
               "expect":{"value":0.531004406410719,"tolerance":1e-6}}}"#,
        )
        .unwrap();
        let rec = run_experiment(&c, Path::new(".")).unwrap();
        assert!(rec.passed(), "{}", rec.report());
        assert_eq!(rec.summary.header[0], "capacity");
    }

    #[test]
    fn frame_calc_experiment() {
        let c = parse(r#"{"schema_version":1,"experiment":{"kind":"frame-calc","spins":[10,40],"angles":[1e-11]}}"#).unwrap();
        let rec = run_experiment(&c, Path::new(".")).unwrap();
        let csv = rec.summary.to_csv().unwrap();
        assert!(csv.contains("spins,10,22,32,,"), "{csv}");
        assert!(csv.contains("spins,40,1048536,"), "{csv}");
        assert!(csv.contains("angle,0.00000000001,,,200000000000,40"), "{csv}");
    }

    #[test]
    fn fidelity_gap_needs_directions() {
        let c = parse(
            r#"{"schema_version":1,"seed":9,"experiment":{"kind":"fidelity-gap",
               "channel":{"joint":{"joint":{"rows":["a","b"],"cols":["c","d"],"p":[[0.4,0.1],[0.1,0.4]]}}},
               "k":10,"epsilon":0.5,"runs":3}}"#,
        )
        .unwrap();
        assert!(matches!(run_experiment(&c, Path::new(".")), Err(Error::Config { .. })));
    }
}
