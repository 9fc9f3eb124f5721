//! Plan execution through pluggable executors.
//!
//! The harness runs one plan entry at a time, `repeats` times each, stamping
//! every run with a timestamp from a [`Clock`]. Two executors exist: the
//! [`SimulatedExecutor`] replays durations from a [`Scenario`] file with
//! seeded multiplicative noise, and the [`ShellExecutor`] times a real
//! command template. Simulated runs use the [`SimClock`], which starts at a
//! fixed epoch and advances by each run's duration, so an entire simulated
//! session is reproducible byte for byte.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use chrono::{DateTime, TimeZone, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{parse_rendered_lines, Engine, RenderedConfig};
use crate::plan::ResolvedEntry;

/// Largest noise fraction a scenario may request.
pub const NOISE_FRACTION_MAX: f64 = 0.05;

/// Noise fraction used when a scenario file does not set one.
pub const DEFAULT_NOISE_FRACTION: f64 = 0.02;

/// Run index that marks an aggregate record; individual runs count from 1.
pub const AGGREGATE_RUN_INDEX: u32 = 0;

#[derive(Debug, Error)]
pub enum ExecError {
    #[error("workload run failed: {0}")]
    Failed(String),
    #[error("scenario has no entry for workload {workload_id:?} at {node_count} nodes")]
    ScenarioMiss {
        workload_id: String,
        node_count: u32,
    },
    #[error("scenario has no input-bytes entry for workload {0:?}")]
    MissingInputBytes(String),
}

impl ExecError {
    /// Fatal errors abort the plan; plain run failures are recorded and the
    /// plan continues.
    pub fn is_fatal(&self) -> bool {
        !matches!(self, ExecError::Failed(_))
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("failed to read scenario {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed scenario: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid scenario: {0}")]
    Validation(String),
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error("workload {workload_id:?} has no successful runs to average")]
    NoSuccessfulRuns { workload_id: String },
    #[error("cannot average runs of different workloads")]
    MixedAggregation,
}

/// One measured execution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExecutionSample {
    pub duration_s: f64,
    pub input_bytes: u64,
}

/// Something that can execute a configured workload on `node_count` nodes.
/// `run_index` counts from 1 within a workload and lets simulated executors
/// derive per-run noise deterministically.
pub trait Executor {
    fn execute(
        &mut self,
        config: &RenderedConfig,
        node_count: u32,
        run_index: u32,
    ) -> Result<ExecutionSample, ExecError>;
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    seed: u64,
    #[serde(default = "default_noise")]
    noise_fraction: f64,
    entries: Vec<ScenarioEntry>,
    input_bytes: BTreeMap<String, u64>,
}

fn default_noise() -> f64 {
    DEFAULT_NOISE_FRACTION
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioEntry {
    workload_id: String,
    node_count: u32,
    base_duration_s: f64,
}

/// Replay data for the simulated executor: base durations per
/// `(workload, node count)` pair, input sizes and the noise model.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub seed: u64,
    pub noise_fraction: f64,
    entries: BTreeMap<(String, u32), f64>,
    input_bytes: BTreeMap<String, u64>,
}

impl Scenario {
    pub fn load(path: impl AsRef<Path>) -> Result<Scenario, HarnessError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Scenario::from_json_str(&text)
    }

    pub fn from_json_str(text: &str) -> Result<Scenario, HarnessError> {
        let file: ScenarioFile = serde_json::from_str(text)?;
        if !(0.0..=NOISE_FRACTION_MAX).contains(&file.noise_fraction) {
            return Err(HarnessError::Validation(format!(
                "noise_fraction {} outside [0, {NOISE_FRACTION_MAX}]",
                file.noise_fraction
            )));
        }
        let mut entries = BTreeMap::new();
        for entry in file.entries {
            if !entry.base_duration_s.is_finite() || entry.base_duration_s <= 0.0 {
                return Err(HarnessError::Validation(format!(
                    "non-positive base duration for {:?}",
                    entry.workload_id
                )));
            }
            if entry.node_count == 0 {
                return Err(HarnessError::Validation(format!(
                    "zero node count for {:?}",
                    entry.workload_id
                )));
            }
            let key = (entry.workload_id.clone(), entry.node_count);
            if entries.insert(key, entry.base_duration_s).is_some() {
                return Err(HarnessError::Validation(format!(
                    "duplicate entry for {:?} at {} nodes",
                    entry.workload_id, entry.node_count
                )));
            }
        }
        Ok(Scenario {
            seed: file.seed,
            noise_fraction: file.noise_fraction,
            entries,
            input_bytes: file.input_bytes,
        })
    }

    /// The scenario shipped with the tool, pinned at zero noise.
    ///
    /// spark-scan carries measured reference timings and hadoop-join timings
    /// are back-solved from its reference costs at the 821 GBP monthly node
    /// rate; every other baseline is a synthetic placeholder for demos and
    /// tests, not a measurement.
    pub fn shipped() -> Scenario {
        let table: [(&str, f64, f64); 13] = [
            ("hadoop-aggregation", 520.0, 300.0),
            ("hadoop-dfsio-read", 900.0, 520.0),
            ("hadoop-dfsio-write", 1400.0, 800.0),
            ("hadoop-join", 789.28, 710.35),
            ("hadoop-kmeans", 1100.0, 640.0),
            ("hadoop-pagerank", 950.0, 560.0),
            ("hadoop-scan", 210.0, 130.0),
            ("hadoop-wordcount", 1700.0, 950.0),
            ("spark-aggregation", 380.0, 210.0),
            ("spark-join", 600.0, 360.0),
            ("spark-kmeans", 520.0, 300.0),
            ("spark-scan", 75.0, 45.0),
            ("spark-wordcount", 1250.0, 700.0),
        ];
        let bytes: [(&str, u64); 13] = [
            ("hadoop-aggregation", 100_000_000_000),
            ("hadoop-dfsio-read", 214_748_364_800),
            ("hadoop-dfsio-write", 214_748_364_800),
            ("hadoop-join", 61_100_000_000),
            ("hadoop-kmeans", 21_474_836_480),
            ("hadoop-pagerank", 5_000_000_000),
            ("hadoop-scan", 100_000_000_000),
            ("hadoop-wordcount", 322_122_547_200),
            ("spark-aggregation", 100_000_000_000),
            ("spark-join", 61_100_000_000),
            ("spark-kmeans", 21_474_836_480),
            ("spark-scan", 100_000_000_000),
            ("spark-wordcount", 322_122_547_200),
        ];
        let mut entries = BTreeMap::new();
        for (id, at_four, at_eight) in table {
            entries.insert((id.to_string(), 4), at_four);
            entries.insert((id.to_string(), 8), at_eight);
        }
        Scenario {
            seed: 42,
            noise_fraction: 0.0,
            entries,
            input_bytes: bytes.iter().map(|(id, b)| (id.to_string(), *b)).collect(),
        }
    }

    pub fn base_duration(&self, workload_id: &str, node_count: u32) -> Option<f64> {
        self.entries
            .get(&(workload_id.to_string(), node_count))
            .copied()
    }

    pub fn input_bytes(&self, workload_id: &str) -> Option<u64> {
        self.input_bytes.get(workload_id).copied()
    }

    /// Simulates one run: the base duration for `(workload, node count)`
    /// jittered by at most `noise_fraction`, deterministic in
    /// `(seed, workload, node count, run index)`.
    pub fn simulate(
        &self,
        workload_id: &str,
        node_count: u32,
        run_index: u32,
    ) -> Result<ExecutionSample, ExecError> {
        let base = self
            .base_duration(workload_id, node_count)
            .ok_or_else(|| ExecError::ScenarioMiss {
                workload_id: workload_id.to_string(),
                node_count,
            })?;
        let input_bytes = self
            .input_bytes(workload_id)
            .ok_or_else(|| ExecError::MissingInputBytes(workload_id.to_string()))?;
        let unit = unit_noise(self.seed, workload_id, node_count, run_index);
        Ok(ExecutionSample {
            duration_s: base * (1.0 + self.noise_fraction * unit),
            input_bytes,
        })
    }
}

fn fnv1a64(seed_bytes: &[u8], node_count: u32, run_index: u32) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    let mut eat = |byte: u8| {
        hash ^= u64::from(byte);
        hash = hash.wrapping_mul(0x100000001b3);
    };
    for &byte in seed_bytes {
        eat(byte);
    }
    for byte in node_count.to_le_bytes() {
        eat(byte);
    }
    for byte in run_index.to_le_bytes() {
        eat(byte);
    }
    hash
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Deterministic noise in `[-1, 1)` for one run.
fn unit_noise(seed: u64, workload_id: &str, node_count: u32, run_index: u32) -> f64 {
    let mixed = splitmix64(seed ^ fnv1a64(workload_id.as_bytes(), node_count, run_index));
    ((mixed >> 11) as f64 / (1u64 << 52) as f64) - 1.0
}

/// Executor that replays a [`Scenario`].
pub struct SimulatedExecutor {
    pub scenario: Scenario,
}

impl Executor for SimulatedExecutor {
    fn execute(
        &mut self,
        config: &RenderedConfig,
        node_count: u32,
        run_index: u32,
    ) -> Result<ExecutionSample, ExecError> {
        self.scenario.simulate(&config.workload_id, node_count, run_index)
    }
}

/// Executor that shells out to a command template and times it. The
/// placeholders `{workload}`, `{nodes}` and `{run}` are substituted before
/// the command runs under `sh -c`. Input bytes are taken from the rendered
/// `datasize.bytes` parameter when present, else zero.
pub struct ShellExecutor {
    pub template: String,
}

impl ShellExecutor {
    pub fn render_command(&self, config: &RenderedConfig, node_count: u32, run_index: u32) -> String {
        self.template
            .replace("{workload}", &config.workload_id)
            .replace("{nodes}", &node_count.to_string())
            .replace("{run}", &run_index.to_string())
    }
}

impl Executor for ShellExecutor {
    fn execute(
        &mut self,
        config: &RenderedConfig,
        node_count: u32,
        run_index: u32,
    ) -> Result<ExecutionSample, ExecError> {
        let command = self.render_command(config, node_count, run_index);
        let started = Instant::now();
        let status = std::process::Command::new("sh")
            .arg("-c")
            .arg(&command)
            .status()
            .map_err(|e| ExecError::Failed(format!("cannot spawn {command:?}: {e}")))?;
        let duration_s = started.elapsed().as_secs_f64();
        if !status.success() {
            return Err(ExecError::Failed(format!(
                "{command:?} exited with {status}"
            )));
        }
        let input_bytes = parse_rendered_lines(&config.lines)
            .ok()
            .and_then(|(params, _)| params.get("bytes").copied())
            .unwrap_or(0);
        Ok(ExecutionSample {
            duration_s,
            input_bytes,
        })
    }
}

/// Source of result timestamps.
pub trait Clock {
    fn now(&mut self) -> DateTime<Utc>;
    fn advance_secs(&mut self, secs: f64);
}

/// Epoch the simulated clock starts at.
pub fn sim_epoch() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2017, 9, 1, 0, 0, 0).unwrap()
}

/// Logical clock for simulated sessions: starts at [`sim_epoch`] and moves
/// only when told to. Keeps simulated output independent of wall time.
pub struct SimClock {
    now: DateTime<Utc>,
}

impl Default for SimClock {
    fn default() -> Self {
        SimClock { now: sim_epoch() }
    }
}

impl Clock for SimClock {
    fn now(&mut self) -> DateTime<Utc> {
        self.now
    }

    fn advance_secs(&mut self, secs: f64) {
        self.now += chrono::Duration::nanoseconds((secs * 1e9).round() as i64);
    }
}

/// Real time; advancing is a no-op.
pub struct WallClock;

impl Clock for WallClock {
    fn now(&mut self) -> DateTime<Utc> {
        Utc::now()
    }

    fn advance_secs(&mut self, _secs: f64) {}
}

/// One run record. `run_index` 0 is reserved for aggregates; failed runs
/// carry no duration or throughput.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub workload_id: String,
    pub engine: Engine,
    pub node_count: u32,
    pub run_index: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_s: Option<f64>,
    pub input_bytes: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub throughput_bps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub throughput_per_node_bps: Option<f64>,
    pub success: bool,
    pub timestamp: DateTime<Utc>,
}

impl RunResult {
    pub fn completed(
        workload_id: &str,
        engine: Engine,
        node_count: u32,
        run_index: u32,
        duration_s: f64,
        input_bytes: u64,
        timestamp: DateTime<Utc>,
    ) -> RunResult {
        let throughput_bps = input_bytes as f64 / duration_s;
        RunResult {
            workload_id: workload_id.to_string(),
            engine,
            node_count,
            run_index,
            duration_s: Some(duration_s),
            input_bytes,
            throughput_bps: Some(throughput_bps),
            throughput_per_node_bps: Some(throughput_bps / f64::from(node_count)),
            success: true,
            timestamp,
        }
    }

    pub fn failed(
        workload_id: &str,
        engine: Engine,
        node_count: u32,
        run_index: u32,
        input_bytes: u64,
        timestamp: DateTime<Utc>,
    ) -> RunResult {
        RunResult {
            workload_id: workload_id.to_string(),
            engine,
            node_count,
            run_index,
            duration_s: None,
            input_bytes,
            throughput_bps: None,
            throughput_per_node_bps: None,
            success: false,
            timestamp,
        }
    }

    pub fn is_aggregate(&self) -> bool {
        self.run_index == AGGREGATE_RUN_INDEX
    }
}

/// Executes every entry of a resolved plan sequentially, `repeats` runs
/// each. Failed runs are recorded and the plan continues; fatal executor
/// errors (scenario misses) abort.
pub fn run_plan(
    entries: &[ResolvedEntry],
    executor: &mut dyn Executor,
    node_count: u32,
    clock: &mut dyn Clock,
) -> Result<Vec<RunResult>, HarnessError> {
    let mut runs = Vec::new();
    for entry in entries {
        for run_index in 1..=entry.repeats {
            match executor.execute(&entry.config, node_count, run_index) {
                Ok(sample) => {
                    clock.advance_secs(sample.duration_s);
                    runs.push(RunResult::completed(
                        &entry.spec.id,
                        entry.spec.engine,
                        node_count,
                        run_index,
                        sample.duration_s,
                        sample.input_bytes,
                        clock.now(),
                    ));
                }
                Err(err) if err.is_fatal() => return Err(err.into()),
                Err(_) => {
                    runs.push(RunResult::failed(
                        &entry.spec.id,
                        entry.spec.engine,
                        node_count,
                        run_index,
                        0,
                        clock.now(),
                    ));
                }
            }
        }
    }
    Ok(runs)
}

/// Averages the successful runs of one workload into an aggregate record
/// (run index 0). Failed runs are excluded from the mean; throughputs are
/// recomputed from the averaged duration.
pub fn average_runs(runs: &[RunResult]) -> Result<RunResult, HarnessError> {
    let first = runs.first().ok_or(HarnessError::MixedAggregation)?;
    if runs
        .iter()
        .any(|r| r.workload_id != first.workload_id || r.node_count != first.node_count)
    {
        return Err(HarnessError::MixedAggregation);
    }
    let successes: Vec<&RunResult> = runs.iter().filter(|r| r.success).collect();
    let durations: Vec<f64> = successes.iter().filter_map(|r| r.duration_s).collect();
    if durations.is_empty() {
        return Err(HarnessError::NoSuccessfulRuns {
            workload_id: first.workload_id.clone(),
        });
    }
    // Identical samples must average to themselves bit for bit; the summed
    // form can be off by an ulp.
    let mean = if durations.windows(2).all(|w| w[0] == w[1]) {
        durations[0]
    } else {
        durations.iter().sum::<f64>() / durations.len() as f64
    };
    let last = successes.last().expect("non-empty successes");
    Ok(RunResult::completed(
        &first.workload_id,
        first.engine,
        first.node_count,
        AGGREGATE_RUN_INDEX,
        mean,
        last.input_bytes,
        last.timestamp,
    ))
}

/// Groups runs by workload (in first-appearance order) and averages each
/// group. Returns the aggregates plus the ids of workloads whose every run
/// failed.
pub fn aggregate_runs(runs: &[RunResult]) -> (Vec<RunResult>, Vec<String>) {
    let mut order: Vec<&str> = Vec::new();
    for run in runs {
        if !order.contains(&run.workload_id.as_str()) {
            order.push(&run.workload_id);
        }
    }
    let mut aggregates = Vec::new();
    let mut exhausted = Vec::new();
    for id in order {
        let group: Vec<RunResult> = runs
            .iter()
            .filter(|r| r.workload_id == id)
            .cloned()
            .collect();
        match average_runs(&group) {
            Ok(aggregate) => aggregates.push(aggregate),
            Err(HarnessError::NoSuccessfulRuns { workload_id }) => exhausted.push(workload_id),
            Err(_) => unreachable!("grouped by workload id"),
        }
    }
    (aggregates, exhausted)
}
