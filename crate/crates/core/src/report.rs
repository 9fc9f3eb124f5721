//! Result files and plot tables.
//!
//! A results file is line-delimited JSON: a header record carrying the
//! schema version and session metadata, one record per run (individual runs
//! and run-index-0 aggregates) and per cost quote, then a trailer with
//! record counts and the total cost. The trailer lets a reader detect
//! truncation; counts or totals that disagree with the records are parse
//! errors.
//!
//! Files are written to a temporary sibling and renamed into place, so a
//! crashed writer never leaves a half-written results file behind.
//!
//! [`emit_plot_data`] flattens priced reports from several cluster sizes
//! into two long-format CSV tables (`workload,node_count,value`), one for
//! cost and one for mean duration, ready for plotting.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::{CostQuote, Money, PricedPlan};
use crate::harness::RunResult;

/// Version of the results file schema this library writes.
pub const SCHEMA_VERSION: u32 = 1;

/// Session metadata carried in the header record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    /// Cluster identity, normally the name-node host.
    pub cluster: String,
    pub region: String,
    pub node_count: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario_seed: Option<u64>,
    pub started_at: DateTime<Utc>,
}

/// A full benchmark report: metadata, run records (individual runs and
/// aggregates), cost quotes and their exact total.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkReport {
    pub meta: ReportMeta,
    pub results: Vec<RunResult>,
    pub quotes: Vec<CostQuote>,
    pub total_cost: Money,
}

impl BenchmarkReport {
    /// An unpriced report over a set of run records.
    pub fn new(meta: ReportMeta, results: Vec<RunResult>) -> BenchmarkReport {
        BenchmarkReport {
            meta,
            results,
            quotes: Vec::new(),
            total_cost: Money::ZERO,
        }
    }

    pub fn aggregates(&self) -> impl Iterator<Item = &RunResult> {
        self.results.iter().filter(|r| r.is_aggregate())
    }

    pub fn individual_runs(&self) -> impl Iterator<Item = &RunResult> {
        self.results.iter().filter(|r| !r.is_aggregate())
    }

    /// Attaches pricing; the stored total is the exact sum of the quotes.
    pub fn apply_pricing(&mut self, priced: PricedPlan) {
        self.total_cost = priced.quotes.iter().map(|q| q.cost_micros).sum();
        self.quotes = priced.quotes;
    }

    /// Serializes the report to its line-delimited form.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let mut push = |record: &Record| {
            out.push_str(&serde_json::to_string(record).expect("report records serialize"));
            out.push('\n');
        };
        push(&Record::Header(Header {
            schema_version: SCHEMA_VERSION,
            meta: self.meta.clone(),
        }));
        for result in &self.results {
            push(&Record::Run(result.clone()));
        }
        for quote in &self.quotes {
            push(&Record::Quote(quote.clone()));
        }
        push(&Record::Trailer(Trailer {
            run_records: self.results.len() as u64,
            quote_records: self.quotes.len() as u64,
            total_cost_micros: self.total_cost,
        }));
        out
    }

    /// Parses a report from its line-delimited form, validating the header
    /// version and the trailer against the records.
    pub fn from_jsonl(text: &str) -> Result<BenchmarkReport, ReportError> {
        let parse_line = |index: usize, line: &str| -> Result<Record, ReportError> {
            serde_json::from_str(line).map_err(|source| ReportError::Parse {
                line: index + 1,
                message: source.to_string(),
            })
        };
        let mut lines = text.lines().enumerate();
        let (index, first) = lines.next().ok_or(ReportError::Parse {
            line: 1,
            message: "empty results file".into(),
        })?;
        let meta = match parse_line(index, first)? {
            Record::Header(header) => {
                if header.schema_version != SCHEMA_VERSION {
                    return Err(ReportError::SchemaVersionMismatch {
                        found: header.schema_version,
                    });
                }
                header.meta
            }
            _ => {
                return Err(ReportError::Parse {
                    line: 1,
                    message: "first record is not a header".into(),
                })
            }
        };
        let mut results = Vec::new();
        let mut quotes = Vec::new();
        let mut trailer: Option<Trailer> = None;
        let mut last_line = 1;
        for (index, line) in lines {
            last_line = index + 1;
            if trailer.is_some() {
                return Err(ReportError::Parse {
                    line: last_line,
                    message: "record after trailer".into(),
                });
            }
            match parse_line(index, line)? {
                Record::Header(_) => {
                    return Err(ReportError::Parse {
                        line: last_line,
                        message: "duplicate header".into(),
                    })
                }
                Record::Run(result) => results.push(result),
                Record::Quote(quote) => quotes.push(quote),
                Record::Trailer(t) => trailer = Some(t),
            }
        }
        let trailer = trailer.ok_or(ReportError::Parse {
            line: last_line,
            message: "missing trailer".into(),
        })?;
        if trailer.run_records != results.len() as u64
            || trailer.quote_records != quotes.len() as u64
        {
            return Err(ReportError::Parse {
                line: last_line,
                message: format!(
                    "trailer counts ({} runs, {} quotes) disagree with records ({}, {})",
                    trailer.run_records,
                    trailer.quote_records,
                    results.len(),
                    quotes.len()
                ),
            });
        }
        let sum: Money = quotes.iter().map(|q| q.cost_micros).sum();
        if trailer.total_cost_micros != sum {
            return Err(ReportError::Parse {
                line: last_line,
                message: "trailer total disagrees with quotes".into(),
            });
        }
        Ok(BenchmarkReport {
            meta,
            results,
            quotes,
            total_cost: trailer.total_cost_micros,
        })
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Record {
    Header(Header),
    Run(RunResult),
    Quote(CostQuote),
    Trailer(Trailer),
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    schema_version: u32,
    #[serde(flatten)]
    meta: ReportMeta,
}

#[derive(Debug, Serialize, Deserialize)]
struct Trailer {
    run_records: u64,
    quote_records: u64,
    total_cost_micros: Money,
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("failed to access {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("results file has schema version {found}, expected {SCHEMA_VERSION}")]
    SchemaVersionMismatch { found: u32 },
    #[error("no reports to plot")]
    EmptyPlotInput,
}

/// Writes a report to `path` atomically: the bytes land in a temporary
/// sibling first and are renamed over the target.
pub fn emit_results(report: &BenchmarkReport, path: impl AsRef<Path>) -> Result<(), ReportError> {
    let path = path.as_ref();
    let io_err = |source: std::io::Error| ReportError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, report.to_jsonl()).map_err(io_err)?;
    std::fs::rename(&tmp, path).map_err(io_err)
}

/// Reads a report back from a results file.
pub fn parse_results(path: impl AsRef<Path>) -> Result<BenchmarkReport, ReportError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    BenchmarkReport::from_jsonl(&text)
}

/// Long-format CSV plot tables over one or more priced reports.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotTables {
    /// `workload,node_count,value` with cost in currency units.
    pub cost_csv: String,
    /// `workload,node_count,value` with mean duration in seconds.
    pub time_csv: String,
    /// Workloads dropped because they are missing from some report.
    pub dropped_workloads: Vec<String>,
}

/// Builds plot tables from reports, usually one per cluster size. Only
/// workloads present in every report are emitted; the rest are listed in
/// `dropped_workloads` for the caller to warn about. Rows are sorted by
/// workload id, then node count.
pub fn emit_plot_data(reports: &[&BenchmarkReport]) -> Result<PlotTables, ReportError> {
    if reports.is_empty() {
        return Err(ReportError::EmptyPlotInput);
    }
    let mut ordered: Vec<&BenchmarkReport> = reports.to_vec();
    ordered.sort_by_key(|r| r.meta.node_count);
    let sets: Vec<BTreeSet<&str>> = ordered
        .iter()
        .map(|r| r.aggregates().map(|a| a.workload_id.as_str()).collect())
        .collect();
    let mut common = sets[0].clone();
    let mut union = sets[0].clone();
    for set in &sets[1..] {
        common = common.intersection(set).copied().collect();
        union = union.union(set).copied().collect();
    }
    let dropped_workloads: Vec<String> = union
        .difference(&common)
        .map(|id| id.to_string())
        .collect();
    let mut cost_csv = String::from("workload,node_count,value\n");
    let mut time_csv = String::from("workload,node_count,value\n");
    for id in &common {
        for report in &ordered {
            if let Some(aggregate) = report.aggregates().find(|a| a.workload_id == *id) {
                if let Some(duration) = aggregate.duration_s {
                    writeln!(time_csv, "{id},{},{duration}", aggregate.node_count)
                        .expect("write to string");
                }
            }
            if let Some(quote) = report.quotes.iter().find(|q| q.workload_id == *id) {
                writeln!(cost_csv, "{id},{},{}", quote.node_count, quote.cost_micros)
                    .expect("write to string");
            }
        }
    }
    Ok(PlotTables {
        cost_csv,
        time_csv,
        dropped_workloads,
    })
}
