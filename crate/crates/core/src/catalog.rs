//! Built-in workload catalog and per-workload configuration.
//!
//! The catalog fixes thirteen benchmark workloads at their reference data
//! scales. Aggregation, Join, KMeans, Scan and WordCount exist for both the
//! Hadoop and Spark engines; DFSIO read/write and PageRank are Hadoop-only.
//! Workload ids are `<engine>-<name>`, e.g. `spark-scan`.
//!
//! [`configure_workload`] merges caller overrides into a workload's scale
//! parameters and renders the flat `key value` lines that get written to the
//! workload's `.conf` file. Rendered keys are namespaced: `datasize.*` for
//! size parameters, `algo.*` for algorithm parameters, plus `run.repeats`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Binary gigabyte. Every GB figure in the catalog converts to bytes with
/// this factor.
pub const BYTES_PER_GB: u64 = 1 << 30;

/// Times each workload is executed before averaging.
pub const DEFAULT_REPEATS: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Hadoop,
    Spark,
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Engine::Hadoop => write!(f, "hadoop"),
            Engine::Spark => write!(f, "spark"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Micro,
    Ml,
    Sql,
    Websearch,
}

/// One catalog entry: a workload pinned at its reference scale.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadSpec {
    pub id: String,
    pub engine: Engine,
    pub category: Category,
    /// Scale parameters under their short names (`rows`, `bytes`, `k`, ...).
    pub scale_params: BTreeMap<String, u64>,
    pub repeats: u32,
}

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("workload {workload} has no parameter {name:?}")]
    UnknownParameter { workload: String, name: String },
    #[error("parameter {name:?} of workload {workload} must be positive")]
    NonPositiveScale { workload: String, name: String },
    #[error("unknown workload {0:?}")]
    InvalidSelection(String),
    #[error("bad answer line {0:?}: {1}")]
    BadAnswer(String, String),
    #[error("bad scale value {0:?}")]
    BadValue(String),
    #[error("failed to read plan {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
    #[error("malformed plan: {0}")]
    Parse(#[from] serde_json::Error),
}

/// The built-in workload catalog.
#[derive(Debug, Clone, PartialEq)]
pub struct Catalog {
    workloads: Vec<WorkloadSpec>,
}

impl Catalog {
    /// The thirteen reference workloads at their catalog scales.
    pub fn builtin() -> Catalog {
        let mut workloads = Vec::new();
        let mut push = |engine: Engine, name: &str, category: Category, params: &[(&str, u64)]| {
            workloads.push(WorkloadSpec {
                id: format!("{engine}-{name}"),
                engine,
                category,
                scale_params: params
                    .iter()
                    .map(|(k, v)| (k.to_string(), *v))
                    .collect(),
                repeats: DEFAULT_REPEATS,
            });
        };
        for engine in [Engine::Hadoop, Engine::Spark] {
            push(engine, "aggregation", Category::Sql, &[("rows", 1_000_000_000)]);
        }
        push(
            Engine::Hadoop,
            "dfsio-read",
            Category::Micro,
            &[("bytes", 200 * BYTES_PER_GB)],
        );
        push(
            Engine::Hadoop,
            "dfsio-write",
            Category::Micro,
            &[("bytes", 200 * BYTES_PER_GB)],
        );
        for engine in [Engine::Hadoop, Engine::Spark] {
            push(
                engine,
                "join",
                Category::Sql,
                &[("left_rows", 500_000_000), ("right_rows", 111_000_000)],
            );
        }
        for engine in [Engine::Hadoop, Engine::Spark] {
            push(
                engine,
                "kmeans",
                Category::Ml,
                &[("bytes", 20 * BYTES_PER_GB), ("k", 10), ("max_iterations", 5)],
            );
        }
        push(
            Engine::Hadoop,
            "pagerank",
            Category::Websearch,
            &[("pages", 5_000_000), ("iterations", 3)],
        );
        for engine in [Engine::Hadoop, Engine::Spark] {
            push(engine, "scan", Category::Sql, &[("rows", 1_000_000_000)]);
        }
        for engine in [Engine::Hadoop, Engine::Spark] {
            push(
                engine,
                "wordcount",
                Category::Micro,
                &[("bytes", 300 * BYTES_PER_GB)],
            );
        }
        workloads.sort_by(|a, b| a.id.cmp(&b.id));
        Catalog { workloads }
    }

    pub fn workloads(&self) -> &[WorkloadSpec] {
        &self.workloads
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.workloads.iter().map(|w| w.id.as_str())
    }

    pub fn get(&self, id: &str) -> Option<&WorkloadSpec> {
        self.workloads.iter().find(|w| w.id == id)
    }

    pub fn len(&self) -> usize {
        self.workloads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.workloads.is_empty()
    }
}

/// Maps a short parameter name to its rendered config key.
pub fn config_key(param: &str) -> String {
    match param {
        "k" | "max_iterations" | "iterations" => format!("algo.{param}"),
        "repeats" => "run.repeats".to_string(),
        _ => format!("datasize.{param}"),
    }
}

/// Flat rendered configuration for one workload run.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedConfig {
    pub workload_id: String,
    /// "default" when no overrides were applied, "custom" otherwise.
    pub profile_name: String,
    /// `(key, value)` pairs sorted by key.
    pub lines: Vec<(String, String)>,
}

impl RenderedConfig {
    /// The `.conf` file body: one `key value` line per entry.
    pub fn to_conf_text(&self) -> String {
        let mut out = String::new();
        for (key, value) in &self.lines {
            out.push_str(key);
            out.push(' ');
            out.push_str(value);
            out.push('\n');
        }
        out
    }
}

/// Merges overrides into a workload's parameters and renders its config.
/// Override keys are the short parameter names plus `repeats`.
pub fn configure_workload(
    spec: &WorkloadSpec,
    overrides: &BTreeMap<String, u64>,
) -> Result<RenderedConfig, CatalogError> {
    let mut params = spec.scale_params.clone();
    let mut repeats = spec.repeats;
    for (name, value) in overrides {
        if *value == 0 {
            return Err(CatalogError::NonPositiveScale {
                workload: spec.id.clone(),
                name: name.clone(),
            });
        }
        if name == "repeats" {
            repeats = *value as u32;
        } else if params.contains_key(name) {
            params.insert(name.clone(), *value);
        } else {
            return Err(CatalogError::UnknownParameter {
                workload: spec.id.clone(),
                name: name.clone(),
            });
        }
    }
    let mut lines: Vec<(String, String)> = params
        .iter()
        .map(|(name, value)| (config_key(name), value.to_string()))
        .collect();
    lines.push(("run.repeats".to_string(), repeats.to_string()));
    lines.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(RenderedConfig {
        workload_id: spec.id.clone(),
        profile_name: if overrides.is_empty() { "default" } else { "custom" }.to_string(),
        lines,
    })
}

/// Inverse of rendering: recovers short-named scale parameters and the
/// repeat count from rendered lines.
pub fn parse_rendered_lines(
    lines: &[(String, String)],
) -> Result<(BTreeMap<String, u64>, u32), CatalogError> {
    let mut params = BTreeMap::new();
    let mut repeats = DEFAULT_REPEATS;
    for (key, value) in lines {
        let parsed: u64 = value
            .parse()
            .map_err(|_| CatalogError::BadValue(value.clone()))?;
        if key == "run.repeats" {
            repeats = parsed as u32;
        } else {
            let short = key.split_once('.').map(|(_, s)| s).unwrap_or(key);
            params.insert(short.to_string(), parsed);
        }
    }
    Ok((params, repeats))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn overrides(pairs: &[(&str, u64)]) -> BTreeMap<String, u64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn catalog_has_thirteen_workloads_with_unique_ids() {
        let catalog = Catalog::builtin();
        assert_eq!(catalog.len(), 13);
        let mut ids: Vec<&str> = catalog.ids().collect();
        ids.dedup();
        assert_eq!(ids.len(), 13);
    }

    #[test]
    fn engine_coverage_matches_the_reference_table() {
        let catalog = Catalog::builtin();
        for name in ["aggregation", "join", "kmeans", "scan", "wordcount"] {
            assert!(catalog.get(&format!("hadoop-{name}")).is_some(), "{name}");
            assert!(catalog.get(&format!("spark-{name}")).is_some(), "{name}");
        }
        for name in ["dfsio-read", "dfsio-write", "pagerank"] {
            assert!(catalog.get(&format!("hadoop-{name}")).is_some(), "{name}");
            assert!(catalog.get(&format!("spark-{name}")).is_none(), "{name}");
        }
    }

    #[test]
    fn catalog_scales_match_the_reference_table() {
        let catalog = Catalog::builtin();
        let param = |id: &str, name: &str| catalog.get(id).unwrap().scale_params[name];
        assert_eq!(param("hadoop-aggregation", "rows"), 1_000_000_000);
        assert_eq!(param("spark-aggregation", "rows"), 1_000_000_000);
        assert_eq!(param("hadoop-dfsio-read", "bytes"), 214_748_364_800);
        assert_eq!(param("hadoop-dfsio-write", "bytes"), 214_748_364_800);
        assert_eq!(param("hadoop-join", "left_rows"), 500_000_000);
        assert_eq!(param("hadoop-join", "right_rows"), 111_000_000);
        assert_eq!(param("spark-kmeans", "bytes"), 20 * BYTES_PER_GB);
        assert_eq!(param("spark-kmeans", "k"), 10);
        assert_eq!(param("spark-kmeans", "max_iterations"), 5);
        assert_eq!(param("hadoop-pagerank", "pages"), 5_000_000);
        assert_eq!(param("hadoop-pagerank", "iterations"), 3);
        assert_eq!(param("spark-scan", "rows"), 1_000_000_000);
        assert_eq!(param("hadoop-wordcount", "bytes"), 322_122_547_200);
    }

    #[test]
    fn every_workload_defaults_to_three_repeats() {
        for spec in Catalog::builtin().workloads() {
            assert_eq!(spec.repeats, 3, "{}", spec.id);
        }
    }

    #[test]
    fn wordcount_byte_override_renders_in_binary_gb() {
        let catalog = Catalog::builtin();
        let spec = catalog.get("hadoop-wordcount").unwrap();
        let config = configure_workload(spec, &overrides(&[("bytes", 300 * BYTES_PER_GB)])).unwrap();
        assert!(config
            .lines
            .contains(&("datasize.bytes".to_string(), "322122547200".to_string())));
    }

    #[test]
    fn defaults_render_without_overrides() {
        let catalog = Catalog::builtin();
        let spec = catalog.get("spark-scan").unwrap();
        let config = configure_workload(spec, &BTreeMap::new()).unwrap();
        assert_eq!(config.profile_name, "default");
        assert_eq!(
            config.lines,
            vec![
                ("datasize.rows".to_string(), "1000000000".to_string()),
                ("run.repeats".to_string(), "3".to_string()),
            ]
        );
    }

    #[test]
    fn unknown_override_is_rejected() {
        let catalog = Catalog::builtin();
        let spec = catalog.get("hadoop-join").unwrap();
        let err = configure_workload(spec, &overrides(&[("k", 10)])).unwrap_err();
        assert!(matches!(err, CatalogError::UnknownParameter { .. }), "{err}");
    }

    #[test]
    fn zero_scale_is_rejected() {
        let catalog = Catalog::builtin();
        let spec = catalog.get("spark-scan").unwrap();
        let err = configure_workload(spec, &overrides(&[("rows", 0)])).unwrap_err();
        assert!(matches!(err, CatalogError::NonPositiveScale { .. }), "{err}");
    }

    #[test]
    fn repeats_override_is_honored() {
        let catalog = Catalog::builtin();
        let spec = catalog.get("spark-scan").unwrap();
        let config = configure_workload(spec, &overrides(&[("repeats", 5)])).unwrap();
        assert!(config
            .lines
            .contains(&("run.repeats".to_string(), "5".to_string())));
        assert_eq!(config.profile_name, "custom");
    }

    #[test]
    fn rendered_lines_are_sorted_and_stable() {
        let catalog = Catalog::builtin();
        let spec = catalog.get("hadoop-kmeans").unwrap();
        let a = configure_workload(spec, &BTreeMap::new()).unwrap();
        let b = configure_workload(spec, &BTreeMap::new()).unwrap();
        assert_eq!(a, b);
        let keys: Vec<&str> = a.lines.iter().map(|(k, _)| k.as_str()).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
    }

    #[test]
    fn conf_text_round_trips_scale_params() {
        let catalog = Catalog::builtin();
        for spec in catalog.workloads() {
            let config = configure_workload(spec, &BTreeMap::new()).unwrap();
            let (params, repeats) = parse_rendered_lines(&config.lines).unwrap();
            assert_eq!(params, spec.scale_params, "{}", spec.id);
            assert_eq!(repeats, spec.repeats);
        }
    }
}
