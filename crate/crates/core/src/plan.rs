//! Benchmark plans: which workloads to run and with which overrides.
//!
//! A plan can come from three places: a JSON plan file, the `--all`
//! shortcut, or an answer stream. The answer grammar is shared between
//! interactive sessions and scripted input:
//!
//! ```text
//! all                          # or a list of workload ids
//! set <workload-id> <param> <value>
//! done                         # optional, EOF also ends the stream
//! ```
//!
//! Values accept binary size suffixes (`kb`, `mb`, `gb`, `tb`), so
//! `set hadoop-wordcount bytes 300gb` scales wordcount to 300 binary GB.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::catalog::{configure_workload, parse_rendered_lines, Catalog, CatalogError, RenderedConfig, WorkloadSpec};

/// One planned workload with its overrides (short parameter names).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanEntry {
    pub workload_id: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub overrides: BTreeMap<String, u64>,
}

/// A plan covering every catalog workload at its defaults.
pub fn plan_all(catalog: &Catalog) -> Vec<PlanEntry> {
    catalog
        .ids()
        .map(|id| PlanEntry {
            workload_id: id.to_string(),
            overrides: BTreeMap::new(),
        })
        .collect()
}

pub fn load_plan(path: impl AsRef<Path>) -> Result<Vec<PlanEntry>, CatalogError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| CatalogError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(serde_json::from_str(&text)?)
}

pub fn save_plan(plan: &[PlanEntry], path: impl AsRef<Path>) -> Result<(), CatalogError> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(plan)? + "\n";
    std::fs::write(path, text).map_err(|source| CatalogError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Parses a scale value, honoring binary size suffixes.
pub fn parse_scale_value(text: &str) -> Result<u64, CatalogError> {
    let lower = text.trim().to_ascii_lowercase();
    let (digits, shift) = if let Some(d) = lower.strip_suffix("kb") {
        (d, 10)
    } else if let Some(d) = lower.strip_suffix("mb") {
        (d, 20)
    } else if let Some(d) = lower.strip_suffix("gb") {
        (d, 30)
    } else if let Some(d) = lower.strip_suffix("tb") {
        (d, 40)
    } else {
        (lower.as_str(), 0)
    };
    let base: u64 = digits
        .parse()
        .map_err(|_| CatalogError::BadValue(text.to_string()))?;
    base.checked_mul(1u64 << shift)
        .ok_or_else(|| CatalogError::BadValue(text.to_string()))
}

/// Builds a plan from an answer stream. The grammar is documented at module
/// level; ids are validated against the catalog as they are read.
pub fn parse_answers<I, S>(catalog: &Catalog, lines: I) -> Result<Vec<PlanEntry>, CatalogError>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut plan: Vec<PlanEntry> = Vec::new();
    let mut selected = false;
    for raw in lines {
        let line = raw.as_ref().trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line == "done" {
            break;
        }
        if !selected {
            for token in line.split([',', ' ', '\t']).filter(|t| !t.is_empty()) {
                if token == "all" {
                    if plan.is_empty() {
                        plan = plan_all(catalog);
                    } else {
                        return Err(CatalogError::BadAnswer(
                            line.to_string(),
                            "'all' cannot be combined with ids".into(),
                        ));
                    }
                } else if plan.iter().any(|e| e.workload_id == token) {
                    return Err(CatalogError::BadAnswer(
                        line.to_string(),
                        format!("{token:?} selected twice"),
                    ));
                } else if catalog.get(token).is_some() {
                    plan.push(PlanEntry {
                        workload_id: token.to_string(),
                        overrides: BTreeMap::new(),
                    });
                } else {
                    return Err(CatalogError::InvalidSelection(token.to_string()));
                }
            }
            selected = true;
            continue;
        }
        let mut parts = line.split_whitespace();
        match (parts.next(), parts.next(), parts.next(), parts.next(), parts.next()) {
            (Some("set"), Some(id), Some(param), Some(value), None) => {
                if catalog.get(id).is_none() {
                    return Err(CatalogError::InvalidSelection(id.to_string()));
                }
                let entry = plan
                    .iter_mut()
                    .find(|e| e.workload_id == id)
                    .ok_or_else(|| {
                        CatalogError::BadAnswer(
                            line.to_string(),
                            format!("{id:?} is not selected"),
                        )
                    })?;
                entry
                    .overrides
                    .insert(param.to_string(), parse_scale_value(value)?);
            }
            _ => {
                return Err(CatalogError::BadAnswer(
                    line.to_string(),
                    "expected 'set <id> <param> <value>' or 'done'".into(),
                ));
            }
        }
    }
    if plan.is_empty() {
        return Err(CatalogError::BadAnswer(
            String::new(),
            "no workloads selected".into(),
        ));
    }
    Ok(plan)
}

/// A plan entry resolved against the catalog, ready to execute.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedEntry {
    pub spec: WorkloadSpec,
    pub config: RenderedConfig,
    pub repeats: u32,
}

/// Validates every entry of a plan against the catalog and renders its
/// configuration.
pub fn resolve_plan(
    catalog: &Catalog,
    plan: &[PlanEntry],
) -> Result<Vec<ResolvedEntry>, CatalogError> {
    plan.iter()
        .map(|entry| {
            let spec = catalog
                .get(&entry.workload_id)
                .ok_or_else(|| CatalogError::InvalidSelection(entry.workload_id.clone()))?
                .clone();
            let config = configure_workload(&spec, &entry.overrides)?;
            let (_, repeats) = parse_rendered_lines(&config.lines)?;
            Ok(ResolvedEntry {
                spec,
                config,
                repeats,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_selects_the_whole_catalog_at_default_repeats() {
        let catalog = Catalog::builtin();
        let plan = parse_answers(&catalog, ["all"]).unwrap();
        assert_eq!(plan.len(), 13);
        let resolved = resolve_plan(&catalog, &plan).unwrap();
        assert!(resolved.iter().all(|e| e.repeats == 3));
    }

    #[test]
    fn single_selection_yields_one_entry() {
        let catalog = Catalog::builtin();
        let plan = parse_answers(&catalog, ["spark-scan", "done"]).unwrap();
        assert_eq!(plan.len(), 1);
        assert_eq!(plan[0].workload_id, "spark-scan");
    }

    #[test]
    fn unknown_workload_is_an_invalid_selection() {
        let catalog = Catalog::builtin();
        let err = parse_answers(&catalog, ["flink-sort"]).unwrap_err();
        assert!(matches!(err, CatalogError::InvalidSelection(id) if id == "flink-sort"));
    }

    #[test]
    fn set_lines_override_parameters() {
        let catalog = Catalog::builtin();
        let plan = parse_answers(
            &catalog,
            ["hadoop-wordcount spark-scan", "set hadoop-wordcount bytes 300gb", "done"],
        )
        .unwrap();
        assert_eq!(plan[0].overrides["bytes"], 322_122_547_200);
        assert!(plan[1].overrides.is_empty());
    }

    #[test]
    fn set_for_unselected_workload_is_rejected() {
        let catalog = Catalog::builtin();
        let err =
            parse_answers(&catalog, ["spark-scan", "set hadoop-join left_rows 10"]).unwrap_err();
        assert!(matches!(err, CatalogError::BadAnswer(..)), "{err}");
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let catalog = Catalog::builtin();
        let plan = parse_answers(&catalog, ["# pick one", "", "spark-scan"]).unwrap();
        assert_eq!(plan.len(), 1);
    }

    #[test]
    fn empty_answer_stream_is_rejected() {
        let catalog = Catalog::builtin();
        let err = parse_answers(&catalog, Vec::<&str>::new()).unwrap_err();
        assert!(matches!(err, CatalogError::BadAnswer(..)));
    }

    #[test]
    fn scale_values_accept_binary_suffixes() {
        assert_eq!(parse_scale_value("1000000000").unwrap(), 1_000_000_000);
        assert_eq!(parse_scale_value("300gb").unwrap(), 300 * (1 << 30));
        assert_eq!(parse_scale_value("300GB").unwrap(), 300 * (1 << 30));
        assert_eq!(parse_scale_value("4kb").unwrap(), 4096);
        assert_eq!(parse_scale_value("2tb").unwrap(), 2 * (1u64 << 40));
        assert!(parse_scale_value("lots").is_err());
        assert!(parse_scale_value("99999999999tb").is_err());
    }

    #[test]
    fn plan_files_round_trip() {
        let catalog = Catalog::builtin();
        let plan = parse_answers(
            &catalog,
            ["spark-scan hadoop-join", "set hadoop-join left_rows 1000"],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("plan.json");
        save_plan(&plan, &path).unwrap();
        assert_eq!(load_plan(&path).unwrap(), plan);
    }

    #[test]
    fn resolve_rejects_unknown_ids_and_parameters() {
        let catalog = Catalog::builtin();
        let unknown_id = vec![PlanEntry {
            workload_id: "flink-sort".into(),
            overrides: BTreeMap::new(),
        }];
        assert!(matches!(
            resolve_plan(&catalog, &unknown_id).unwrap_err(),
            CatalogError::InvalidSelection(_)
        ));
        let unknown_param = vec![PlanEntry {
            workload_id: "hadoop-join".into(),
            overrides: [("k".to_string(), 10u64)].into_iter().collect(),
        }];
        assert!(matches!(
            resolve_plan(&catalog, &unknown_param).unwrap_err(),
            CatalogError::UnknownParameter { .. }
        ));
    }

    #[test]
    fn resolved_repeats_follow_overrides() {
        let catalog = Catalog::builtin();
        let plan = parse_answers(&catalog, ["spark-scan", "set spark-scan repeats 5"]).unwrap();
        let resolved = resolve_plan(&catalog, &plan).unwrap();
        assert_eq!(resolved[0].repeats, 5);
    }
}
