//! Monetary cost of benchmark runs.
//!
//! A run on `n` nodes for `T` seconds costs the sum over nodes of
//! `rate * T / seconds-in-month`, where `rate` is the node's monthly VM
//! price. The sum is kept in that literal per-node form (left to right) so
//! clusters with mixed SKUs price correctly; for a uniform cluster it agrees
//! with the closed form `n * rate * T / seconds-in-month` to floating-point
//! accuracy.
//!
//! Totals are stored as [`Money`], an exact integer count of millionths of
//! the currency unit, so sums of quotes are reproducible. Display rounds
//! half-up to two decimals.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::{workload_node_count, ClusterDescriptor, NodeRole};
use crate::harness::RunResult;

/// Seconds in a billing month: 30 days of 24 hours.
pub const SECONDS_IN_MONTH: u64 = 2_592_000;

/// Monthly rate of the reference worker SKU, in GBP.
pub const STANDARD_DS14_V2_GBP: f64 = 821.0;

/// Exact currency amount in millionths of a unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Money(i64);

impl Money {
    pub const ZERO: Money = Money(0);

    /// Quantizes a non-negative amount of currency units, rounding half-up
    /// at the sixth decimal.
    pub fn from_units(units: f64) -> Money {
        debug_assert!(units >= 0.0);
        Money((units * 1e6 + 0.5).floor() as i64)
    }

    pub fn from_micros(micros: i64) -> Money {
        Money(micros)
    }

    pub fn micros(self) -> i64 {
        self.0
    }

    pub fn as_units(self) -> f64 {
        self.0 as f64 / 1e6
    }
}

impl std::ops::Add for Money {
    type Output = Money;

    fn add(self, rhs: Money) -> Money {
        Money(self.0 + rhs.0)
    }
}

impl std::iter::Sum for Money {
    fn sum<I: Iterator<Item = Money>>(iter: I) -> Money {
        iter.fold(Money::ZERO, |a, b| a + b)
    }
}

impl fmt::Display for Money {
    /// Two decimals, rounded half-up.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cents = (self.0 + 5_000).div_euclid(10_000);
        write!(f, "{}.{:02}", cents.div_euclid(100), cents.rem_euclid(100))
    }
}

/// Monthly VM rates per SKU plus the billing calendar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostModel {
    /// ISO-4217 code all rates are expressed in.
    pub currency: String,
    /// SKU name to monthly rate.
    pub cpm_by_sku: BTreeMap<String, f64>,
    #[serde(default = "default_seconds_in_month")]
    pub seconds_in_month: u64,
}

fn default_seconds_in_month() -> u64 {
    SECONDS_IN_MONTH
}

impl CostModel {
    /// The built-in model: the reference worker SKU priced in GBP.
    pub fn builtin() -> CostModel {
        CostModel {
            currency: "GBP".to_string(),
            cpm_by_sku: [("STANDARD_DS14_V2".to_string(), STANDARD_DS14_V2_GBP)]
                .into_iter()
                .collect(),
            seconds_in_month: SECONDS_IN_MONTH,
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<CostModel, CostError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| CostError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let model: CostModel = serde_json::from_str(&text)?;
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<(), CostError> {
        if self.seconds_in_month != SECONDS_IN_MONTH {
            return Err(CostError::InvalidModel(format!(
                "seconds_in_month must be {SECONDS_IN_MONTH}"
            )));
        }
        if self.cpm_by_sku.is_empty() {
            return Err(CostError::InvalidModel("no SKU rates".into()));
        }
        for (sku, rate) in &self.cpm_by_sku {
            if !rate.is_finite() || *rate <= 0.0 {
                return Err(CostError::InvalidModel(format!(
                    "non-positive rate for {sku:?}"
                )));
            }
        }
        Ok(())
    }

    pub fn rate(&self, sku: &str) -> Result<f64, CostError> {
        self.cpm_by_sku
            .get(sku)
            .copied()
            .ok_or_else(|| CostError::UnpricedSku(sku.to_string()))
    }
}

#[derive(Debug, Error)]
pub enum CostError {
    #[error("node count must be positive")]
    NonPositiveNodes,
    #[error("monthly rate must be positive")]
    NonPositiveRate,
    #[error("duration must be non-negative")]
    NegativeDuration,
    #[error("no rate for SKU {0:?}")]
    UnpricedSku(String),
    #[error("aggregate for {workload:?} ran on {actual} nodes but the cluster bills {expected}")]
    NodeCountMismatch {
        workload: String,
        expected: u32,
        actual: u32,
    },
    #[error("aggregate for {0:?} has no duration")]
    MissingDuration(String),
    #[error("invalid cost model: {0}")]
    InvalidModel(String),
    #[error("failed to read cost model {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed cost model: {0}")]
    Parse(#[from] serde_json::Error),
}

/// Cost of one run: `node_count` identical per-node terms summed left to
/// right. Full f64 precision; quantize with [`Money::from_units`] only when
/// storing.
pub fn compute_cost(
    node_count: u32,
    cpm: f64,
    duration_s: f64,
    model: &CostModel,
) -> Result<f64, CostError> {
    if node_count == 0 {
        return Err(CostError::NonPositiveNodes);
    }
    if !cpm.is_finite() || cpm <= 0.0 {
        return Err(CostError::NonPositiveRate);
    }
    if !duration_s.is_finite() || duration_s < 0.0 {
        return Err(CostError::NegativeDuration);
    }
    Ok(sum_per_node_terms(
        std::iter::repeat_n(cpm, node_count as usize),
        duration_s,
        model.seconds_in_month,
    ))
}

fn sum_per_node_terms(rates: impl Iterator<Item = f64>, duration_s: f64, seconds_in_month: u64) -> f64 {
    let month = seconds_in_month as f64;
    rates.fold(0.0, |acc, rate| acc + rate * duration_s / month)
}

/// Priced aggregate for one workload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostQuote {
    pub workload_id: String,
    pub node_count: u32,
    pub duration_s: f64,
    /// Mean per-node monthly rate; equals the SKU rate on uniform clusters.
    pub cpm: f64,
    pub cost_micros: Money,
}

/// A fully priced set of aggregates.
#[derive(Debug, Clone, PartialEq)]
pub struct PricedPlan {
    pub quotes: Vec<CostQuote>,
    pub total: Money,
}

/// Prices every aggregate against the descriptor's billable nodes (masters
/// and workers; gateways ride free). Each aggregate must have run on
/// exactly the descriptor's workload node count.
pub fn price_plan(
    aggregates: &[RunResult],
    desc: &ClusterDescriptor,
    model: &CostModel,
) -> Result<PricedPlan, CostError> {
    let rates: Vec<f64> = desc
        .nodes
        .iter()
        .filter(|n| n.role != NodeRole::Gateway)
        .map(|n| model.rate(&n.vm_sku))
        .collect::<Result<_, _>>()?;
    let expected = workload_node_count(desc);
    let mut quotes = Vec::with_capacity(aggregates.len());
    for aggregate in aggregates {
        if aggregate.node_count != expected {
            return Err(CostError::NodeCountMismatch {
                workload: aggregate.workload_id.clone(),
                expected,
                actual: aggregate.node_count,
            });
        }
        quotes.push(quote_for(aggregate, &rates, model)?);
    }
    let total = quotes.iter().map(|q| q.cost_micros).sum();
    Ok(PricedPlan { quotes, total })
}

/// Prices aggregates with an explicit per-node rate list. Lets callers price
/// results from a scaled-down run of a uniform cluster.
pub fn price_with_rates(
    aggregates: &[RunResult],
    rates: &[f64],
    model: &CostModel,
) -> Result<PricedPlan, CostError> {
    let mut quotes = Vec::with_capacity(aggregates.len());
    for aggregate in aggregates {
        if aggregate.node_count as usize != rates.len() {
            return Err(CostError::NodeCountMismatch {
                workload: aggregate.workload_id.clone(),
                expected: rates.len() as u32,
                actual: aggregate.node_count,
            });
        }
        quotes.push(quote_for(aggregate, rates, model)?);
    }
    let total = quotes.iter().map(|q| q.cost_micros).sum();
    Ok(PricedPlan { quotes, total })
}

fn quote_for(aggregate: &RunResult, rates: &[f64], model: &CostModel) -> Result<CostQuote, CostError> {
    let duration_s = aggregate
        .duration_s
        .ok_or_else(|| CostError::MissingDuration(aggregate.workload_id.clone()))?;
    if !duration_s.is_finite() || duration_s < 0.0 {
        return Err(CostError::NegativeDuration);
    }
    let cost = sum_per_node_terms(rates.iter().copied(), duration_s, model.seconds_in_month);
    Ok(CostQuote {
        workload_id: aggregate.workload_id.clone(),
        node_count: aggregate.node_count,
        duration_s,
        cpm: rates.iter().sum::<f64>() / rates.len() as f64,
        cost_micros: Money::from_units(cost),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::Engine;
    use crate::harness::{sim_epoch, RunResult};

    fn aggregate(id: &str, nodes: u32, duration: f64) -> RunResult {
        RunResult::completed(id, Engine::Hadoop, nodes, 0, duration, 1_000, sim_epoch())
    }

    fn uniform_descriptor(workers: u32) -> ClusterDescriptor {
        let mut nodes = vec![r#"{"hostname": "nn0", "role": "master", "vcpus": 16,
            "memory_gb": 112.0, "disk_tb": 1.0, "vm_sku": "STANDARD_DS14_V2"}"#
            .to_string()];
        for i in 0..workers {
            nodes.push(format!(
                r#"{{"hostname": "wk{i}", "role": "worker", "vcpus": 16,
                    "memory_gb": 112.0, "disk_tb": 1.0, "vm_sku": "STANDARD_DS14_V2"}}"#
            ));
        }
        nodes.push(r#"{"hostname": "gw0", "role": "gateway", "vcpus": 4,
            "memory_gb": 28.0, "disk_tb": 0.2, "vm_sku": "STANDARD_DS14_V2"}"#
            .to_string());
        ClusterDescriptor::from_json_str(&format!(
            r#"{{"framework": "HDP", "platform_version": "2.6.1.0-129",
                "region": "US East", "currency": "GBP", "nodes": [{}]}}"#,
            nodes.join(",")
        ))
        .unwrap()
    }

    #[test]
    fn four_node_join_costs_one_pound() {
        let cost = compute_cost(4, 821.0, 789.28, &CostModel::builtin()).unwrap();
        assert!((cost - 1.0).abs() < 0.0005, "{cost}");
    }

    #[test]
    fn eight_nodes_for_an_hour_cost_a_known_amount() {
        let cost = compute_cost(8, 821.0, 3600.0, &CostModel::builtin()).unwrap();
        let expected = 8.0 * 821.0 * 3600.0 / 2_592_000.0;
        assert!((cost - expected).abs() <= expected * 1e-12, "{cost}");
        assert!((cost - 9.1222).abs() < 0.0005, "{cost}");
    }

    #[test]
    fn zero_duration_costs_nothing() {
        assert_eq!(compute_cost(8, 821.0, 0.0, &CostModel::builtin()).unwrap(), 0.0);
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        let model = CostModel::builtin();
        assert!(matches!(
            compute_cost(0, 821.0, 10.0, &model).unwrap_err(),
            CostError::NonPositiveNodes
        ));
        assert!(matches!(
            compute_cost(4, 0.0, 10.0, &model).unwrap_err(),
            CostError::NonPositiveRate
        ));
        assert!(matches!(
            compute_cost(4, -1.0, 10.0, &model).unwrap_err(),
            CostError::NonPositiveRate
        ));
        assert!(matches!(
            compute_cost(4, 821.0, -1.0, &model).unwrap_err(),
            CostError::NegativeDuration
        ));
    }

    #[test]
    fn a_full_month_on_mixed_rates_costs_their_sum() {
        let model = CostModel {
            currency: "GBP".into(),
            cpm_by_sku: [("SMALL".to_string(), 100.0), ("LARGE".to_string(), 200.0)]
                .into_iter()
                .collect(),
            seconds_in_month: SECONDS_IN_MONTH,
        };
        let agg = aggregate("hadoop-join", 2, 2_592_000.0);
        let priced = price_with_rates(&[agg], &[100.0, 200.0], &model).unwrap();
        assert_eq!(priced.quotes[0].cost_micros, Money::from_units(300.0));
        assert_eq!(priced.quotes[0].cpm, 150.0);
    }

    #[test]
    fn price_plan_uses_billable_nodes_only() {
        let desc = uniform_descriptor(7);
        let model = CostModel::builtin();
        let agg = aggregate("hadoop-join", 8, 710.35);
        let priced = price_plan(&[agg], &desc, &model).unwrap();
        let expected = compute_cost(8, 821.0, 710.35, &model).unwrap();
        assert_eq!(priced.quotes[0].cost_micros, Money::from_units(expected));
        assert_eq!(priced.total, priced.quotes[0].cost_micros);
        assert!((priced.total.as_units() - 1.8).abs() < 0.005);
    }

    #[test]
    fn price_plan_rejects_mismatched_node_counts() {
        let desc = uniform_descriptor(7);
        let agg = aggregate("hadoop-join", 4, 789.28);
        let err = price_plan(&[agg], &desc, &CostModel::builtin()).unwrap_err();
        assert!(matches!(err, CostError::NodeCountMismatch { expected: 8, actual: 4, .. }));
    }

    #[test]
    fn unknown_sku_is_unpriced() {
        let desc = uniform_descriptor(3);
        let model = CostModel {
            currency: "GBP".into(),
            cpm_by_sku: [("OTHER".to_string(), 1.0)].into_iter().collect(),
            seconds_in_month: SECONDS_IN_MONTH,
        };
        let err = price_plan(&[aggregate("hadoop-join", 4, 10.0)], &desc, &model).unwrap_err();
        assert!(matches!(err, CostError::UnpricedSku(sku) if sku == "STANDARD_DS14_V2"));
    }

    #[test]
    fn totals_add_quotes_exactly() {
        let desc = uniform_descriptor(3);
        let model = CostModel::builtin();
        let aggregates = vec![
            aggregate("hadoop-join", 4, 789.28),
            aggregate("spark-scan", 4, 75.0),
            aggregate("hadoop-scan", 4, 210.0),
        ];
        let priced = price_plan(&aggregates, &desc, &model).unwrap();
        let sum: Money = priced.quotes.iter().map(|q| q.cost_micros).sum();
        assert_eq!(priced.total, sum);
    }

    #[test]
    fn money_displays_two_decimals_half_up() {
        assert_eq!(Money::from_units(1.0).to_string(), "1.00");
        assert_eq!(Money::from_units(1.799992).to_string(), "1.80");
        assert_eq!(Money::from_units(0.005).to_string(), "0.01");
        assert_eq!(Money::from_units(0.0049).to_string(), "0.00");
        assert_eq!(Money::from_units(12.3449).to_string(), "12.34");
        assert_eq!(Money::from_units(12.345).to_string(), "12.35");
    }

    #[test]
    fn money_quantizes_at_the_sixth_decimal() {
        assert_eq!(Money::from_units(1.0000004).micros(), 1_000_000);
        assert_eq!(Money::from_units(1.0000006).micros(), 1_000_001);
        assert_eq!(Money::ZERO.micros(), 0);
    }

    #[test]
    fn model_validation_catches_bad_calendars_and_rates() {
        let mut model = CostModel::builtin();
        model.seconds_in_month = 2_592_001;
        assert!(matches!(model.validate().unwrap_err(), CostError::InvalidModel(_)));
        let mut model = CostModel::builtin();
        model.cpm_by_sku.insert("FREE".into(), 0.0);
        assert!(matches!(model.validate().unwrap_err(), CostError::InvalidModel(_)));
        assert!(CostModel::builtin().validate().is_ok());
    }

    #[test]
    fn seconds_in_month_is_thirty_days() {
        assert_eq!(SECONDS_IN_MONTH, 30 * 24 * 3600);
    }
}
