//! Byte-for-byte golden checks of emitted recipes, plus parity between the
//! checked-in fixture files and their built-in counterparts.

use std::path::PathBuf;

use papb_core::cluster::{detect_environment, load_descriptor};
use papb_core::cost::CostModel;
use papb_core::harness::Scenario;
use papb_core::recipe::{emit_recipe_text, render_recipe, NodeKind};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn golden(name: &str) -> String {
    std::fs::read_to_string(fixture(&format!("golden/{name}"))).unwrap()
}

#[test]
fn gateway_recipe_matches_the_golden_files() {
    let desc = load_descriptor(fixture("cluster-8node.json")).unwrap();
    let profile = detect_environment(&desc).unwrap();
    let recipe = render_recipe(&profile, NodeKind::Gateway, None).unwrap();
    let text = emit_recipe_text(&recipe);
    assert_eq!(text.dockerfile, golden("gateway.Dockerfile"));
    assert_eq!(text.run_script, golden("gateway.run.sh"));
}

#[test]
fn normal_recipe_matches_the_golden_files() {
    let desc = load_descriptor(fixture("cluster-8node.json")).unwrap();
    let profile = detect_environment(&desc).unwrap();
    let recipe = render_recipe(&profile, NodeKind::Normal, Some("nn0")).unwrap();
    let text = emit_recipe_text(&recipe);
    assert_eq!(text.dockerfile, golden("normal.Dockerfile"));
    assert_eq!(text.run_script, golden("normal.run.sh"));
}

#[test]
fn shipped_scenario_fixture_matches_the_builtin() {
    let loaded = Scenario::load(fixture("scenario.json")).unwrap();
    assert_eq!(loaded, Scenario::shipped());
}

#[test]
fn cost_model_fixture_matches_the_builtin() {
    let loaded = CostModel::load(fixture("cost-model.json")).unwrap();
    assert_eq!(loaded, CostModel::builtin());
}

#[test]
fn cluster_fixtures_have_the_documented_shapes() {
    let eight = load_descriptor(fixture("cluster-8node.json")).unwrap();
    assert_eq!(papb_core::cluster::workload_node_count(&eight), 8);
    assert_eq!(eight.nodes.len(), 9);
    let four = load_descriptor(fixture("cluster-4node.json")).unwrap();
    assert_eq!(papb_core::cluster::workload_node_count(&four), 4);
    assert_eq!(four.nodes.len(), 5);
    assert_eq!(eight.name_node_host, "nn0");
    assert_eq!(four.name_node_host, "nn0");
}
