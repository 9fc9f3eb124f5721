//! Core library for papb, a plug-and-play benchmark orchestrator for
//! Hadoop/Spark clusters.
//!
//! The pipeline runs in two phases. The *plug* phase reads a cluster
//! descriptor, detects the environment settings a container needs
//! ([`cluster`]) and renders build recipes for gateway or normal nodes
//! ([`recipe`]). The *play* phase selects workloads from the built-in
//! catalog ([`catalog`], [`plan`]), executes them repeatedly through a
//! pluggable executor ([`harness`]) and turns the measurements into
//! priced, plottable reports ([`cost`], [`report`]).

pub mod catalog;
pub mod cluster;
pub mod cost;
pub mod harness;
pub mod plan;
pub mod recipe;
pub mod report;
