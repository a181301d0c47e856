//! Interbank lending networks and liquidity contagion.
//!
//! This crate holds the algorithmic core: quarterly network reconstruction
//! from overnight loan records, topological and weighted network metrics,
//! discrete core-periphery fitting, the Exposed-Distressed-Bankrupted (EDB)
//! contagion process, maximum-entropy null networks, and the statistics used
//! to relate network features to simulated default frequencies.
//!
//! Everything here is `no_std` (with `alloc`) and deterministic given a seed.
//! File formats, parallel execution and the command line live in the `edbnet`
//! companion crate.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod coreperiphery;
pub mod econostats;
pub mod edb;
pub mod graph;
pub mod linalg;
pub mod metrics;
pub mod netcore;
pub mod nullmodel;
pub mod special;
pub mod synth;

pub use coreperiphery::{cp_error, fit_core_periphery, CorePeripheryPartition, CpOptions};
pub use edb::{
    simulate_ensemble, simulate_once, BankState, ContagionModel, EnsembleResult, RunOutcome,
    ScenarioSpec, Shape, SimConfig,
};
pub use graph::WeightedDigraph;
pub use metrics::{bank_metrics, network_metrics, BankMetrics, NetworkMetrics};
pub use netcore::{
    build_quarterly_networks, Date, Maturity, QuarterlyNetwork, Quarter, TransactionRecord,
};
