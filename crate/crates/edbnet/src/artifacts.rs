//! JSON artifacts written by the subcommands.

use std::collections::BTreeMap;

use edbnet_core::econostats::RegressionResult;
use edbnet_core::edb::{EnsembleResult, ScenarioSpec};
use edbnet_core::nullmodel::NullTestReport;
use edbnet_core::Quarter;
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const TOOL: &str = "edbnet";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Provenance block embedded in every artifact. `config` holds the
/// subcommand's flags; the thread count is deliberately absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub rng_seed: Option<u64>,
    pub scenario: Option<ScenarioSpec>,
    pub config: Value,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, Value>,
}

impl Meta {
    pub fn new<C: Serialize>(command: &str, config: &C) -> Self {
        Self {
            tool: TOOL.into(),
            version: VERSION.into(),
            command: command.into(),
            rng_seed: None,
            scenario: None,
            config: serde_json::to_value(config).expect("flags serialize to JSON"),
            details: BTreeMap::new(),
        }
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.rng_seed = Some(seed);
        self
    }

    pub fn scenario(mut self, scenario: &ScenarioSpec) -> Self {
        self.scenario = Some(scenario.clone());
        self
    }

    pub fn detail<T: Serialize>(mut self, key: &str, value: &T) -> Self {
        self.details.insert(key.into(), serde_json::to_value(value).expect("serializable"));
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuarterSimulation {
    pub quarter: Quarter,
    pub n_banks: usize,
    pub n_seeds: usize,
    pub bank_ids: Vec<String>,
    pub result: EnsembleResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationOutput {
    pub meta: Meta,
    pub seed_density: f64,
    pub max_steps: u32,
    pub n_realizations: usize,
    pub quarters: Vec<QuarterSimulation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuarterNullTest {
    pub quarter: Quarter,
    pub n_banks: usize,
    pub report: NullTestReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullOutput {
    pub meta: Meta,
    pub quarters: Vec<QuarterNullTest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuarterPartition {
    pub quarter: Quarter,
    pub n_banks: usize,
    pub error_score: u64,
    pub core: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorePeripheryOutput {
    pub meta: Meta,
    pub quarters: Vec<QuarterPartition>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionOutput {
    pub meta: Meta,
    pub result: RegressionResult,
}
