//! Command line interface.

use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::{ArgAction, Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use edbnet_core::econostats::{
    build_panel, fe_regression, BankQuarterCoreness, BankQuarterFrequency, BankQuarterMetrics,
    ClusterBy, FeOptions, RegressorSet, TimeEffects,
};
use edbnet_core::edb::{ScenarioSpec, Shape, SimConfig};
use edbnet_core::metrics::{bank_metrics, network_metrics};
use edbnet_core::netcore::{bank_registry, build_quarterly_networks};
use edbnet_core::nullmodel::{NullTestOptions, SolverMethod, SolverOptions};
use edbnet_core::synth::{generate_with_truth, SynthSpec};
use edbnet_core::{CpOptions, Quarter, QuarterlyNetwork};
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::artifacts::{
    CorePeripheryOutput, Meta, NullOutput, QuarterNullTest, QuarterPartition, QuarterSimulation,
    RegressionOutput, SimulationOutput,
};
use crate::config::{self, FlagInfo};
use crate::{io, parallel, report};

#[derive(Debug, Parser)]
#[command(name = "edbnet", version, about = "Interbank network reconstruction and liquidity contagion")]
pub struct Cli {
    /// Defaults for the subcommand's flags: `key = value` lines, or an
    /// artifact's `.meta.json`. Flags on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic transaction log with planted core-periphery regimes.
    Synth(SynthArgs),
    /// Build quarterly overnight networks from a transaction log.
    Ingest(IngestArgs),
    /// Network-level and bank-level metrics per quarter.
    Metrics(MetricsArgs),
    /// Fit a discrete core-periphery partition per quarter.
    Coreperiphery(CoreperipheryArgs),
    /// Run the EDB contagion ensemble per quarter.
    Simulate(SimulateArgs),
    /// Compare observed contagion with DECM null networks.
    Null(NullArgs),
    /// Fixed-effects regression of default frequencies on bank features.
    Regress(RegressArgs),
    /// Bundle plot-ready series.
    Report(ReportArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Synth(_) => "synth",
            Command::Ingest(_) => "ingest",
            Command::Metrics(_) => "metrics",
            Command::Coreperiphery(_) => "coreperiphery",
            Command::Simulate(_) => "simulate",
            Command::Null(_) => "null",
            Command::Regress(_) => "regress",
            Command::Report(_) => "report",
        }
    }
}

fn parse_quarter(s: &str) -> Result<Quarter, String> {
    s.parse().map_err(|e: edbnet_core::netcore::NetError| e.to_string())
}

/// Beta shape parameters written `a,b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaParams {
    pub a: f64,
    pub b: f64,
}

impl FromStr for BetaParams {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("expected `a,b` with positive numbers, got {s:?}");
        let (a, b) = s.split_once(',').ok_or_else(bad)?;
        let a: f64 = a.trim().parse().map_err(|_| bad())?;
        let b: f64 = b.trim().parse().map_err(|_| bad())?;
        Shape::beta(a, b).map_err(|e| e.to_string())?;
        Ok(Self { a, b })
    }
}

impl fmt::Display for BetaParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.a, self.b)
    }
}

impl Serialize for BetaParams {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioName {
    LcLd,
    LcNld,
    NlcNld,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SynthArgs {
    /// Transaction log to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the planted core and bank activity as JSON.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Full generator specification as JSON; the flags below override it.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub n_banks: Option<usize>,
    #[arg(long)]
    pub core_fraction: Option<f64>,
    #[arg(long, value_parser = parse_quarter)]
    pub first_quarter: Option<Quarter>,
    #[arg(long, value_parser = parse_quarter)]
    pub last_quarter: Option<Quarter>,
    #[arg(long)]
    pub non_overnight_share: Option<f64>,
    /// Keep the market stationary.
    #[arg(long)]
    pub no_regimes: bool,
    #[arg(long, visible_alias = "seed")]
    pub rng_seed: Option<u64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct IngestArgs {
    /// Transaction log (`date,time,lender_id,borrower_id,amount,rate,maturity`).
    #[arg(long)]
    pub input: PathBuf,
    /// Edge list to write (`quarter,lender,borrower,weight`).
    #[arg(long)]
    pub edges: PathBuf,
    /// Bank identifier registry to write.
    #[arg(long)]
    pub registry: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MetricsArgs {
    #[arg(long)]
    pub edges: PathBuf,
    /// Network-level metrics, one row per quarter.
    #[arg(long)]
    pub network_out: PathBuf,
    /// Bank-level metrics in long format.
    #[arg(long)]
    pub bank_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CoreperipheryArgs {
    #[arg(long)]
    pub edges: PathBuf,
    /// Coreness labels (`quarter,bank,coreness`).
    #[arg(long)]
    pub out: PathBuf,
    /// Per-quarter error scores and core members as JSON.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    pub restarts: usize,
    #[arg(long, visible_alias = "seed")]
    pub rng_seed: Option<u64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimArgs {
    #[arg(long, value_enum, default_value_t = ScenarioName::LcLd)]
    pub scenario: ScenarioName,
    /// Replace the infection shape by `I_x(a, b)`.
    #[arg(long)]
    pub phi_beta: Option<BetaParams>,
    /// Replace the bankruptcy shape by `I_x(a, b)`.
    #[arg(long)]
    pub psi_beta: Option<BetaParams>,
    /// Initial fraction of distressed banks.
    #[arg(long, default_value_t = 0.01)]
    pub seed_density: f64,
    #[arg(long, default_value_t = 5000)]
    pub realizations: usize,
    #[arg(long, default_value_t = 100)]
    pub max_steps: u32,
    #[arg(long, visible_alias = "seed")]
    pub rng_seed: Option<u64>,
}

impl SimArgs {
    pub fn scenario_spec(&self) -> ScenarioSpec {
        let named = match self.scenario {
            ScenarioName::LcLd => ScenarioSpec::lc_ld(),
            ScenarioName::LcNld => ScenarioSpec::lc_nld(),
            ScenarioName::NlcNld => ScenarioSpec::nlc_nld(),
        };
        if self.phi_beta.is_none() && self.psi_beta.is_none() {
            return named;
        }
        let shape = |p: Option<BetaParams>, default: Shape| {
            p.map(|p| Shape::Beta { a: p.a, b: p.b }).unwrap_or(default)
        };
        ScenarioSpec::custom(shape(self.phi_beta, named.phi), shape(self.psi_beta, named.psi))
    }

    pub fn sim_config(&self, command: &str) -> Result<SimConfig> {
        let seed = require_seed(command, self.rng_seed)?;
        let mut c = SimConfig::new(self.scenario_spec(), self.seed_density, seed);
        c.n_realizations = self.realizations;
        c.max_steps = self.max_steps;
        Ok(c)
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long)]
    pub edges: PathBuf,
    /// Ensemble statistics per quarter as JSON.
    #[arg(long)]
    pub out: PathBuf,
    /// Per-bank default frequencies (`quarter,bank,default_frequency`).
    #[arg(long)]
    pub frequencies: Option<PathBuf>,
    /// Restrict to these quarters (repeatable).
    #[arg(long, value_parser = parse_quarter, action = ArgAction::Append)]
    pub quarter: Vec<Quarter>,
    #[command(flatten)]
    #[serde(flatten)]
    pub sim: SimArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverName {
    Newton,
    FixedPoint,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct NullArgs {
    #[arg(long)]
    pub edges: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Restrict to these quarters (repeatable).
    #[arg(long, value_parser = parse_quarter, action = ArgAction::Append)]
    pub quarter: Vec<Quarter>,
    /// Null networks sampled per quarter.
    #[arg(long, default_value_t = 100)]
    pub null_samples: usize,
    /// Money per weight quantum of the null model.
    #[arg(long, default_value_t = 0.1)]
    pub quantum: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_iter: usize,
    #[arg(long, value_enum, default_value_t = SolverName::Newton)]
    pub solver: SolverName,
    /// Leave the per-realization bankrupted fractions out of the output.
    #[arg(long)]
    pub summary_only: bool,
    /// Write the sampled null networks here, one CSV per quarter.
    #[arg(long)]
    pub samples_dir: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub sim: SimArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SetName {
    Binary,
    Weighted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimeEffectsName {
    Const,
    Dummies,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClusterName {
    Bank,
    Quarter,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RegressArgs {
    /// Bank-level metrics from `metrics --bank-out`.
    #[arg(long)]
    pub metrics: PathBuf,
    /// Coreness labels; required for the binary set.
    #[arg(long)]
    pub coreness: Option<PathBuf>,
    /// Default frequencies from `simulate --frequencies`.
    #[arg(long)]
    pub frequencies: PathBuf,
    #[arg(long, value_enum, default_value_t = SetName::Binary)]
    pub set: SetName,
    /// First quarter of the crisis dummy.
    #[arg(long, value_parser = parse_quarter, default_value = "2008Q4")]
    pub crisis_quarter: Quarter,
    #[arg(long, value_enum, default_value_t = TimeEffectsName::Const)]
    pub time_effects: TimeEffectsName,
    #[arg(long, value_enum, default_value_t = ClusterName::Bank)]
    pub cluster: ClusterName,
    #[arg(long)]
    pub out: PathBuf,
    /// Human-readable coefficient table.
    #[arg(long)]
    pub table: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ReportArgs {
    /// Network metrics from `metrics --network-out`.
    #[arg(long)]
    pub network_metrics: PathBuf,
    /// Simulation outputs, one per scenario (repeatable).
    #[arg(long, action = ArgAction::Append)]
    pub simulation: Vec<PathBuf>,
    /// Edge list; with `--coreness` adds the core-periphery decomposition.
    #[arg(long)]
    pub edges: Option<PathBuf>,
    #[arg(long)]
    pub coreness: Option<PathBuf>,
    /// Bank metrics; with `--frequencies` adds feature-risk correlations.
    #[arg(long)]
    pub bank_metrics: Option<PathBuf>,
    #[arg(long)]
    pub frequencies: Option<PathBuf>,
    /// Moving-average window (odd).
    #[arg(long, default_value_t = 5)]
    pub window: usize,
    #[arg(long, value_parser = parse_quarter, default_value = "2007Q3")]
    pub crisis_first: Quarter,
    #[arg(long, value_parser = parse_quarter, default_value = "2009Q1")]
    pub crisis_last: Quarter,
    #[arg(long)]
    pub out_dir: PathBuf,
}

fn require_seed(command: &str, seed: Option<u64>) -> Result<u64> {
    seed.with_context(|| {
        format!("`{command}` is randomized and needs --rng-seed (or rng-seed in a config file)")
    })
}

/// Fails when two of the named paths coincide.
fn distinct_paths(paths: &[(&str, Option<&Path>)]) -> Result<()> {
    let given: Vec<(&str, &Path)> = paths.iter().filter_map(|(n, p)| p.map(|p| (*n, p))).collect();
    for (k, (a, pa)) in given.iter().enumerate() {
        for (b, pb) in &given[k + 1..] {
            if pa == pb {
                bail!("--{a} and --{b} both name {}", pa.display());
            }
        }
    }
    Ok(())
}

fn select_quarters(networks: Vec<QuarterlyNetwork>, wanted: &[Quarter]) -> Result<Vec<QuarterlyNetwork>> {
    if wanted.is_empty() {
        return Ok(networks);
    }
    for q in wanted {
        if !networks.iter().any(|n| n.quarter == *q) {
            bail!("quarter {q} is not in the edge list");
        }
    }
    Ok(networks.into_iter().filter(|n| wanted.contains(&n.quarter)).collect())
}

pub fn synth(args: &SynthArgs) -> Result<()> {
    let seed = require_seed("synth", args.rng_seed)?;
    distinct_paths(&[
        ("out", Some(&args.out)),
        ("truth", args.truth.as_deref()),
        ("spec", args.spec.as_deref()),
    ])?;
    let mut spec: SynthSpec = match &args.spec {
        Some(p) => io::read_json(p)?,
        None => SynthSpec::default(),
    };
    spec.rng_seed = seed;
    if let Some(n) = args.n_banks {
        spec.n_banks = n;
    }
    if let Some(f) = args.core_fraction {
        spec.core_fraction = f;
    }
    if let Some(q) = args.first_quarter {
        spec.first_quarter = q;
    }
    if let Some(q) = args.last_quarter {
        spec.last_quarter = q;
    }
    if let Some(s) = args.non_overnight_share {
        spec.non_overnight_share = s;
    }
    if args.no_regimes {
        spec.regimes.clear();
    }
    let (records, truth) = generate_with_truth(&spec)?;
    io::write_transactions(&args.out, &records)?;
    let meta = Meta::new("synth", args).seed(seed).detail("spec", &spec);
    io::write_json(&io::sidecar(&args.out), &meta)?;
    if let Some(p) = &args.truth {
        io::write_json(p, &serde_json::json!({ "meta": meta, "truth": truth }))?;
    }
    eprintln!("synth: {} records for {} banks", records.len(), spec.n_banks);
    Ok(())
}

pub fn ingest(args: &IngestArgs) -> Result<()> {
    distinct_paths(&[
        ("input", Some(&args.input)),
        ("edges", Some(&args.edges)),
        ("registry", args.registry.as_deref()),
    ])?;
    let records = io::read_transactions(&args.input)?;
    let networks = build_quarterly_networks(&records)
        .with_context(|| format!("{}", args.input.display()))?;
    io::write_edges(&args.edges, &networks)?;
    let sizes: Vec<serde_json::Value> = networks
        .iter()
        .map(|n| serde_json::json!({"quarter": n.quarter, "n_banks": n.n_banks(), "n_links": n.graph.edge_count()}))
        .collect();
    io::write_json(&io::sidecar(&args.edges), &Meta::new("ingest", args).detail("quarters", &sizes))?;
    if let Some(p) = &args.registry {
        io::write_registry(p, &bank_registry(&records))?;
        io::write_json(&io::sidecar(p), &Meta::new("ingest", args))?;
    }
    eprintln!("ingest: {} records, {} quarters", records.len(), networks.len());
    Ok(())
}

pub fn metrics(args: &MetricsArgs) -> Result<()> {
    distinct_paths(&[
        ("edges", Some(&args.edges)),
        ("network-out", Some(&args.network_out)),
        ("bank-out", args.bank_out.as_deref()),
    ])?;
    let networks = io::read_edges(&args.edges)?;
    let per_quarter: Vec<_> = networks
        .par_iter()
        .map(|net| {
            let m = network_metrics(&net.graph).with_context(|| format!("quarter {}", net.quarter))?;
            let banks = args.bank_out.as_ref().map(|_| {
                bank_metrics(&net.graph)
                    .into_iter()
                    .zip(&net.bank_ids)
                    .map(|(metrics, bank)| BankQuarterMetrics { quarter: net.quarter, bank: bank.clone(), metrics })
                    .collect::<Vec<_>>()
            });
            Ok::<_, anyhow::Error>(((net.quarter, m), banks))
        })
        .collect::<Result<_>>()?;
    let (rows, banks): (Vec<_>, Vec<_>) = per_quarter.into_iter().unzip();
    let meta = Meta::new("metrics", args)
        .detail("skewness_estimator", &edbnet_core::metrics::SKEWNESS_ESTIMATOR)
        .detail("betweenness_normalization", &edbnet_core::metrics::BETWEENNESS_NORMALIZATION);
    io::write_network_metrics(&args.network_out, &rows)?;
    io::write_json(&io::sidecar(&args.network_out), &meta)?;
    if let Some(p) = &args.bank_out {
        let flat: Vec<BankQuarterMetrics> = banks.into_iter().flatten().flatten().collect();
        io::write_bank_metrics(p, &flat)?;
        io::write_json(&io::sidecar(p), &meta)?;
    }
    Ok(())
}

pub fn coreperiphery(args: &CoreperipheryArgs) -> Result<()> {
    let seed = require_seed("coreperiphery", args.rng_seed)?;
    distinct_paths(&[
        ("edges", Some(&args.edges)),
        ("out", Some(&args.out)),
        ("summary", args.summary.as_deref()),
    ])?;
    let networks = io::read_edges(&args.edges)?;
    let opts = CpOptions { restarts: args.restarts, seed };
    let mut labels = Vec::new();
    let mut summary = Vec::new();
    for net in &networks {
        let fit = parallel::fit_core_periphery(&net.graph, &opts)
            .with_context(|| format!("quarter {}", net.quarter))?;
        for (bank, &c) in net.bank_ids.iter().zip(&fit.coreness) {
            labels.push(BankQuarterCoreness { quarter: net.quarter, bank: bank.clone(), coreness: c });
        }
        summary.push(QuarterPartition {
            quarter: net.quarter,
            n_banks: net.n_banks(),
            error_score: fit.error_score,
            core: fit.core.iter().map(|&k| net.bank_ids[k].clone()).collect(),
        });
    }
    let meta = Meta::new("coreperiphery", args).seed(seed);
    io::write_coreness(&args.out, &labels)?;
    io::write_json(&io::sidecar(&args.out), &meta)?;
    if let Some(p) = &args.summary {
        io::write_json(p, &CorePeripheryOutput { meta, quarters: summary })?;
    }
    Ok(())
}

pub fn simulate(args: &SimulateArgs) -> Result<()> {
    let config = args.sim.sim_config("simulate")?;
    distinct_paths(&[
        ("edges", Some(&args.edges)),
        ("out", Some(&args.out)),
        ("frequencies", args.frequencies.as_deref()),
    ])?;
    let networks = select_quarters(io::read_edges(&args.edges)?, &args.quarter)?;
    let mut quarters = Vec::with_capacity(networks.len());
    let mut freqs = Vec::new();
    for net in &networks {
        let n_seeds = config.validate(net.n_banks()).with_context(|| format!("quarter {}", net.quarter))?;
        let result = parallel::simulate_ensemble(&net.graph, &config)
            .with_context(|| format!("quarter {}", net.quarter))?
            .finish();
        for (bank, &f) in net.bank_ids.iter().zip(&result.per_bank_default_frequency) {
            freqs.push(BankQuarterFrequency { quarter: net.quarter, bank: bank.clone(), default_frequency: f });
        }
        quarters.push(QuarterSimulation {
            quarter: net.quarter,
            n_banks: net.n_banks(),
            n_seeds,
            bank_ids: net.bank_ids.clone(),
            result,
        });
    }
    let meta = Meta::new("simulate", args).seed(config.rng_seed).scenario(&config.scenario);
    if let Some(p) = &args.frequencies {
        io::write_frequencies(p, &freqs)?;
        io::write_json(&io::sidecar(p), &meta)?;
    }
    io::write_json(
        &args.out,
        &SimulationOutput {
            meta,
            seed_density: config.seed_density,
            max_steps: config.max_steps,
            n_realizations: config.n_realizations,
            quarters,
        },
    )
}

fn write_null_samples(
    path: &Path,
    net: &QuarterlyNetwork,
    samples: &[(edbnet_core::WeightedDigraph, Vec<usize>)],
) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot create {}", path.display()))?;
    w.write_record(["sample", "lender", "borrower", "weight"])?;
    for (k, (g, nodes)) in samples.iter().enumerate() {
        for (i, j, weight) in g.edges() {
            w.write_record([
                k.to_string(),
                net.bank_ids[nodes[i]].clone(),
                net.bank_ids[nodes[j]].clone(),
                weight.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn null(args: &NullArgs) -> Result<()> {
    let config = args.sim.sim_config("null")?;
    distinct_paths(&[
        ("edges", Some(&args.edges)),
        ("out", Some(&args.out)),
        ("samples-dir", args.samples_dir.as_deref()),
    ])?;
    let networks = select_quarters(io::read_edges(&args.edges)?, &args.quarter)?;
    let opts = NullTestOptions {
        n_null: args.null_samples,
        rng_seed: config.rng_seed,
        solver: SolverOptions {
            tol: args.tol,
            max_iter: args.max_iter,
            quantum: args.quantum,
            method: match args.solver {
                SolverName::Newton => SolverMethod::Newton,
                SolverName::FixedPoint => SolverMethod::FixedPoint,
            },
            ..SolverOptions::default()
        },
    };
    if let Some(dir) = &args.samples_dir {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create directory {}", dir.display()))?;
    }
    let mut quarters = Vec::with_capacity(networks.len());
    for net in &networks {
        let (mut report, samples) = parallel::null_risk_test(&net.graph, &config, &opts)
            .with_context(|| format!("quarter {}", net.quarter))?;
        if let Some(dir) = &args.samples_dir {
            write_null_samples(&dir.join(format!("null_{}.csv", net.quarter)), net, &samples)?;
        }
        if args.summary_only {
            report.observed.clear();
            report.null.clear();
        }
        quarters.push(QuarterNullTest { quarter: net.quarter, n_banks: net.n_banks(), report });
    }
    let meta = Meta::new("null", args).seed(config.rng_seed).scenario(&config.scenario);
    io::write_json(&args.out, &NullOutput { meta, quarters })
}

pub fn regress(args: &RegressArgs) -> Result<()> {
    distinct_paths(&[
        ("metrics", Some(&args.metrics)),
        ("coreness", args.coreness.as_deref()),
        ("frequencies", Some(&args.frequencies)),
        ("out", Some(&args.out)),
        ("table", args.table.as_deref()),
    ])?;
    let set = match args.set {
        SetName::Binary => RegressorSet::Binary,
        SetName::Weighted => RegressorSet::Weighted,
    };
    let metrics = io::read_bank_metrics(&args.metrics)?;
    let coreness = match &args.coreness {
        Some(p) => io::read_coreness(p)?,
        None if set == RegressorSet::Binary => bail!("the binary set needs --coreness"),
        None => Vec::new(),
    };
    let frequencies = io::read_frequencies(&args.frequencies)?;
    let panel = build_panel(&metrics, &coreness, &frequencies, set, args.crisis_quarter)?;
    let opts = FeOptions {
        time_effects: match args.time_effects {
            TimeEffectsName::Const => TimeEffects::Const,
            TimeEffectsName::Dummies => TimeEffects::Dummies,
        },
        cluster: match args.cluster {
            ClusterName::Bank => ClusterBy::Bank,
            ClusterName::Quarter => ClusterBy::Quarter,
        },
    };
    let result = fe_regression(&panel, &opts)?;
    if let Some(p) = &args.table {
        std::fs::write(p, result.to_table()).with_context(|| format!("cannot write {}", p.display()))?;
    }
    io::write_json(&args.out, &RegressionOutput { meta: Meta::new("regress", args), result })
}

pub fn report(args: &ReportArgs) -> Result<()> {
    let window = report::CrisisWindow { first: args.crisis_first, last: args.crisis_last };
    if window.first > window.last {
        bail!("crisis window {} - {} is empty", window.first, window.last);
    }
    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("cannot create directory {}", args.out_dir.display()))?;
    let rows = io::read_network_metrics(&args.network_metrics)?;
    let mut series = report::network_series(&rows);
    for p in &args.simulation {
        let sim: SimulationOutput = io::read_json(p)?;
        series.extend(report::simulation_series(&sim));
    }
    let mut files = vec!["series.csv".to_string()];
    report::write_series(&args.out_dir.join("series.csv"), &series, args.window, window)?;

    match (&args.edges, &args.coreness) {
        (Some(e), Some(c)) => {
            let d = report::decompositions(&io::read_edges(e)?, &io::read_coreness(c)?)?;
            report::write_decompositions(&args.out_dir.join("cp_decomposition.csv"), &d)?;
            files.push("cp_decomposition.csv".into());
        }
        (None, None) => {}
        _ => bail!("--edges and --coreness go together"),
    }
    match (&args.bank_metrics, &args.frequencies) {
        (Some(m), Some(f)) => {
            let c = report::feature_correlations(&io::read_bank_metrics(m)?, &io::read_frequencies(f)?);
            report::write_correlations(&args.out_dir.join("correlations.csv"), &c)?;
            files.push("correlations.csv".into());
        }
        (None, None) => {}
        _ => bail!("--bank-metrics and --frequencies go together"),
    }
    let names: Vec<&str> = series.iter().map(|s| s.name.as_str()).collect();
    let meta = Meta::new("report", args)
        .detail("crisis_window", &window)
        .detail("moving_average_window", &args.window)
        .detail("series", &names)
        .detail("files", &files);
    io::write_json(&args.out_dir.join("report.json"), &meta)
}

fn flag_infos(cmd: &clap::Command) -> Vec<FlagInfo> {
    cmd.get_arguments()
        .filter_map(|a| {
            let long = a.get_long()?.to_string();
            let aliases = a.get_all_aliases().unwrap_or_default().into_iter().map(String::from).collect();
            let takes_value = a.get_num_args().map_or(true, |n| n.takes_values());
            Some(FlagInfo { long, aliases, takes_value })
        })
        .filter(|f| f.long != "config" && f.long != "threads" && f.long != "help")
        .collect()
}

/// Finds `--config` and the subcommand name without a full parse, so that
/// config entries can be injected before clap checks required flags.
fn prescan(argv: &[OsString], root: &clap::Command) -> (Option<PathBuf>, Option<String>) {
    let mut config = None;
    let mut sub = None;
    let mut it = argv.iter().skip(1);
    while let Some(a) = it.next() {
        let Some(s) = a.to_str() else { continue };
        if s == "--config" {
            config = it.next().map(PathBuf::from);
        } else if let Some(p) = s.strip_prefix("--config=") {
            config = Some(PathBuf::from(p));
        } else if sub.is_none() && root.find_subcommand(s).is_some() {
            sub = Some(s.to_string());
        }
    }
    (config, sub)
}

/// Parses `argv` (including the program name), applying any config file.
pub fn parse(argv: impl IntoIterator<Item = impl Into<OsString>>) -> Result<Cli, clap::Error> {
    let mut argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let mut root = Cli::command();
    if let (Some(path), Some(sub)) = prescan(&argv, &root) {
        let sub_cmd = root.find_subcommand_mut(&sub).expect("found by prescan").clone();
        let applied = config::load(&path)
            .and_then(|entries| config::inject(&mut argv, &entries, &flag_infos(&sub_cmd)));
        if let Err(e) = applied {
            return Err(root.error(clap::error::ErrorKind::InvalidValue, format!("{e:#}")));
        }
    }
    let matches = root.try_get_matches_from_mut(argv)?;
    Cli::from_arg_matches(&matches)
}

pub fn execute(cli: &Cli) -> Result<()> {
    let pool = parallel::thread_pool(cli.threads)?;
    pool.install(|| match &cli.command {
        Command::Synth(a) => synth(a),
        Command::Ingest(a) => ingest(a),
        Command::Metrics(a) => metrics(a),
        Command::Coreperiphery(a) => coreperiphery(a),
        Command::Simulate(a) => simulate(a),
        Command::Null(a) => null(a),
        Command::Regress(a) => regress(a),
        Command::Report(a) => report(a),
    })
    .with_context(|| format!("{} failed", cli.command.name()))
}

/// Entry point: parses, runs, prints diagnostics and returns the exit code.
pub fn run(argv: impl IntoIterator<Item = impl Into<OsString>>) -> i32 {
    let cli = match parse(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}
