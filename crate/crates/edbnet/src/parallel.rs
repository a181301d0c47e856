//! Parallel drivers for the embarrassingly parallel parts of the pipeline.
//!
//! Every task owns a counter-based random stream identified by its index, and
//! results are reduced in index order, so outputs do not depend on the number
//! of threads.

use anyhow::{Context, Result};
use edbnet_core::coreperiphery::{best_partition, fit_from_restart, CorePeripheryPartition, CpError};
use edbnet_core::edb::{
    simulate_once, ContagionModel, EdbError, EnsembleAccumulator, RunOutcome, SimConfig,
};
use edbnet_core::nullmodel::{
    assemble_report, null_sample_seed, sample_null, solve_decm, NullModelError, NullTestOptions,
    NullTestReport,
};
use edbnet_core::{CpOptions, WeightedDigraph};
use rayon::prelude::*;

/// Thread pool with `threads` workers; `None` uses rayon's default.
pub fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t);
    }
    builder.build().context("cannot start worker threads")
}

/// Runs all realizations of `config` in parallel and reduces them in
/// realization order.
pub fn simulate_ensemble(
    graph: &WeightedDigraph,
    config: &SimConfig,
) -> Result<EnsembleAccumulator, EdbError> {
    config.validate(graph.node_count())?;
    let model = ContagionModel::new(graph, &config.scenario)?;
    let runs: Vec<RunOutcome> = (0..config.n_realizations)
        .into_par_iter()
        .map(|r| simulate_once(&model, config, r))
        .collect::<Result<_, _>>()?;
    let mut acc = EnsembleAccumulator::new(model.out_strength());
    for run in &runs {
        acc.push(run);
    }
    Ok(acc)
}

/// Core-periphery fit with restarts evaluated in parallel.
pub fn fit_core_periphery(
    g: &WeightedDigraph,
    opts: &CpOptions,
) -> Result<CorePeripheryPartition, CpError> {
    let n = g.node_count();
    if n < 3 {
        return Err(CpError::TooFewBanks(n));
    }
    let fits: Vec<CorePeripheryPartition> = (0..opts.restarts.max(1))
        .into_par_iter()
        .map(|r| fit_from_restart(g, opts.seed, r))
        .collect();
    Ok(best_partition(fits).expect("at least one restart"))
}

/// Null-network KS test with null samples simulated in parallel; also
/// returns the sampled null graphs with their original bank indices.
pub fn null_risk_test(
    g: &WeightedDigraph,
    config: &SimConfig,
    opts: &NullTestOptions,
) -> Result<(NullTestReport, Vec<(WeightedDigraph, Vec<usize>)>), NullModelError> {
    let (params, log) = solve_decm(g, &opts.solver)?;
    let observed: Vec<f64> = simulate_ensemble(g, config)?
        .stats()
        .iter()
        .map(|s| s.bankrupted_fraction)
        .collect();
    let samples: Vec<(WeightedDigraph, Vec<usize>)> = (0..opts.n_null)
        .into_par_iter()
        .map(|k| sample_null(&params, null_sample_seed(opts.rng_seed, k)))
        .collect::<Result<_, _>>()?;
    let per_sample: Vec<Vec<f64>> = samples
        .par_iter()
        .map(|(sample, _)| {
            simulate_ensemble(sample, config)
                .map(|acc| acc.stats().iter().map(|s| s.bankrupted_fraction).collect())
        })
        .collect::<Result<_, _>>()?;
    let null: Vec<f64> = per_sample.into_iter().flatten().collect();
    let report = assemble_report(observed, null, opts, &params, &log)?;
    Ok((report, samples))
}
