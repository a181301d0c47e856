//! Plot-ready time series.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};
use edbnet_core::econostats::{BankQuarterCoreness, BankQuarterFrequency, BankQuarterMetrics};
use edbnet_core::edb::feature_risk_correlation;
use edbnet_core::metrics::moving_average;
use edbnet_core::{Quarter, QuarterlyNetwork};
use serde::{Deserialize, Serialize};

use crate::artifacts::SimulationOutput;
use crate::io::NetworkMetricsRow;

/// One named quarterly series. Missing values are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(Quarter, Option<f64>)>,
}

impl Series {
    fn from_fn<T>(name: &str, rows: &[T], f: impl Fn(&T) -> (Quarter, Option<f64>)) -> Self {
        Self { name: name.into(), points: rows.iter().map(f).collect() }
    }

    /// Centered moving average; a window touching a missing value is missing.
    pub fn smoothed(&self, window: usize) -> Result<Vec<Option<f64>>> {
        let raw: Vec<f64> = self.points.iter().map(|(_, v)| v.unwrap_or(f64::NAN)).collect();
        let ma = moving_average(&raw, window).map_err(anyhow::Error::msg)?;
        Ok(ma.into_iter().map(|v| v.is_finite().then_some(v)).collect())
    }
}

pub fn network_series(rows: &[NetworkMetricsRow]) -> Vec<Series> {
    vec![
        Series::from_fn("n_banks", rows, |r| (r.quarter, Some(r.n_banks as f64))),
        Series::from_fn("n_links", rows, |r| (r.quarter, Some(r.n_links as f64))),
        Series::from_fn("density", rows, |r| (r.quarter, Some(r.density))),
        Series::from_fn("degree_skewness", rows, |r| (r.quarter, r.degree_skewness)),
        Series::from_fn("total_volume", rows, |r| (r.quarter, Some(r.total_volume))),
        Series::from_fn("volume_per_bank", rows, |r| (r.quarter, Some(r.volume_per_bank))),
        Series::from_fn("reciprocity", rows, |r| (r.quarter, Some(r.reciprocity))),
        Series::from_fn("clustering", rows, |r| (r.quarter, Some(r.clustering))),
        Series::from_fn("weighted_clustering", rows, |r| (r.quarter, Some(r.weighted_clustering))),
        Series::from_fn("efficiency", rows, |r| (r.quarter, Some(r.efficiency))),
    ]
}

/// Bankrupted fraction and liquidity loss, suffixed with the scenario name.
pub fn simulation_series(sim: &SimulationOutput) -> Vec<Series> {
    let name = sim.meta.scenario.as_ref().map(|s| s.name.clone()).unwrap_or_else(|| "unknown".into());
    let q = &sim.quarters;
    vec![
        Series::from_fn(&format!("bankrupted_fraction:{name}"), q, |r| {
            (r.quarter, Some(r.result.bankrupted_fraction_mean))
        }),
        Series::from_fn(&format!("bankrupted_fraction_se:{name}"), q, |r| {
            (r.quarter, Some(r.result.bankrupted_fraction_se()))
        }),
        Series::from_fn(&format!("liquidity_loss:{name}"), q, |r| {
            (r.quarter, Some(r.result.liquidity_loss_mean))
        }),
    ]
}

/// Inclusive window of quarters shaded as the crisis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrisisWindow {
    pub first: Quarter,
    pub last: Quarter,
}

impl CrisisWindow {
    pub fn contains(&self, q: Quarter) -> bool {
        self.first <= q && q <= self.last
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Long CSV `quarter,series,value,smoothed,crisis`.
pub fn write_series(path: &Path, series: &[Series], window: usize, crisis: CrisisWindow) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot create {}", path.display()))?;
    w.write_record(["quarter", "series", "value", "smoothed", "crisis"])?;
    for s in series {
        let smooth = s.smoothed(window).with_context(|| format!("smoothing {}", s.name))?;
        for ((q, v), sm) in s.points.iter().zip(smooth) {
            w.write_record([
                q.to_string(),
                s.name.clone(),
                fmt_opt(*v),
                fmt_opt(sm),
                u8::from(crisis.contains(*q)).to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Counts and volumes split by core and periphery membership.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BlockDecomposition {
    pub core_banks: usize,
    pub periphery_banks: usize,
    /// Indexed core-core, core-periphery, periphery-core, periphery-periphery
    /// (lender block first).
    pub links: [usize; 4],
    pub volume: [f64; 4],
}

pub const BLOCK_NAMES: [&str; 4] =
    ["core_core", "core_periphery", "periphery_core", "periphery_periphery"];

pub fn decompose(net: &QuarterlyNetwork, is_core: &[bool]) -> BlockDecomposition {
    let mut d = BlockDecomposition::default();
    d.core_banks = is_core.iter().filter(|&&c| c).count();
    d.periphery_banks = is_core.len() - d.core_banks;
    for (i, j, w) in net.graph.edges() {
        let b = 2 * usize::from(!is_core[i]) + usize::from(!is_core[j]);
        d.links[b] += 1;
        d.volume[b] += w;
    }
    d
}

/// Decomposition per quarter; quarters without coreness labels are skipped.
pub fn decompositions(
    networks: &[QuarterlyNetwork],
    coreness: &[BankQuarterCoreness],
) -> Result<Vec<(Quarter, BlockDecomposition)>> {
    let labels: BTreeMap<(Quarter, &str), u8> =
        coreness.iter().map(|c| ((c.quarter, c.bank.as_str()), c.coreness)).collect();
    let mut out = Vec::new();
    for net in networks {
        let is_core: Option<Vec<bool>> = net
            .bank_ids
            .iter()
            .map(|b| labels.get(&(net.quarter, b.as_str())).map(|&c| c == 1))
            .collect();
        match is_core {
            Some(is_core) => out.push((net.quarter, decompose(net, &is_core))),
            None if net.bank_ids.iter().any(|b| labels.contains_key(&(net.quarter, b.as_str()))) => {
                anyhow::bail!("coreness labels for {} do not cover every bank", net.quarter)
            }
            None => {}
        }
    }
    Ok(out)
}

/// Long CSV `quarter,quantity,block,value`.
pub fn write_decompositions(path: &Path, rows: &[(Quarter, BlockDecomposition)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot create {}", path.display()))?;
    w.write_record(["quarter", "quantity", "block", "value"])?;
    for (q, d) in rows {
        let q = q.to_string();
        w.write_record([q.as_str(), "banks", "core", &d.core_banks.to_string()])?;
        w.write_record([q.as_str(), "banks", "periphery", &d.periphery_banks.to_string()])?;
        for (b, name) in BLOCK_NAMES.iter().enumerate() {
            w.write_record([q.as_str(), "links", name, &d.links[b].to_string()])?;
        }
        for (b, name) in BLOCK_NAMES.iter().enumerate() {
            w.write_record([q.as_str(), "volume", name, &d.volume[b].to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub const CORRELATED_FEATURES: [&str; 4] = ["in_degree", "out_degree", "in_strength", "out_strength"];

/// Per-quarter Pearson correlation between each feature and the simulated
/// default frequency; `None` when a series is constant.
pub fn feature_correlations(
    metrics: &[BankQuarterMetrics],
    frequencies: &[BankQuarterFrequency],
) -> Vec<(Quarter, &'static str, Option<f64>)> {
    let freq: BTreeMap<(Quarter, &str), f64> =
        frequencies.iter().map(|f| ((f.quarter, f.bank.as_str()), f.default_frequency)).collect();
    let mut per_quarter: BTreeMap<Quarter, Vec<(f64, [f64; 4])>> = BTreeMap::new();
    for m in metrics {
        if let Some(&y) = freq.get(&(m.quarter, m.bank.as_str())) {
            let b = &m.metrics;
            per_quarter.entry(m.quarter).or_default().push((
                y,
                [b.in_degree as f64, b.out_degree as f64, b.in_strength, b.out_strength],
            ));
        }
    }
    let mut out = Vec::new();
    for (q, rows) in per_quarter {
        let risk: Vec<f64> = rows.iter().map(|r| r.0).collect();
        for (k, name) in CORRELATED_FEATURES.iter().enumerate() {
            let feature: Vec<f64> = rows.iter().map(|r| r.1[k]).collect();
            out.push((q, *name, feature_risk_correlation(&risk, &feature).ok()));
        }
    }
    out
}

pub fn write_correlations(path: &Path, rows: &[(Quarter, &'static str, Option<f64>)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot create {}", path.display()))?;
    w.write_record(["quarter", "feature", "correlation"])?;
    for (q, name, c) in rows {
        w.write_record([q.to_string(), name.to_string(), fmt_opt(*c)])?;
    }
    w.flush()?;
    Ok(())
}
