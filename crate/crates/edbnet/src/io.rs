//! CSV and JSON file formats.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use edbnet_core::econostats::{BankQuarterCoreness, BankQuarterFrequency, BankQuarterMetrics};
use edbnet_core::metrics::{BankMetrics, NetworkMetrics};
use edbnet_core::netcore::{Date, Maturity, QuarterlyNetwork, Quarter, TransactionRecord};
use edbnet_core::WeightedDigraph;
use serde::{Deserialize, Serialize};

pub const TRANSACTIONS_HEADER: [&str; 7] =
    ["date", "time", "lender_id", "borrower_id", "amount", "rate", "maturity"];

fn open(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file))
}

fn create(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("cannot create directory {}", dir.display()))?;
    }
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(csv::Writer::from_writer(BufWriter::new(file)))
}

/// Parses `HH:MM:SS`, or a plain count of seconds.
pub fn parse_time(s: &str) -> Option<u32> {
    if s.is_empty() {
        return None;
    }
    if let Ok(secs) = s.parse::<u32>() {
        return (secs < 86_400).then_some(secs);
    }
    let mut parts = s.split(':').map(|p| p.parse::<u32>());
    let (h, m) = (parts.next()?.ok()?, parts.next()?.ok()?);
    let sec = match parts.next() {
        Some(v) => v.ok()?,
        None => 0,
    };
    if parts.next().is_some() || h > 23 || m > 59 || sec > 59 {
        return None;
    }
    Some(h * 3600 + m * 60 + sec)
}

pub fn format_time(secs: u32) -> String {
    format!("{:02}:{:02}:{:02}", secs / 3600, secs / 60 % 60, secs % 60)
}

#[derive(Debug, Deserialize)]
struct RawTransaction {
    date: String,
    time: String,
    lender_id: String,
    borrower_id: String,
    amount: String,
    rate: String,
    maturity: String,
}

/// Reads a transaction log. Record indices in errors count data rows from 0.
pub fn read_transactions(path: &Path) -> Result<Vec<TransactionRecord>> {
    let mut reader = open(path)?;
    let headers = reader.headers().with_context(|| format!("{}: bad header", path.display()))?;
    for name in TRANSACTIONS_HEADER {
        if !headers.iter().any(|h| h == name) {
            bail!("{}: missing column {name:?}", path.display());
        }
    }
    let mut out = Vec::new();
    for (index, row) in reader.deserialize::<RawTransaction>().enumerate() {
        let raw = row.with_context(|| format!("{}: record {index}", path.display()))?;
        let rec = parse_transaction(&raw)
            .map_err(|e| anyhow!("{}: record {index} rejected: {e}", path.display()))?;
        rec.validate(index)
            .map_err(|e| anyhow!("{}: record {index} rejected: {e}", path.display()))?;
        out.push(rec);
    }
    Ok(out)
}

fn parse_transaction(raw: &RawTransaction) -> Result<TransactionRecord, String> {
    let date: Date = raw.date.parse().map_err(|e| format!("{e}"))?;
    let time = if raw.time.is_empty() {
        None
    } else {
        Some(parse_time(&raw.time).ok_or_else(|| format!("bad time {:?}", raw.time))?)
    };
    let amount: f64 = raw.amount.parse().map_err(|_| format!("bad amount {:?}", raw.amount))?;
    let rate: f64 = if raw.rate.is_empty() {
        f64::NAN
    } else {
        raw.rate.parse().map_err(|_| format!("bad rate {:?}", raw.rate))?
    };
    let maturity: Maturity = raw.maturity.parse().map_err(|e| format!("{e}"))?;
    Ok(TransactionRecord {
        date,
        time,
        lender: raw.lender_id.clone(),
        borrower: raw.borrower_id.clone(),
        amount,
        rate,
        maturity,
    })
}

pub fn write_transactions(path: &Path, records: &[TransactionRecord]) -> Result<()> {
    let mut w = create(path)?;
    w.write_record(TRANSACTIONS_HEADER)?;
    for r in records {
        let rate = if r.rate.is_nan() { String::new() } else { r.rate.to_string() };
        w.write_record([
            r.date.to_string(),
            r.time.map(format_time).unwrap_or_default(),
            r.lender.clone(),
            r.borrower.clone(),
            r.amount.to_string(),
            rate,
            r.maturity.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct EdgeRow {
    quarter: Quarter,
    lender: String,
    borrower: String,
    weight: f64,
}

pub fn write_edges(path: &Path, networks: &[QuarterlyNetwork]) -> Result<()> {
    let mut w = create(path)?;
    for net in networks {
        for (i, j, weight) in net.graph.edges() {
            w.serialize(EdgeRow {
                quarter: net.quarter,
                lender: net.bank_ids[i].clone(),
                borrower: net.bank_ids[j].clone(),
                weight,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads an edge list back into quarterly networks; each quarter must be
/// weakly connected.
pub fn read_edges(path: &Path) -> Result<Vec<QuarterlyNetwork>> {
    let mut reader = open(path)?;
    let mut per_quarter: BTreeMap<Quarter, Vec<EdgeRow>> = BTreeMap::new();
    for (index, row) in reader.deserialize::<EdgeRow>().enumerate() {
        let row = row.with_context(|| format!("{}: edge {index}", path.display()))?;
        per_quarter.entry(row.quarter).or_default().push(row);
    }
    per_quarter
        .into_iter()
        .map(|(quarter, rows)| {
            let mut ids: Vec<String> =
                rows.iter().flat_map(|r| [r.lender.clone(), r.borrower.clone()]).collect();
            ids.sort_unstable();
            ids.dedup();
            let idx = |b: &str| ids.binary_search_by(|x| x.as_str().cmp(b)).expect("listed");
            let edges: Vec<_> =
                rows.iter().map(|r| (idx(&r.lender), idx(&r.borrower), r.weight)).collect();
            let graph = WeightedDigraph::from_edges(ids.len(), edges)
                .with_context(|| format!("{}: quarter {quarter}", path.display()))?;
            QuarterlyNetwork::new(quarter, ids, graph)
                .with_context(|| format!("{}: quarter {quarter}", path.display()))
        })
        .collect()
}

/// Global identifier registry, `index,bank_id`.
pub fn write_registry(path: &Path, ids: &[String]) -> Result<()> {
    let mut w = create(path)?;
    w.write_record(["index", "bank_id"])?;
    for (k, id) in ids.iter().enumerate() {
        w.write_record([k.to_string(), id.clone()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_network_metrics(path: &Path, rows: &[(Quarter, NetworkMetrics)]) -> Result<()> {
    let mut w = create(path)?;
    w.write_record([
        "quarter",
        "n_banks",
        "n_links",
        "density",
        "total_volume",
        "volume_per_bank",
        "degree_skewness",
        "reciprocity",
        "clustering",
        "weighted_clustering",
        "efficiency",
    ])?;
    for (q, m) in rows {
        w.write_record([
            q.to_string(),
            m.n_banks.to_string(),
            m.n_links.to_string(),
            m.density.to_string(),
            m.total_volume.to_string(),
            m.volume_per_bank.to_string(),
            m.degree_skewness.map(|v| v.to_string()).unwrap_or_default(),
            m.reciprocity.to_string(),
            m.clustering.to_string(),
            m.weighted_clustering.to_string(),
            m.efficiency.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One network-level row as read back from disk.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct NetworkMetricsRow {
    pub quarter: Quarter,
    pub n_banks: usize,
    pub n_links: usize,
    pub density: f64,
    pub total_volume: f64,
    pub volume_per_bank: f64,
    pub degree_skewness: Option<f64>,
    pub reciprocity: f64,
    pub clustering: f64,
    pub weighted_clustering: f64,
    pub efficiency: f64,
}

pub fn read_network_metrics(path: &Path) -> Result<Vec<NetworkMetricsRow>> {
    let mut reader = open(path)?;
    reader
        .deserialize()
        .enumerate()
        .map(|(k, r)| r.with_context(|| format!("{}: row {k}", path.display())))
        .collect()
}

pub const BANK_METRIC_NAMES: [&str; 10] = [
    "in_degree",
    "out_degree",
    "reciprocal_degree",
    "degree",
    "in_strength",
    "out_strength",
    "strength",
    "binary_clustering",
    "weighted_clustering",
    "betweenness",
];

fn metric_values(m: &BankMetrics) -> [f64; 10] {
    [
        m.in_degree as f64,
        m.out_degree as f64,
        m.reciprocal_degree as f64,
        m.degree as f64,
        m.in_strength,
        m.out_strength,
        m.strength,
        m.binary_clustering,
        m.weighted_clustering,
        m.betweenness,
    ]
}

/// Long format `quarter,bank,metric,value`.
pub fn write_bank_metrics(path: &Path, rows: &[BankQuarterMetrics]) -> Result<()> {
    let mut w = create(path)?;
    w.write_record(["quarter", "bank", "metric", "value"])?;
    for r in rows {
        for (name, v) in BANK_METRIC_NAMES.iter().zip(metric_values(&r.metrics)) {
            w.write_record([r.quarter.to_string(), r.bank.clone(), name.to_string(), v.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Deserialize)]
struct LongRow {
    quarter: Quarter,
    bank: String,
    metric: String,
    value: f64,
}

pub fn read_bank_metrics(path: &Path) -> Result<Vec<BankQuarterMetrics>> {
    let mut reader = open(path)?;
    let mut by_key: BTreeMap<(Quarter, String), [Option<f64>; 10]> = BTreeMap::new();
    for (k, row) in reader.deserialize::<LongRow>().enumerate() {
        let row = row.with_context(|| format!("{}: row {k}", path.display()))?;
        let slot = BANK_METRIC_NAMES
            .iter()
            .position(|&n| n == row.metric)
            .ok_or_else(|| anyhow!("{}: row {k}: unknown metric {:?}", path.display(), row.metric))?;
        by_key.entry((row.quarter, row.bank)).or_default()[slot] = Some(row.value);
    }
    by_key
        .into_iter()
        .map(|((quarter, bank), vals)| {
            let mut v = [0.0; 10];
            for (k, x) in vals.iter().enumerate() {
                v[k] = x.ok_or_else(|| {
                    anyhow!("{}: {bank} {quarter} lacks {}", path.display(), BANK_METRIC_NAMES[k])
                })?;
            }
            let metrics = BankMetrics {
                in_degree: v[0] as usize,
                out_degree: v[1] as usize,
                reciprocal_degree: v[2] as usize,
                degree: v[3] as usize,
                in_strength: v[4],
                out_strength: v[5],
                strength: v[6],
                binary_clustering: v[7],
                weighted_clustering: v[8],
                betweenness: v[9],
            };
            Ok(BankQuarterMetrics { quarter, bank, metrics })
        })
        .collect()
}

pub fn write_coreness(path: &Path, rows: &[BankQuarterCoreness]) -> Result<()> {
    let mut w = create(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_coreness(path: &Path) -> Result<Vec<BankQuarterCoreness>> {
    let mut reader = open(path)?;
    reader
        .deserialize()
        .enumerate()
        .map(|(k, r)| r.with_context(|| format!("{}: row {k}", path.display())))
        .collect()
}

pub fn write_frequencies(path: &Path, rows: &[BankQuarterFrequency]) -> Result<()> {
    let mut w = create(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_frequencies(path: &Path) -> Result<Vec<BankQuarterFrequency>> {
    let mut reader = open(path)?;
    reader
        .deserialize()
        .enumerate()
        .map(|(k, r)| r.with_context(|| format!("{}: row {k}", path.display())))
        .collect()
}

/// Writes pretty JSON followed by a newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("cannot create directory {}", dir.display()))?;
    }
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    serde_json::from_reader(std::io::BufReader::new(file))
        .with_context(|| format!("{}: invalid JSON", path.display()))
}

/// Path of the metadata file that describes a CSV artifact.
pub fn sidecar(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}
