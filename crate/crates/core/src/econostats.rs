//! Two-sample Kolmogorov-Smirnov test and the bank fixed-effects panel
//! regression of default frequencies on network features.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{Matrix, Qr};
use crate::metrics::BankMetrics;
use crate::netcore::Quarter;
use crate::special::{kolmogorov_sf, two_sided_normal_p};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("sample {0} is empty")]
    EmptySample(&'static str),
    #[error("sample {0} contains a non-finite value")]
    NonFinite(&'static str),
    #[error("panel has no observations")]
    EmptyPanel,
    #[error("inputs are misaligned; orphan bank-quarters: {}", list_orphans(.0))]
    Orphans(Vec<Orphan>),
    #[error("duplicate observation for bank {bank} in {quarter} ({source_name})")]
    DuplicateKey { bank: String, quarter: Quarter, source_name: &'static str },
    #[error("regression needs at least 2 banks, got {0}")]
    TooFewGroups(usize),
    #[error("regression needs more observations ({n}) than coefficients ({k})")]
    TooFewObservations { n: usize, k: usize },
    #[error("collinear design: column {column} is a linear combination of {}", .depends_on.join(", "))]
    Collinear { column: String, depends_on: Vec<String> },
    #[error("panel row {row} has {got} regressors, expected {expected}")]
    RowWidth { row: usize, got: usize, expected: usize },
}

fn list_orphans(orphans: &[Orphan]) -> String {
    let mut s = String::new();
    for (k, o) in orphans.iter().enumerate() {
        if k > 0 {
            s.push_str("; ");
        }
        let _ = write!(s, "{} {} missing from {}", o.bank, o.quarter, o.missing_from);
    }
    s
}

/// Result of a two-sample Kolmogorov-Smirnov test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub d: f64,
    pub p_value: f64,
    pub n_a: usize,
    pub n_b: usize,
    /// `sqrt(n_a n_b / (n_a + n_b)) * d`, the argument of the limiting law.
    pub lambda: f64,
}

/// Two-sample KS test with the asymptotic Kolmogorov p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult, StatsError> {
    if a.is_empty() {
        return Err(StatsError::EmptySample("a"));
    }
    if b.is_empty() {
        return Err(StatsError::EmptySample("b"));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite("a"));
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite("b"));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_unstable_by(f64::total_cmp);
    b.sort_unstable_by(f64::total_cmp);
    let (na, nb) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    // Evaluate both right-continuous CDFs after each distinct value.
    while i < na && j < nb {
        let v = a[i].min(b[j]);
        while i < na && a[i] <= v {
            i += 1;
        }
        while j < nb && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na as f64 - j as f64 / nb as f64).abs());
    }
    let effective = (na as f64 * nb as f64) / (na + nb) as f64;
    let lambda = libm::sqrt(effective) * d;
    Ok(KsResult { d, p_value: kolmogorov_sf(lambda), n_a: na, n_b: nb, lambda })
}

/// Feature families used as regressors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegressorSet {
    Binary,
    Weighted,
}

impl RegressorSet {
    pub fn names(self) -> &'static [&'static str] {
        match self {
            RegressorSet::Binary => &["in_degree", "out_degree", "binary_clustering", "coreness"],
            RegressorSet::Weighted => {
                &["in_strength", "out_strength", "weighted_clustering", "betweenness"]
            }
        }
    }

    fn values(self, m: &BankMetrics, coreness: Option<u8>) -> Vec<f64> {
        match self {
            RegressorSet::Binary => vec![
                m.in_degree as f64,
                m.out_degree as f64,
                m.binary_clustering,
                f64::from(coreness.unwrap_or(0)),
            ],
            RegressorSet::Weighted => {
                vec![m.in_strength, m.out_strength, m.weighted_clustering, m.betweenness]
            }
        }
    }
}

impl core::str::FromStr for RegressorSet {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "binary" => Ok(Self::Binary),
            "weighted" => Ok(Self::Weighted),
            other => Err(format!("unknown regressor set {other:?} (binary or weighted)")),
        }
    }
}

/// Network features of one bank in one quarter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BankQuarterMetrics {
    pub quarter: Quarter,
    pub bank: String,
    pub metrics: BankMetrics,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BankQuarterCoreness {
    pub quarter: Quarter,
    pub bank: String,
    pub coreness: u8,
}

/// Simulated default frequency, a share in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BankQuarterFrequency {
    pub quarter: Quarter,
    pub bank: String,
    pub default_frequency: f64,
}

/// A bank-quarter present in some inputs but not in `missing_from`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Orphan {
    pub bank: String,
    pub quarter: Quarter,
    pub missing_from: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelRow {
    pub bank: String,
    pub quarter: Quarter,
    /// Default frequency in `[0, 1]`.
    pub y: f64,
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelDataset {
    pub regressors: Vec<String>,
    /// First quarter with the crisis dummy set.
    pub crisis_quarter: Quarter,
    /// Sorted by bank, then quarter.
    pub rows: Vec<PanelRow>,
}

impl PanelDataset {
    pub fn new(
        regressors: Vec<String>,
        crisis_quarter: Quarter,
        mut rows: Vec<PanelRow>,
    ) -> Result<Self, StatsError> {
        if rows.is_empty() {
            return Err(StatsError::EmptyPanel);
        }
        for (row, r) in rows.iter().enumerate() {
            if r.x.len() != regressors.len() {
                return Err(StatsError::RowWidth { row, got: r.x.len(), expected: regressors.len() });
            }
        }
        rows.sort_by(|a, b| (&a.bank, a.quarter).cmp(&(&b.bank, b.quarter)));
        if let Some(w) = rows.windows(2).find(|w| w[0].bank == w[1].bank && w[0].quarter == w[1].quarter) {
            return Err(StatsError::DuplicateKey {
                bank: w[0].bank.clone(),
                quarter: w[0].quarter,
                source_name: "panel rows",
            });
        }
        Ok(Self { regressors, crisis_quarter, rows })
    }

    /// Crisis dummy of a quarter.
    pub fn theta(&self, q: Quarter) -> f64 {
        if q >= self.crisis_quarter {
            1.0
        } else {
            0.0
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

type Key = (Quarter, String);

fn index_by_key<'a, T, F>(
    items: &'a [T],
    key: F,
    source_name: &'static str,
) -> Result<BTreeMap<Key, &'a T>, StatsError>
where
    F: Fn(&T) -> Key,
{
    let mut map = BTreeMap::new();
    for item in items {
        let k = key(item);
        if map.contains_key(&k) {
            return Err(StatsError::DuplicateKey { bank: k.1, quarter: k.0, source_name });
        }
        map.insert(k, item);
    }
    Ok(map)
}

/// Joins per-bank metrics, coreness labels (needed for the binary set) and
/// simulated default frequencies into a long panel. Every bank-quarter must
/// appear in every required input.
pub fn build_panel(
    metrics: &[BankQuarterMetrics],
    coreness: &[BankQuarterCoreness],
    frequencies: &[BankQuarterFrequency],
    set: RegressorSet,
    crisis_quarter: Quarter,
) -> Result<PanelDataset, StatsError> {
    let m = index_by_key(metrics, |r| (r.quarter, r.bank.clone()), "metrics")?;
    let c = index_by_key(coreness, |r| (r.quarter, r.bank.clone()), "coreness")?;
    let f = index_by_key(frequencies, |r| (r.quarter, r.bank.clone()), "frequencies")?;
    let needs_coreness = set == RegressorSet::Binary;

    let mut all: Vec<&Key> = m.keys().chain(f.keys()).collect();
    if needs_coreness {
        all.extend(c.keys());
    }
    all.sort_unstable();
    all.dedup();

    let mut orphans = Vec::new();
    let mut rows = Vec::new();
    for key in all {
        let mut missing = |present: bool, name: &'static str| {
            if !present {
                orphans.push(Orphan { bank: key.1.clone(), quarter: key.0, missing_from: name });
            }
        };
        missing(m.contains_key(key), "metrics");
        missing(f.contains_key(key), "frequencies");
        if needs_coreness {
            missing(c.contains_key(key), "coreness");
        }
        if let (Some(mr), Some(fr)) = (m.get(key), f.get(key)) {
            let core = c.get(key).map(|r| r.coreness);
            rows.push(PanelRow {
                bank: key.1.clone(),
                quarter: key.0,
                y: fr.default_frequency,
                x: set.values(&mr.metrics, core),
            });
        }
    }
    if !orphans.is_empty() {
        return Err(StatsError::Orphans(orphans));
    }
    let names = set.names().iter().map(|s| s.to_string()).collect();
    PanelDataset::new(names, crisis_quarter, rows)
}

/// How the time effect enters the regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeEffects {
    /// A single intercept.
    #[default]
    Const,
    /// One dummy per quarter after the first, plus the intercept.
    Dummies,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClusterBy {
    #[default]
    Bank,
    Quarter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FeOptions {
    pub time_effects: TimeEffects,
    pub cluster: ClusterBy,
}

/// Which term of the model a coefficient belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Term {
    /// Feature slope.
    Alpha,
    /// Feature slope shift in the crisis period.
    Beta,
    /// Crisis-period level shift.
    Zeta,
    /// Intercept.
    Eta,
    QuarterEffect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    pub term: Term,
    pub estimate: f64,
    pub std_error: f64,
    pub z: f64,
    pub p_value: f64,
    pub stars: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedColumn {
    pub name: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub coefficients: Vec<Coefficient>,
    pub dropped: Vec<DroppedColumn>,
    /// Cluster-robust covariance of the reported coefficients, in order.
    pub covariance: Vec<Vec<f64>>,
    pub r2_within: f64,
    /// `None` when the residual degrees of freedom are exhausted.
    pub adj_r2_within: Option<f64>,
    pub n_obs: usize,
    pub n_groups: usize,
    pub n_clusters: usize,
    pub obs_per_group: BTreeMap<String, usize>,
    pub options: FeOptions,
    pub crisis_quarter: Quarter,
    pub dependent_unit: String,
    /// Small-sample factor applied to the sandwich.
    pub small_sample_factor: f64,
}

/// Significance stars of a two-sided p-value.
pub fn stars(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}

/// Scale of the dependent variable in the regression.
pub const PERCENT: f64 = 100.0;

struct Column {
    name: String,
    term: Term,
    values: Vec<f64>,
}

/// Within-group (bank) fixed-effects regression with cluster-robust
/// standard errors; the dependent variable is taken in percent.
pub fn fe_regression(panel: &PanelDataset, opts: &FeOptions) -> Result<RegressionResult, StatsError> {
    let n = panel.rows.len();
    if n == 0 {
        return Err(StatsError::EmptyPanel);
    }
    let mut group_ids: BTreeMap<&str, usize> = BTreeMap::new();
    for r in &panel.rows {
        let next = group_ids.len();
        group_ids.entry(r.bank.as_str()).or_insert(next);
    }
    let n_groups = group_ids.len();
    if n_groups < 2 {
        return Err(StatsError::TooFewGroups(n_groups));
    }
    let group: Vec<usize> = panel.rows.iter().map(|r| group_ids[r.bank.as_str()]).collect();
    let theta: Vec<f64> = panel.rows.iter().map(|r| panel.theta(r.quarter)).collect();

    let mut columns = Vec::new();
    for (m, name) in panel.regressors.iter().enumerate() {
        let values = panel.rows.iter().map(|r| r.x[m]).collect();
        columns.push(Column { name: name.clone(), term: Term::Alpha, values });
    }
    for (m, name) in panel.regressors.iter().enumerate() {
        let values = panel.rows.iter().zip(&theta).map(|(r, t)| t * r.x[m]).collect();
        columns.push(Column { name: format!("theta*{name}"), term: Term::Beta, values });
    }
    let mut dropped = Vec::new();
    let quarters: Vec<Quarter> = {
        let mut q: Vec<Quarter> = panel.rows.iter().map(|r| r.quarter).collect();
        q.sort_unstable();
        q.dedup();
        q
    };
    match opts.time_effects {
        TimeEffects::Const => {
            columns.push(Column { name: "theta".into(), term: Term::Zeta, values: theta.clone() });
        }
        TimeEffects::Dummies => {
            dropped.push(DroppedColumn {
                name: "theta".into(),
                reason: "collinear with the quarter dummies".into(),
            });
            for &q in quarters.iter().skip(1) {
                let values = panel.rows.iter().map(|r| f64::from(u8::from(r.quarter == q))).collect();
                columns.push(Column { name: format!("q{q}"), term: Term::QuarterEffect, values });
            }
        }
    }

    // Within transform with the grand mean added back.
    let counts = {
        let mut c = vec![0usize; n_groups];
        for &g in &group {
            c[g] += 1;
        }
        c
    };
    let within = |v: &[f64]| -> (Vec<f64>, f64) {
        let mut sums = vec![0.0; n_groups];
        for (k, &x) in v.iter().enumerate() {
            sums[group[k]] += x;
        }
        let grand = v.iter().sum::<f64>() / n as f64;
        let demeaned: Vec<f64> =
            v.iter().enumerate().map(|(k, &x)| x - sums[group[k]] / counts[group[k]] as f64).collect();
        (demeaned, grand)
    };

    let mut kept: Vec<Column> = Vec::new();
    for col in columns {
        let (dm, grand) = within(&col.values);
        let scale = col.values.iter().map(|v| v * v).sum::<f64>();
        let var = dm.iter().map(|v| v * v).sum::<f64>();
        if !(var > 1e-24 * scale) {
            dropped.push(DroppedColumn {
                name: col.name,
                reason: "no within-bank variation (absorbed by the bank fixed effects)".into(),
            });
            continue;
        }
        kept.push(Column { values: dm.iter().map(|v| v + grand).collect(), ..col });
    }
    kept.push(Column { name: "const".into(), term: Term::Eta, values: vec![1.0; n] });
    let k = kept.len();
    if n <= k {
        return Err(StatsError::TooFewObservations { n, k });
    }

    let y_raw: Vec<f64> = panel.rows.iter().map(|r| PERCENT * r.y).collect();
    let (y_dm, y_grand) = within(&y_raw);
    let y: Vec<f64> = y_dm.iter().map(|v| v + y_grand).collect();

    let values: Vec<Vec<f64>> = kept.iter().map(|c| c.values.clone()).collect();
    let x = Matrix::from_columns(&values);
    let qr = match Qr::new(&x, 1e-9) {
        Ok(qr) => qr,
        Err(def) => return Err(collinearity(&kept, &x, def.column)),
    };
    let b = qr.solve(&y);
    let resid: Vec<f64> = (0..n)
        .map(|r| y[r] - (0..k).map(|c| x[(r, c)] * b[c]).sum::<f64>())
        .collect();

    // Cluster-robust sandwich.
    let cluster: Vec<usize> = match opts.cluster {
        ClusterBy::Bank => group.clone(),
        ClusterBy::Quarter => panel
            .rows
            .iter()
            .map(|r| quarters.binary_search(&r.quarter).expect("quarter listed"))
            .collect(),
    };
    let n_clusters = cluster.iter().copied().max().map_or(0, |m| m + 1);
    let mut scores = vec![vec![0.0; k]; n_clusters];
    for r in 0..n {
        for c in 0..k {
            scores[cluster[r]][c] += x[(r, c)] * resid[r];
        }
    }
    let mut meat = Matrix::zeros(k, k);
    for s in &scores {
        for i in 0..k {
            for j in 0..k {
                meat[(i, j)] += s[i] * s[j];
            }
        }
    }
    // Bank effects are nested in bank clusters; otherwise they use up
    // degrees of freedom.
    let k_dof = match opts.cluster {
        ClusterBy::Bank => k,
        ClusterBy::Quarter => k + n_groups - 1,
    };
    let g = n_clusters as f64;
    let factor = if n_clusters > 1 && n > k_dof {
        g / (g - 1.0) * (n as f64 - 1.0) / (n as f64 - k_dof as f64)
    } else {
        f64::NAN
    };
    let bread = qr.gram_inverse();
    let v = sandwich(&bread, &meat, factor);

    let ssr: f64 = resid.iter().map(|e| e * e).sum();
    let tss: f64 = y_dm.iter().map(|e| e * e).sum();
    let r2_within = if tss > 0.0 { 1.0 - ssr / tss } else { f64::NAN };
    let slopes = k - 1;
    let dof = n as isize - n_groups as isize - slopes as isize;
    let adj_r2_within = (dof > 0 && tss > 0.0)
        .then(|| 1.0 - (1.0 - r2_within) * (n - n_groups) as f64 / dof as f64);

    let coefficients = kept
        .iter()
        .enumerate()
        .map(|(c, col)| {
            let se = libm::sqrt(v[(c, c)].max(0.0));
            let z = b[c] / se;
            let p = if se > 0.0 {
                two_sided_normal_p(z)
            } else if b[c] != 0.0 {
                0.0
            } else {
                1.0
            };
            Coefficient {
                name: col.name.clone(),
                term: col.term,
                estimate: b[c],
                std_error: se,
                z,
                p_value: p,
                stars: stars(p).into(),
            }
        })
        .collect();
    let mut obs_per_group = BTreeMap::new();
    for r in &panel.rows {
        *obs_per_group.entry(r.bank.clone()).or_insert(0) += 1;
    }
    Ok(RegressionResult {
        coefficients,
        dropped,
        covariance: (0..k).map(|i| (0..k).map(|j| v[(i, j)]).collect()).collect(),
        r2_within,
        adj_r2_within,
        n_obs: n,
        n_groups,
        n_clusters,
        obs_per_group,
        options: *opts,
        crisis_quarter: panel.crisis_quarter,
        dependent_unit: "percent".into(),
        small_sample_factor: factor,
    })
}

fn sandwich(bread: &Matrix, meat: &Matrix, factor: f64) -> Matrix {
    let k = bread.rows();
    let mut tmp = Matrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            tmp[(i, j)] = (0..k).map(|l| bread[(i, l)] * meat[(l, j)]).sum();
        }
    }
    let mut v = Matrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            v[(i, j)] = factor * (0..k).map(|l| tmp[(i, l)] * bread[(l, j)]).sum::<f64>();
        }
    }
    // Symmetrize away rounding.
    for i in 0..k {
        for j in i + 1..k {
            let s = 0.5 * (v[(i, j)] + v[(j, i)]);
            v[(i, j)] = s;
            v[(j, i)] = s;
        }
    }
    v
}

/// Names the earlier columns that `column` depends on.
fn collinearity(kept: &[Column], x: &Matrix, column: usize) -> StatsError {
    let name = kept[column].name.clone();
    let mut depends_on = Vec::new();
    if column > 0 {
        let prev: Vec<Vec<f64>> = (0..column).map(|c| x.column(c)).collect();
        let target = x.column(column);
        if let Ok(qr) = Qr::new(&Matrix::from_columns(&prev), 1e-9) {
            let coef = qr.solve(&target);
            let scale = coef.iter().fold(0.0f64, |m, c| m.max(c.abs()));
            for (c, &v) in coef.iter().enumerate() {
                if v.abs() > 1e-8 * scale {
                    depends_on.push(kept[c].name.clone());
                }
            }
        }
    }
    if depends_on.is_empty() {
        depends_on.push("the preceding columns".into());
    }
    StatsError::Collinear { column: name, depends_on }
}

impl RegressionResult {
    pub fn coefficient(&self, name: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.name == name)
    }

    /// Aligned text table: estimates with stars, standard errors in
    /// parentheses underneath, then fit statistics.
    pub fn to_table(&self) -> String {
        let mut lines: Vec<(String, String)> = Vec::new();
        for c in &self.coefficients {
            lines.push((c.name.clone(), format!("{:.4}{}", c.estimate, c.stars)));
            lines.push((String::new(), format!("({:.4})", c.std_error)));
        }
        for d in &self.dropped {
            lines.push((d.name.clone(), "(dropped)".into()));
        }
        let counts: Vec<usize> = self.obs_per_group.values().copied().collect();
        let min = counts.iter().copied().min().unwrap_or(0);
        let max = counts.iter().copied().max().unwrap_or(0);
        let avg = self.n_obs as f64 / self.n_groups.max(1) as f64;
        let adj = self.adj_r2_within.map_or("n/a".into(), |v| format!("{v:.4}"));
        let stats = [
            ("Observations", format!("{}", self.n_obs)),
            ("Groups", format!("{}", self.n_groups)),
            ("Obs per group (min/avg/max)", format!("{min}/{avg:.1}/{max}")),
            ("Within R-squared", format!("{:.4}", self.r2_within)),
            ("Adj. within R-squared", adj),
        ];
        let label_w = lines
            .iter()
            .map(|(l, _)| l.len())
            .chain(stats.iter().map(|(l, _)| l.len()))
            .max()
            .unwrap_or(0);
        let value_w = lines
            .iter()
            .map(|(_, v)| v.len())
            .chain(stats.iter().map(|(_, v)| v.len()))
            .max()
            .unwrap_or(0);
        let rule: String = "-".repeat(label_w + value_w + 2);
        let mut out = String::new();
        let _ = writeln!(out, "{:<label_w$}  {:>value_w$}", "", format!("y ({})", self.dependent_unit));
        let _ = writeln!(out, "{rule}");
        for (l, v) in &lines {
            let _ = writeln!(out, "{l:<label_w$}  {v:>value_w$}");
        }
        let _ = writeln!(out, "{rule}");
        for (l, v) in &stats {
            let _ = writeln!(out, "{l:<label_w$}  {v:>value_w$}");
        }
        let _ = writeln!(out, "{rule}");
        let cluster = match self.options.cluster {
            ClusterBy::Bank => "bank",
            ClusterBy::Quarter => "quarter",
        };
        let _ = writeln!(out, "Standard errors in parentheses, clustered by {cluster}.");
        let _ = writeln!(out, "* p<0.05, ** p<0.01, *** p<0.001");
        out
    }
}
