//! Loan records and quarterly interbank networks.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{weakly_connected_component, GraphError, WeightedDigraph};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetError {
    #[error("record {index}: {reason}")]
    BadRecord { index: usize, reason: RecordIssue },
    #[error("invalid date {0}")]
    BadDate(String),
    #[error("invalid quarter label {0:?}")]
    BadQuarter(String),
    #[error("unknown maturity code {0:?}")]
    UnknownMaturity(String),
    #[error("network invariant violated: {0}")]
    Invariant(&'static str),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordIssue {
    NonPositiveAmount,
    SelfLoop,
}

impl fmt::Display for RecordIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RecordIssue::NonPositiveAmount => f.write_str("amount must be positive and finite"),
            RecordIssue::SelfLoop => f.write_str("lender and borrower are the same bank"),
        }
    }
}

/// Calendar day.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Date {
    year: i32,
    month: u8,
    day: u8,
}

fn is_leap(year: i32) -> bool {
    (year % 4 == 0 && year % 100 != 0) || year % 400 == 0
}

pub fn days_in_month(year: i32, month: u8) -> u8 {
    match month {
        1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
        4 | 6 | 9 | 11 => 30,
        2 if is_leap(year) => 29,
        2 => 28,
        _ => 0,
    }
}

impl Date {
    pub fn new(year: i32, month: u8, day: u8) -> Result<Self, NetError> {
        if !(1..=12).contains(&month) || day == 0 || day > days_in_month(year, month) {
            return Err(NetError::BadDate(alloc::format!("{year:04}-{month:02}-{day:02}")));
        }
        Ok(Self { year, month, day })
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn month(&self) -> u8 {
        self.month
    }

    pub fn day(&self) -> u8 {
        self.day
    }

    pub fn quarter(&self) -> Quarter {
        Quarter { year: self.year, q: (self.month - 1) / 3 + 1 }
    }
}

impl fmt::Display for Date {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}-{:02}", self.year, self.month, self.day)
    }
}

impl FromStr for Date {
    type Err = NetError;

    /// `YYYY-MM-DD`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || NetError::BadDate(s.to_string());
        let mut parts = s.trim().splitn(3, '-');
        let (y, m, d) = match (parts.next(), parts.next(), parts.next()) {
            (Some(y), Some(m), Some(d)) if y.len() == 4 && m.len() == 2 && d.len() == 2 => (y, m, d),
            _ => return Err(bad()),
        };
        let year = y.parse().map_err(|_| bad())?;
        let month = m.parse().map_err(|_| bad())?;
        let day = d.parse().map_err(|_| bad())?;
        Date::new(year, month, day).map_err(|_| bad())
    }
}

/// Calendar quarter, labelled like `2007Q3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Quarter {
    year: i32,
    q: u8,
}

impl Quarter {
    pub fn new(year: i32, q: u8) -> Result<Self, NetError> {
        if !(1..=4).contains(&q) {
            return Err(NetError::BadQuarter(alloc::format!("{year}Q{q}")));
        }
        Ok(Self { year, q })
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn number(&self) -> u8 {
        self.q
    }

    pub fn next(&self) -> Quarter {
        if self.q == 4 {
            Quarter { year: self.year + 1, q: 1 }
        } else {
            Quarter { year: self.year, q: self.q + 1 }
        }
    }

    /// Inclusive range of quarters from `self` to `last`.
    pub fn through(self, last: Quarter) -> impl Iterator<Item = Quarter> {
        core::iter::successors(Some(self), |q| Some(q.next())).take_while(move |q| *q <= last)
    }

    pub fn first_month(&self) -> u8 {
        (self.q - 1) * 3 + 1
    }
}

impl fmt::Display for Quarter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}Q{}", self.year, self.q)
    }
}

impl FromStr for Quarter {
    type Err = NetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || NetError::BadQuarter(s.to_string());
        let (y, q) = s.trim().split_once(['Q', 'q']).ok_or_else(bad)?;
        let year = y.parse().map_err(|_| bad())?;
        let q = q.parse().map_err(|_| bad())?;
        Quarter::new(year, q).map_err(|_| bad())
    }
}

impl Serialize for Quarter {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Quarter {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = <alloc::borrow::Cow<'de, str>>::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

macro_rules! maturities {
    ($($variant:ident => $code:literal),+ $(,)?) => {
        /// Contract maturity code of an e-MID style loan.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
        pub enum Maturity {
            $(#[serde(rename = $code)] $variant,)+
        }

        impl Maturity {
            pub const ALL: &'static [Maturity] = &[$(Maturity::$variant,)+];

            pub fn code(&self) -> &'static str {
                match self {
                    $(Maturity::$variant => $code,)+
                }
            }
        }

        impl FromStr for Maturity {
            type Err = NetError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s.trim() {
                    $($code => Ok(Maturity::$variant),)+
                    other => Err(NetError::UnknownMaturity(other.to_string())),
                }
            }
        }
    };
}

maturities! {
    Overnight => "ON",
    OvernightLong => "ONL",
    TomorrowNext => "TN",
    TomorrowNextLong => "TNL",
    SpotNext => "SN",
    SpotNextLong => "SNL",
    OneWeek => "1W",
    OneWeekLong => "1WL",
    TwoWeeks => "2W",
    ThreeWeeks => "3W",
    OneMonth => "1M",
    TwoMonths => "2M",
    ThreeMonths => "3M",
    FourMonths => "4M",
    FiveMonths => "5M",
    SixMonths => "6M",
    SevenMonths => "7M",
    EightMonths => "8M",
    NineMonths => "9M",
    TenMonths => "10M",
    ElevenMonths => "11M",
    OneYear => "1Y",
}

impl fmt::Display for Maturity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// One loan event. `amount` is in millions of EUR.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransactionRecord {
    pub date: Date,
    /// Seconds since midnight.
    pub time: Option<u32>,
    pub lender: String,
    pub borrower: String,
    pub amount: f64,
    pub rate: f64,
    pub maturity: Maturity,
}

impl TransactionRecord {
    pub fn validate(&self, index: usize) -> Result<(), NetError> {
        if !(self.amount > 0.0) || !self.amount.is_finite() {
            return Err(NetError::BadRecord { index, reason: RecordIssue::NonPositiveAmount });
        }
        if self.lender == self.borrower {
            return Err(NetError::BadRecord { index, reason: RecordIssue::SelfLoop });
        }
        Ok(())
    }
}

/// Directed weighted interbank network of one quarter. Node `k` is the bank
/// `bank_ids[k]`; banks are ordered by identifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuarterlyNetwork {
    pub quarter: Quarter,
    pub bank_ids: Vec<String>,
    pub graph: WeightedDigraph,
}

impl QuarterlyNetwork {
    /// Checks every network invariant, including weak connectivity.
    pub fn new(
        quarter: Quarter,
        bank_ids: Vec<String>,
        graph: WeightedDigraph,
    ) -> Result<Self, NetError> {
        if bank_ids.len() != graph.node_count() {
            return Err(NetError::Invariant("bank id count differs from node count"));
        }
        if bank_ids.is_empty() {
            return Err(NetError::Invariant("network has no banks"));
        }
        if bank_ids.windows(2).any(|w| w[0] >= w[1]) {
            return Err(NetError::Invariant("bank ids must be sorted and distinct"));
        }
        if bank_ids.len() > 1 {
            let comp = crate::graph::largest_weak_component(&graph)?;
            if comp.len() != bank_ids.len() {
                return Err(NetError::Invariant("network is not weakly connected"));
            }
        }
        Ok(Self { quarter, bank_ids, graph })
    }

    pub fn n_banks(&self) -> usize {
        self.bank_ids.len()
    }

    pub fn index_of(&self, bank: &str) -> Option<usize> {
        self.bank_ids.binary_search_by(|b| b.as_str().cmp(bank)).ok()
    }
}

/// Quarterly aggregate of overnight lending before the connectivity
/// reduction.
#[derive(Debug, Clone, PartialEq)]
pub struct QuarterAggregate {
    pub quarter: Quarter,
    pub bank_ids: Vec<String>,
    pub graph: WeightedDigraph,
}

/// Sums overnight amounts per (lender, borrower) pair and calendar quarter.
/// Records with other maturities are ignored; every record is validated.
pub fn aggregate_by_quarter(records: &[TransactionRecord]) -> Result<Vec<QuarterAggregate>, NetError> {
    let mut per_quarter: BTreeMap<Quarter, Vec<usize>> = BTreeMap::new();
    for (index, rec) in records.iter().enumerate() {
        rec.validate(index)?;
        if rec.maturity == Maturity::Overnight {
            per_quarter.entry(rec.date.quarter()).or_default().push(index);
        }
    }
    let mut out = Vec::with_capacity(per_quarter.len());
    for (quarter, idxs) in per_quarter {
        let mut ids: Vec<&str> = idxs
            .iter()
            .flat_map(|&k| [records[k].lender.as_str(), records[k].borrower.as_str()])
            .collect();
        ids.sort_unstable();
        ids.dedup();
        let index_of = |b: &str| ids.binary_search(&b).expect("id collected above");
        let edges: Vec<_> = idxs
            .iter()
            .map(|&k| {
                let r = &records[k];
                (index_of(&r.lender), index_of(&r.borrower), r.amount)
            })
            .collect();
        let graph = WeightedDigraph::from_edges(ids.len(), edges)?;
        out.push(QuarterAggregate {
            quarter,
            bank_ids: ids.into_iter().map(String::from).collect(),
            graph,
        });
    }
    Ok(out)
}

/// Builds one network per calendar quarter with overnight activity, each
/// reduced to its largest weakly connected component, sorted by quarter.
pub fn build_quarterly_networks(
    records: &[TransactionRecord],
) -> Result<Vec<QuarterlyNetwork>, NetError> {
    aggregate_by_quarter(records)?
        .into_iter()
        .map(|agg| {
            let (graph, nodes) = weakly_connected_component(&agg.graph)?;
            let bank_ids = nodes.iter().map(|&k| agg.bank_ids[k].clone()).collect();
            Ok(QuarterlyNetwork { quarter: agg.quarter, bank_ids, graph })
        })
        .collect()
}

/// Global bank identifier registry, ordered by identifier, so per-bank series
/// can be joined across quarters.
pub fn bank_registry(records: &[TransactionRecord]) -> Vec<String> {
    let mut ids: Vec<String> = records
        .iter()
        .flat_map(|r| [r.lender.clone(), r.borrower.clone()])
        .collect();
    ids.sort_unstable();
    ids.dedup();
    ids
}
