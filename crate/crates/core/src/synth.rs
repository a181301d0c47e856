//! Seeded synthetic overnight-market generator with a planted core-periphery
//! block structure and regime changes over time.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netcore::{days_in_month, Date, Maturity, Quarter, TransactionRecord};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("{name} must lie in [0, 1], got {value}")]
    Probability { name: &'static str, value: f64 },
    #[error("core fraction must lie strictly between 0 and 1, got {0}")]
    CoreFraction(f64),
    #[error("need at least 2 banks, got {0}")]
    TooFewBanks(usize),
    #[error("planted core of {core} banks leaves no {side}")]
    EmptyBlock { core: usize, side: &'static str },
    #[error("quarter range {first}..{last} is empty")]
    QuarterRange { first: Quarter, last: Quarter },
    #[error("log-normal weight parameters invalid: mu={mu}, sigma={sigma}")]
    Weights { mu: f64, sigma: f64 },
    #[error("regime {index}: {reason}")]
    Regime { index: usize, reason: &'static str },
    #[error("non-overnight share must lie in [0, 1), got {0}")]
    NonOvernightShare(f64),
}

/// Log-normal law of a link's quarterly volume before regime scaling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightLaw {
    pub mu: f64,
    pub sigma: f64,
}

/// Multipliers applied in the quarters `first..=last`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub name: String,
    pub first: Quarter,
    pub last: Quarter,
    /// Scales link volumes.
    pub activity: f64,
    /// Scales the periphery-periphery link probability; links involving
    /// the core are unaffected.
    pub periphery_connectivity: f64,
    /// Probability that a bank sits out a quarter.
    pub attrition: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_banks: usize,
    pub core_fraction: f64,
    pub p_cc: f64,
    pub p_cp: f64,
    pub p_pc: f64,
    pub p_pp: f64,
    pub w_cc: WeightLaw,
    pub w_cp: WeightLaw,
    pub w_pc: WeightLaw,
    pub w_pp: WeightLaw,
    pub first_quarter: Quarter,
    pub last_quarter: Quarter,
    pub regimes: Vec<Regime>,
    /// Extra records with non-overnight maturities, as a share of all records.
    pub non_overnight_share: f64,
    pub rng_seed: u64,
}

/// Fewest active banks attrition may leave in a quarter.
pub const MIN_ACTIVE_BANKS: usize = 10;

fn q(year: i32, n: u8) -> Quarter {
    Quarter::new(year, n).expect("valid quarter literal")
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n_banks: 100,
            core_fraction: 0.15,
            p_cc: 0.9,
            p_cp: 0.25,
            p_pc: 0.25,
            p_pp: 0.05,
            w_cc: WeightLaw { mu: 6.0, sigma: 1.0 },
            w_cp: WeightLaw { mu: 4.5, sigma: 1.0 },
            w_pc: WeightLaw { mu: 4.5, sigma: 1.0 },
            w_pp: WeightLaw { mu: 3.5, sigma: 1.0 },
            first_quarter: q(2005, 1),
            last_quarter: q(2011, 4),
            regimes: vec![
                Regime {
                    name: "pre".into(),
                    first: q(2005, 1),
                    last: q(2007, 2),
                    activity: 1.0,
                    periphery_connectivity: 1.0,
                    attrition: 0.05,
                },
                Regime {
                    name: "crisis".into(),
                    first: q(2007, 3),
                    last: q(2009, 1),
                    activity: 0.5,
                    periphery_connectivity: 0.2,
                    attrition: 0.1,
                },
                Regime {
                    name: "post".into(),
                    first: q(2009, 2),
                    last: q(2011, 4),
                    activity: 0.6,
                    periphery_connectivity: 0.3,
                    attrition: 0.1,
                },
            ],
            non_overnight_share: 0.1,
            rng_seed: 0,
        }
    }
}

/// Regime multipliers in effect in a quarter.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Multipliers {
    activity: f64,
    connectivity: f64,
    attrition: f64,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.n_banks < 2 {
            return Err(SynthError::TooFewBanks(self.n_banks));
        }
        if !(self.core_fraction > 0.0 && self.core_fraction < 1.0) {
            return Err(SynthError::CoreFraction(self.core_fraction));
        }
        let core = self.core_size();
        if core == 0 {
            return Err(SynthError::EmptyBlock { core, side: "core" });
        }
        if core == self.n_banks {
            return Err(SynthError::EmptyBlock { core, side: "periphery" });
        }
        for (name, value) in
            [("p_cc", self.p_cc), ("p_cp", self.p_cp), ("p_pc", self.p_pc), ("p_pp", self.p_pp)]
        {
            if !(0.0..=1.0).contains(&value) {
                return Err(SynthError::Probability { name, value });
            }
        }
        for w in [self.w_cc, self.w_cp, self.w_pc, self.w_pp] {
            if !w.mu.is_finite() || !(w.sigma >= 0.0) || !w.sigma.is_finite() {
                return Err(SynthError::Weights { mu: w.mu, sigma: w.sigma });
            }
        }
        if self.first_quarter > self.last_quarter {
            return Err(SynthError::QuarterRange { first: self.first_quarter, last: self.last_quarter });
        }
        for (index, r) in self.regimes.iter().enumerate() {
            if r.first > r.last {
                return Err(SynthError::Regime { index, reason: "first quarter after last" });
            }
            if !(r.activity > 0.0) || !r.activity.is_finite() {
                return Err(SynthError::Regime { index, reason: "activity must be positive" });
            }
            if !(r.periphery_connectivity >= 0.0) || !r.periphery_connectivity.is_finite() {
                return Err(SynthError::Regime {
                    index,
                    reason: "periphery connectivity must be nonnegative",
                });
            }
            if !(0.0..1.0).contains(&r.attrition) {
                return Err(SynthError::Regime { index, reason: "attrition must lie in [0, 1)" });
            }
            if self.regimes[..index].iter().any(|o| o.first <= r.last && r.first <= o.last) {
                return Err(SynthError::Regime { index, reason: "overlaps an earlier regime" });
            }
        }
        if !(0.0..1.0).contains(&self.non_overnight_share) {
            return Err(SynthError::NonOvernightShare(self.non_overnight_share));
        }
        Ok(())
    }

    /// Number of planted core banks.
    pub fn core_size(&self) -> usize {
        libm::round(self.core_fraction * self.n_banks as f64) as usize
    }

    /// Identifier of bank `k`, zero-padded so identifiers sort by index.
    pub fn bank_id(&self, k: usize) -> String {
        let width = digits(self.n_banks).max(3);
        format!("B{:0width$}", k + 1)
    }

    pub fn quarters(&self) -> Vec<Quarter> {
        self.first_quarter.through(self.last_quarter).collect()
    }

    /// Name of the regime covering `quarter`, if any.
    pub fn regime_of(&self, quarter: Quarter) -> Option<&Regime> {
        self.regimes.iter().find(|r| r.first <= quarter && quarter <= r.last)
    }

    fn multipliers(&self, quarter: Quarter) -> Multipliers {
        self.regime_of(quarter).map_or(
            Multipliers { activity: 1.0, connectivity: 1.0, attrition: 0.0 },
            |r| Multipliers {
                activity: r.activity,
                connectivity: r.periphery_connectivity,
                attrition: r.attrition,
            },
        )
    }

    /// Expected density of a quarter's aggregate network without attrition.
    pub fn expected_density(&self, quarter: Quarter) -> f64 {
        let c = self.multipliers(quarter).connectivity;
        let n = self.n_banks as f64;
        let k = self.core_size() as f64;
        let links = k * (k - 1.0) * self.p_cc
            + k * (n - k) * (self.p_cp + self.p_pc)
            + (n - k) * (n - k - 1.0) * (self.p_pp * c).min(1.0);
        links / (n * (n - 1.0))
    }
}

fn digits(mut n: usize) -> usize {
    let mut d = 1;
    while n >= 10 {
        n /= 10;
        d += 1;
    }
    d
}

/// What the generator planted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthTruth {
    pub bank_ids: Vec<String>,
    pub is_core: Vec<bool>,
    /// Active banks per quarter.
    pub active: Vec<(Quarter, Vec<bool>)>,
}

/// Generates the transaction log for `spec`.
pub fn generate(spec: &SynthSpec) -> Result<Vec<TransactionRecord>, SynthError> {
    Ok(generate_with_truth(spec)?.0)
}

/// Like [`generate`], also returning the planted structure. Banks
/// `0..core_size` form the core.
pub fn generate_with_truth(
    spec: &SynthSpec,
) -> Result<(Vec<TransactionRecord>, SynthTruth), SynthError> {
    spec.validate()?;
    let n = spec.n_banks;
    let n_core = spec.core_size();
    let ids: Vec<String> = (0..n).map(|k| spec.bank_id(k)).collect();
    let is_core: Vec<bool> = (0..n).map(|k| k < n_core).collect();
    let law = |w: WeightLaw| LogNormal::new(w.mu, w.sigma).expect("validated weight law");
    let laws = [law(spec.w_cc), law(spec.w_cp), law(spec.w_pc), law(spec.w_pp)];
    let probs = [spec.p_cc, spec.p_cp, spec.p_pc, spec.p_pp];

    let mut records = Vec::new();
    let mut active_log = Vec::new();
    for (qi, quarter) in spec.quarters().into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
        rng.set_stream(qi as u64);
        let m = spec.multipliers(quarter);

        let mut active: Vec<bool> = (0..n).map(|_| rng.random::<f64>() >= m.attrition).collect();
        let floor = MIN_ACTIVE_BANKS.min(n);
        let mut count = active.iter().filter(|&&a| a).count();
        for a in active.iter_mut() {
            if count >= floor {
                break;
            }
            if !*a {
                *a = true;
                count += 1;
            }
        }

        let mut quarter_records = Vec::new();
        for i in 0..n {
            for j in 0..n {
                // Draw for every pair so the stream layout does not depend
                // on which banks are active.
                let block = match (is_core[i], is_core[j]) {
                    (true, true) => 0,
                    (true, false) => 1,
                    (false, true) => 2,
                    (false, false) => 3,
                };
                let u: f64 = rng.random();
                let volume = laws[block].sample(&mut rng) * m.activity;
                if i == j || !active[i] || !active[j] {
                    continue;
                }
                let p = if block == 3 { (probs[3] * m.connectivity).min(1.0) } else { probs[block] };
                if u >= p {
                    continue;
                }
                split_volume(&mut rng, quarter, &ids[i], &ids[j], volume, &mut quarter_records);
            }
        }
        let on_count = quarter_records.len();
        let extra = if spec.non_overnight_share > 0.0 {
            libm::round(on_count as f64 * spec.non_overnight_share / (1.0 - spec.non_overnight_share))
                as usize
        } else {
            0
        };
        let active_idx: Vec<usize> = (0..n).filter(|&k| active[k]).collect();
        let others = &Maturity::ALL[1..];
        for _ in 0..extra {
            let pa = rng.random_range(0..active_idx.len());
            let mut pb = rng.random_range(0..active_idx.len() - 1);
            if pb >= pa {
                pb += 1;
            }
            let (a, b) = (active_idx[pa], active_idx[pb]);
            let maturity = others[rng.random_range(0..others.len())];
            let amount = round_amount(laws[3].sample(&mut rng) * m.activity);
            quarter_records.push(record(&mut rng, quarter, &ids[a], &ids[b], amount, maturity));
        }
        quarter_records.sort_by(|x, y| {
            (x.date, x.time, &x.lender, &x.borrower).cmp(&(y.date, y.time, &y.lender, &y.borrower))
        });
        records.extend(quarter_records);
        active_log.push((quarter, active));
    }
    Ok((records, SynthTruth { bank_ids: ids, is_core, active: active_log }))
}

/// Amounts are quoted to 0.01 with a floor of 0.01.
fn round_amount(x: f64) -> f64 {
    (libm::round(x * 100.0) / 100.0).max(0.01)
}

/// Splits a quarterly volume into 1 to 5 overnight loans on random days.
fn split_volume(
    rng: &mut ChaCha8Rng,
    quarter: Quarter,
    lender: &str,
    borrower: &str,
    volume: f64,
    out: &mut Vec<TransactionRecord>,
) {
    let parts = rng.random_range(1..=5usize);
    let mut cuts: Vec<f64> = (0..parts - 1).map(|_| rng.random::<f64>()).collect();
    cuts.sort_unstable_by(f64::total_cmp);
    cuts.push(1.0);
    let mut prev = 0.0;
    for c in cuts {
        let amount = round_amount(volume * (c - prev));
        prev = c;
        out.push(record(rng, quarter, lender, borrower, amount, Maturity::Overnight));
    }
}

fn record(
    rng: &mut ChaCha8Rng,
    quarter: Quarter,
    lender: &str,
    borrower: &str,
    amount: f64,
    maturity: Maturity,
) -> TransactionRecord {
    let month = quarter.first_month() + rng.random_range(0..3u8);
    let day = rng.random_range(1..=days_in_month(quarter.year(), month));
    let date = Date::new(quarter.year(), month, day).expect("day within month");
    // Trading hours 08:00 to 18:00.
    let time = rng.random_range(8 * 3600..18 * 3600u32);
    let rate = libm::round(rng.random_range(0.5..4.5) * 1000.0) / 1000.0;
    TransactionRecord {
        date,
        time: Some(time),
        lender: lender.into(),
        borrower: borrower.into(),
        amount,
        rate,
        maturity,
    }
}
