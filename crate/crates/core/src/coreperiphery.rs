//! Discrete core-periphery partition.
//!
//! A partition is scored by the number of deviations from the ideal block
//! pattern on the binary adjacency matrix:
//!
//! * missing links inside the core (ordered pairs),
//! * links present inside the periphery,
//! * core banks that lend to no periphery bank,
//! * core banks that borrow from no periphery bank.
//!
//! The fit minimizes this score by best-improvement single-bank switching
//! from random bisections, keeping the best of several restarts.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::WeightedDigraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum CpError {
    #[error("core must be a nonempty proper subset of the banks")]
    InvalidCore,
    #[error("core-periphery fit needs at least 3 banks, got {0}")]
    TooFewBanks(usize),
    #[error("core membership vector has length {got}, expected {expected}")]
    LengthMismatch { got: usize, expected: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorePeripheryPartition {
    /// Sorted indices of core banks.
    pub core: Vec<usize>,
    pub error_score: u64,
    /// 1 for core banks, 0 for periphery banks.
    pub coreness: Vec<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CpOptions {
    pub restarts: usize,
    pub seed: u64,
}

impl Default for CpOptions {
    fn default() -> Self {
        Self { restarts: 20, seed: 0 }
    }
}

/// Pattern-violation score of the partition given by `is_core`.
pub fn cp_error(g: &WeightedDigraph, is_core: &[bool]) -> Result<u64, CpError> {
    let n = g.node_count();
    if is_core.len() != n {
        return Err(CpError::LengthMismatch { got: is_core.len(), expected: n });
    }
    let state = CpState::new(g, is_core.to_vec());
    if state.core_size == 0 || state.core_size == n {
        return Err(CpError::InvalidCore);
    }
    Ok(state.score())
}

/// Incremental bookkeeping for the score: per bank, the number of out- and
/// in-links to core and periphery banks.
struct CpState<'g> {
    g: &'g WeightedDigraph,
    is_core: Vec<bool>,
    core_size: usize,
    out_core: Vec<usize>,
    in_core: Vec<usize>,
    out_per: Vec<usize>,
    in_per: Vec<usize>,
}

impl<'g> CpState<'g> {
    fn new(g: &'g WeightedDigraph, is_core: Vec<bool>) -> Self {
        let n = g.node_count();
        let mut s = Self {
            g,
            core_size: is_core.iter().filter(|&&c| c).count(),
            is_core,
            out_core: vec![0; n],
            in_core: vec![0; n],
            out_per: vec![0; n],
            in_per: vec![0; n],
        };
        for (i, j, _) in g.edges() {
            if s.is_core[j] {
                s.out_core[i] += 1;
            } else {
                s.out_per[i] += 1;
            }
            if s.is_core[i] {
                s.in_core[j] += 1;
            } else {
                s.in_per[j] += 1;
            }
        }
        s
    }

    fn score(&self) -> u64 {
        let mut score = 0u64;
        for i in 0..self.is_core.len() {
            if self.is_core[i] {
                score += (self.core_size - 1 - self.out_core[i]) as u64;
                score += u64::from(self.out_per[i] == 0) + u64::from(self.in_per[i] == 0);
            } else {
                score += self.out_per[i] as u64;
            }
        }
        score
    }

    fn flip(&mut self, v: usize) {
        let to_core = !self.is_core[v];
        self.is_core[v] = to_core;
        if to_core {
            self.core_size += 1;
        } else {
            self.core_size -= 1;
        }
        for &j in self.g.out_neighbors(v) {
            if to_core {
                self.in_core[j] += 1;
                self.in_per[j] -= 1;
            } else {
                self.in_core[j] -= 1;
                self.in_per[j] += 1;
            }
        }
        for &i in self.g.in_neighbors(v) {
            if to_core {
                self.out_core[i] += 1;
                self.out_per[i] -= 1;
            } else {
                self.out_core[i] -= 1;
                self.out_per[i] += 1;
            }
        }
    }

    /// Best-improvement descent; ties go to the lowest bank index.
    fn descend(&mut self) -> u64 {
        let n = self.is_core.len();
        let mut current = self.score();
        loop {
            let mut best: Option<(u64, usize)> = None;
            for v in 0..n {
                let shrinks_to_empty = self.is_core[v] && self.core_size == 1;
                let grows_to_all = !self.is_core[v] && self.core_size == n - 1;
                if shrinks_to_empty || grows_to_all {
                    continue;
                }
                self.flip(v);
                let s = self.score();
                self.flip(v);
                if s < current && best.map_or(true, |(b, _)| s < b) {
                    best = Some((s, v));
                }
            }
            match best {
                Some((s, v)) => {
                    self.flip(v);
                    current = s;
                }
                None => return current,
            }
        }
    }

    fn into_partition(self, score: u64) -> CorePeripheryPartition {
        let core: Vec<usize> = (0..self.is_core.len()).filter(|&i| self.is_core[i]).collect();
        let coreness = self.is_core.iter().map(|&c| u8::from(c)).collect();
        CorePeripheryPartition { core, error_score: score, coreness }
    }
}

/// Ordering used to pick among partitions: score, then core size, then the
/// lexicographically smaller sorted core.
fn better(a: &CorePeripheryPartition, b: &CorePeripheryPartition) -> bool {
    (a.error_score, a.core.len(), &a.core) < (b.error_score, b.core.len(), &b.core)
}

/// Random proper bisection for restart `restart`.
fn random_start(n: usize, seed: u64, restart: usize) -> Vec<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    loop {
        let start: Vec<bool> = (0..n).map(|_| rng.random::<bool>()).collect();
        let k = start.iter().filter(|&&c| c).count();
        if k > 0 && k < n {
            return start;
        }
    }
}

/// Local optimum reached from the `restart`-th random start.
pub fn fit_from_restart(g: &WeightedDigraph, seed: u64, restart: usize) -> CorePeripheryPartition {
    let mut state = CpState::new(g, random_start(g.node_count(), seed, restart));
    let score = state.descend();
    state.into_partition(score)
}

/// Reduces restart results to the best partition; the choice does not
/// depend on the order of `candidates`.
pub fn best_partition<I>(candidates: I) -> Option<CorePeripheryPartition>
where
    I: IntoIterator<Item = CorePeripheryPartition>,
{
    candidates.into_iter().fold(None, |best, p| match best {
        Some(b) if !better(&p, &b) => Some(b),
        _ => Some(p),
    })
}

/// Fits a core-periphery partition minimizing [`cp_error`].
pub fn fit_core_periphery(
    g: &WeightedDigraph,
    opts: &CpOptions,
) -> Result<CorePeripheryPartition, CpError> {
    let n = g.node_count();
    if n < 3 {
        return Err(CpError::TooFewBanks(n));
    }
    let restarts = opts.restarts.max(1);
    Ok(best_partition((0..restarts).map(|r| fit_from_restart(g, opts.seed, r)))
        .expect("at least one restart"))
}
