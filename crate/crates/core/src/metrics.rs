//! Per-bank and network-level statistics of a quarterly network.
//!
//! Shortest paths are hop counts on the binary adjacency. Betweenness uses
//! the directed normalization `1 / ((N-1)(N-2))`; reciprocity counts both
//! links of every mutual pair, so a fully reciprocal network scores 1.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::WeightedDigraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("degenerate network: at least {0} banks required")]
    Degenerate(usize),
    #[error("undefined skewness: degree sequence is constant or too short")]
    UndefinedSkewness,
    #[error("moving-average window must be odd")]
    EvenWindow,
}

/// Name of the skewness estimator, reported alongside results.
pub const SKEWNESS_ESTIMATOR: &str = "population g1 = m3 / m2^(3/2)";
/// Name of the betweenness normalization, reported alongside results.
pub const BETWEENNESS_NORMALIZATION: &str = "1/((N-1)(N-2))";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BankMetrics {
    pub in_degree: usize,
    pub out_degree: usize,
    pub reciprocal_degree: usize,
    pub degree: usize,
    pub in_strength: f64,
    pub out_strength: f64,
    pub strength: f64,
    pub binary_clustering: f64,
    pub weighted_clustering: f64,
    pub betweenness: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkMetrics {
    pub n_banks: usize,
    pub n_links: usize,
    pub density: f64,
    pub total_volume: f64,
    pub volume_per_bank: f64,
    /// `None` when the degree sequence is constant.
    pub degree_skewness: Option<f64>,
    pub reciprocity: f64,
    pub clustering: f64,
    pub weighted_clustering: f64,
    pub efficiency: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClusteringMode {
    Binary,
    Weighted,
}

/// Reciprocal degree `k^<->_i` of every node.
fn reciprocal_degrees(g: &WeightedDigraph) -> Vec<usize> {
    (0..g.node_count())
        .map(|i| {
            let (out, inc) = (g.out_neighbors(i), g.in_neighbors(i));
            let (mut a, mut b, mut k) = (0, 0, 0);
            while a < out.len() && b < inc.len() {
                match out[a].cmp(&inc[b]) {
                    core::cmp::Ordering::Equal => {
                        k += 1;
                        a += 1;
                        b += 1;
                    }
                    core::cmp::Ordering::Less => a += 1,
                    core::cmp::Ordering::Greater => b += 1,
                }
            }
            k
        })
        .collect()
}

/// Total degrees `k_i = k^O + k^I - k^<->`.
pub fn degrees(g: &WeightedDigraph) -> Vec<usize> {
    reciprocal_degrees(g)
        .into_iter()
        .enumerate()
        .map(|(i, r)| g.out_degree(i) + g.in_degree(i) - r)
        .collect()
}

pub fn bank_metrics(g: &WeightedDigraph) -> Vec<BankMetrics> {
    let recip = reciprocal_degrees(g);
    let binary = clustering_per_bank(g, ClusteringMode::Binary);
    let weighted = clustering_per_bank(g, ClusteringMode::Weighted);
    let betw = betweenness(g);
    (0..g.node_count())
        .map(|i| {
            let (kin, kout) = (g.in_degree(i), g.out_degree(i));
            let (sin, sout) = (g.in_strength(i), g.out_strength(i));
            BankMetrics {
                in_degree: kin,
                out_degree: kout,
                reciprocal_degree: recip[i],
                degree: kin + kout - recip[i],
                in_strength: sin,
                out_strength: sout,
                strength: sin + sout,
                binary_clustering: binary[i],
                weighted_clustering: weighted[i],
                betweenness: betw[i],
            }
        })
        .collect()
}

pub fn network_metrics(g: &WeightedDigraph) -> Result<NetworkMetrics, MetricsError> {
    let n = g.node_count();
    let volume = total_volume(g);
    Ok(NetworkMetrics {
        n_banks: n,
        n_links: g.edge_count(),
        density: density(g)?,
        total_volume: volume,
        volume_per_bank: volume / n as f64,
        degree_skewness: degree_skewness(g).ok(),
        reciprocity: reciprocity(g),
        clustering: mean(&clustering_per_bank(g, ClusteringMode::Binary)),
        weighted_clustering: mean(&clustering_per_bank(g, ClusteringMode::Weighted)),
        efficiency: efficiency(g),
    })
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// `D = L / (N (N-1))`.
pub fn density(g: &WeightedDigraph) -> Result<f64, MetricsError> {
    let n = g.node_count();
    if n < 2 {
        return Err(MetricsError::Degenerate(2));
    }
    Ok(g.edge_count() as f64 / (n * (n - 1)) as f64)
}

pub fn total_volume(g: &WeightedDigraph) -> f64 {
    g.total_weight()
}

/// Population skewness `m3 / m2^(3/2)` of a sequence.
pub fn skewness(xs: &[f64]) -> Result<f64, MetricsError> {
    if xs.len() < 3 {
        return Err(MetricsError::UndefinedSkewness);
    }
    let n = xs.len() as f64;
    let mu = xs.iter().sum::<f64>() / n;
    let m2 = xs.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / n;
    let m3 = xs.iter().map(|x| (x - mu) * (x - mu) * (x - mu)).sum::<f64>() / n;
    if !(m2 > 0.0) {
        return Err(MetricsError::UndefinedSkewness);
    }
    Ok(m3 / libm::pow(m2, 1.5))
}

/// Skewness of the total-degree sequence.
pub fn degree_skewness(g: &WeightedDigraph) -> Result<f64, MetricsError> {
    let ks: Vec<f64> = degrees(g).into_iter().map(|k| k as f64).collect();
    skewness(&ks)
}

/// Share of links that belong to a mutual pair, `2 sum_{i<j} a_ij a_ji / L`.
pub fn reciprocity(g: &WeightedDigraph) -> f64 {
    let links = g.edge_count();
    if links == 0 {
        return 0.0;
    }
    let reciprocated: usize = reciprocal_degrees(g).iter().sum();
    reciprocated as f64 / links as f64
}

/// Per-bank clustering `sum_jh u_ij u_ih u_jh / (k_i^2 - k_i)`, zero for
/// banks with fewer than two partners.
pub fn clustering_per_bank(g: &WeightedDigraph, mode: ClusteringMode) -> Vec<f64> {
    let n = g.node_count();
    let und = g.undirected();
    let mut mark = vec![0.0f64; n];
    let mut out = vec![0.0; n];
    for i in 0..n {
        let k = und[i].len();
        if k < 2 {
            continue;
        }
        let u = |w: f64| match mode {
            ClusteringMode::Binary => 1.0,
            ClusteringMode::Weighted => w,
        };
        for &(j, w) in &und[i] {
            mark[j] = u(w);
        }
        let mut total = 0.0;
        for &(j, wij) in &und[i] {
            for &(h, wjh) in &und[j] {
                let uih = mark[h];
                if uih != 0.0 {
                    total += u(wij) * uih * u(wjh);
                }
            }
        }
        for &(j, _) in &und[i] {
            mark[j] = 0.0;
        }
        out[i] = total / (k * k - k) as f64;
    }
    out
}

pub fn clustering(g: &WeightedDigraph, mode: ClusteringMode) -> f64 {
    mean(&clustering_per_bank(g, mode))
}

/// Hop distances from `source`; `usize::MAX` marks unreachable nodes.
fn bfs_distances(g: &WeightedDigraph, source: usize, dist: &mut [usize], queue: &mut VecDeque<usize>) {
    dist.fill(usize::MAX);
    dist[source] = 0;
    queue.clear();
    queue.push_back(source);
    while let Some(v) = queue.pop_front() {
        for &w in g.out_neighbors(v) {
            if dist[w] == usize::MAX {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
        }
    }
}

/// Histogram of directed hop distances over ordered pairs `i != j`:
/// entry `d` counts pairs at distance `d` (entry 0 unused).
pub fn distance_histogram(g: &WeightedDigraph) -> Vec<u64> {
    let n = g.node_count();
    let mut hist = vec![0u64; n.max(1)];
    let mut dist = vec![0usize; n];
    let mut queue = VecDeque::with_capacity(n);
    for s in 0..n {
        bfs_distances(g, s, &mut dist, &mut queue);
        for (t, &d) in dist.iter().enumerate() {
            if t != s && d != usize::MAX {
                hist[d] += 1;
            }
        }
    }
    hist
}

/// Global efficiency `sum_{i!=j} 1/d_ij / (N(N-1))`; unreachable pairs add 0.
pub fn efficiency(g: &WeightedDigraph) -> f64 {
    let n = g.node_count();
    if n < 2 {
        return 0.0;
    }
    efficiency_from_histogram(&distance_histogram(g), n)
}

/// Efficiency from a distance histogram. When `lcm(1..=d_max) * N(N-1)`
/// fits in 53 bits the sum is formed in integers over that common
/// denominator, so the result is the correctly rounded ratio.
pub fn efficiency_from_histogram(hist: &[u64], n: usize) -> f64 {
    const EXACT: u128 = 1 << 53;
    let pairs = (n * n.saturating_sub(1)) as u128;
    if pairs == 0 {
        return 0.0;
    }
    let d_max = hist.iter().rposition(|&c| c > 0).unwrap_or(0);
    let mut lcm: u128 = 1;
    for d in 2..=d_max as u128 {
        lcm = lcm / gcd(lcm, d) * d;
        if lcm * pairs >= EXACT {
            break;
        }
    }
    if lcm * pairs < EXACT {
        let num: u128 = hist.iter().enumerate().skip(1).map(|(d, &c)| u128::from(c) * (lcm / d as u128)).sum();
        return num as f64 / (lcm * pairs) as f64;
    }
    let total: f64 = hist
        .iter()
        .enumerate()
        .skip(1)
        .map(|(d, &c)| c as f64 / d as f64)
        .sum();
    total / pairs as f64
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Normalized shortest-path betweenness (Brandes accumulation over sources
/// in index order). All zero for fewer than three banks. Dependencies are
/// carried in double-double precision and rounded once at the end.
pub fn betweenness(g: &WeightedDigraph) -> Vec<f64> {
    let n = g.node_count();
    if n < 3 {
        return vec![0.0; n];
    }
    let mut bc = vec![Dd::ZERO; n];
    let mut stack = Vec::with_capacity(n);
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut sigma = vec![0.0f64; n];
    let mut dist = vec![usize::MAX; n];
    let mut delta = vec![Dd::ZERO; n];
    let mut queue = VecDeque::with_capacity(n);
    for s in 0..n {
        stack.clear();
        preds.iter_mut().for_each(Vec::clear);
        sigma.fill(0.0);
        dist.fill(usize::MAX);
        delta.fill(Dd::ZERO);
        sigma[s] = 1.0;
        dist[s] = 0;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            stack.push(v);
            for &w in g.out_neighbors(v) {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                    preds[w].push(v);
                }
            }
        }
        while let Some(w) = stack.pop() {
            let share = delta[w].add_f64(1.0).div_f64(sigma[w]);
            for &v in &preds[w] {
                delta[v] = delta[v].add(share.mul_f64(sigma[v]));
            }
            if w != s {
                bc[w] = bc[w].add(delta[w]);
            }
        }
    }
    let norm = ((n - 1) * (n - 2)) as f64;
    bc.into_iter().map(|b| b.div_f64(norm).to_f64()).collect()
}

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Debug, Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    fn two_sum(a: f64, b: f64) -> Dd {
        let s = a + b;
        let bb = s - a;
        Dd { hi: s, lo: (a - (s - bb)) + (b - bb) }
    }

    fn fast_two_sum(a: f64, b: f64) -> Dd {
        let s = a + b;
        Dd { hi: s, lo: b - (s - a) }
    }

    fn add(self, o: Dd) -> Dd {
        let s = Self::two_sum(self.hi, o.hi);
        let t = Self::two_sum(self.lo, o.lo);
        let u = Self::fast_two_sum(s.hi, s.lo + t.hi);
        Self::fast_two_sum(u.hi, u.lo + t.lo)
    }

    fn add_f64(self, b: f64) -> Dd {
        let s = Self::two_sum(self.hi, b);
        Self::fast_two_sum(s.hi, s.lo + self.lo)
    }

    fn mul_f64(self, b: f64) -> Dd {
        let p = self.hi * b;
        let e = libm::fma(self.hi, b, -p);
        Self::fast_two_sum(p, e + self.lo * b)
    }

    fn div_f64(self, b: f64) -> Dd {
        let q1 = self.hi / b;
        let r = self.add(Dd { hi: -q1 * b, lo: -libm::fma(q1, b, -q1 * b) });
        let q2 = r.hi / b;
        let r = r.add(Dd { hi: -q2 * b, lo: -libm::fma(q2, b, -q2 * b) });
        let q3 = r.hi / b;
        Self::fast_two_sum(q1, q2).add_f64(q3)
    }

    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

/// Centered moving average; near the ends the window shrinks symmetrically.
pub fn moving_average(series: &[f64], window: usize) -> Result<Vec<f64>, MetricsError> {
    if window % 2 == 0 {
        return Err(MetricsError::EvenWindow);
    }
    let n = series.len();
    let half = window / 2;
    Ok((0..n)
        .map(|i| {
            let h = half.min(i).min(n - 1 - i);
            let slice = &series[i - h..=i + h];
            slice.iter().sum::<f64>() / slice.len() as f64
        })
        .collect())
}
