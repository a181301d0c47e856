//! Independent reference implementations used by the integration tests and
//! the acceptance suite. Everything here is brute force or exact arithmetic.
#![allow(dead_code)]

use std::collections::BTreeMap;

use edbnet_core::econostats::{PanelDataset, PERCENT};
use edbnet_core::edb::ScenarioSpec;
use edbnet_core::WeightedDigraph;
use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

// ---------------------------------------------------------------- special

fn binomial(n: u64, k: u64) -> BigInt {
    let mut c = BigInt::one();
    for i in 0..k {
        c = c * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    c
}

/// `I_x(a, b)` for integer `a, b` as an exact rational:
/// `sum_{k=a}^{a+b-1} C(a+b-1, k) x^k (1-x)^(a+b-1-k)`.
pub fn incbeta_exact(x: &BigRational, a: u64, b: u64) -> BigRational {
    let n = a + b - 1;
    let one = BigRational::one();
    let y = &one - x;
    let mut total = BigRational::zero();
    for k in a..=n {
        let term = BigRational::from_integer(binomial(n, k))
            * num_traits::pow(x.clone(), k as usize)
            * num_traits::pow(y.clone(), (n - k) as usize);
        total += term;
    }
    total
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().expect("finite rational")
}

// ---------------------------------------------------------------- graphs

pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64) -> WeightedDigraph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.random::<f64>() < p {
                edges.push((i, j, rng.random_range(1..=20) as f64 * 0.5));
            }
        }
    }
    WeightedDigraph::from_edges(n, edges).unwrap()
}

pub fn dense(g: &WeightedDigraph) -> Vec<Vec<f64>> {
    let n = g.node_count();
    let mut w = vec![vec![0.0; n]; n];
    for (i, j, x) in g.edges() {
        w[i][j] = x;
    }
    w
}

/// All-pairs hop distances by Floyd-Warshall; `None` when unreachable.
pub fn floyd_warshall(g: &WeightedDigraph) -> Vec<Vec<Option<u32>>> {
    let n = g.node_count();
    let mut d = vec![vec![None; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = Some(0);
    }
    for (i, j, _) in g.edges() {
        d[i][j] = Some(1);
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if let (Some(a), Some(b)) = (d[i][k], d[k][j]) {
                    if d[i][j].is_none_or(|c| a + b < c) {
                        d[i][j] = Some(a + b);
                    }
                }
            }
        }
    }
    d
}

/// Efficiency as an exact rational over ordered pairs.
pub fn efficiency_exact(g: &WeightedDigraph) -> BigRational {
    let n = g.node_count();
    let d = floyd_warshall(g);
    let mut total = BigRational::zero();
    for i in 0..n {
        for j in 0..n {
            if let (true, Some(l)) = (i != j, d[i][j]) {
                total += BigRational::new(BigInt::one(), BigInt::from(l));
            }
        }
    }
    total / BigRational::from_integer(BigInt::from(n * (n - 1)))
}

/// Every shortest path from `s` to `t`, listed explicitly by depth-first
/// search over simple paths of the shortest length.
pub fn shortest_paths(g: &WeightedDigraph, s: usize, t: usize, len: u32) -> Vec<Vec<usize>> {
    fn walk(
        g: &WeightedDigraph,
        path: &mut Vec<usize>,
        t: usize,
        left: u32,
        out: &mut Vec<Vec<usize>>,
    ) {
        let v = *path.last().unwrap();
        if left == 0 {
            if v == t {
                out.push(path.clone());
            }
            return;
        }
        for &w in g.out_neighbors(v) {
            if !path.contains(&w) {
                path.push(w);
                walk(g, path, t, left - 1, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    walk(g, &mut vec![s], t, len, &mut out);
    out
}

/// Betweenness by enumerating all shortest paths, as exact rationals,
/// normalized by `(N-1)(N-2)`.
pub fn betweenness_exact(g: &WeightedDigraph) -> Vec<BigRational> {
    let n = g.node_count();
    let d = floyd_warshall(g);
    let mut bc = vec![BigRational::zero(); n];
    for s in 0..n {
        for t in 0..n {
            let Some(len) = d[s][t] else { continue };
            if s == t {
                continue;
            }
            let paths = shortest_paths(g, s, t, len);
            let sigma = BigInt::from(paths.len());
            for (v, b) in bc.iter_mut().enumerate() {
                if v == s || v == t {
                    continue;
                }
                let through = paths.iter().filter(|p| p.contains(&v)).count();
                if through > 0 {
                    *b += BigRational::new(BigInt::from(through), sigma.clone());
                }
            }
        }
    }
    if n >= 3 {
        let norm = BigRational::from_integer(BigInt::from((n - 1) * (n - 2)));
        for b in &mut bc {
            *b = &*b / &norm;
        }
    }
    bc
}

// ---------------------------------------------------------- core-periphery

/// Score of `is_core` counted directly from the dense adjacency.
pub fn cp_score_dense(g: &WeightedDigraph, is_core: &[bool]) -> u64 {
    let n = g.node_count();
    let a = dense(g);
    let mut s = 0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            if is_core[i] && is_core[j] && a[i][j] == 0.0 {
                s += 1;
            }
            if !is_core[i] && !is_core[j] && a[i][j] > 0.0 {
                s += 1;
            }
        }
    }
    for i in (0..n).filter(|&i| is_core[i]) {
        if !(0..n).any(|j| !is_core[j] && a[i][j] > 0.0) {
            s += 1;
        }
        if !(0..n).any(|j| !is_core[j] && a[j][i] > 0.0) {
            s += 1;
        }
    }
    s
}

/// Minimum score over all proper nonempty cores and the cores attaining it.
pub fn cp_exhaustive(g: &WeightedDigraph) -> (u64, Vec<Vec<bool>>) {
    let n = g.node_count();
    let mut best = u64::MAX;
    let mut argmin = Vec::new();
    for mask in 1u32..(1 << n) - 1 {
        let is_core: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
        let s = cp_score_dense(g, &is_core);
        if s < best {
            best = s;
            argmin.clear();
        }
        if s == best {
            argmin.push(is_core);
        }
    }
    (best, argmin)
}

/// Planted perfect core-periphery graph: complete core block, empty
/// periphery block, each core bank lending to and borrowing from at least
/// one periphery bank, each periphery bank linked to the core.
pub fn planted_perfect_cp(rng: &mut ChaCha8Rng, n: usize, n_core: usize) -> WeightedDigraph {
    let mut edges = Vec::new();
    for i in 0..n_core {
        for j in 0..n_core {
            if i != j {
                edges.push((i, j, 1.0));
            }
        }
    }
    let mut has = BTreeMap::new();
    for i in 0..n_core {
        for j in n_core..n {
            if rng.random::<f64>() < 0.4 {
                edges.push((i, j, 1.0));
                has.insert((i, j), ());
            }
            if rng.random::<f64>() < 0.4 {
                edges.push((j, i, 1.0));
                has.insert((j, i), ());
            }
        }
    }
    for i in 0..n_core {
        let j = n_core + (i % (n - n_core));
        if !has.contains_key(&(i, j)) {
            edges.push((i, j, 1.0));
            has.insert((i, j), ());
        }
        if !has.contains_key(&(j, i)) {
            edges.push((j, i, 1.0));
            has.insert((j, i), ());
        }
    }
    for j in n_core..n {
        let i = j % n_core;
        if !has.contains_key(&(i, j)) && !has.contains_key(&(j, i)) {
            edges.push((i, j, 1.0));
        }
    }
    WeightedDigraph::from_edges(n, edges).unwrap()
}

// ------------------------------------------------------------- contagion

const E: u8 = 0;
const D: u8 = 1;
const B: u8 = 2;

fn encode(states: &[u8]) -> u32 {
    states.iter().rev().fold(0, |acc, &s| acc * 3 + u32::from(s))
}

fn decode(mut code: u32, n: usize) -> Vec<u8> {
    (0..n)
        .map(|_| {
            let s = (code % 3) as u8;
            code /= 3;
            s
        })
        .collect()
}

fn subsets(items: &[(usize, f64)]) -> Vec<(Vec<usize>, f64)> {
    let mut out = vec![(Vec::new(), 1.0)];
    for &(k, p) in items {
        let mut next = Vec::with_capacity(out.len() * 2);
        for (set, prob) in out {
            if p > 0.0 {
                let mut with = set.clone();
                with.push(k);
                next.push((with, prob * p));
            }
            if p < 1.0 {
                next.push((set, prob * (1.0 - p)));
            }
        }
        out = next;
    }
    out
}

fn k_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    (0u32..1 << n)
        .filter(|m| m.count_ones() as usize == k)
        .map(|m| (0..n).filter(|&i| m >> i & 1 == 1).collect())
        .collect()
}

/// Exact per-bank probability of ending bankrupted, obtained by evolving
/// the full state distribution of the Markov chain: uniform seeding of
/// `seeds` banks, synchronous infection from the step-start infectious set
/// with independent channels, then bankruptcy from the post-infection
/// state, stopping when no bank is distressed or after `max_steps`.
pub fn exact_default_frequencies(
    g: &WeightedDigraph,
    scenario: &ScenarioSpec,
    seeds: usize,
    max_steps: u32,
) -> Vec<f64> {
    let n = g.node_count();
    let w = dense(g);
    let s_out: Vec<f64> = w.iter().map(|row| row.iter().sum()).collect();
    let s_in: Vec<f64> = (0..n).map(|j| (0..n).map(|i| w[i][j]).sum()).collect();
    let lambda = |i: usize, j: usize| {
        if w[i][j] > 0.0 { scenario.phi.eval(w[i][j] / s_out[i]) } else { 0.0 }
    };
    let mu = |i: usize, st: &[u8]| {
        if s_in[i] == 0.0 {
            return 0.0;
        }
        let lost: f64 = (0..n).filter(|&j| st[j] != E).map(|j| w[j][i]).sum();
        scenario.psi.eval(lost / s_in[i])
    };
    let mut dist: BTreeMap<u32, f64> = BTreeMap::new();
    let starts = k_subsets(n, seeds);
    for s in &starts {
        let mut st = vec![E; n];
        for &i in s {
            st[i] = D;
        }
        *dist.entry(encode(&st)).or_default() += 1.0 / starts.len() as f64;
    }
    let mut finished: BTreeMap<u32, f64> = BTreeMap::new();
    for _ in 0..max_steps {
        let mut next: BTreeMap<u32, f64> = BTreeMap::new();
        for (&code, &p) in &dist {
            let st = decode(code, n);
            if !st.contains(&D) {
                *finished.entry(code).or_default() += p;
                continue;
            }
            let pressure: Vec<(usize, f64)> = (0..n)
                .filter(|&j| st[j] == E)
                .map(|j| {
                    let escape: f64 = (0..n)
                        .filter(|&i| st[i] != E)
                        .map(|i| 1.0 - lambda(i, j))
                        .product();
                    (j, 1.0 - escape)
                })
                .collect();
            for (infected, pi) in subsets(&pressure) {
                let mut mid = st.clone();
                for &j in &infected {
                    mid[j] = D;
                }
                let fail: Vec<(usize, f64)> = (0..n)
                    .filter(|&i| mid[i] == D)
                    .map(|i| (i, mu(i, &mid)))
                    .collect();
                for (failed, pf) in subsets(&fail) {
                    let mut end = mid.clone();
                    for &i in &failed {
                        end[i] = B;
                    }
                    *next.entry(encode(&end)).or_default() += p * pi * pf;
                }
            }
        }
        dist = next;
    }
    for (code, p) in dist {
        *finished.entry(code).or_default() += p;
    }
    let mut freq = vec![0.0; n];
    for (code, p) in finished {
        for (i, s) in decode(code, n).into_iter().enumerate() {
            if s == B {
                freq[i] += p;
            }
        }
    }
    freq
}

// ------------------------------------------------------------- statistics

/// Largest CDF gap evaluated at every observed value.
pub fn ks_brute(a: &[f64], b: &[f64]) -> f64 {
    let cdf = |s: &[f64], x: f64| s.iter().filter(|&&v| v <= x).count() as f64 / s.len() as f64;
    a.iter()
        .chain(b)
        .map(|&x| (cdf(a, x) - cdf(b, x)).abs())
        .fold(0.0, f64::max)
}

/// Published asymptotic critical values of the Kolmogorov distribution:
/// `(lambda, P(K > lambda))`.
pub const KOLMOGOROV_TABLE: [(f64, f64); 6] = [
    (1.0727, 0.20),
    (1.2238, 0.10),
    (1.3581, 0.05),
    (1.4802, 0.025),
    (1.6276, 0.01),
    (1.9495, 0.001),
];

/// Least squares with explicit bank dummies: returns the slope estimates
/// for the design columns in order, and the bank effects.
pub fn lsdv(design: &[Vec<f64>], y: &[f64], group: &[usize], n_groups: usize) -> (Vec<f64>, Vec<f64>) {
    let n = y.len();
    let k = design.len();
    let mut x = DMatrix::zeros(n, k + n_groups);
    for (c, col) in design.iter().enumerate() {
        for r in 0..n {
            x[(r, c)] = col[r];
        }
    }
    for r in 0..n {
        x[(r, k + group[r])] = 1.0;
    }
    // Householder QR: R b = Q'y.
    let yv = DVector::from_column_slice(y);
    let qr = x.qr();
    let qty = qr.q().transpose() * yv;
    let b = qr.r().solve_upper_triangular(&qty).expect("full column rank");
    (b.iter().take(k).copied().collect(), b.iter().skip(k).copied().collect())
}

/// Design columns of the constant-time-effect model in the order used by
/// the estimator: regressors, theta-interactions, theta.
pub fn design_columns(panel: &PanelDataset) -> (Vec<Vec<f64>>, Vec<f64>, Vec<usize>, usize) {
    let m = panel.regressors.len();
    let mut cols = vec![Vec::new(); 2 * m + 1];
    let mut ids: BTreeMap<&str, usize> = BTreeMap::new();
    let mut group = Vec::new();
    let mut y = Vec::new();
    for r in &panel.rows {
        let th = panel.theta(r.quarter);
        for k in 0..m {
            cols[k].push(r.x[k]);
            cols[m + k].push(th * r.x[k]);
        }
        cols[2 * m].push(th);
        let next = ids.len();
        group.push(*ids.entry(r.bank.as_str()).or_insert(next));
        y.push(PERCENT * r.y);
    }
    (cols, y, group, ids.len())
}

/// Cluster-robust covariance assembled term by term with dense linear
/// algebra: `c (X'X)^-1 (sum_g X_g' e_g e_g' X_g) (X'X)^-1`.
pub fn sandwich_dense(x: &DMatrix<f64>, resid: &[f64], cluster: &[usize], n_clusters: usize, c: f64) -> DMatrix<f64> {
    let k = x.ncols();
    let xtx_inv = (x.transpose() * x).try_inverse().unwrap();
    let mut meat = DMatrix::zeros(k, k);
    for g in 0..n_clusters {
        let rows: Vec<usize> = (0..x.nrows()).filter(|&r| cluster[r] == g).collect();
        let xg = x.select_rows(&rows);
        let eg = DVector::from_iterator(rows.len(), rows.iter().map(|&r| resid[r]));
        let s = xg.transpose() * eg;
        meat += &s * s.transpose();
    }
    &xtx_inv * meat * &xtx_inv * c
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}
