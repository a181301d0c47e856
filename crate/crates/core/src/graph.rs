//! Compressed sparse directed weighted graph.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("edge ({0}, {1}) references a node outside 0..{2}")]
    NodeOutOfRange(usize, usize, usize),
    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("edge ({0}, {1}) has non-positive or non-finite weight {2}")]
    BadWeight(usize, usize, f64),
    #[error("no edges")]
    NoEdges,
}

/// Directed graph with strictly positive edge weights, stored in both
/// outgoing and incoming compressed-row form. Neighbor lists are sorted by
/// node index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedDigraph {
    n: usize,
    out_ptr: Vec<usize>,
    out_idx: Vec<usize>,
    out_w: Vec<f64>,
    in_ptr: Vec<usize>,
    in_idx: Vec<usize>,
    in_w: Vec<f64>,
}

impl WeightedDigraph {
    /// Builds a graph from `(source, target, weight)` triples. Repeated pairs
    /// are summed in input order.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut merged: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (i, j, w) in edges {
            if i >= n || j >= n {
                return Err(GraphError::NodeOutOfRange(i, j, n));
            }
            if i == j {
                return Err(GraphError::SelfLoop(i));
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(GraphError::BadWeight(i, j, w));
            }
            *merged.entry((i, j)).or_insert(0.0) += w;
        }
        Ok(Self::from_sorted_unique(n, merged.into_iter().map(|((i, j), w)| (i, j, w))))
    }

    /// `edges` must be sorted by (source, target), free of duplicates,
    /// self-loops and non-positive weights.
    fn from_sorted_unique<I>(n: usize, edges: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut out_ptr = vec![0usize; n + 1];
        let mut out_idx = Vec::new();
        let mut out_w = Vec::new();
        let mut in_count = vec![0usize; n];
        for (i, j, w) in edges {
            out_ptr[i + 1] += 1;
            out_idx.push(j);
            out_w.push(w);
            in_count[j] += 1;
        }
        for i in 0..n {
            out_ptr[i + 1] += out_ptr[i];
        }
        let mut in_ptr = vec![0usize; n + 1];
        for j in 0..n {
            in_ptr[j + 1] = in_ptr[j] + in_count[j];
        }
        let m = out_idx.len();
        let mut in_idx = vec![0usize; m];
        let mut in_w = vec![0.0; m];
        let mut fill = in_ptr.clone();
        // Sources are visited in increasing order, so incoming lists come out sorted.
        for i in 0..n {
            for e in out_ptr[i]..out_ptr[i + 1] {
                let j = out_idx[e];
                in_idx[fill[j]] = i;
                in_w[fill[j]] = out_w[e];
                fill[j] += 1;
            }
        }
        Self { n, out_ptr, out_idx, out_w, in_ptr, in_idx, in_w }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    /// Number of directed links `L`.
    pub fn edge_count(&self) -> usize {
        self.out_idx.len()
    }

    /// Outgoing edges of `i` as `(target, weight)`.
    pub fn out_edges(&self, i: usize) -> impl ExactSizeIterator<Item = (usize, f64)> + '_ {
        let r = self.out_ptr[i]..self.out_ptr[i + 1];
        self.out_idx[r.clone()].iter().copied().zip(self.out_w[r].iter().copied())
    }

    /// Incoming edges of `i` as `(source, weight)`.
    pub fn in_edges(&self, i: usize) -> impl ExactSizeIterator<Item = (usize, f64)> + '_ {
        let r = self.in_ptr[i]..self.in_ptr[i + 1];
        self.in_idx[r.clone()].iter().copied().zip(self.in_w[r].iter().copied())
    }

    pub fn out_neighbors(&self, i: usize) -> &[usize] {
        &self.out_idx[self.out_ptr[i]..self.out_ptr[i + 1]]
    }

    pub fn in_neighbors(&self, i: usize) -> &[usize] {
        &self.in_idx[self.in_ptr[i]..self.in_ptr[i + 1]]
    }

    /// Global index range of the outgoing edges of `i`; edge ids follow the
    /// (source, target) order of [`WeightedDigraph::edges`].
    pub fn out_edge_range(&self, i: usize) -> core::ops::Range<usize> {
        self.out_ptr[i]..self.out_ptr[i + 1]
    }

    /// Target of edge id `e`.
    pub fn edge_target(&self, e: usize) -> usize {
        self.out_idx[e]
    }

    pub fn edge_weight(&self, e: usize) -> f64 {
        self.out_w[e]
    }

    pub fn out_degree(&self, i: usize) -> usize {
        self.out_ptr[i + 1] - self.out_ptr[i]
    }

    pub fn in_degree(&self, i: usize) -> usize {
        self.in_ptr[i + 1] - self.in_ptr[i]
    }

    pub fn out_strength(&self, i: usize) -> f64 {
        self.out_w[self.out_ptr[i]..self.out_ptr[i + 1]].iter().sum()
    }

    pub fn in_strength(&self, i: usize) -> f64 {
        self.in_w[self.in_ptr[i]..self.in_ptr[i + 1]].iter().sum()
    }

    /// `w_ij`, zero when absent.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let targets = self.out_neighbors(i);
        match targets.binary_search(&j) {
            Ok(k) => self.out_w[self.out_ptr[i] + k],
            Err(_) => 0.0,
        }
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.out_neighbors(i).binary_search(&j).is_ok()
    }

    /// All edges in (source, target) order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| self.out_edges(i).map(move |(j, w)| (i, j, w)))
    }

    /// Total volume `V = sum_ij w_ij`.
    pub fn total_weight(&self) -> f64 {
        self.out_w.iter().sum()
    }

    /// Subgraph induced by `nodes` (which must be sorted and distinct); node
    /// `nodes[k]` becomes node `k`.
    pub fn induced_subgraph(&self, nodes: &[usize]) -> Self {
        let mut remap = vec![usize::MAX; self.n];
        for (k, &v) in nodes.iter().enumerate() {
            remap[v] = k;
        }
        let edges = nodes.iter().enumerate().flat_map(|(k, &v)| {
            let remap = &remap;
            self.out_edges(v)
                .filter(move |&(j, _)| remap[j] != usize::MAX)
                .map(move |(j, w)| (k, remap[j], w))
        });
        // Sorted because `nodes` is sorted and remap is monotone.
        Self::from_sorted_unique(nodes.len(), edges.collect::<Vec<_>>())
    }

    /// Same edges with every weight multiplied by `factor` (> 0).
    pub fn scaled(&self, factor: f64) -> Self {
        let mut g = self.clone();
        g.out_w.iter_mut().for_each(|w| *w *= factor);
        g.in_w.iter_mut().for_each(|w| *w *= factor);
        g
    }

    /// Relabels node `v` as `perm[v]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let edges: Vec<_> = self.edges().map(|(i, j, w)| (perm[i], perm[j], w)).collect();
        Self::from_edges(self.n, edges).expect("permutation of a valid graph")
    }

    /// Undirected neighbor lists with combined weights `w_ij + w_ji`.
    pub fn undirected(&self) -> Vec<Vec<(usize, f64)>> {
        let mut lists = vec![Vec::new(); self.n];
        for i in 0..self.n {
            let out: &[usize] = self.out_neighbors(i);
            let inc: &[usize] = self.in_neighbors(i);
            let (mut a, mut b) = (0, 0);
            let base_o = self.out_ptr[i];
            let base_i = self.in_ptr[i];
            while a < out.len() || b < inc.len() {
                let next_o = out.get(a).copied().unwrap_or(usize::MAX);
                let next_i = inc.get(b).copied().unwrap_or(usize::MAX);
                if next_o == next_i {
                    lists[i].push((next_o, self.out_w[base_o + a] + self.in_w[base_i + b]));
                    a += 1;
                    b += 1;
                } else if next_o < next_i {
                    lists[i].push((next_o, self.out_w[base_o + a]));
                    a += 1;
                } else {
                    lists[i].push((next_i, self.in_w[base_i + b]));
                    b += 1;
                }
            }
        }
        lists
    }
}

/// Node set of the largest weakly connected component, sorted. Among equally
/// large components the one holding the smallest node index wins. Isolated
/// nodes never qualify.
pub fn largest_weak_component(g: &WeightedDigraph) -> Result<Vec<usize>, GraphError> {
    if g.edge_count() == 0 {
        return Err(GraphError::NoEdges);
    }
    let n = g.node_count();
    let mut label = vec![usize::MAX; n];
    let mut best: Option<Vec<usize>> = None;
    let mut stack = Vec::new();
    for root in 0..n {
        if label[root] != usize::MAX || (g.out_degree(root) == 0 && g.in_degree(root) == 0) {
            continue;
        }
        let mut members = Vec::new();
        label[root] = root;
        stack.push(root);
        while let Some(v) = stack.pop() {
            members.push(v);
            for &u in g.out_neighbors(v).iter().chain(g.in_neighbors(v)) {
                if label[u] == usize::MAX {
                    label[u] = root;
                    stack.push(u);
                }
            }
        }
        // Roots are scanned in increasing order, so a strictly larger size is
        // required to displace an earlier component.
        if best.as_ref().map_or(true, |b| members.len() > b.len()) {
            members.sort_unstable();
            best = Some(members);
        }
    }
    Ok(best.expect("at least one edge"))
}

/// Restricts `g` to its largest weakly connected component; returns the
/// reduced graph and the original indices of its nodes.
pub fn weakly_connected_component(
    g: &WeightedDigraph,
) -> Result<(WeightedDigraph, Vec<usize>), GraphError> {
    let nodes = largest_weak_component(g)?;
    if nodes.len() == g.node_count() {
        return Ok((g.clone(), nodes));
    }
    Ok((g.induced_subgraph(&nodes), nodes))
}
