use edbnet_core::nullmodel::{
    max_relative_residual, sample_null_graph, settle_pairs, solve_decm, Constraints, NullModelError, PairState, SolverMethod,
    SolverOptions,
};
use edbnet_core::WeightedDigraph;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::LogNormal;

/// Weakly connected graph with lognormal weights well above one quantum.
fn market(seed: u64, n: usize, p: f64) -> WeightedDigraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let law = LogNormal::new(2.0, 1.0).unwrap();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && (j == (i + 1) % n || rng.random::<f64>() < p) {
                edges.push((i, j, (rng.sample::<f64, _>(law) * 10.0).round() / 10.0 + 0.5));
            }
        }
    }
    WeightedDigraph::from_edges(n, edges).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn solvers_reproduce_the_constraints(seed in any::<u64>(), n in 4usize..40, p in 0.05f64..0.6, newton in any::<bool>()) {
        let g = market(seed, n, p);
        let method = if newton { SolverMethod::Newton } else { SolverMethod::FixedPoint };
        let opts = SolverOptions { method, max_iter: 200_000, ..SolverOptions::default() };
        let (params, log) = solve_decm(&g, &opts).unwrap();
        let obs = Constraints::from_graph(&g, opts.quantum).unwrap();
        let exp = params.expected();
        let r = max_relative_residual(&obs, &exp);
        prop_assert!(r < opts.tol, "residual {r}");
        prop_assert_eq!(r, log.final_residual);
        let links: f64 = exp.k_out.iter().sum();
        prop_assert!((links - g.edge_count() as f64).abs() <= opts.tol * g.edge_count() as f64);
        for i in 0..n {
            for j in 0..n {
                let (pij, z) = params.pair(i, j);
                prop_assert!((0.0..=1.0).contains(&pij) && (0.0..1.0).contains(&z));
            }
        }
    }
}

#[test]
fn sample_moments_approach_expectations() {
    let g = market(3, 8, 0.3);
    let opts = SolverOptions::default();
    let (params, _) = solve_decm(&g, &opts).unwrap();
    let exp = params.expected();
    let runs = 4000;
    let n = g.node_count();
    let mut sums = vec![[0.0f64; 4]; n];
    let mut squares = vec![[0.0f64; 4]; n];
    for k in 0..runs {
        let s = sample_null_graph(&params, k);
        for i in 0..n {
            let v = [
                s.out_degree(i) as f64,
                s.in_degree(i) as f64,
                s.out_strength(i) / opts.quantum,
                s.in_strength(i) / opts.quantum,
            ];
            for c in 0..4 {
                sums[i][c] += v[c];
                squares[i][c] += v[c] * v[c];
            }
        }
    }
    for i in 0..n {
        let want = [exp.k_out[i], exp.k_in[i], exp.s_out[i], exp.s_in[i]];
        for c in 0..4 {
            let mean = sums[i][c] / runs as f64;
            let var = squares[i][c] / runs as f64 - mean * mean;
            let se = (var / runs as f64).sqrt().max(1e-12);
            // Loose sanity bound; the acceptance suite applies 3 SE.
            assert!((mean - want[c]).abs() <= 4.5 * se, "bank {i} constraint {c}: {mean} vs {}", want[c]);
        }
    }
}

#[test]
fn sampling_is_seed_deterministic() {
    let g = market(8, 12, 0.2);
    let (params, _) = solve_decm(&g, &SolverOptions::default()).unwrap();
    assert_eq!(sample_null_graph(&params, 5), sample_null_graph(&params, 5));
    assert_ne!(sample_null_graph(&params, 5), sample_null_graph(&params, 6));
}

#[test]
fn minimum_weights_are_rejected() {
    let g = WeightedDigraph::from_edges(3, [(0, 1, 0.1), (1, 2, 0.1), (2, 0, 0.1)]).unwrap();
    assert!(matches!(solve_decm(&g, &SolverOptions::default()), Err(NullModelError::Pathological { .. })));
    let g = WeightedDigraph::from_edges(3, [(0, 1, 1.0)]).unwrap();
    assert_eq!(solve_decm(&g, &SolverOptions::default()).unwrap_err(), NullModelError::IsolatedBank(2));
}

/// Pair states by enumerating every simple digraph with the degrees of `g`.
fn settle_by_enumeration(g: &WeightedDigraph) -> Vec<PairState> {
    let n = g.node_count();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|(i, j)| i != j).collect();
    let degrees = |has: &dyn Fn(usize, usize) -> bool| -> Vec<(usize, usize)> {
        (0..n)
            .map(|v| ((0..n).filter(|&u| has(v, u)).count(), (0..n).filter(|&u| has(u, v)).count()))
            .collect()
    };
    let target = degrees(&|i, j| g.has_edge(i, j));
    let (mut ever, mut always) = (vec![false; n * n], vec![true; n * n]);
    for mask in 0u32..1 << pairs.len() {
        let mut adj = vec![false; n * n];
        for (b, &(i, j)) in pairs.iter().enumerate() {
            adj[i * n + j] = mask >> b & 1 == 1;
        }
        if degrees(&|i, j| adj[i * n + j]) != target {
            continue;
        }
        for k in 0..n * n {
            ever[k] |= adj[k];
            always[k] &= adj[k];
        }
    }
    (0..n * n)
        .map(|k| match (ever[k], always[k] && k / n != k % n) {
            (_, true) => PairState::Certain,
            (false, _) => PairState::Impossible,
            _ => PairState::Free,
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn settled_pairs_match_enumeration(seed in any::<u64>(), n in 2usize..5, p in 0.1f64..0.9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let edges: Vec<_> = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|&(i, j)| i != j && rng.random::<f64>() < p)
            .map(|(i, j)| (i, j, 1.0))
            .collect();
        let g = WeightedDigraph::from_edges(n, edges).unwrap();
        prop_assert_eq!(settle_pairs(&g), settle_by_enumeration(&g));
    }
}
