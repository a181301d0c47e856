//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

#[path = "../../core/tests/oracles/mod.rs"]
mod oracles;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use edbnet::parallel;
use edbnet_core::coreperiphery::CpOptions;
use edbnet_core::econostats::{fe_regression, ks_two_sample, FeOptions, PanelDataset, PanelRow};
use edbnet_core::edb::{simulate_observed, BankState, ContagionModel, ScenarioSpec, SimConfig};
use edbnet_core::metrics::{betweenness, efficiency};
use edbnet_core::netcore::{build_quarterly_networks, QuarterlyNetwork};
use edbnet_core::nullmodel::{
    max_relative_residual, null_sample_seed, sample_null_graph, solve_decm, Constraints, SolverOptions,
};
use edbnet_core::special::{kolmogorov_sf, regularized_incomplete_beta};
use edbnet_core::synth::{generate, generate_with_truth, SynthSpec};
use edbnet_core::{Quarter, WeightedDigraph};
use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use oracles::{
    betweenness_exact, cp_exhaustive, cp_score_dense, design_columns, efficiency_exact, exact_default_frequencies,
    ks_brute, lsdv, planted_perfect_cp, random_graph, rel_diff, sandwich_dense, to_f64, KOLMOGOROV_TABLE,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

struct Check {
    pass: bool,
    detail: String,
    /// Time charged against the budget when only part of the work counts.
    timed: Option<Duration>,
}

fn check(pass: bool, detail: String) -> Check {
    Check { pass, detail, timed: None }
}

#[derive(Default)]
struct Suite {
    failed: usize,
    total: usize,
}

impl Suite {
    fn run(&mut self, name: &str, budget: Option<Duration>, f: impl FnOnce() -> Check) {
        let start = Instant::now();
        let c = f();
        let elapsed = start.elapsed();
        let charged = c.timed.unwrap_or(elapsed);
        let in_time = budget.is_none_or(|b| charged <= b);
        let pass = c.pass && in_time;
        self.total += 1;
        if !pass {
            self.failed += 1;
        }
        let limit = match budget {
            Some(b) => format!(", limit {} s", b.as_secs()),
            None => String::new(),
        };
        println!(
            "{} {name}: {} [{:.2} s{limit}]",
            if pass { "PASS" } else { "FAIL" },
            c.detail,
            charged.as_secs_f64()
        );
    }
}

fn q(s: &str) -> Quarter {
    s.parse().unwrap()
}

fn scenarios() -> [ScenarioSpec; 3] {
    [ScenarioSpec::lc_ld(), ScenarioSpec::lc_nld(), ScenarioSpec::nlc_nld()]
}

fn connected_graph(seed: u64, n: usize, p: f64) -> WeightedDigraph {
    let g = random_graph(&mut ChaCha8Rng::seed_from_u64(seed), n, p);
    let mut edges: Vec<_> = g.edges().collect();
    edges.extend((0..n).map(|i| (i, (i + 1) % n, 1.0)));
    WeightedDigraph::from_edges(n, edges).unwrap()
}

fn one_quarter(n_banks: usize, seed: u64) -> SynthSpec {
    SynthSpec {
        n_banks,
        first_quarter: q("2006Q1"),
        last_quarter: q("2006Q1"),
        regimes: Vec::new(),
        rng_seed: seed,
        ..SynthSpec::default()
    }
}

fn synthetic_network(n_banks: usize, seed: u64) -> QuarterlyNetwork {
    build_quarterly_networks(&generate(&one_quarter(n_banks, seed)).unwrap()).unwrap().remove(0)
}

// ------------------------------------------------------------ criteria

fn incomplete_beta() -> Check {
    // Exact values at x = k/100 from the binomial sum in integer arithmetic.
    let mut cases = Vec::new();
    for n in 1u32..=49 {
        let denom = BigInt::from(100u32).pow(n);
        for k in 0u32..=100 {
            let mut binom = BigInt::one();
            let mut terms = Vec::with_capacity(n as usize + 1);
            for i in 0..=n {
                terms.push(&binom * BigInt::from(k).pow(i) * BigInt::from(100 - k).pow(n - i));
                binom = binom * BigInt::from(n - i) / BigInt::from(i + 1);
            }
            let mut tail = BigInt::zero();
            for a in (1..=n).rev() {
                tail += &terms[a as usize];
                let exact = to_f64(&BigRational::new(tail.clone(), denom.clone()));
                cases.push((f64::from(a), f64::from(n + 1 - a), f64::from(k) / 100.0, exact));
            }
        }
    }
    let start = Instant::now();
    let got: Vec<f64> =
        cases.iter().map(|&(a, b, x, _)| regularized_incomplete_beta(x, a, b).unwrap()).collect();
    let timed = start.elapsed();
    let worst = cases.iter().zip(&got).map(|(c, g)| (g - c.3).abs()).fold(0.0, f64::max);
    Check {
        pass: worst < 1e-12,
        detail: format!("{} evaluations, max |error| {worst:.2e} (tol 1e-12), timing excludes the oracle", cases.len()),
        timed: Some(timed),
    }
}

/// Probability that a Binomial(n, p) share lands more than `band` away from
/// `p`.
fn binomial_outside(n: usize, p: f64, band: f64) -> f64 {
    let ln_fact: Vec<f64> = (0..=n).scan(0.0, |acc, k| {
        if k > 0 {
            *acc += (k as f64).ln();
        }
        Some(*acc)
    }).collect();
    (0..=n)
        .filter(|&k| (k as f64 / n as f64 - p).abs() > band)
        .map(|k| (ln_fact[n] - ln_fact[k] - ln_fact[n - k] + k as f64 * p.ln() + (n - k) as f64 * (1.0 - p).ln()).exp())
        .sum()
}

fn edb_small_instances() -> Check {
    let mut chance = 0.0;
    let mut compared = 0;
    let mut worst_z: f64 = 0.0;
    let mut failures = Vec::new();
    let networks = 12;
    for net in 0..networks {
        let n = 3 + net % 4;
        let p = 0.2 + 0.05 * (net % 8) as f64;
        let g = connected_graph(1000 + net as u64, n, p);
        let seeds = 1 + net % 2;
        let density = (seeds as f64 - 0.5) / n as f64;
        for sc in scenarios() {
            let config = SimConfig { n_realizations: 5000, ..SimConfig::new(sc.clone(), density, 77 + net as u64) };
            assert_eq!(config.seed_count(n).unwrap(), seeds);
            let exact = exact_default_frequencies(&g, &sc, seeds, config.max_steps);
            let freq = parallel::simulate_ensemble(&g, &config).unwrap().finish().per_bank_default_frequency;
            for (i, (&f, &p)) in freq.iter().zip(&exact).enumerate() {
                compared += 1;
                let se = (p * (1.0 - p) / config.n_realizations as f64).sqrt();
                let gap = (f - p).abs();
                let ok = if se > 0.0 { gap <= 3.0 * se } else { gap <= 1e-12 };
                if se > 0.0 {
                    worst_z = worst_z.max(gap / se);
                    chance += binomial_outside(config.n_realizations, p, 3.0 * se);
                }
                if !ok {
                    failures.push(format!("net {net} {} bank {i}: {f} vs {p:.5}", sc.name));
                }
            }
        }
    }
    check(
        failures.is_empty(),
        format!(
            "{networks} networks (N 3..6) x 3 scenarios, {compared} bank frequencies vs exact Markov chain, \
             max |z| {worst_z:.2}, outside 3 SE: {} (about {chance:.2} expected from chance alone){}",
            failures.len(),
            if failures.is_empty() { String::new() } else { format!(" {failures:?}") }
        ),
    )
}

fn seed_density_monotonicity() -> Check {
    let net = synthetic_network(100, 17);
    let g = &net.graph;
    let densities = [0.01, 0.05, 0.10, 0.20];
    let mut pass = true;
    let mut lines = Vec::new();
    for sc in scenarios() {
        let points: Vec<(f64, f64)> = densities
            .iter()
            .map(|&f| {
                let r = parallel::simulate_ensemble(g, &SimConfig::new(sc.clone(), f, 5)).unwrap().finish();
                (r.bankrupted_fraction_mean, r.bankrupted_fraction_se())
            })
            .collect();
        let mut worst = f64::INFINITY;
        for w in points.windows(2) {
            let joint = (w[0].1.powi(2) + w[1].1.powi(2)).sqrt();
            let step = (w[1].0 - w[0].0) / joint;
            worst = worst.min(step);
            pass &= step > -1.0;
        }
        let means: Vec<String> = points.iter().map(|p| format!("{:.4}", p.0)).collect();
        lines.push(format!("{} [{}] min step {worst:.1} SE", sc.name, means.join(", ")));
    }
    check(pass, format!("N = {}, 5000 runs per point; {}", net.n_banks(), lines.join("; ")))
}

fn trajectory(model: &ContagionModel<'_>, config: &SimConfig, r: usize) -> Vec<Vec<BankState>> {
    let mut steps = Vec::new();
    simulate_observed(model, config, r, |_, states| steps.push(states.to_vec())).unwrap();
    steps
}

struct Coupled {
    lc_mean: f64,
    nlc_mean: f64,
    /// Steps at which an LC-NLD unhealthy or bankrupt bank is not so under
    /// NLC-NLD, compared while both runs are active.
    stepwise_violations: usize,
    /// Runs whose final LC-NLD bankrupt set is not inside the NLC-NLD one.
    final_escapes: usize,
}

fn coupled_runs(g: &WeightedDigraph, density: f64, seed: u64, runs: usize) -> Coupled {
    let (lc, nlc) = (ScenarioSpec::lc_nld(), ScenarioSpec::nlc_nld());
    let (ml, mn) = (ContagionModel::new(g, &lc).unwrap(), ContagionModel::new(g, &nlc).unwrap());
    let (cl, cn) = (SimConfig::new(lc, density, seed), SimConfig::new(nlc, density, seed));
    let bankrupt = |s: &[BankState]| s.iter().filter(|&&x| x == BankState::Bankrupted).count();
    let mut out = Coupled { lc_mean: 0.0, nlc_mean: 0.0, stepwise_violations: 0, final_escapes: 0 };
    for r in 0..runs {
        let a = trajectory(&ml, &cl, r);
        let b = trajectory(&mn, &cn, r);
        for (sa, sb) in a.iter().zip(&b) {
            if sa.iter().zip(sb).any(|(x, y)| {
                (x.is_unhealthy() && !y.is_unhealthy())
                    || (*x == BankState::Bankrupted && *y != BankState::Bankrupted)
            }) {
                out.stepwise_violations += 1;
            }
        }
        let (fa, fb) = (a.last().unwrap(), b.last().unwrap());
        out.lc_mean += bankrupt(fa) as f64;
        out.nlc_mean += bankrupt(fb) as f64;
        if fa.iter().zip(fb).any(|(&x, &y)| x == BankState::Bankrupted && y != BankState::Bankrupted) {
            out.final_escapes += 1;
        }
    }
    out.lc_mean /= runs as f64;
    out.nlc_mean /= runs as f64;
    out
}

fn ordering_networks() -> Vec<(String, WeightedDigraph)> {
    let mut nets: Vec<(String, WeightedDigraph)> = (0..8)
        .map(|k| {
            let n = 10 + 4 * k;
            (format!("random{n}"), connected_graph(500 + k as u64, n, 0.08 + 0.02 * k as f64))
        })
        .collect();
    let market = build_quarterly_networks(&generate(&SynthSpec { rng_seed: 3, ..SynthSpec::default() }).unwrap()).unwrap();
    for quarter in ["2006Q2", "2008Q2", "2010Q2"] {
        let net = market.iter().find(|n| n.quarter == q(quarter)).unwrap();
        nets.push((format!("synth{quarter}"), net.graph.clone()));
    }
    nets
}

fn scenario_ordering() -> Check {
    let nets = ordering_networks();
    let runs = 5000;
    let (mut ordered, mut stepwise, mut escapes) = (true, 0, 0);
    let mut worst_gap = f64::INFINITY;
    for (k, (_, g)) in nets.iter().enumerate() {
        let c = coupled_runs(g, 0.05, 40 + k as u64, runs);
        ordered &= c.nlc_mean >= c.lc_mean;
        worst_gap = worst_gap.min(c.nlc_mean - c.lc_mean);
        stepwise += c.stepwise_violations;
        escapes += c.final_escapes;
    }
    let total = nets.len() * runs;
    check(
        ordered && stepwise == 0,
        format!(
            "{} networks x {runs} coupled runs: min (NLC-NLD - LC-NLD) mean defaults {worst_gap:.3}; \
             step-wise containment violations {stepwise}; final bankrupt sets not nested in {escapes} of {total} runs \
             (LC-NLD keeps spreading after NLC-NLD has no distressed banks left)",
            nets.len()
        ),
    )
}

fn path_metrics() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut mismatches = 0;
    for _ in 0..200 {
        let n = rng.random_range(2..=8);
        let p = rng.random_range(0.1..0.8);
        let g = random_graph(&mut rng, n, p);
        if efficiency(&g) != to_f64(&efficiency_exact(&g)) {
            mismatches += 1;
        }
        let exact = betweenness_exact(&g);
        if betweenness(&g).iter().zip(&exact).any(|(a, b)| *a != to_f64(b)) {
            mismatches += 1;
        }
    }
    check(mismatches == 0, format!("200 graphs (N 2..8), efficiency and betweenness bit-equal to exact rationals, mismatches {mismatches}"))
}

fn planted_perfect() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut bad = Vec::new();
    let graphs = 40;
    for k in 0..graphs {
        let n = rng.random_range(4..=12);
        let n_core = rng.random_range(2..=n / 2);
        let g = planted_perfect_cp(&mut rng, n, n_core);
        let fit = parallel::fit_core_periphery(&g, &CpOptions { restarts: 20, seed: k }).unwrap();
        let is_core: Vec<bool> = fit.coreness.iter().map(|&c| c == 1).collect();
        let (best, argmin) = cp_exhaustive(&g);
        if fit.error_score != 0 || cp_score_dense(&g, &is_core) != 0 || best != 0 || !argmin.contains(&is_core) {
            bad.push(k);
        }
    }
    check(bad.is_empty(), format!("{graphs} planted graphs (N 4..12): fitted score 0 and exhaustive optimum 0, failures {bad:?}"))
}

fn planted_noisy() -> Check {
    let mut accuracies = Vec::new();
    for seed in 0..20 {
        let spec = one_quarter(100, 300 + seed);
        let (records, truth) = generate_with_truth(&spec).unwrap();
        let net = build_quarterly_networks(&records).unwrap().remove(0);
        let fit = parallel::fit_core_periphery(&net.graph, &CpOptions { restarts: 20, seed }).unwrap();
        let planted: BTreeMap<&str, bool> =
            truth.bank_ids.iter().map(String::as_str).zip(truth.is_core.iter().copied()).collect();
        let hits = net
            .bank_ids
            .iter()
            .zip(&fit.coreness)
            .filter(|(id, &c)| planted[id.as_str()] == (c == 1))
            .count();
        accuracies.push(hits as f64 / net.n_banks() as f64);
    }
    let min = accuracies.iter().copied().fold(1.0, f64::min);
    let mean = accuracies.iter().sum::<f64>() / accuracies.len() as f64;
    check(min >= 0.95, format!("20 synthetic 100-bank markets: label accuracy min {min:.3}, mean {mean:.3} (need >= 0.95)"))
}

fn decm() -> Check {
    let opts = SolverOptions::default();
    let samples = 1000;
    let mut residuals = Vec::new();
    let mut compared = 0;
    let mut outside = Vec::new();
    let mut worst_z: f64 = 0.0;
    for (n, seed) in [(50, 1), (100, 2), (200, 3)] {
        let net = synthetic_network(n, seed);
        let g = &net.graph;
        let (params, log) = solve_decm(g, &opts).unwrap();
        let obs = Constraints::from_graph(g, opts.quantum).unwrap();
        residuals.push((net.n_banks(), max_relative_residual(&obs, &params.expected()), log.iterations));
        let m = net.n_banks();
        // Exact means and variances of degrees and strengths in quanta.
        let mut mean = vec![[0.0f64; 4]; m];
        let mut var = vec![[0.0f64; 4]; m];
        for i in 0..m {
            for j in 0..m {
                let (p, z) = params.pair(i, j);
                if p == 0.0 {
                    continue;
                }
                let w1 = p / (1.0 - z);
                let w2 = p * (1.0 + z) / ((1.0 - z) * (1.0 - z));
                let (dv, wv) = (p * (1.0 - p), w2 - w1 * w1);
                for (node, cols) in [(i, [0, 2]), (j, [1, 3])] {
                    mean[node][cols[0]] += p;
                    var[node][cols[0]] += dv;
                    mean[node][cols[1]] += w1;
                    var[node][cols[1]] += wv;
                }
            }
        }
        let mut sums = vec![[0.0f64; 4]; m];
        for k in 0..samples {
            let s = sample_null_graph(&params, null_sample_seed(seed, k));
            for (i, row) in sums.iter_mut().enumerate() {
                row[0] += s.out_degree(i) as f64;
                row[1] += s.in_degree(i) as f64;
                row[2] += (s.out_strength(i) / opts.quantum).round();
                row[3] += (s.in_strength(i) / opts.quantum).round();
            }
        }
        for i in 0..m {
            for c in 0..4 {
                let se = (var[i][c] / samples as f64).sqrt();
                let gap = (sums[i][c] / samples as f64 - mean[i][c]).abs();
                compared += 1;
                let ok = if se > 0.0 { gap <= 3.0 * se } else { gap <= 1e-9 * mean[i][c].max(1.0) };
                if se > 0.0 {
                    worst_z = worst_z.max(gap / se);
                }
                if !ok {
                    outside.push(format!("N{m} bank {i} {}", ["k_out", "k_in", "s_out", "s_in"][c]));
                }
            }
        }
    }
    let converged = residuals.iter().all(|r| r.1 < 1e-6);
    let expected_outside = compared as f64 * 0.0027;
    check(
        converged && outside.is_empty(),
        format!(
            "residuals {}; {compared} sample means over {samples} draws vs exact model moments, max |z| {worst_z:.2}, \
             outside 3 SE: {} (about {expected_outside:.1} expected from chance alone){}",
            residuals.iter().map(|r| format!("N{} {:.1e} ({} it)", r.0, r.1, r.2)).collect::<Vec<_>>().join(", "),
            outside.len(),
            if outside.is_empty() { String::new() } else { format!(" {outside:?}") }
        ),
    )
}

fn random_panel(seed: u64, m: usize) -> PanelDataset {
    let quarter = |t: usize| (0..t).fold(q("2006Q1"), |q, _| q.next());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let banks = rng.random_range(4..12);
    let quarters = rng.random_range(6..11);
    let crisis = rng.random_range(2..quarters - 2);
    let beta: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
    let mut rows = Vec::new();
    for b in 0..banks {
        let effect: f64 = rng.sample::<f64, _>(StandardNormal) * 0.1;
        let mut kept = 0;
        for t in 0..quarters {
            if kept >= 2 && rng.random::<f64>() < 0.15 {
                continue;
            }
            kept += 1;
            let x: Vec<f64> = (0..m).map(|_| rng.sample::<f64, _>(StandardNormal) * 2.0 + 1.0).collect();
            let noise: f64 = rng.sample(StandardNormal);
            let y = effect + x.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>() * 0.01 + 0.02 * noise;
            rows.push(PanelRow { bank: format!("B{b:02}"), quarter: quarter(t), y, x });
        }
    }
    PanelDataset::new((0..m).map(|k| format!("x{k}")).collect(), quarter(crisis), rows).unwrap()
}

fn fixed_effects() -> Check {
    let (mut worst_coef, mut worst_cov): (f64, f64) = (0.0, 0.0);
    for seed in 0..100 {
        let panel = random_panel(seed, 1 + seed as usize % 3);
        let res = fe_regression(&panel, &FeOptions::default()).unwrap();
        let (cols, y, group, n_groups) = design_columns(&panel);
        let (slopes, _) = lsdv(&cols, &y, &group, n_groups);
        for (c, want) in res.coefficients.iter().zip(&slopes) {
            worst_coef = worst_coef.max(rel_diff(c.estimate, *want));
        }

        let n = y.len();
        let within = |v: &[f64]| -> Vec<f64> {
            let mut sum = vec![0.0; n_groups];
            let mut cnt = vec![0.0; n_groups];
            for (k, &x) in v.iter().enumerate() {
                sum[group[k]] += x;
                cnt[group[k]] += 1.0;
            }
            let grand = v.iter().sum::<f64>() / n as f64;
            v.iter().enumerate().map(|(k, &x)| x - sum[group[k]] / cnt[group[k]] + grand).collect()
        };
        let k = cols.len() + 1;
        let mut x = DMatrix::from_element(n, k, 1.0);
        for (c, col) in cols.iter().enumerate() {
            for (r, v) in within(col).into_iter().enumerate() {
                x[(r, c)] = v;
            }
        }
        let yw = within(&y);
        let b: Vec<f64> = res.coefficients.iter().map(|c| c.estimate).collect();
        let resid: Vec<f64> = (0..n).map(|r| yw[r] - (0..k).map(|c| x[(r, c)] * b[c]).sum::<f64>()).collect();
        let g = n_groups as f64;
        let c = g / (g - 1.0) * (n as f64 - 1.0) / (n as f64 - k as f64);
        let v = sandwich_dense(&x, &resid, &group, n_groups, c);
        let scale = v.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        for i in 0..k {
            for j in 0..k {
                worst_cov = worst_cov.max((res.covariance[i][j] - v[(i, j)]).abs() / scale);
            }
        }
    }
    check(
        worst_coef <= 1e-8 && worst_cov <= 1e-10,
        format!(
            "100 panels: max relative slope gap to LSDV {worst_coef:.1e} (tol 1e-8), \
             max bank-clustered covariance gap {worst_cov:.1e} of the largest entry (tol 1e-10)"
        ),
    )
}

fn ks() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut mismatches = 0;
    for k in 0..100 {
        let (na, nb) = (rng.random_range(1..80), rng.random_range(1..80));
        let mut draw = |len: usize| -> Vec<f64> {
            if k % 2 == 0 {
                (0..len).map(|_| f64::from(rng.random_range(0..25))).collect()
            } else {
                (0..len).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
            }
        };
        let (a, b) = (draw(na), draw(nb));
        if ks_two_sample(&a, &b).unwrap().d != ks_brute(&a, &b) {
            mismatches += 1;
        }
    }
    let worst = KOLMOGOROV_TABLE.iter().map(|&(l, p)| (kolmogorov_sf(l) - p).abs()).fold(0.0, f64::max);
    check(
        mismatches == 0 && worst < 1e-3,
        format!("100 sample pairs, D mismatches {mismatches}; max p-value gap to the Kolmogorov table {worst:.1e} (tol 1e-3)"),
    )
}

// ------------------------------------------------------------ CLI runs

fn edbnet(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_edbnet")).args(args).output().map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("edbnet {}: {}", args.join(" "), String::from_utf8_lossy(&out.stderr)))
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn pipeline() -> Result<Check, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p = |name: &str| dir.path().join(name);
    let (tx, edges, net, banks, core, sim, freq) =
        (p("tx.csv"), p("edges.csv"), p("net.csv"), p("banks.csv"), p("core.csv"), p("sim.json"), p("freq.csv"));
    edbnet(&["synth", "--out", s(&tx), "--rng-seed", "2026"])?;
    edbnet(&["ingest", "--input", s(&tx), "--edges", s(&edges)])?;
    edbnet(&["metrics", "--edges", s(&edges), "--network-out", s(&net), "--bank-out", s(&banks)])?;
    edbnet(&["coreperiphery", "--edges", s(&edges), "--out", s(&core), "--rng-seed", "1"])?;
    edbnet(&["simulate", "--edges", s(&edges), "--out", s(&sim), "--frequencies", s(&freq), "--rng-seed", "1"])?;
    edbnet(&[
        "report", "--network-metrics", s(&net), "--simulation", s(&sim), "--edges", s(&edges), "--coreness", s(&core),
        "--bank-metrics", s(&banks), "--frequencies", s(&freq), "--out-dir", s(&p("report")),
    ])?;

    let spec = SynthSpec::default();
    let regime = |quarter: &str| spec.regime_of(q(quarter)).map(|r| r.name.clone()).unwrap();
    let mut by_regime: BTreeMap<String, [Vec<f64>; 3]> = BTreeMap::new();
    let mut reader = csv::Reader::from_path(&net).map_err(|e| e.to_string())?;
    let headers = reader.headers().map_err(|e| e.to_string())?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let (qc, dc, vc) = (col("quarter"), col("density"), col("volume_per_bank"));
    for rec in reader.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        let entry = by_regime.entry(regime(&rec[qc])).or_default();
        entry[0].push(rec[dc].parse().unwrap());
        entry[1].push(rec[vc].parse().unwrap());
    }
    let sim: serde_json::Value = serde_json::from_str(&fs::read_to_string(&sim).map_err(|e| e.to_string())?).unwrap();
    for quarter in sim["quarters"].as_array().unwrap() {
        let name = regime(quarter["quarter"].as_str().unwrap());
        by_regime.get_mut(&name).unwrap()[2].push(quarter["result"]["bankrupted_fraction_mean"].as_f64().unwrap());
    }

    let (pre, crisis) = (&by_regime["pre"], &by_regime["crisis"]);
    let density_drop = mean(&crisis[0]) < mean(&pre[0]);
    let volume = ks_two_sample(&pre[1], &crisis[1]).unwrap();
    let volume_drop = mean(&crisis[1]) < mean(&pre[1]) && volume.p_value < 0.05;
    let argmax = |c: usize| {
        by_regime.iter().max_by(|a, b| mean(&a.1[c]).total_cmp(&mean(&b.1[c]))).map(|(k, _)| k.clone()).unwrap()
    };
    let (most_connected, riskiest) = (argmax(0), argmax(2));
    let summary: Vec<String> = ["pre", "crisis", "post"]
        .iter()
        .map(|r| {
            let v = &by_regime[*r];
            format!("{r}: density {:.4}, volume/bank {:.0}, bankrupted {:.3}", mean(&v[0]), mean(&v[1]), mean(&v[2]))
        })
        .collect();
    Ok(check(
        density_drop && volume_drop && most_connected == riskiest,
        format!(
            "{}; volume/bank KS pre vs crisis D {:.2} p {:.1e}; densest regime {most_connected}, riskiest {riskiest}",
            summary.join("; "),
            volume.d,
            volume.p_value
        ),
    ))
}

fn determinism() -> Result<Check, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p = |name: &str| dir.path().join(name);
    let (tx, edges, sim, freq, core, null) =
        (p("tx.csv"), p("edges.csv"), p("sim.json"), p("freq.csv"), p("core.csv"), p("null.json"));
    let mut runs: Vec<Vec<Vec<u8>>> = Vec::new();
    for threads in ["1", "4", "4", "16"] {
        let t = ["--threads", threads];
        edbnet(&[&t[..], &["synth", "--out", s(&tx), "--n-banks", "40", "--first-quarter", "2007Q1", "--last-quarter", "2007Q4", "--rng-seed", "3"]].concat())?;
        edbnet(&["ingest", "--input", s(&tx), "--edges", s(&edges)])?;
        edbnet(&[&t[..], &["simulate", "--edges", s(&edges), "--out", s(&sim), "--frequencies", s(&freq), "--scenario", "nlc-nld", "--realizations", "1000", "--rng-seed", "5"]].concat())?;
        edbnet(&[&t[..], &["coreperiphery", "--edges", s(&edges), "--out", s(&core), "--rng-seed", "6"]].concat())?;
        edbnet(&[&t[..], &["null", "--edges", s(&edges), "--out", s(&null), "--quarter", "2007Q2", "--null-samples", "8", "--realizations", "200", "--rng-seed", "7"]].concat())?;
        runs.push([&tx, &edges, &sim, &freq, &core, &null].iter().map(|f| fs::read(f).unwrap()).collect());
    }
    let same = runs.windows(2).all(|w| w[0] == w[1]);
    Ok(check(same, "synth, simulate, coreperiphery and null outputs compared across 1, 4, 4 and 16 threads".into()))
}

fn main() -> ExitCode {
    let mut suite = Suite::default();
    let secs = |s: u64| Some(Duration::from_secs(s));
    suite.run("incomplete beta vs binomial sum", secs(1), incomplete_beta);
    suite.run("EDB small-instance oracle", secs(120), edb_small_instances);
    suite.run("monotonicity in seed density", secs(60), seed_density_monotonicity);
    suite.run("scenario ordering under coupled streams", None, scenario_ordering);
    suite.run("path metrics exact", None, path_metrics);
    suite.run("core-periphery planted perfect", None, planted_perfect);
    suite.run("core-periphery planted noisy", None, planted_noisy);
    suite.run("DECM residuals and ensemble moments", secs(120), decm);
    suite.run("fixed effects vs LSDV and sandwich", None, fixed_effects);
    suite.run("KS statistic and p-values", None, ks);
    suite.run("qualitative pipeline", secs(300), || pipeline().unwrap_or_else(|e| check(false, e)));
    suite.run("determinism across thread counts", None, || determinism().unwrap_or_else(|e| check(false, e)));
    println!("{} of {} criteria passed", suite.total - suite.failed, suite.total);
    if suite.failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
