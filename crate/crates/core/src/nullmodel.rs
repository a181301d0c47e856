//! Directed enhanced configuration model (DECM): maximum-entropy random
//! networks that preserve, in expectation, every bank's in/out degree and
//! in/out strength.
//!
//! Weights are counted in integer quanta. For an ordered pair `i != j` with
//! `g = x_i^out x_j^in` and `z = y_i^out y_j^in`,
//!
//! ```text
//! p_ij   = g z / (1 - z + g z)
//! <w_ij> = p_ij / (1 - z)
//! ```
//!
//! and, given a link, the weight is geometric on `{1, 2, ...}` with ratio `z`.
//! Some pairs are settled by the degrees alone: linked in every network with
//! the observed degrees (a bank lending to every possible borrower, say), or
//! in none. The likelihood is maximized only in the limit for those, so they
//! are fixed to probability one or zero and only the others depend on `x`.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::edb::{simulate_ensemble_detailed, EdbError, SimConfig};
use crate::econostats::{ks_two_sample, KsResult, StatsError};
use crate::graph::{weakly_connected_component, GraphError, WeightedDigraph};
use crate::linalg::{cholesky_solve, Matrix};
use crate::netcore::{NetError, Quarter, QuarterlyNetwork};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NullModelError {
    #[error("quantum must be positive, got {0}")]
    Quantum(f64),
    #[error("bank {0} has no links")]
    IsolatedBank(usize),
    #[error("bank {bank}: {reason}")]
    Pathological { bank: usize, reason: &'static str },
    #[error("solver did not converge after {iterations} iterations (max relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Network(#[from] NetError),
    #[error(transparent)]
    Simulation(#[from] EdbError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// Observed constraints of a network in weight quanta.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraints {
    pub k_out: Vec<f64>,
    pub k_in: Vec<f64>,
    pub s_out: Vec<f64>,
    pub s_in: Vec<f64>,
}

/// Integer weight in quanta: `max(1, round(w / quantum))`.
pub fn quantize(w: f64, quantum: f64) -> u64 {
    (libm::round(w / quantum) as u64).max(1)
}

impl Constraints {
    pub fn from_graph(g: &WeightedDigraph, quantum: f64) -> Result<Self, NullModelError> {
        if !(quantum > 0.0) || !quantum.is_finite() {
            return Err(NullModelError::Quantum(quantum));
        }
        let n = g.node_count();
        let mut c = Constraints {
            k_out: vec![0.0; n],
            k_in: vec![0.0; n],
            s_out: vec![0.0; n],
            s_in: vec![0.0; n],
        };
        for (i, j, w) in g.edges() {
            let q = quantize(w, quantum) as f64;
            c.k_out[i] += 1.0;
            c.k_in[j] += 1.0;
            c.s_out[i] += q;
            c.s_in[j] += q;
        }
        Ok(c)
    }

    pub fn len(&self) -> usize {
        self.k_out.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k_out.is_empty()
    }
}

/// Fitted DECM parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecmParameters {
    pub x_out: Vec<f64>,
    pub x_in: Vec<f64>,
    pub y_out: Vec<f64>,
    pub y_in: Vec<f64>,
    /// Row-major `n x n` states of the ordered pairs.
    pub pairs: Vec<PairState>,
    /// Money per weight quantum.
    pub quantum: f64,
}

impl DecmParameters {
    pub fn len(&self) -> usize {
        self.x_out.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x_out.is_empty()
    }

    /// Link probability and geometric ratio of the ordered pair `(i, j)`.
    pub fn pair(&self, i: usize, j: usize) -> (f64, f64) {
        if i == j {
            return (0.0, 0.0);
        }
        let z = match self.pairs[i * self.len() + j] {
            PairState::Impossible => return (0.0, 0.0),
            PairState::Certain => return (1.0, self.y_out[i] * self.y_in[j]),
            PairState::Free => self.y_out[i] * self.y_in[j],
        };
        let g = self.x_out[i] * self.x_in[j];
        let gz = g * z;
        if gz == 0.0 {
            return (0.0, z);
        }
        (gz / (1.0 - z + gz), z)
    }

    /// Expected constraints under the model.
    pub fn expected(&self) -> Constraints {
        let n = self.len();
        let mut e = Constraints {
            k_out: vec![0.0; n],
            k_in: vec![0.0; n],
            s_out: vec![0.0; n],
            s_in: vec![0.0; n],
        };
        for i in 0..n {
            for j in 0..n {
                let (p, z) = self.pair(i, j);
                if p == 0.0 {
                    continue;
                }
                let w = p / (1.0 - z);
                e.k_out[i] += p;
                e.k_in[j] += p;
                e.s_out[i] += w;
                e.s_in[j] += w;
            }
        }
        e
    }
}

/// Largest `|expected - observed| / max(observed, 1)` over all constraints.
pub fn max_relative_residual(observed: &Constraints, expected: &Constraints) -> f64 {
    let pairs = [
        (&observed.k_out, &expected.k_out),
        (&observed.k_in, &expected.k_in),
        (&observed.s_out, &expected.s_out),
        (&observed.s_in, &expected.s_in),
    ];
    pairs
        .iter()
        .flat_map(|(o, e)| o.iter().zip(e.iter()).map(|(o, e)| (e - o).abs() / o.max(1.0)))
        .fold(0.0, f64::max)
}

/// Iteration scheme for the moment equations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverMethod {
    /// Newton ascent on the log-likelihood with backtracking line search.
    #[default]
    Newton,
    /// Alternates between lending and borrowing sides; with one side fixed
    /// each bank's `(x, y)` pair takes its own Newton step, damped until the
    /// likelihood rises enough.
    FixedPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Target for the maximum relative residual.
    pub tol: f64,
    pub max_iter: usize,
    /// Initial damping of the fixed-point updates.
    pub damping: f64,
    /// Money per weight quantum.
    pub quantum: f64,
    pub method: SolverMethod,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-6, max_iter: 10_000, damping: 0.5, quantum: 0.1, method: SolverMethod::Newton }
    }
}

/// Residual after each accepted iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverLog {
    pub method: SolverMethod,
    pub iterations: usize,
    pub residuals: Vec<f64>,
    pub final_residual: f64,
}

/// Solves the DECM moment equations for `g`.
pub fn solve_decm(
    g: &WeightedDigraph,
    opts: &SolverOptions,
) -> Result<(DecmParameters, SolverLog), NullModelError> {
    let obs = Constraints::from_graph(g, opts.quantum)?;
    check_constraints(&obs)?;
    solve_constraints(&obs, settle_pairs(g), opts)
}

/// Whether the degrees alone settle a pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairState {
    Free,
    Certain,
    Impossible,
}

fn check_constraints(obs: &Constraints) -> Result<(), NullModelError> {
    for i in 0..obs.len() {
        if obs.k_out[i] == 0.0 && obs.k_in[i] == 0.0 {
            return Err(NullModelError::IsolatedBank(i));
        }
        if obs.k_out[i] > 0.0 && obs.s_out[i] <= obs.k_out[i] {
            return Err(NullModelError::Pathological {
                bank: i,
                reason: "every outgoing link carries the minimum weight",
            });
        }
        if obs.k_in[i] > 0.0 && obs.s_in[i] <= obs.k_in[i] {
            return Err(NullModelError::Pathological {
                bank: i,
                reason: "every incoming link carries the minimum weight",
            });
        }
    }
    Ok(())
}

/// Row-major states of all ordered pairs of `g`.
///
/// Simple digraphs with the degrees of `g` are the maximum flows of a
/// bipartite lender/borrower network, and any two differ by cycles of the
/// residual graph of `g`. A pair can change only if its lender and borrower
/// share a strongly connected component of that residual graph.
pub fn settle_pairs(g: &WeightedDigraph) -> Vec<PairState> {
    let n = g.node_count();
    let lends = |i: usize| g.out_degree(i) > 0;
    let borrows = |j: usize| g.in_degree(j) > 0;
    // Lender i is node i, borrower j is node n + j.
    let mut residual = Vec::new();
    for i in (0..n).filter(|&i| lends(i)) {
        for j in (0..n).filter(|&j| j != i && borrows(j)) {
            let (a, b) = (i as u32, (n + j) as u32);
            residual.push(if g.has_edge(i, j) { (b, a) } else { (a, b) });
        }
    }
    let mut flow = petgraph::graph::DiGraph::<(), ()>::from_edges(residual);
    while flow.node_count() < 2 * n {
        flow.add_node(());
    }
    let mut component = vec![0usize; 2 * n];
    for (c, members) in petgraph::algo::tarjan_scc(&flow).iter().enumerate() {
        for v in members {
            component[v.index()] = c;
        }
    }
    let mut states = vec![PairState::Impossible; n * n];
    for i in (0..n).filter(|&i| lends(i)) {
        for j in (0..n).filter(|&j| j != i && borrows(j)) {
            states[i * n + j] = if component[i] == component[n + j] {
                PairState::Free
            } else if g.has_edge(i, j) {
                PairState::Certain
            } else {
                PairState::Impossible
            };
        }
    }
    states
}

/// Solves given the observed constraints and settled pairs.
fn solve_constraints(
    obs: &Constraints,
    states: Vec<PairState>,
    opts: &SolverOptions,
) -> Result<(DecmParameters, SolverLog), NullModelError> {
    let n = obs.len();
    // Log-parameters; a side without links stays at -inf (x = y = 0).
    // Start from the decoupled guess `z ~ 1 - 1/<w>` and `p ~ k / n`.
    let init = |k: f64, s: f64| -> (f64, f64) {
        if k == 0.0 {
            return (f64::NEG_INFINITY, f64::NEG_INFINITY);
        }
        let mean_w = s / k;
        let p0 = (k / n as f64).min(0.5);
        let x = 0.5 * (libm::log(p0 / (1.0 - p0)) - libm::log(mean_w));
        (x, 0.5 * libm::log1p(-1.0 / mean_w))
    };
    let mut theta = LogParams::with_len(n);
    for i in 0..n {
        (theta.x_out[i], theta.y_out[i]) = init(obs.k_out[i], obs.s_out[i]);
        (theta.x_in[i], theta.y_in[i]) = init(obs.k_in[i], obs.s_in[i]);
    }
    let (mut free_out, mut free_in) = (vec![false; n], vec![false; n]);
    for i in 0..n {
        for j in 0..n {
            if states[i * n + j] == PairState::Free {
                free_out[i] = true;
                free_in[j] = true;
            }
        }
    }
    let problem = Problem { obs, states: &states, free_out: &free_out, free_in: &free_in };
    let (theta, mut log) = match opts.method {
        SolverMethod::Newton => newton(&problem, theta, opts)?,
        SolverMethod::FixedPoint => fixed_point(&problem, theta, opts)?,
    };
    let params = theta.to_params(states, opts.quantum);
    // Report the residual of the returned parameters themselves.
    log.final_residual = max_relative_residual(obs, &params.expected());
    if log.final_residual >= opts.tol {
        return Err(NullModelError::NoConvergence { iterations: log.iterations, residual: log.final_residual });
    }
    Ok((params, log))
}

struct Problem<'a> {
    obs: &'a Constraints,
    states: &'a [PairState],
    /// Sides with at least one free pair; only these have a fitted `x`.
    free_out: &'a [bool],
    free_in: &'a [bool],
}

/// Log-likelihood, expected constraints and (optionally) the Fisher
/// information at `theta`; `None` outside the feasible region.
struct Evaluation {
    loglik: f64,
    expected: Constraints,
    residual: f64,
}

impl Problem<'_> {
    fn n(&self) -> usize {
        self.obs.len()
    }

    /// Visits every ordered pair that can carry a link with its
    /// log-partition contribution and moments:
    /// `(i, j, ln Z, p, <w>, var(a), cov(a, w), var(w))`.
    fn for_pairs<F>(&self, theta: &LogParams, mut visit: F) -> bool
    where
        F: FnMut(usize, usize, [f64; 6]),
    {
        let n = self.n();
        for i in 0..n {
            if self.obs.k_out[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                let state = self.states[i * n + j];
                if state == PairState::Impossible {
                    continue;
                }
                let zlog = theta.y_out[i] + theta.y_in[j];
                if !(zlog < 0.0) {
                    return false;
                }
                let z = libm::exp(zlog);
                let one_minus_z = -libm::expm1(zlog);
                let ln_free = libm::log1p(-z);
                if state == PairState::Certain {
                    let w = 1.0 / one_minus_z;
                    let var_w = z / (one_minus_z * one_minus_z);
                    visit(i, j, [zlog - ln_free, 1.0, w, 0.0, 0.0, var_w]);
                } else {
                    let gz = libm::exp(theta.x_out[i] + theta.x_in[j] + zlog);
                    let d = one_minus_z + gz;
                    let p = gz / d;
                    let w = p / one_minus_z;
                    let var_a = p * (1.0 - p);
                    let cov = p / d;
                    let var_w = p / (d * one_minus_z) + z * p / (one_minus_z * one_minus_z);
                    visit(i, j, [libm::log(d) - ln_free, p, w, var_a, cov, var_w]);
                }
            }
        }
        true
    }

    fn evaluate(&self, theta: &LogParams) -> Option<Evaluation> {
        let n = self.n();
        let mut e = Constraints {
            k_out: vec![0.0; n],
            k_in: vec![0.0; n],
            s_out: vec![0.0; n],
            s_in: vec![0.0; n],
        };
        let mut ln_z = 0.0;
        // Certain links carry no x dependence.
        let mut forced_out = vec![0.0; n];
        let mut forced_in = vec![0.0; n];
        let ok = self.for_pairs(theta, |i, j, m| {
            ln_z += m[0];
            e.k_out[i] += m[1];
            e.k_in[j] += m[1];
            e.s_out[i] += m[2];
            e.s_in[j] += m[2];
            if self.states[i * n + j] == PairState::Certain {
                forced_out[i] += 1.0;
                forced_in[j] += 1.0;
            }
        });
        if !ok {
            return None;
        }
        let mut loglik = -ln_z;
        for i in 0..n {
            let terms = [
                (self.obs.k_out[i] - forced_out[i], theta.x_out[i]),
                (self.obs.k_in[i] - forced_in[i], theta.x_in[i]),
                (self.obs.s_out[i], theta.y_out[i]),
                (self.obs.s_in[i], theta.y_in[i]),
            ];
            for (o, t) in terms {
                if o > 0.0 {
                    loglik += o * t;
                }
            }
        }
        let residual = max_relative_residual(self.obs, &e);
        Some(Evaluation { loglik, expected: e, residual })
    }

    /// Variables that move the likelihood, in the order x_out, x_in,
    /// y_out, y_in.
    fn free_variables(&self) -> Vec<usize> {
        let n = self.n();
        let mut free = Vec::new();
        for i in 0..n {
            if self.free_out[i] {
                free.push(i);
            }
        }
        for j in 0..n {
            if self.free_in[j] {
                free.push(n + j);
            }
        }
        for i in 0..n {
            if self.obs.k_out[i] > 0.0 {
                free.push(2 * n + i);
            }
        }
        for j in 0..n {
            if self.obs.k_in[j] > 0.0 {
                free.push(3 * n + j);
            }
        }
        free
    }

    /// Fisher information over all `4n` log-parameters.
    fn information(&self, theta: &LogParams) -> Matrix {
        let n = self.n();
        let mut h = Matrix::zeros(4 * n, 4 * n);
        self.for_pairs(theta, |i, j, m| {
            let (xo, xi, yo, yi) = (i, n + j, 2 * n + i, 3 * n + j);
            let (va, cv, vw) = (m[3], m[4], m[5]);
            for (a, b, v) in [
                (xo, xo, va),
                (xi, xi, va),
                (xo, xi, va),
                (yo, yo, vw),
                (yi, yi, vw),
                (yo, yi, vw),
                (xo, yo, cv),
                (xo, yi, cv),
                (xi, yo, cv),
                (xi, yi, cv),
            ] {
                h[(a, b)] += v;
                if a != b {
                    h[(b, a)] += v;
                }
            }
        });
        h
    }
}

impl Problem<'_> {
    /// Per-bank Newton step on the `(x, y)` pair of the lending (`out`) or
    /// borrowing side, the other side held fixed. With one side fixed the
    /// banks decouple, so this is the exact Newton step for that block.
    /// Indexed like [`LogParams::var_mut`].
    fn block_step(&self, theta: &LogParams, e: &Constraints, out_side: bool) -> Vec<f64> {
        let n = self.n();
        // [h_xx, h_xy, h_yy] for the out side (0..n) and the in side (n..2n).
        let mut blocks = vec![[0.0f64; 3]; 2 * n];
        self.for_pairs(theta, |i, j, m| {
            for side in [i, n + j] {
                blocks[side][0] += m[3];
                blocks[side][1] += m[4];
                blocks[side][2] += m[5];
            }
        });
        let mut step = vec![0.0; 4 * n];
        let sides = if out_side { 0..n } else { n..2 * n };
        for side in sides {
            let (bank, out) = (side % n, side < n);
            let k = if out { self.obs.k_out[bank] } else { self.obs.k_in[bank] };
            if k == 0.0 {
                continue;
            }
            let free = if out { self.free_out[bank] } else { self.free_in[bank] };
            let (xv, yv) = if out { (bank, 2 * n + bank) } else { (n + bank, 3 * n + bank) };
            let (gx, gy) = (gradient(self.obs, e, xv), gradient(self.obs, e, yv));
            let [hxx, hxy, hyy] = blocks[side];
            if !free {
                step[yv] = gy / hyy;
                continue;
            }
            let det = hxx * hyy - hxy * hxy;
            if det > 1e-14 * hxx * hyy {
                step[xv] = (hyy * gx - hxy * gy) / det;
                step[yv] = (hxx * gy - hxy * gx) / det;
            } else {
                step[xv] = gx / hxx;
                step[yv] = gy / hyy;
            }
        }
        // Keep moves in log-parameter space bounded, as for Newton.
        let longest = step.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if longest > MAX_LOG_STEP {
            step.iter_mut().for_each(|v| *v *= MAX_LOG_STEP / longest);
        }
        step
    }
}

fn gradient(obs: &Constraints, e: &Constraints, var: usize) -> f64 {
    let n = obs.len();
    let (o, x) = match var / n {
        0 => (&obs.k_out, &e.k_out),
        1 => (&obs.k_in, &e.k_in),
        2 => (&obs.s_out, &e.s_out),
        _ => (&obs.s_in, &e.s_in),
    };
    o[var % n] - x[var % n]
}

const MAX_LOG_STEP: f64 = 2.0;

fn newton(
    problem: &Problem<'_>,
    mut theta: LogParams,
    opts: &SolverOptions,
) -> Result<(LogParams, SolverLog), NullModelError> {
    let free = problem.free_variables();
    let mut current = problem
        .evaluate(&theta)
        .ok_or(NullModelError::NoConvergence { iterations: 0, residual: f64::INFINITY })?;
    let mut residuals = Vec::new();
    let mut iterations = 0;
    while current.residual >= opts.tol {
        if iterations >= opts.max_iter {
            return Err(NullModelError::NoConvergence { iterations, residual: current.residual });
        }
        iterations += 1;
        let full = problem.information(&theta);
        let m = free.len();
        let grad: Vec<f64> = free.iter().map(|&v| gradient(problem.obs, &current.expected, v)).collect();
        let mut h = Matrix::zeros(m, m);
        for (a, &va) in free.iter().enumerate() {
            for (b, &vb) in free.iter().enumerate() {
                h[(a, b)] = full[(va, vb)];
            }
        }
        // The likelihood is flat along rescalings of x_out against x_in
        // (and y_out against y_in), so the information is singular; a small
        // ridge keeps the factorization defined.
        let max_diag = (0..m).map(|a| h[(a, a)]).fold(0.0, f64::max).max(1e-300);
        let mut ridge = 1e-12 * max_diag;
        let step = loop {
            let mut hr = h.clone();
            for a in 0..m {
                hr[(a, a)] += ridge;
            }
            if let Some(step) = cholesky_solve(&hr, &grad) {
                break step;
            }
            ridge *= 100.0;
            if ridge > max_diag {
                return Err(NullModelError::NoConvergence { iterations, residual: current.residual });
            }
        };
        // Far from the solution the quadratic model is poor; bound the move
        // in log-parameter space.
        let longest = step.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let step: Vec<f64> = if longest > MAX_LOG_STEP {
            step.iter().map(|v| v * MAX_LOG_STEP / longest).collect()
        } else {
            step
        };
        let slope: f64 = grad.iter().zip(&step).map(|(g, s)| g * s).sum();
        let mut t = 1.0;
        loop {
            let mut cand = theta.clone();
            for (a, &v) in free.iter().enumerate() {
                *cand.var_mut(v) += t * step[a];
            }
            if let Some(eval) = problem.evaluate(&cand) {
                let armijo = eval.loglik >= current.loglik + 1e-4 * t * slope;
                // Near the optimum the likelihood is flat to rounding.
                let flat = (eval.loglik - current.loglik).abs()
                    <= 1e-12 * current.loglik.abs().max(1.0);
                if armijo || (flat && eval.residual < current.residual) {
                    theta = cand;
                    current = eval;
                    break;
                }
            }
            t *= 0.5;
            if t < 1e-12 {
                return Err(NullModelError::NoConvergence { iterations, residual: current.residual });
            }
        }
        residuals.push(current.residual);
    }
    let log = SolverLog {
        method: SolverMethod::Newton,
        iterations,
        residuals,
        final_residual: current.residual,
    };
    Ok((theta, log))
}

fn fixed_point(
    problem: &Problem<'_>,
    mut theta: LogParams,
    opts: &SolverOptions,
) -> Result<(LogParams, SolverLog), NullModelError> {
    let n = problem.n();
    let mut current = problem
        .evaluate(&theta)
        .ok_or(NullModelError::NoConvergence { iterations: 0, residual: f64::INFINITY })?;
    let mut residuals = Vec::new();
    let mut alpha = [opts.damping; 2];
    let mut iterations = 0;
    while current.residual >= opts.tol {
        if iterations >= opts.max_iter {
            return Err(NullModelError::NoConvergence { iterations, residual: current.residual });
        }
        iterations += 1;
        for (k, out_side) in [true, false].into_iter().enumerate() {
            let step = problem.block_step(&theta, &current.expected, out_side);
            let slope: f64 =
                (0..4 * n).map(|v| step[v] * gradient(problem.obs, &current.expected, v)).sum();
            loop {
                let mut cand = theta.clone();
                for (v, &d) in step.iter().enumerate() {
                    if d != 0.0 {
                        *cand.var_mut(v) += alpha[k] * d;
                    }
                }
                if let Some(eval) = problem.evaluate(&cand) {
                    let armijo = eval.loglik >= current.loglik + 1e-4 * alpha[k] * slope;
                    let flat = (eval.loglik - current.loglik).abs()
                        <= 1e-12 * current.loglik.abs().max(1.0);
                    if armijo || (flat && eval.residual <= current.residual) {
                        theta = cand;
                        current = eval;
                        alpha[k] = (alpha[k] * 2.0).min(1.0);
                        break;
                    }
                }
                alpha[k] *= 0.5;
                if alpha[k] < 1e-12 {
                    return Err(NullModelError::NoConvergence { iterations, residual: current.residual });
                }
            }
        }
        residuals.push(current.residual);
    }
    let log = SolverLog {
        method: SolverMethod::FixedPoint,
        iterations,
        residuals,
        final_residual: current.residual,
    };
    Ok((theta, log))
}

#[derive(Debug, Clone)]
struct LogParams {
    x_out: Vec<f64>,
    x_in: Vec<f64>,
    y_out: Vec<f64>,
    y_in: Vec<f64>,
}

impl LogParams {
    fn with_len(n: usize) -> Self {
        Self { x_out: vec![0.0; n], x_in: vec![0.0; n], y_out: vec![0.0; n], y_in: vec![0.0; n] }
    }

    fn var_mut(&mut self, v: usize) -> &mut f64 {
        let n = self.x_out.len();
        match v / n {
            0 => &mut self.x_out[v % n],
            1 => &mut self.x_in[v % n],
            2 => &mut self.y_out[v % n],
            _ => &mut self.y_in[v % n],
        }
    }

    fn to_params(&self, pairs: Vec<PairState>, quantum: f64) -> DecmParameters {
        let e = |v: &[f64]| v.iter().map(|&t| libm::exp(t)).collect::<Vec<_>>();
        DecmParameters {
            x_out: e(&self.x_out),
            x_in: e(&self.x_in),
            y_out: e(&self.y_out),
            y_in: e(&self.y_in),
            pairs,
            quantum,
        }
    }
}

/// Draws a network from the model without connectivity reduction; weights
/// are in money units.
pub fn sample_null_graph(params: &DecmParameters, rng_seed: u64) -> WeightedDigraph {
    let n = params.len();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let (p, z) = params.pair(i, j);
            if p == 0.0 {
                continue;
            }
            let link: f64 = rng.random();
            if link >= p {
                continue;
            }
            let quanta = if z > 0.0 {
                // Geometric on {1, 2, ...}: P(w = k) = (1 - z) z^(k - 1).
                let u: f64 = rng.random();
                1.0 + libm::floor(libm::log1p(-u) / libm::log(z))
            } else {
                1.0
            };
            edges.push((i, j, quanta * params.quantum));
        }
    }
    WeightedDigraph::from_edges(n, edges).expect("sampled edges are valid")
}

/// Draws a null network restricted to its largest weakly connected
/// component; returns the graph and the original bank indices.
pub fn sample_null(
    params: &DecmParameters,
    rng_seed: u64,
) -> Result<(WeightedDigraph, Vec<usize>), NullModelError> {
    Ok(weakly_connected_component(&sample_null_graph(params, rng_seed))?)
}

/// Draws a null network for the banks `bank_ids` (indexed like `params`)
/// of `quarter`, reduced to its largest weakly connected component.
pub fn sample_null_network(
    params: &DecmParameters,
    bank_ids: &[String],
    quarter: Quarter,
    rng_seed: u64,
) -> Result<QuarterlyNetwork, NullModelError> {
    let (graph, nodes) = sample_null(params, rng_seed)?;
    let ids = nodes.iter().map(|&k| bank_ids[k].clone()).collect();
    Ok(QuarterlyNetwork::new(quarter, ids, graph)?)
}

/// Seed of the `k`-th null network derived from a master seed.
pub fn null_sample_seed(master: u64, k: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(k as u64 + 1);
    rng.random()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullTestReport {
    pub ks: KsResult,
    pub n_null_networks: usize,
    pub quantum: f64,
    pub solver_iterations: usize,
    pub solver_residual: f64,
    /// Per-realization bankrupted fractions on the observed network.
    pub observed: Vec<f64>,
    /// Per-realization bankrupted fractions pooled over null networks.
    pub null: Vec<f64>,
    pub observed_mean: f64,
    pub null_mean: f64,
    pub note: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NullTestOptions {
    pub n_null: usize,
    pub rng_seed: u64,
    pub solver: SolverOptions,
}

/// Compares the distribution of per-realization bankrupted fractions on `g`
/// with the pooled distribution over `n_null` DECM samples by a two-sample
/// Kolmogorov-Smirnov test. Runs sequentially.
pub fn null_risk_test(
    g: &WeightedDigraph,
    config: &SimConfig,
    opts: &NullTestOptions,
) -> Result<NullTestReport, NullModelError> {
    let (params, log) = solve_decm(g, &opts.solver)?;
    let observed: Vec<f64> = simulate_ensemble_detailed(g, config)?
        .stats()
        .iter()
        .map(|s| s.bankrupted_fraction)
        .collect();
    let mut null = Vec::with_capacity(opts.n_null * config.n_realizations);
    for k in 0..opts.n_null {
        let (sample, _) = sample_null(&params, null_sample_seed(opts.rng_seed, k))?;
        let acc = simulate_ensemble_detailed(&sample, config)?;
        null.extend(acc.stats().iter().map(|s| s.bankrupted_fraction));
    }
    assemble_report(observed, null, opts, &params, &log)
}

/// Builds the report from already simulated samples.
pub fn assemble_report(
    observed: Vec<f64>,
    null: Vec<f64>,
    opts: &NullTestOptions,
    params: &DecmParameters,
    log: &SolverLog,
) -> Result<NullTestReport, NullModelError> {
    let ks = ks_two_sample(&observed, &null)?;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
    Ok(NullTestReport {
        observed_mean: mean(&observed),
        null_mean: mean(&null),
        ks,
        n_null_networks: opts.n_null,
        quantum: params.quantum,
        solver_iterations: log.iterations,
        solver_residual: log.final_residual,
        observed,
        null,
        note: String::from("null networks reduced to their largest weakly connected component"),
    })
}
