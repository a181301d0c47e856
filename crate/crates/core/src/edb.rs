//! Exposed-Distressed-Bankrupted (EDB) liquidity contagion.
//!
//! Every bank starts exposed; a random seed set is put in distress. Each step
//! has two phases:
//!
//! 1. Infection. Every distressed or bankrupted lender `i` (state at step
//!    start) independently cuts funding to each exposed borrower `j` with
//!    probability `phi(w_ij / s_i^O)`; a borrower hit at least once becomes
//!    distressed.
//! 2. Bankruptcy. Every distressed bank `i` (including those infected this
//!    step) fails with probability `psi(s~_i^I / s_i^I)`, the share of its
//!    borrowing that came from distressed or bankrupted lenders after the
//!    infection phase. A bank with no lenders never fails.
//!
//! A run stops when no distressed bank is left or after `max_steps` steps.
//!
//! Random numbers come from a ChaCha8 stream per realization. Each step owns
//! a fixed region of that stream, and within a region each edge (infection)
//! or bank (bankruptcy) owns a fixed slot, so the uniform drawn for a given
//! (realization, step, edge) does not depend on the scenario or on the
//! history of the run. Runs under different scenarios are thereby coupled,
//! and results do not depend on how realizations are scheduled.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::WeightedDigraph;
use crate::special::regularized_incomplete_beta;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EdbError {
    #[error("seed density {0} must lie in (0, 1]")]
    SeedDensity(f64),
    #[error("seed count {seeds} is not within 1..={banks}")]
    SeedCount { seeds: usize, banks: usize },
    #[error("max_steps must be at least 1")]
    MaxSteps,
    #[error("at least one realization is required")]
    NoRealizations,
    #[error("invalid beta shape parameters ({0}, {1})")]
    BetaShape(f64, f64),
    #[error("network has no banks")]
    EmptyNetwork,
    #[error("correlation needs at least 3 paired values, got {0}")]
    TooFewValues(usize),
    #[error("correlation undefined for a constant series")]
    ConstantSeries,
    #[error("series lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("invalid SIR parameters: {0}")]
    SirParams(&'static str),
}

/// Shape function on `[0, 1]` with `f(0) = 0`, `f(1) = 1`, nondecreasing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Identity,
    /// Regularized incomplete beta `I_x(a, b)`.
    Beta { a: f64, b: f64 },
}

impl Shape {
    pub fn beta(a: f64, b: f64) -> Result<Self, EdbError> {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(EdbError::BetaShape(a, b));
        }
        Ok(Shape::Beta { a, b })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        match *self {
            Shape::Identity => x,
            Shape::Beta { a, b } => {
                regularized_incomplete_beta(x, a, b).expect("shape parameters validated")
            }
        }
    }
}

/// Pair of shape functions: `phi` for infection, `psi` for bankruptcy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub phi: Shape,
    pub psi: Shape,
}

impl ScenarioSpec {
    /// Linear contagion, linear default.
    pub fn lc_ld() -> Self {
        Self { name: "LC-LD".into(), phi: Shape::Identity, psi: Shape::Identity }
    }

    /// Linear contagion, nonlinear default `psi = I_x(5, 20)`.
    pub fn lc_nld() -> Self {
        Self { name: "LC-NLD".into(), phi: Shape::Identity, psi: Shape::Beta { a: 5.0, b: 20.0 } }
    }

    /// Nonlinear contagion `phi = I_x(1, 2)`, nonlinear default `psi = I_x(5, 20)`.
    pub fn nlc_nld() -> Self {
        Self {
            name: "NLC-NLD".into(),
            phi: Shape::Beta { a: 1.0, b: 2.0 },
            psi: Shape::Beta { a: 5.0, b: 20.0 },
        }
    }

    pub fn custom(phi: Shape, psi: Shape) -> Self {
        Self { name: "custom".into(), phi, psi }
    }

    /// Looks up `lc-ld`, `lc-nld` or `nlc-nld` (case-insensitive).
    pub fn named(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "lc-ld" => Some(Self::lc_ld()),
            "lc-nld" => Some(Self::lc_nld()),
            "nlc-nld" => Some(Self::nlc_nld()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BankState {
    Exposed,
    Distressed,
    Bankrupted,
}

impl BankState {
    /// Distressed or bankrupted.
    pub fn is_unhealthy(self) -> bool {
        self != BankState::Exposed
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Initial fraction of distressed banks.
    pub seed_density: f64,
    pub max_steps: u32,
    pub n_realizations: usize,
    pub rng_seed: u64,
    pub scenario: ScenarioSpec,
}

impl SimConfig {
    pub fn new(scenario: ScenarioSpec, seed_density: f64, rng_seed: u64) -> Self {
        Self { seed_density, max_steps: 100, n_realizations: 5000, rng_seed, scenario }
    }

    /// Number of seeded banks, `ceil(f N)`.
    pub fn seed_count(&self, n_banks: usize) -> Result<usize, EdbError> {
        if !(self.seed_density > 0.0 && self.seed_density <= 1.0) {
            return Err(EdbError::SeedDensity(self.seed_density));
        }
        let seeds = libm::ceil(self.seed_density * n_banks as f64) as usize;
        if seeds == 0 || seeds > n_banks {
            return Err(EdbError::SeedCount { seeds, banks: n_banks });
        }
        Ok(seeds)
    }

    pub fn validate(&self, n_banks: usize) -> Result<usize, EdbError> {
        if self.max_steps == 0 {
            return Err(EdbError::MaxSteps);
        }
        if self.n_realizations == 0 {
            return Err(EdbError::NoRealizations);
        }
        for shape in [self.scenario.phi, self.scenario.psi] {
            if let Shape::Beta { a, b } = shape {
                Shape::beta(a, b)?;
            }
        }
        self.seed_count(n_banks)
    }
}

/// Network plus the scenario-dependent quantities that stay fixed during a
/// run: per-edge infection probabilities and per-bank strengths.
#[derive(Debug, Clone)]
pub struct ContagionModel<'g> {
    graph: &'g WeightedDigraph,
    scenario: ScenarioSpec,
    /// `phi(w_ij / s_i^O)` indexed by edge id.
    infection: Vec<f64>,
    out_strength: Vec<f64>,
    in_strength: Vec<f64>,
}

impl<'g> ContagionModel<'g> {
    pub fn new(graph: &'g WeightedDigraph, scenario: &ScenarioSpec) -> Result<Self, EdbError> {
        let n = graph.node_count();
        if n == 0 {
            return Err(EdbError::EmptyNetwork);
        }
        for shape in [scenario.phi, scenario.psi] {
            if let Shape::Beta { a, b } = shape {
                Shape::beta(a, b)?;
            }
        }
        let out_strength: Vec<f64> = (0..n).map(|i| graph.out_strength(i)).collect();
        let in_strength: Vec<f64> = (0..n).map(|i| graph.in_strength(i)).collect();
        let mut infection = vec![0.0; graph.edge_count()];
        for i in 0..n {
            for e in graph.out_edge_range(i) {
                infection[e] = scenario.phi.eval(graph.edge_weight(e) / out_strength[i]);
            }
        }
        Ok(Self { graph, scenario: scenario.clone(), infection, out_strength, in_strength })
    }

    pub fn graph(&self) -> &WeightedDigraph {
        self.graph
    }

    pub fn scenario(&self) -> &ScenarioSpec {
        &self.scenario
    }

    pub fn out_strength(&self) -> &[f64] {
        &self.out_strength
    }

    /// `lambda_ij` for the edge `i -> j`; zero when there is no such edge.
    pub fn infection_probability(&self, i: usize, j: usize) -> f64 {
        let range = self.graph.out_edge_range(i);
        match self.graph.out_neighbors(i).binary_search(&j) {
            Ok(k) => self.infection[range.start + k],
            Err(_) => 0.0,
        }
    }

    /// `mu_i = psi(s~_i^I / s_i^I)` under `states`; zero without lenders.
    pub fn bankruptcy_probability(&self, i: usize, states: &[BankState]) -> f64 {
        let s_in = self.in_strength[i];
        if !(s_in > 0.0) {
            return 0.0;
        }
        // Summed in the same order as `in_strength`, so a fully unhealthy
        // lender set gives a ratio of exactly 1.
        let unhealthy: f64 = self
            .graph
            .in_edges(i)
            .map(|(j, w)| if states[j].is_unhealthy() { w } else { 0.0 })
            .sum();
        self.scenario.psi.eval(unhealthy / s_in)
    }
}

/// Final state of one realization.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub states: Vec<BankState>,
    /// Number of steps executed.
    pub stop_step: u32,
    /// True when the run reached `max_steps` with distressed banks left.
    pub hit_cap: bool,
}

impl RunOutcome {
    pub fn bankrupted_count(&self) -> usize {
        self.states.iter().filter(|&&s| s == BankState::Bankrupted).count()
    }

    pub fn bankrupted_fraction(&self) -> f64 {
        self.bankrupted_count() as f64 / self.states.len() as f64
    }

    /// Out-strength of bankrupted banks over total out-strength.
    pub fn liquidity_loss(&self, out_strength: &[f64]) -> f64 {
        let total: f64 = out_strength.iter().sum();
        if !(total > 0.0) {
            return 0.0;
        }
        let lost: f64 = self
            .states
            .iter()
            .zip(out_strength)
            .map(|(&s, &w)| if s == BankState::Bankrupted { w } else { 0.0 })
            .sum();
        lost / total
    }
}

const STEP_STRIDE: u128 = 1 << 40;
const BANKRUPTCY_OFFSET: u128 = 1 << 39;

fn realization_rng(rng_seed: u64, realization: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    rng.set_stream(realization as u64);
    rng
}

/// Banks seeded into distress for `realization`.
pub fn seed_banks(n: usize, seeds: usize, rng_seed: u64, realization: usize) -> Vec<usize> {
    let mut rng = realization_rng(rng_seed, realization);
    let mut picked = rand::seq::index::sample(&mut rng, n, seeds).into_vec();
    picked.sort_unstable();
    picked
}

/// Runs one realization, calling `observe(step, states)` after seeding
/// (step 0) and after every step.
pub fn simulate_observed<F>(
    model: &ContagionModel<'_>,
    config: &SimConfig,
    realization: usize,
    mut observe: F,
) -> Result<RunOutcome, EdbError>
where
    F: FnMut(u32, &[BankState]),
{
    let g = model.graph;
    let n = g.node_count();
    let seeds = config.seed_count(n)?;
    if config.max_steps == 0 {
        return Err(EdbError::MaxSteps);
    }
    let mut states = vec![BankState::Exposed; n];
    for i in seed_banks(n, seeds, config.rng_seed, realization) {
        states[i] = BankState::Distressed;
    }
    observe(0, &states);

    let mut rng = realization_rng(config.rng_seed, realization);
    let mut newly_infected: Vec<usize> = Vec::new();
    let mut distressed = seeds;
    let mut step = 0u32;
    while distressed > 0 && step < config.max_steps {
        step += 1;
        let base = u128::from(step) * STEP_STRIDE;

        newly_infected.clear();
        for i in 0..n {
            if !states[i].is_unhealthy() {
                continue;
            }
            let range = g.out_edge_range(i);
            if !g.out_neighbors(i).iter().any(|&j| states[j] == BankState::Exposed) {
                continue;
            }
            rng.set_word_pos(base + 2 * range.start as u128);
            for e in range {
                let u: f64 = rng.random();
                let j = g.edge_target(e);
                if states[j] == BankState::Exposed && u < model.infection[e] {
                    newly_infected.push(j);
                }
            }
        }
        for &j in &newly_infected {
            if states[j] == BankState::Exposed {
                states[j] = BankState::Distressed;
                distressed += 1;
            }
        }

        // D -> B does not change the unhealthy set, so failures can be
        // applied in place.
        let bankruptcy_base = base + BANKRUPTCY_OFFSET;
        for i in 0..n {
            if states[i] != BankState::Distressed {
                continue;
            }
            let mu = model.bankruptcy_probability(i, &states);
            if mu <= 0.0 {
                continue;
            }
            rng.set_word_pos(bankruptcy_base + 2 * i as u128);
            let u: f64 = rng.random();
            if u < mu {
                states[i] = BankState::Bankrupted;
                distressed -= 1;
            }
        }
        observe(step, &states);
    }
    Ok(RunOutcome { states, stop_step: step, hit_cap: distressed > 0 })
}

/// Runs realization number `realization` of `config`.
pub fn simulate_once(
    model: &ContagionModel<'_>,
    config: &SimConfig,
    realization: usize,
) -> Result<RunOutcome, EdbError> {
    simulate_observed(model, config, realization, |_, _| {})
}

/// Ensemble statistics over realizations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub n_realizations: usize,
    pub bankrupted_fraction_mean: f64,
    /// Sample standard deviation across realizations.
    pub bankrupted_fraction_std: f64,
    pub liquidity_loss_mean: f64,
    pub liquidity_loss_std: f64,
    /// Share of realizations in which each bank ends bankrupted.
    pub per_bank_default_frequency: Vec<f64>,
    pub mean_stop_step: f64,
    pub fraction_hitting_cap: f64,
}

impl EnsembleResult {
    /// Standard error of `bankrupted_fraction_mean`.
    pub fn bankrupted_fraction_se(&self) -> f64 {
        self.bankrupted_fraction_std / libm::sqrt(self.n_realizations as f64)
    }
}

/// Per-realization summary numbers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RealizationStats {
    pub bankrupted_fraction: f64,
    pub liquidity_loss: f64,
    pub stop_step: u32,
    pub hit_cap: bool,
}

/// Order-sensitive reduction of run outcomes; feed outcomes in realization
/// order for reproducible sums.
#[derive(Debug, Clone)]
pub struct EnsembleAccumulator {
    out_strength: Vec<f64>,
    defaults: Vec<u64>,
    stats: Vec<RealizationStats>,
}

impl EnsembleAccumulator {
    pub fn new(out_strength: &[f64]) -> Self {
        Self {
            out_strength: out_strength.to_vec(),
            defaults: vec![0; out_strength.len()],
            stats: Vec::new(),
        }
    }

    pub fn push(&mut self, run: &RunOutcome) {
        for (count, &s) in self.defaults.iter_mut().zip(&run.states) {
            if s == BankState::Bankrupted {
                *count += 1;
            }
        }
        self.stats.push(RealizationStats {
            bankrupted_fraction: run.bankrupted_fraction(),
            liquidity_loss: run.liquidity_loss(&self.out_strength),
            stop_step: run.stop_step,
            hit_cap: run.hit_cap,
        });
    }

    pub fn stats(&self) -> &[RealizationStats] {
        &self.stats
    }

    pub fn finish(&self) -> EnsembleResult {
        let runs = self.stats.len();
        let (bf_mean, bf_std) = mean_std(self.stats.iter().map(|s| s.bankrupted_fraction));
        let (ll_mean, ll_std) = mean_std(self.stats.iter().map(|s| s.liquidity_loss));
        let (stop_mean, _) = mean_std(self.stats.iter().map(|s| f64::from(s.stop_step)));
        let capped = self.stats.iter().filter(|s| s.hit_cap).count();
        EnsembleResult {
            n_realizations: runs,
            bankrupted_fraction_mean: bf_mean,
            bankrupted_fraction_std: bf_std,
            liquidity_loss_mean: ll_mean,
            liquidity_loss_std: ll_std,
            per_bank_default_frequency: self
                .defaults
                .iter()
                .map(|&c| c as f64 / runs.max(1) as f64)
                .collect(),
            mean_stop_step: stop_mean,
            fraction_hitting_cap: capped as f64 / runs.max(1) as f64,
        }
    }
}

/// Mean and sample standard deviation (zero for fewer than two values).
fn mean_std<I: Iterator<Item = f64> + Clone>(xs: I) -> (f64, f64) {
    let n = xs.clone().count();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = xs.clone().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, libm::sqrt(var))
}

/// Runs `config.n_realizations` realizations sequentially.
pub fn simulate_ensemble(
    graph: &WeightedDigraph,
    config: &SimConfig,
) -> Result<EnsembleResult, EdbError> {
    Ok(simulate_ensemble_detailed(graph, config)?.finish())
}

/// Like [`simulate_ensemble`] but keeps the per-realization statistics.
pub fn simulate_ensemble_detailed(
    graph: &WeightedDigraph,
    config: &SimConfig,
) -> Result<EnsembleAccumulator, EdbError> {
    config.validate(graph.node_count())?;
    let model = ContagionModel::new(graph, &config.scenario)?;
    let mut acc = EnsembleAccumulator::new(model.out_strength());
    for r in 0..config.n_realizations {
        acc.push(&simulate_once(&model, config, r)?);
    }
    Ok(acc)
}

/// Pearson correlation between per-bank default frequencies and a feature.
pub fn feature_risk_correlation(risk: &[f64], feature: &[f64]) -> Result<f64, EdbError> {
    if risk.len() != feature.len() {
        return Err(EdbError::LengthMismatch(risk.len(), feature.len()));
    }
    let n = risk.len();
    if n < 3 {
        return Err(EdbError::TooFewValues(n));
    }
    let mx = risk.iter().sum::<f64>() / n as f64;
    let my = feature.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in risk.iter().zip(feature) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if !(sxx > 0.0) || !(syy > 0.0) {
        return Err(EdbError::ConstantSeries);
    }
    Ok((sxy / libm::sqrt(sxx * syy)).clamp(-1.0, 1.0))
}

/// Mean-field SIR rates and initial densities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SirParams {
    pub lambda: f64,
    pub mu: f64,
    pub s0: f64,
    pub i0: f64,
    pub r0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SirPoint {
    pub t: f64,
    pub s: f64,
    pub i: f64,
    pub r: f64,
}

/// Integrates `s' = -lambda s i`, `i' = lambda s i - mu i`, `r' = mu i` with
/// classical fourth-order Runge-Kutta. The last step is shortened to land on
/// `t_end`.
pub fn sir_meanfield(params: &SirParams, t_end: f64, dt: f64) -> Result<Vec<SirPoint>, EdbError> {
    let p = params;
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(EdbError::SirParams("dt must be positive"));
    }
    if !(t_end >= 0.0) {
        return Err(EdbError::SirParams("t_end must be nonnegative"));
    }
    if p.lambda < 0.0 || p.mu < 0.0 || !(p.lambda.is_finite() && p.mu.is_finite()) {
        return Err(EdbError::SirParams("rates must be nonnegative"));
    }
    if p.s0 < 0.0 || p.i0 < 0.0 || p.r0 < 0.0 || (p.s0 + p.i0 + p.r0 - 1.0).abs() > 1e-12 {
        return Err(EdbError::SirParams("initial densities must be nonnegative and sum to 1"));
    }
    let deriv = |s: f64, i: f64| {
        let inf = p.lambda * s * i;
        let rem = p.mu * i;
        (-inf, inf - rem, rem)
    };
    let steps = libm::ceil(t_end / dt - 1e-9).max(0.0) as usize;
    let mut out = Vec::with_capacity(steps + 1);
    let (mut s, mut i, mut r) = (p.s0, p.i0, p.r0);
    let mut t = 0.0;
    out.push(SirPoint { t, s, i, r });
    for k in 0..steps {
        let h = if k + 1 == steps { t_end - t } else { dt };
        let (a1, b1, c1) = deriv(s, i);
        let (a2, b2, c2) = deriv(s + 0.5 * h * a1, i + 0.5 * h * b1);
        let (a3, b3, c3) = deriv(s + 0.5 * h * a2, i + 0.5 * h * b2);
        let (a4, b4, c4) = deriv(s + h * a3, i + h * b3);
        s += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        i += h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
        r += h / 6.0 * (c1 + 2.0 * c2 + 2.0 * c3 + c4);
        t = if k + 1 == steps { t_end } else { t + h };
        out.push(SirPoint { t, s, i, r });
    }
    Ok(out)
}
