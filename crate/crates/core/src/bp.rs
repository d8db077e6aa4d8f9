//! Sum-product message passing with interchangeable normalization.
//!
//! A factor-to-variable message `m_{a->i}` is updated as `Θ_ai(m) / Z_ai`,
//! where `Θ_ai` is the plain sum-product map and `Z_ai` a per-edge constant
//! chosen by a [`Strategy`]. Beliefs depend on messages only up to a positive
//! constant per edge, so every strategy produces the same belief trajectory
//! from a common starting point; they differ in how the message scale evolves
//! and therefore in whether messages themselves converge.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{BpError, Result};
use crate::factor_graph::FactorGraph;
use crate::graph_fields::{self, SolveOptions, VectorField};
use crate::model::{slot_state, BeliefSet, Model};
use crate::par::{self, Execution};

/// Messages outside `[MIN_MESSAGE, MAX_MESSAGE]` abort a run.
pub const MIN_MESSAGE: f64 = 1e-300;
pub const MAX_MESSAGE: f64 = 1e300;

/// Per-edge normalization applied to the raw update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// `Z_ai = 1`.
    None,
    /// `Z_ai = Σ_x Θ_ai,x`: messages sum to one.
    Mess,
    /// `Z_ai = max_x Θ_ai,x`.
    Max,
    /// `Z_ai = Θ_ai,1`: first state pinned to one.
    First,
    /// `Z_ai = Z_a(m) / Z_i(m)`: update becomes `m * b_{i|a} / b_i`.
    Bel,
    /// Constant multiplier `exp((d_i - 2) / (d_i - 1))`, the update kept by
    /// the unnormalized variational problem. Leaf variables use 1.
    Variational,
    /// `Z_ai = Σ_x Θ_ai,x / max_x m_ai,x`. Not homogeneous; admits no fixed
    /// point and serves as a negative control.
    BadMaxRatio,
}

impl Strategy {
    pub const ALL: [Strategy; 7] = [
        Strategy::None,
        Strategy::Mess,
        Strategy::Max,
        Strategy::First,
        Strategy::Bel,
        Strategy::Variational,
        Strategy::BadMaxRatio,
    ];

    /// Strategies whose fixed points correspond to those of the plain scheme.
    pub const WELL_BEHAVED: [Strategy; 6] = [
        Strategy::None,
        Strategy::Mess,
        Strategy::Max,
        Strategy::First,
        Strategy::Bel,
        Strategy::Variational,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::None => "none",
            Strategy::Mess => "mess",
            Strategy::Max => "max",
            Strategy::First => "first",
            Strategy::Bel => "bel",
            Strategy::Variational => "variational",
            Strategy::BadMaxRatio => "badmaxratio",
        }
    }

    /// `Z_ai = N(Θ_ai)` with `N` positively homogeneous of degree one.
    pub fn is_positive_homogeneous(self) -> bool {
        matches!(self, Strategy::Mess | Strategy::Max | Strategy::First)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = BpError;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| BpError::InvalidParameter(format!("unknown normalization `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Schedule {
    /// Every edge updated from the previous state.
    #[default]
    Parallel,
    /// Edges updated in index order, each seeing the fresh values.
    Sequential,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    #[default]
    Messages,
    Beliefs,
    Quotient,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Init {
    /// All ones, or `1/q` for the `mess` strategy.
    #[default]
    Uniform,
    /// Log-uniform in `[-1, 1]`.
    Random { seed: u64 },
}

/// Positive message vectors, one per edge, stored edge-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MessageState {
    q: usize,
    values: Vec<f64>,
    pub iteration: usize,
}

impl MessageState {
    pub fn constant(g: &FactorGraph, value: f64) -> Self {
        MessageState {
            q: g.q(),
            values: vec![value; g.num_edges() * g.q()],
            iteration: 0,
        }
    }

    pub fn initial(g: &FactorGraph, strategy: Strategy, init: Init) -> Self {
        match init {
            Init::Uniform => {
                let v = if strategy == Strategy::Mess {
                    1.0 / g.q() as f64
                } else {
                    1.0
                };
                Self::constant(g, v)
            }
            Init::Random { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                MessageState {
                    q: g.q(),
                    values: (0..g.num_edges() * g.q())
                        .map(|_| rng.random_range(-1.0..=1.0f64).exp())
                        .collect(),
                    iteration: 0,
                }
            }
        }
    }

    /// Validates a flat edge-major vector of positive values.
    pub fn from_values(g: &FactorGraph, values: Vec<f64>) -> Result<Self> {
        let expected = g.num_edges() * g.q();
        if values.len() != expected {
            return Err(BpError::SizeMismatch {
                expected,
                found: values.len(),
            });
        }
        let state = MessageState {
            q: g.q(),
            values,
            iteration: 0,
        };
        state.check_positive()?;
        Ok(state)
    }

    fn check_positive(&self) -> Result<()> {
        match self.values.iter().position(|v| !(*v > 0.0 && v.is_finite())) {
            Some(k) => Err(BpError::NonPositiveMessage { edge: k / self.q }),
            None => Ok(()),
        }
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn num_edges(&self) -> usize {
        self.values.len() / self.q
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn message(&self, e: usize) -> &[f64] {
        &self.values[e * self.q..(e + 1) * self.q]
    }

    pub fn message_mut(&mut self, e: usize) -> &mut [f64] {
        &mut self.values[e * self.q..(e + 1) * self.q]
    }

    /// Copy with edge `e` multiplied by `c[e]`.
    pub fn scaled(&self, c: &[f64]) -> Self {
        let mut out = self.clone();
        for (e, &ce) in c.iter().enumerate() {
            out.message_mut(e).iter_mut().for_each(|v| *v *= ce);
        }
        out
    }

    /// Copy with every message rescaled to sum to one.
    pub fn sum_normalized(&self) -> Self {
        let mut out = self.clone();
        for e in 0..self.num_edges() {
            let m = out.message_mut(e);
            let s: f64 = m.iter().sum();
            m.iter_mut().for_each(|v| *v /= s);
        }
        out
    }

    fn log_max(&self, e: usize) -> f64 {
        self.message(e).iter().copied().fold(0.0, f64::max).ln()
    }
}

/// `Θ_ai = shape * exp(log_scale)` with `max(shape) = 1`, so that the update
/// can be formed without intermediate under- or overflow.
#[derive(Debug, Clone)]
struct ScaledTheta {
    shape: Vec<f64>,
    log_scale: f64,
}

/// Variable-to-factor message `n_{i->a} = φ_i Π_{c∋i, c≠a} m_{c->i}` for
/// edge `e = (a, i)`, built from max-rescaled messages; returns the log of
/// the removed scale.
fn variable_to_factor(model: &Model, m: &MessageState, e: usize) -> (Vec<f64>, f64) {
    let g = model.graph();
    let edge = g.edge(e);
    let mut n = model.phi(edge.variable).to_vec();
    let mut log_scale = 0.0;
    for &c in g.variable_edges(edge.variable) {
        if c != e {
            let lm = m.log_max(c);
            let s = lm.exp();
            log_scale += lm;
            n.iter_mut().zip(m.message(c)).for_each(|(x, y)| *x *= y / s);
        }
    }
    (n, log_scale)
}

/// `Θ_ai` for every edge of factor `a`, in member order.
fn theta_factor(model: &Model, m: &MessageState, a: usize) -> Vec<ScaledTheta> {
    let g = model.graph();
    let q = g.q();
    let d = g.factor_degree(a);
    let (incoming, scales): (Vec<Vec<f64>>, Vec<f64>) =
        g.factor_edges(a).map(|e| variable_to_factor(model, m, e)).unzip();
    let mut out = vec![vec![0.0; q]; d];
    let mut prefix = vec![1.0; d + 1];
    for (idx, &psi) in model.psi(a).iter().enumerate() {
        for s in 0..d {
            prefix[s + 1] = prefix[s] * incoming[s][slot_state(idx, q, d, s)];
        }
        let mut suffix = 1.0;
        for s in (0..d).rev() {
            let x = slot_state(idx, q, d, s);
            out[s][x] += psi * prefix[s] * suffix;
            suffix *= incoming[s][x];
        }
    }
    let total_scale: f64 = scales.iter().sum();
    out.into_iter()
        .zip(&scales)
        .map(|(mut shape, own)| {
            let peak = shape.iter().copied().fold(0.0, f64::max);
            shape.iter_mut().for_each(|v| *v /= peak);
            ScaledTheta {
                shape,
                log_scale: total_scale - own + peak.ln(),
            }
        })
        .collect()
}

fn theta_edge(model: &Model, m: &MessageState, e: usize) -> ScaledTheta {
    let slot = model.graph().edge(e).slot;
    theta_factor(model, m, model.graph().edge(e).factor).swap_remove(slot)
}

/// The plain update `Θ_ai(m)` for a single edge.
pub fn theta(model: &Model, m: &MessageState, e: usize) -> Vec<f64> {
    let th = theta_edge(model, m, e);
    let s = th.log_scale.exp();
    th.shape.into_iter().map(|v| v * s).collect()
}

/// Variable belief before normalization, rescaled per edge for range safety.
/// Returns the normalized belief and `log Z_i`.
fn variable_belief(model: &Model, m: &MessageState, i: usize) -> (Vec<f64>, f64) {
    let g = model.graph();
    let mut b = model.phi(i).to_vec();
    let mut log_scale = 0.0;
    for &c in g.variable_edges(i) {
        let lm = m.log_max(c);
        let s = lm.exp();
        log_scale += lm;
        b.iter_mut().zip(m.message(c)).for_each(|(x, y)| *x *= y / s);
    }
    let total: f64 = b.iter().sum();
    b.iter_mut().for_each(|x| *x /= total);
    (b, total.ln() + log_scale)
}

fn factor_belief(model: &Model, m: &MessageState, a: usize) -> (Vec<f64>, f64) {
    let g = model.graph();
    let q = g.q();
    let d = g.factor_degree(a);
    let mut log_scale = 0.0;
    let incoming: Vec<Vec<f64>> = g
        .factor_edges(a)
        .map(|e| {
            let edge = g.edge(e);
            let mut n = model.phi(edge.variable).to_vec();
            for &c in g.variable_edges(edge.variable) {
                if c != e {
                    let lm = m.log_max(c);
                    let s = lm.exp();
                    log_scale += lm;
                    n.iter_mut().zip(m.message(c)).for_each(|(x, y)| *x *= y / s);
                }
            }
            n
        })
        .collect();
    let mut b: Vec<f64> = model
        .psi(a)
        .iter()
        .enumerate()
        .map(|(idx, &psi)| {
            (0..d).fold(psi, |acc, s| acc * incoming[s][slot_state(idx, q, d, s)])
        })
        .collect();
    let total: f64 = b.iter().sum();
    b.iter_mut().for_each(|x| *x /= total);
    (b, total.ln() + log_scale)
}

/// Beliefs `b_i ∝ φ_i Π m_{a->i}` and `b_a ∝ ψ_a Π n_{i->a}` with their
/// normalization constants (stored as logs).
pub fn beliefs(model: &Model, m: &MessageState) -> BeliefSet {
    let g = model.graph();
    let (variables, log_z_variables) = (0..g.num_variables()).map(|i| variable_belief(model, m, i)).unzip();
    let (factors, log_z_factors) = (0..g.num_factors()).map(|a| factor_belief(model, m, a)).unzip();
    BeliefSet {
        variables,
        factors,
        log_z_variables,
        log_z_factors,
    }
}

/// New message `Θ_ai / Z_ai` for edge `e`.
fn normalized_update(
    model: &Model,
    strategy: Strategy,
    th: ScaledTheta,
    current: &[f64],
    e: usize,
    log_z: impl FnOnce() -> (f64, f64),
) -> Vec<f64> {
    let ScaledTheta { mut shape, log_scale } = th;
    let factor = match strategy {
        Strategy::None => log_scale.exp(),
        Strategy::Mess => 1.0 / shape.iter().sum::<f64>(),
        Strategy::Max => 1.0,
        Strategy::First => 1.0 / shape[0],
        Strategy::Bel => {
            let (lza, lzi) = log_z();
            (log_scale - (lza - lzi)).exp()
        }
        Strategy::Variational => {
            let d = model.graph().variable_degree(model.graph().edge(e).variable) as f64;
            let log_mult = if d > 1.0 { (d - 2.0) / (d - 1.0) } else { 0.0 };
            (log_scale + log_mult).exp()
        }
        Strategy::BadMaxRatio => current.iter().copied().fold(0.0, f64::max) / shape.iter().sum::<f64>(),
    };
    shape.iter_mut().for_each(|v| *v *= factor);
    shape
}

fn check_range(m: &MessageState, iteration: usize) -> Result<()> {
    match m
        .values
        .iter()
        .position(|v| !(*v >= MIN_MESSAGE && *v <= MAX_MESSAGE))
    {
        Some(k) => Err(BpError::NumericalOverflow {
            iteration,
            edge: k / m.q,
            value: m.values[k],
            partial: None,
        }),
        None => Ok(()),
    }
}

/// One update of every edge.
pub fn step(model: &Model, m: &MessageState, strategy: Strategy, schedule: Schedule) -> Result<MessageState> {
    step_with(model, m, strategy, schedule, Execution::default())
}

pub fn step_with(
    model: &Model,
    m: &MessageState,
    strategy: Strategy,
    schedule: Schedule,
    exec: Execution,
) -> Result<MessageState> {
    let g = model.graph();
    let next = match schedule {
        Schedule::Parallel => {
            let log_z = (strategy == Strategy::Bel).then(|| {
                let b = beliefs(model, m);
                (b.log_z_factors, b.log_z_variables)
            });
            let blocks = par::map_indexed(exec, g.num_factors(), |a| {
                let thetas = theta_factor(model, m, a);
                g.factor_edges(a)
                    .zip(thetas)
                    .flat_map(|(e, th)| {
                        let edge = g.edge(e);
                        normalized_update(model, strategy, th, m.message(e), e, || {
                            let (lzf, lzv) = log_z.as_ref().expect("computed for bel");
                            (lzf[edge.factor], lzv[edge.variable])
                        })
                    })
                    .collect::<Vec<f64>>()
            });
            MessageState {
                q: m.q,
                values: blocks.concat(),
                iteration: m.iteration + 1,
            }
        }
        Schedule::Sequential => {
            let mut cur = m.clone();
            for e in 0..g.num_edges() {
                let th = theta_edge(model, &cur, e);
                let edge = g.edge(e);
                let next = normalized_update(model, strategy, th, cur.message(e), e, || {
                    (
                        factor_belief(model, &cur, edge.factor).1,
                        variable_belief(model, &cur, edge.variable).1,
                    )
                });
                cur.message_mut(e).copy_from_slice(&next);
            }
            cur.iteration = m.iteration + 1;
            cur
        }
    };
    check_range(&next, next.iteration)?;
    Ok(next)
}

/// Largest per-edge change relative to the edge's current scale,
/// `max_ai max_x |m'_ai(x) - m_ai(x)| / max_x m_ai(x)`.
pub fn message_residual(old: &MessageState, new: &MessageState) -> f64 {
    (0..old.num_edges())
        .map(|e| {
            let scale = old.message(e).iter().copied().fold(0.0, f64::max);
            old.message(e)
                .iter()
                .zip(new.message(e))
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
                / scale
        })
        .fold(0.0, f64::max)
}

/// Relative max-norm change of one parallel step; infinite if the step
/// leaves the representable range.
pub fn fixed_point_residual(model: &Model, m: &MessageState, strategy: Strategy) -> f64 {
    match step(model, m, strategy, Schedule::Parallel) {
        Ok(next) => message_residual(m, &next),
        Err(_) => f64::INFINITY,
    }
}

/// [`fixed_point_residual`] of the plain scheme.
pub fn plain_residual(model: &Model, m: &MessageState) -> f64 {
    fixed_point_residual(model, m, Strategy::None)
}

/// Log-messages with the per-edge mean removed: a canonical representative
/// of the class of states related by per-edge positive scaling.
pub fn quotient_project_log(mu: &[f64], q: usize) -> Vec<f64> {
    mu.chunks(q)
        .flat_map(|chunk| {
            let mean = chunk.iter().sum::<f64>() / q as f64;
            chunk.iter().map(move |v| v - mean)
        })
        .collect()
}

pub fn quotient_project(m: &MessageState) -> Result<Vec<f64>> {
    m.check_positive()?;
    let mu: Vec<f64> = m.values.iter().map(|v| v.ln()).collect();
    Ok(quotient_project_log(&mu, m.q))
}

/// Per-edge constants `c` with `m2 = c m1`, if they exist.
pub fn message_scale_between(m1: &MessageState, m2: &MessageState, tol: f64) -> Result<Vec<f64>> {
    if m1.values.len() != m2.values.len() || m1.q != m2.q {
        return Err(BpError::SizeMismatch {
            expected: m1.values.len(),
            found: m2.values.len(),
        });
    }
    m1.check_positive()?;
    m2.check_positive()?;
    (0..m1.num_edges())
        .map(|e| {
            let ratios: Vec<f64> = m2.message(e).iter().zip(m1.message(e)).map(|(a, b)| a / b).collect();
            let c = (ratios.iter().map(|r| r.ln()).sum::<f64>() / ratios.len() as f64).exp();
            if ratios.iter().all(|r| (r / c - 1.0).abs() <= tol) {
                Ok(c)
            } else {
                Err(BpError::NotEquivalent { edge: e })
            }
        })
        .collect()
}

/// Convergence verdicts at the end of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConvergenceFlags {
    pub messages: bool,
    pub beliefs: bool,
    pub quotient: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResidualHistory {
    pub messages: Vec<f64>,
    pub beliefs: Vec<f64>,
    pub quotient: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub strategy: Strategy,
    pub schedule: Schedule,
    pub init: Init,
    pub tol: f64,
    pub max_iter: usize,
    pub criterion: Criterion,
    pub exec: Execution,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            strategy: Strategy::Mess,
            schedule: Schedule::Parallel,
            init: Init::Uniform,
            tol: 1e-9,
            max_iter: 10_000,
            criterion: Criterion::Messages,
            exec: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub strategy: Strategy,
    pub schedule: Schedule,
    pub criterion: Criterion,
    pub tol: f64,
    /// Message convergence implies the other two.
    pub converged: ConvergenceFlags,
    pub iterations: usize,
    pub final_messages: MessageState,
    pub final_beliefs: BeliefSet,
    pub history: ResidualHistory,
}

impl RunReport {
    /// Whether the tracked criterion was met.
    pub fn tracked_converged(&self) -> bool {
        match self.criterion {
            Criterion::Messages => self.converged.messages,
            Criterion::Beliefs => self.converged.beliefs,
            Criterion::Quotient => self.converged.quotient,
        }
    }
}

/// Step-by-step driver that also tracks beliefs and the quotient projection.
#[derive(Debug, Clone)]
pub struct Engine<'m> {
    model: &'m Model,
    strategy: Strategy,
    schedule: Schedule,
    exec: Execution,
    state: MessageState,
    beliefs: BeliefSet,
    projection: Vec<f64>,
}

/// Residuals of one engine step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepResiduals {
    pub messages: f64,
    pub beliefs: f64,
    pub quotient: f64,
}

impl<'m> Engine<'m> {
    pub fn new(model: &'m Model, strategy: Strategy, schedule: Schedule, init: Init) -> Self {
        let state = MessageState::initial(model.graph(), strategy, init);
        Self::from_state(model, strategy, schedule, state)
    }

    pub fn from_state(model: &'m Model, strategy: Strategy, schedule: Schedule, state: MessageState) -> Self {
        let beliefs = beliefs(model, &state);
        let projection = quotient_project(&state).expect("engine states are positive");
        Engine {
            model,
            strategy,
            schedule,
            exec: Execution::default(),
            state,
            beliefs,
            projection,
        }
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn state(&self) -> &MessageState {
        &self.state
    }

    pub fn beliefs(&self) -> &BeliefSet {
        &self.beliefs
    }

    pub fn step(&mut self) -> Result<StepResiduals> {
        let next = step_with(self.model, &self.state, self.strategy, self.schedule, self.exec)?;
        let next_beliefs = beliefs(self.model, &next);
        let next_projection = quotient_project(&next)?;
        let res = StepResiduals {
            messages: message_residual(&self.state, &next),
            beliefs: self.beliefs.max_abs_diff(&next_beliefs),
            quotient: self
                .projection
                .iter()
                .zip(&next_projection)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        };
        self.state = next;
        self.beliefs = next_beliefs;
        self.projection = next_projection;
        Ok(res)
    }
}

/// Iterates until the tracked residual drops below `tol` or `max_iter` steps.
///
/// On overflow the error carries the run up to the last finite state.
pub fn run(model: &Model, opts: &RunOptions) -> Result<RunReport> {
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(BpError::InvalidParameter("tol must be > 0".into()));
    }
    let mut engine = Engine::new(model, opts.strategy, opts.schedule, opts.init).with_execution(opts.exec);
    let mut history = ResidualHistory::default();
    let mut last: Option<StepResiduals> = None;
    let report = |engine: &Engine, history: ResidualHistory, last: Option<StepResiduals>| {
        let message_ok = last.is_some_and(|r| r.messages < opts.tol);
        let converged = ConvergenceFlags {
            messages: message_ok,
            beliefs: message_ok || last.is_some_and(|r| r.beliefs < opts.tol),
            quotient: message_ok || last.is_some_and(|r| r.quotient < opts.tol),
        };
        RunReport {
            strategy: opts.strategy,
            schedule: opts.schedule,
            criterion: opts.criterion,
            tol: opts.tol,
            converged,
            iterations: engine.state.iteration,
            final_messages: engine.state.clone(),
            final_beliefs: engine.beliefs.clone(),
            history,
        }
    };
    for _ in 0..opts.max_iter {
        let res = match engine.step() {
            Ok(res) => res,
            Err(BpError::NumericalOverflow {
                iteration,
                edge,
                value,
                ..
            }) => {
                return Err(BpError::NumericalOverflow {
                    iteration,
                    edge,
                    value,
                    partial: Some(Box::new(report(&engine, history, last))),
                })
            }
            Err(e) => return Err(e),
        };
        history.messages.push(res.messages);
        history.beliefs.push(res.beliefs);
        history.quotient.push(res.quotient);
        last = Some(res);
        let tracked = match opts.criterion {
            Criterion::Messages => res.messages,
            Criterion::Beliefs => res.beliefs,
            Criterion::Quotient => res.quotient,
        };
        if tracked < opts.tol {
            break;
        }
    }
    Ok(report(&engine, history, last))
}

/// Tolerances for [`denormalize_fixed_point`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenormalizeOptions {
    /// Fixed-point residual accepted for the normalized input.
    pub fixed_point_tol: f64,
    /// Absolute tolerance on `log Π_a Z_a Π_i Z_i^{1-d_i}` on single-cycle graphs.
    pub prod_z_tol: f64,
    /// Plain fixed-point residual required of the result.
    pub plain_tol: f64,
}

impl Default for DenormalizeOptions {
    fn default() -> Self {
        DenormalizeOptions {
            fixed_point_tol: 1e-8,
            prod_z_tol: 1e-9,
            plain_tol: 1e-8,
        }
    }
}

/// `log Π_a Z_a Π_i Z_i^{1-d_i}` of a belief set.
pub fn log_prod_z(g: &FactorGraph, b: &BeliefSet) -> f64 {
    let f: f64 = b.log_z_factors.iter().sum();
    let v: f64 = b
        .log_z_variables
        .iter()
        .enumerate()
        .map(|(i, lz)| (1.0 - g.variable_degree(i) as f64) * lz)
        .sum();
    f + v
}

/// Rescales a fixed point of a normalized scheme into a fixed point of the
/// plain scheme with the same beliefs.
///
/// The per-edge log-scales `x` solve `(I - A) x = y` with
/// `y_ai = log Z_a - log Z_i`. Single-cycle graphs need the product condition
/// on the constants; otherwise no plain fixed point exists.
pub fn denormalize_fixed_point(
    model: &Model,
    normalized: &MessageState,
    strategy: Strategy,
    opts: &DenormalizeOptions,
) -> Result<MessageState> {
    let g = model.graph();
    let residual = fixed_point_residual(model, normalized, strategy);
    if residual.is_nan() || residual > opts.fixed_point_tol {
        return Err(BpError::NotAFixedPoint {
            residual,
            tol: opts.fixed_point_tol,
        });
    }
    let b = beliefs(model, normalized);
    if g.cycle_count() == 1 {
        let lp = log_prod_z(g, &b);
        if lp.abs() > opts.prod_z_tol {
            return Err(BpError::NoPlainFixedPoint { log_prod_z: lp });
        }
    }
    let y = VectorField(
        g.edges()
            .iter()
            .map(|edge| b.log_z_factors[edge.factor] - b.log_z_variables[edge.variable])
            .collect(),
    );
    let solve = SolveOptions {
        compat_tol: opts.prod_z_tol,
        ..SolveOptions::default()
    };
    let x = match graph_fields::solve_identity_minus_a(g, &y, &solve) {
        Err(BpError::IncompatibleC1 { defect }) => return Err(BpError::NoPlainFixedPoint { log_prod_z: defect }),
        other => other?,
    };
    let c: Vec<f64> = x.values().iter().map(|v| v.exp()).collect();
    let mut plain = normalized.scaled(&c);
    plain.iteration = 0;
    let residual = plain_residual(model, &plain);
    if residual.is_nan() || residual > opts.plain_tol {
        return Err(BpError::NotAFixedPoint {
            residual,
            tol: opts.plain_tol,
        });
    }
    Ok(plain)
}

/// Initial beliefs of the all-ones message state, the natural starting point
/// of [`product_sum_step`].
pub fn potential_beliefs(model: &Model) -> BeliefSet {
    beliefs(model, &MessageState::constant(model.graph(), 1.0))
}

/// Message-free belief update
/// `b_i <- b_i Π_{a∋i} b_{i|a}/b_i`,
/// `b_a <- b_a Π_{i∈a} Π_{c∋i, c≠a} b_{i|c}/b_i`,
/// renormalized. The constants of the result hold the logs of the
/// renormalization sums.
pub fn product_sum_step(g: &FactorGraph, b: &BeliefSet) -> BeliefSet {
    let q = g.q();
    // ratio r_e(x) = b_{i|a}(x) / b_i(x) per edge
    let ratios: Vec<Vec<f64>> = g
        .edges()
        .iter()
        .map(|edge| {
            b.factor_marginal(g, edge.factor, edge.slot)
                .iter()
                .zip(&b.variables[edge.variable])
                .map(|(m, v)| m / v)
                .collect()
        })
        .collect();
    let normalize = |mut t: Vec<f64>| -> (Vec<f64>, f64) {
        let s: f64 = t.iter().sum();
        t.iter_mut().for_each(|v| *v /= s);
        (t, s.ln())
    };
    let (variables, log_z_variables) = (0..g.num_variables())
        .map(|i| {
            let mut t = b.variables[i].clone();
            for &e in g.variable_edges(i) {
                t.iter_mut().zip(&ratios[e]).for_each(|(v, r)| *v *= r);
            }
            normalize(t)
        })
        .unzip();
    let (factors, log_z_factors) = (0..g.num_factors())
        .map(|a| {
            let d = g.factor_degree(a);
            let t = b.factors[a]
                .iter()
                .enumerate()
                .map(|(idx, &v)| {
                    let mut w = v;
                    for e in g.factor_edges(a) {
                        let edge = g.edge(e);
                        let x = slot_state(idx, q, d, edge.slot);
                        for &c in g.variable_edges(edge.variable) {
                            if c != e {
                                w *= ratios[c][x];
                            }
                        }
                    }
                    w
                })
                .collect();
            normalize(t)
        })
        .unzip();
    BeliefSet {
        variables,
        factors,
        log_z_variables,
        log_z_factors,
    }
}
