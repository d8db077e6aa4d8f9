//! Potentials, beliefs, the brute-force marginal oracle and model constructors.
//!
//! Factor tables are row-major with the first listed member variable most
//! significant: for members `(v0, v1, v2)` the entry for `(x0, x1, x2)` sits at
//! `x0 q^2 + x1 q + x2`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{BpError, Result};
use crate::factor_graph::FactorGraph;
use crate::par::{self, Execution};

/// Default cap on the number of joint states the oracle will enumerate.
pub const DEFAULT_STATE_CAP: u64 = 1 << 20;

const ENUM_BLOCK: usize = 1 << 12;

/// State of `slot` in a row-major table index for a factor of `arity` members.
#[inline]
pub fn slot_state(index: usize, q: usize, arity: usize, slot: usize) -> usize {
    (index / q.pow((arity - 1 - slot) as u32)) % q
}

/// Positive potentials on a factor graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    graph: FactorGraph,
    phi: Vec<Vec<f64>>,
    psi: Vec<Vec<f64>>,
}

fn check_positive(owner: &str, table: &[f64]) -> Result<()> {
    match table.iter().find(|&&v| !(v > 0.0 && v.is_finite())) {
        Some(&value) => Err(BpError::NonPositivePotential {
            owner: owner.to_string(),
            value,
        }),
        None => Ok(()),
    }
}

impl Model {
    pub fn new(graph: FactorGraph, phi: Vec<Vec<f64>>, psi: Vec<Vec<f64>>) -> Result<Self> {
        let q = graph.q();
        if phi.len() != graph.num_variables() {
            return Err(BpError::SizeMismatch {
                expected: graph.num_variables(),
                found: phi.len(),
            });
        }
        if psi.len() != graph.num_factors() {
            return Err(BpError::SizeMismatch {
                expected: graph.num_factors(),
                found: psi.len(),
            });
        }
        for (i, table) in phi.iter().enumerate() {
            let owner = &graph.variable_names()[i];
            if table.len() != q {
                return Err(BpError::TableSize {
                    owner: owner.clone(),
                    expected: q,
                    found: table.len(),
                });
            }
            check_positive(owner, table)?;
        }
        for (a, table) in psi.iter().enumerate() {
            let owner = &graph.factor(a).name;
            let expected = graph.factor_table_len(a);
            if table.len() != expected {
                return Err(BpError::TableSize {
                    owner: owner.clone(),
                    expected,
                    found: table.len(),
                });
            }
            check_positive(owner, table)?;
        }
        Ok(Model { graph, phi, psi })
    }

    /// All potentials equal to one.
    pub fn uniform(graph: FactorGraph) -> Self {
        let phi = vec![vec![1.0; graph.q()]; graph.num_variables()];
        let psi = (0..graph.num_factors())
            .map(|a| vec![1.0; graph.factor_table_len(a)])
            .collect();
        Model { graph, phi, psi }
    }

    pub fn graph(&self) -> &FactorGraph {
        &self.graph
    }

    pub fn phi(&self, i: usize) -> &[f64] {
        &self.phi[i]
    }

    pub fn psi(&self, a: usize) -> &[f64] {
        &self.psi[a]
    }

    /// Same model with factors listed in another order.
    pub fn with_factor_order(&self, order: &[usize]) -> Result<Self> {
        let graph = self.graph.with_factor_order(order)?;
        let psi = order.iter().map(|&a| self.psi[a].clone()).collect();
        Model::new(graph, self.phi.clone(), psi)
    }
}

/// Normalized beliefs together with the log of their normalization constants.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefSet {
    pub variables: Vec<Vec<f64>>,
    pub factors: Vec<Vec<f64>>,
    pub log_z_variables: Vec<f64>,
    pub log_z_factors: Vec<f64>,
}

impl BeliefSet {
    /// Uniform beliefs on `g` (constants set to zero).
    pub fn uniform(g: &FactorGraph) -> Self {
        let q = g.q();
        BeliefSet {
            variables: vec![vec![1.0 / q as f64; q]; g.num_variables()],
            factors: (0..g.num_factors())
                .map(|a| {
                    let n = g.factor_table_len(a);
                    vec![1.0 / n as f64; n]
                })
                .collect(),
            log_z_variables: vec![0.0; g.num_variables()],
            log_z_factors: vec![0.0; g.num_factors()],
        }
    }

    /// `Z_i` for variable `i`.
    pub fn z_variable(&self, i: usize) -> f64 {
        self.log_z_variables[i].exp()
    }

    pub fn z_factor(&self, a: usize) -> f64 {
        self.log_z_factors[a].exp()
    }

    /// Single-variable marginal of the factor belief, `b_{i|a}` for the
    /// member at `slot`.
    pub fn factor_marginal(&self, g: &FactorGraph, a: usize, slot: usize) -> Vec<f64> {
        let q = g.q();
        let d = g.factor_degree(a);
        let mut out = vec![0.0; q];
        for (idx, v) in self.factors[a].iter().enumerate() {
            out[slot_state(idx, q, d, slot)] += v;
        }
        out
    }

    /// Pair marginal `b_a(x_s = k, x_t = l)` as a row-major `q x q` table.
    pub fn pair_marginal(&self, g: &FactorGraph, a: usize, s: usize, t: usize) -> Vec<f64> {
        let q = g.q();
        let d = g.factor_degree(a);
        let mut out = vec![0.0; q * q];
        for (idx, v) in self.factors[a].iter().enumerate() {
            out[slot_state(idx, q, d, s) * q + slot_state(idx, q, d, t)] += v;
        }
        out
    }

    /// Largest `|b_{i|a}(x) - b_i(x)|` over all edges and states.
    pub fn compatibility_defect(&self, g: &FactorGraph) -> f64 {
        g.edges()
            .iter()
            .map(|edge| {
                let m = self.factor_marginal(g, edge.factor, edge.slot);
                m.iter()
                    .zip(&self.variables[edge.variable])
                    .map(|(x, y)| (x - y).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    /// Largest deviation of any belief table sum from one.
    pub fn normalization_defect(&self) -> f64 {
        self.variables
            .iter()
            .chain(&self.factors)
            .map(|t| (t.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Max absolute difference over all belief entries.
    pub fn max_abs_diff(&self, other: &BeliefSet) -> f64 {
        self.variables
            .iter()
            .chain(&self.factors)
            .zip(other.variables.iter().chain(&other.factors))
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }

    fn validate_shape(&self, g: &FactorGraph) -> Result<()> {
        let shape_ok = self.variables.len() == g.num_variables()
            && self.factors.len() == g.num_factors()
            && self.variables.iter().all(|t| t.len() == g.q())
            && self
                .factors
                .iter()
                .enumerate()
                .all(|(a, t)| t.len() == g.factor_table_len(a));
        if shape_ok {
            Ok(())
        } else {
            Err(BpError::IncompatibleBeliefs("belief table shapes do not match the graph".into()))
        }
    }

    /// Shape, strict positivity, normalization and compatibility checks.
    pub fn validate(&self, g: &FactorGraph, tol: f64) -> Result<()> {
        self.validate_shape(g)?;
        if let Some(v) = self
            .variables
            .iter()
            .chain(&self.factors)
            .flatten()
            .find(|v| !(**v > 0.0 && v.is_finite()))
        {
            return Err(BpError::NonPositiveBeliefs(format!("entry {v}")));
        }
        let norm = self.normalization_defect();
        if norm > tol {
            return Err(BpError::IncompatibleBeliefs(format!(
                "tables sum to 1 only within {norm:e}"
            )));
        }
        let compat = self.compatibility_defect(g);
        if compat > tol {
            return Err(BpError::IncompatibleBeliefs(format!(
                "factor marginals differ from variable beliefs by {compat:e}"
            )));
        }
        Ok(())
    }
}

/// Output of the brute-force oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactMarginals {
    /// Exact marginals; every constant is set to `log Z_joint`.
    pub beliefs: BeliefSet,
    pub log_z_joint: f64,
}

impl ExactMarginals {
    pub fn z_joint(&self) -> f64 {
        self.log_z_joint.exp()
    }
}

/// Exact marginals and partition function by enumerating all `q^|V|` states.
pub fn exact_marginals(model: &Model, cap: u64) -> Result<ExactMarginals> {
    exact_marginals_with(model, cap, Execution::default())
}

pub fn exact_marginals_with(model: &Model, cap: u64, exec: Execution) -> Result<ExactMarginals> {
    let g = model.graph();
    let (q, n) = (g.q(), g.num_variables());
    let states = (q as f64).powi(n as i32);
    if states > cap as f64 {
        return Err(BpError::StateSpaceTooLarge { states, cap });
    }
    let total = q.pow(n as u32);
    let log_phi: Vec<Vec<f64>> = (0..n).map(|i| model.phi(i).iter().map(|v| v.ln()).collect()).collect();
    let log_psi: Vec<Vec<f64>> = (0..g.num_factors())
        .map(|a| model.psi(a).iter().map(|v| v.ln()).collect())
        .collect();
    let blocks = total.div_ceil(ENUM_BLOCK);

    type Visitor<'v> = &'v mut dyn FnMut(&[usize], &[usize], f64);
    // Visits every joint state of a block with its factor table indices and log weight.
    let visit_block = |b: usize, f: Visitor| {
        let start = b * ENUM_BLOCK;
        let end = (start + ENUM_BLOCK).min(total);
        // variable 0 is the most significant digit
        let mut x: Vec<usize> = (0..n).map(|k| slot_state(start, q, n, k)).collect();
        let mut idx = vec![0usize; g.num_factors()];
        for s in start..end {
            if s > start {
                let mut k = n;
                while k > 0 {
                    k -= 1;
                    x[k] += 1;
                    if x[k] < q {
                        break;
                    }
                    x[k] = 0;
                }
            }
            let mut lw = 0.0;
            for i in 0..n {
                lw += log_phi[i][x[i]];
            }
            for (a, factor) in g.factors().iter().enumerate() {
                let t = factor.members.iter().fold(0, |acc, &i| acc * q + x[i]);
                idx[a] = t;
                lw += log_psi[a][t];
            }
            f(&x, &idx, lw);
        }
    };

    let block_max = par::map_indexed(exec, blocks, |b| {
        let mut m = f64::NEG_INFINITY;
        visit_block(b, &mut |_, _, lw| m = m.max(lw));
        m
    });
    let shift = block_max.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    struct Partial {
        total: f64,
        vars: Vec<Vec<f64>>,
        facs: Vec<Vec<f64>>,
    }
    let partials = par::map_indexed(exec, blocks, |b| {
        let mut p = Partial {
            total: 0.0,
            vars: vec![vec![0.0; q]; n],
            facs: (0..g.num_factors()).map(|a| vec![0.0; g.factor_table_len(a)]).collect(),
        };
        visit_block(b, &mut |x, idx, lw| {
            let w = (lw - shift).exp();
            p.total += w;
            for (v, &xi) in p.vars.iter_mut().zip(x) {
                v[xi] += w;
            }
            for (a, &t) in idx.iter().enumerate() {
                p.facs[a][t] += w;
            }
        });
        p
    });

    let mut sum = 0.0;
    let mut vars = vec![vec![0.0; q]; n];
    let mut facs: Vec<Vec<f64>> = (0..g.num_factors()).map(|a| vec![0.0; g.factor_table_len(a)]).collect();
    for p in &partials {
        sum += p.total;
        for (acc, part) in vars.iter_mut().zip(&p.vars) {
            acc.iter_mut().zip(part).for_each(|(x, y)| *x += y);
        }
        for (acc, part) in facs.iter_mut().zip(&p.facs) {
            acc.iter_mut().zip(part).for_each(|(x, y)| *x += y);
        }
    }
    for t in vars.iter_mut().chain(facs.iter_mut()) {
        t.iter_mut().for_each(|v| *v /= sum);
    }
    let log_z_joint = shift + sum.ln();
    Ok(ExactMarginals {
        beliefs: BeliefSet {
            variables: vars,
            factors: facs,
            log_z_variables: vec![log_z_joint; n],
            log_z_factors: vec![log_z_joint; g.num_factors()],
        },
        log_z_joint,
    })
}

/// Tolerance on normalization and compatibility of prescribed beliefs.
pub const PRESCRIBED_TOL: f64 = 1e-9;

/// Potentials `phi_i = b_i`, `psi_a = b_a / prod_i b_i`, for which the
/// all-ones message state is a plain fixed point with beliefs `target`.
pub fn prescribed_belief_model(g: &FactorGraph, target: &BeliefSet) -> Result<Model> {
    target.validate(g, PRESCRIBED_TOL)?;
    let q = g.q();
    let phi = target.variables.clone();
    let psi = g
        .factors()
        .iter()
        .enumerate()
        .map(|(a, factor)| {
            let d = factor.members.len();
            target.factors[a]
                .iter()
                .enumerate()
                .map(|(idx, &b)| {
                    let denom: f64 = factor
                        .members
                        .iter()
                        .enumerate()
                        .map(|(slot, &i)| target.variables[i][slot_state(idx, q, d, slot)])
                        .product();
                    b / denom
                })
                .collect()
        })
        .collect();
    let model = Model::new(g.clone(), phi, psi)?;
    let ones = crate::bp::MessageState::constant(g, 1.0);
    let residual = crate::bp::plain_residual(&model, &ones);
    if residual > 10.0 * PRESCRIBED_TOL {
        return Err(BpError::IncompatibleBeliefs(format!(
            "all-ones messages are not a fixed point (residual {residual:e})"
        )));
    }
    Ok(model)
}

fn check_strength(strength: f64) -> Result<()> {
    if strength >= 0.0 && strength.is_finite() {
        Ok(())
    } else {
        Err(BpError::InvalidParameter(format!("strength must be finite and >= 0, got {strength}")))
    }
}

/// Log-potentials i.i.d. uniform in `[-strength, strength]`, variables first.
pub fn random_model(g: &FactorGraph, seed: u64, strength: f64) -> Result<Model> {
    check_strength(strength)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |len: usize| -> Vec<f64> {
        (0..len)
            .map(|_| {
                if strength == 0.0 {
                    1.0
                } else {
                    rng.random_range(-strength..=strength).exp()
                }
            })
            .collect()
    };
    let phi = (0..g.num_variables()).map(|_| draw(g.q())).collect();
    let psi = (0..g.num_factors()).map(|a| draw(g.factor_table_len(a))).collect();
    Model::new(g.clone(), phi, psi)
}

/// Random strictly positive, normalized and compatible beliefs.
///
/// Variable beliefs are random; each factor belief starts from a random
/// table and is fitted to its members' beliefs by iterative proportional
/// fitting. `strength` scales the log-spread of both.
pub fn random_compatible_beliefs(g: &FactorGraph, seed: u64, strength: f64) -> Result<BeliefSet> {
    check_strength(strength)?;
    let q = g.q();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |len: usize| -> Vec<f64> {
        let v: Vec<f64> = (0..len)
            .map(|_| {
                if strength == 0.0 {
                    1.0
                } else {
                    rng.random_range(-strength..=strength).exp()
                }
            })
            .collect();
        let s: f64 = v.iter().sum();
        v.into_iter().map(|x| x / s).collect()
    };
    let variables: Vec<Vec<f64>> = (0..g.num_variables()).map(|_| draw(q)).collect();
    let mut factors = Vec::with_capacity(g.num_factors());
    for (a, factor) in g.factors().iter().enumerate() {
        let d = factor.members.len();
        let mut table = draw(g.factor_table_len(a));
        for _ in 0..10_000 {
            let mut worst = 0.0f64;
            for (slot, &i) in factor.members.iter().enumerate() {
                let mut marg = vec![0.0; q];
                for (idx, v) in table.iter().enumerate() {
                    marg[slot_state(idx, q, d, slot)] += v;
                }
                for (x, m) in marg.iter().enumerate() {
                    worst = worst.max((m - variables[i][x]).abs());
                }
                for (idx, v) in table.iter_mut().enumerate() {
                    let x = slot_state(idx, q, d, slot);
                    *v *= variables[i][x] / marg[x];
                }
            }
            if worst < 1e-15 {
                break;
            }
        }
        factors.push(table);
    }
    let beliefs = BeliefSet {
        variables,
        factors,
        log_z_variables: vec![0.0; g.num_variables()],
        log_z_factors: vec![0.0; g.num_factors()],
    };
    beliefs.validate(g, PRESCRIBED_TOL)?;
    Ok(beliefs)
}

/// Homogeneous beliefs on a pairwise graph: every factor belief is the same
/// symmetric `q x q` table `pair` (row-major), every variable belief its
/// marginal. All conditional kernels are then the same matrix.
pub fn homogeneous_beliefs(g: &FactorGraph, pair: &[f64]) -> Result<BeliefSet> {
    let q = g.q();
    if pair.len() != q * q {
        return Err(BpError::SizeMismatch {
            expected: q * q,
            found: pair.len(),
        });
    }
    if (0..g.num_factors()).any(|a| g.factor_degree(a) != 2) {
        return Err(BpError::IncompatibleBeliefs("homogeneous beliefs need pairwise factors".into()));
    }
    for k in 0..q {
        for l in 0..q {
            if (pair[k * q + l] - pair[l * q + k]).abs() > 1e-15 {
                return Err(BpError::IncompatibleBeliefs("pair table must be symmetric".into()));
            }
        }
    }
    let total: f64 = pair.iter().sum();
    let table: Vec<f64> = pair.iter().map(|v| v / total).collect();
    let marginal: Vec<f64> = (0..q).map(|k| (0..q).map(|l| table[k * q + l]).sum()).collect();
    let beliefs = BeliefSet {
        variables: vec![marginal; g.num_variables()],
        factors: vec![table; g.num_factors()],
        log_z_variables: vec![0.0; g.num_variables()],
        log_z_factors: vec![0.0; g.num_factors()],
    };
    beliefs.validate(g, PRESCRIBED_TOL)?;
    Ok(beliefs)
}
