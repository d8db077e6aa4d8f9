//! Factor-graph structure: variables, factors, the edge set and the oriented
//! line graph that drives message updates.
//!
//! Edges are indexed densely in factor-major order: all edges of the first
//! factor (in the factor's member order), then the second factor, and so on.
//! Every per-edge vector in the crate uses this order.

use std::collections::{HashMap, HashSet, VecDeque};

use nalgebra::DMatrix;

use crate::error::{BpError, Result};

/// Raw, unvalidated graph description.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSpec {
    pub q: usize,
    pub variables: Vec<String>,
    /// `(factor name, member variable names)`, members in table order.
    pub factors: Vec<(String, Vec<String>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    pub name: String,
    /// Member variable indices in table order.
    pub members: Vec<usize>,
}

/// One `(factor, variable)` membership pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Edge {
    pub factor: usize,
    pub variable: usize,
    /// Position of the variable inside the factor's member list.
    pub slot: usize,
}

/// Validated, immutable factor graph with a uniform state count `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorGraph {
    q: usize,
    variables: Vec<String>,
    factors: Vec<Factor>,
    edges: Vec<Edge>,
    factor_offsets: Vec<usize>,
    variable_edges: Vec<Vec<usize>>,
    successors: Vec<Vec<usize>>,
}

impl FactorGraph {
    /// Validates a raw description and assigns the canonical edge index.
    pub fn build(spec: &GraphSpec) -> Result<Self> {
        if spec.q < 2 {
            return Err(BpError::BadCardinality(spec.q));
        }
        if spec.variables.is_empty() {
            return Err(BpError::InvalidParameter("graph has no variables".into()));
        }
        let mut var_index = HashMap::with_capacity(spec.variables.len());
        for (idx, name) in spec.variables.iter().enumerate() {
            if var_index.insert(name.as_str(), idx).is_some() {
                return Err(BpError::DuplicateId(name.clone()));
            }
        }
        let mut factor_names = HashSet::with_capacity(spec.factors.len());
        let mut factors = Vec::with_capacity(spec.factors.len());
        for (name, vars) in &spec.factors {
            if !factor_names.insert(name.as_str()) {
                return Err(BpError::DuplicateId(name.clone()));
            }
            if vars.is_empty() {
                return Err(BpError::EmptyFactor(name.clone()));
            }
            let mut members = Vec::with_capacity(vars.len());
            for v in vars {
                let idx = *var_index
                    .get(v.as_str())
                    .ok_or_else(|| BpError::UnknownVariable {
                        factor: name.clone(),
                        variable: v.clone(),
                    })?;
                if members.contains(&idx) {
                    return Err(BpError::DuplicateMembership(format!(
                        "variable `{v}` listed twice in factor `{name}`"
                    )));
                }
                members.push(idx);
            }
            factors.push(Factor {
                name: name.clone(),
                members,
            });
        }
        Self::from_parts(spec.q, spec.variables.clone(), factors)
    }

    fn from_parts(q: usize, variables: Vec<String>, factors: Vec<Factor>) -> Result<Self> {
        let mut edges = Vec::new();
        let mut factor_offsets = Vec::with_capacity(factors.len() + 1);
        let mut variable_edges = vec![Vec::new(); variables.len()];
        for (a, factor) in factors.iter().enumerate() {
            factor_offsets.push(edges.len());
            for (slot, &i) in factor.members.iter().enumerate() {
                variable_edges[i].push(edges.len());
                edges.push(Edge {
                    factor: a,
                    variable: i,
                    slot,
                });
            }
        }
        factor_offsets.push(edges.len());

        let mut graph = FactorGraph {
            q,
            variables,
            factors,
            edges,
            factor_offsets,
            variable_edges,
            successors: Vec::new(),
        };
        let components = graph.component_count();
        if components != 1 {
            return Err(BpError::DisconnectedGraph { components });
        }
        graph.successors = (0..graph.edges.len())
            .map(|e| graph.compute_successors(e))
            .collect();
        Ok(graph)
    }

    fn compute_successors(&self, e: usize) -> Vec<usize> {
        let Edge {
            factor: a,
            variable: i,
            ..
        } = self.edges[e];
        let mut out = Vec::new();
        for &j in &self.factors[a].members {
            if j == i {
                continue;
            }
            for &e2 in &self.variable_edges[j] {
                if self.edges[e2].factor != a {
                    out.push(e2);
                }
            }
        }
        out
    }

    /// Node ids: factors `0..F`, variables `F..F+V`.
    fn component_count(&self) -> usize {
        let nf = self.factors.len();
        let n = nf + self.variables.len();
        let mut seen = vec![false; n];
        let mut components = 0;
        for start in 0..n {
            if seen[start] {
                continue;
            }
            components += 1;
            seen[start] = true;
            let mut queue = VecDeque::from([start]);
            while let Some(node) = queue.pop_front() {
                for next in self.node_neighbors(node) {
                    if !seen[next] {
                        seen[next] = true;
                        queue.push_back(next);
                    }
                }
            }
        }
        components
    }

    fn node_neighbors(&self, node: usize) -> Vec<usize> {
        let nf = self.factors.len();
        if node < nf {
            self.factors[node].members.iter().map(|&i| nf + i).collect()
        } else {
            self.variable_edges[node - nf]
                .iter()
                .map(|&e| self.edges[e].factor)
                .collect()
        }
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn num_factors(&self) -> usize {
        self.factors.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn variable_names(&self) -> &[String] {
        &self.variables
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn factor(&self, a: usize) -> &Factor {
        &self.factors[a]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> Edge {
        self.edges[e]
    }

    /// Edge indices of factor `a`, contiguous and in member order.
    pub fn factor_edges(&self, a: usize) -> std::ops::Range<usize> {
        self.factor_offsets[a]..self.factor_offsets[a + 1]
    }

    /// Edge indices touching variable `i`, in factor order.
    pub fn variable_edges(&self, i: usize) -> &[usize] {
        &self.variable_edges[i]
    }

    pub fn edge_index(&self, factor: usize, variable: usize) -> Option<usize> {
        self.factor_edges(factor)
            .find(|&e| self.edges[e].variable == variable)
    }

    pub fn variable_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v == name)
    }

    pub fn factor_index(&self, name: &str) -> Option<usize> {
        self.factors.iter().position(|f| f.name == name)
    }

    pub fn factor_degree(&self, a: usize) -> usize {
        self.factors[a].members.len()
    }

    pub fn variable_degree(&self, i: usize) -> usize {
        self.variable_edges[i].len()
    }

    /// Number of entries in the table of factor `a`, `q^{d_a}`.
    pub fn factor_table_len(&self, a: usize) -> usize {
        self.q.pow(self.factor_degree(a) as u32)
    }

    /// Edges `(a', j)` whose messages feed the update of edge `e = (a, i)`:
    /// `j` in `a` with `j != i`, and `a' != a` containing `j`.
    pub fn successors(&self, e: usize) -> &[usize] {
        &self.successors[e]
    }

    /// Number of independent cycles, `|E| - |F| - |V| + 1`.
    pub fn cycle_count(&self) -> usize {
        // connected graphs always have |E| >= |F| + |V| - 1
        self.edges.len() + 1 - self.factors.len() - self.variables.len()
    }

    pub fn is_tree(&self) -> bool {
        self.cycle_count() == 0
    }

    /// Dense 0-1 adjacency matrix of the oriented line graph.
    pub fn line_graph_adjacency(&self) -> DMatrix<f64> {
        let n = self.edges.len();
        let mut a = DMatrix::zeros(n, n);
        for e in 0..n {
            for &f in &self.successors[e] {
                a[(e, f)] = 1.0;
            }
        }
        a
    }

    /// Whether the oriented line graph is strongly connected.
    pub fn line_graph_irreducible(&self) -> bool {
        crate::linalg::strongly_connected(self.edges.len(), |e| self.successors[e].clone())
    }

    /// Longest shortest path between two nodes of the bipartite graph.
    pub fn diameter(&self) -> usize {
        let nf = self.factors.len();
        let n = nf + self.variables.len();
        let mut best = 0;
        for start in 0..n {
            let mut dist = vec![usize::MAX; n];
            dist[start] = 0;
            let mut queue = VecDeque::from([start]);
            while let Some(node) = queue.pop_front() {
                for next in self.node_neighbors(node) {
                    if dist[next] == usize::MAX {
                        dist[next] = dist[node] + 1;
                        best = best.max(dist[next]);
                        queue.push_back(next);
                    }
                }
            }
        }
        best
    }

    /// Same graph with the factors listed in a different order.
    pub fn with_factor_order(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.factors.len() {
            return Err(BpError::SizeMismatch {
                expected: self.factors.len(),
                found: order.len(),
            });
        }
        let factors = order.iter().map(|&a| self.factors[a].clone()).collect();
        Self::from_parts(self.q, self.variables.clone(), factors)
    }
}

/// Convenience builder used by tests, benches and fixtures: variables are
/// named `"0".."n-1"`, factors `"f0".."fk"`.
pub fn graph_from_indices(q: usize, num_vars: usize, factors: &[Vec<usize>]) -> Result<FactorGraph> {
    FactorGraph::build(&GraphSpec {
        q,
        variables: (0..num_vars).map(|i| i.to_string()).collect(),
        factors: factors
            .iter()
            .enumerate()
            .map(|(a, m)| (format!("f{a}"), m.iter().map(|i| i.to_string()).collect()))
            .collect(),
    })
}
