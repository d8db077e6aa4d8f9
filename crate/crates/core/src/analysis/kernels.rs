//! Conditional-belief kernels `B^(iaj)` and their two-hop products `K^(iaj)`.

use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::error::Result;
use crate::factor_graph::FactorGraph;
use crate::linalg::{self, Complex};
use crate::model::BeliefSet;
use crate::par::{self, Execution};

/// Belief compatibility required before kernels are formed.
pub const KERNEL_COMPAT_TOL: f64 = 1e-7;

const ROUND_OFF: f64 = 64.0 * f64::EPSILON;

/// Kernels for one ordered pair of distinct members `i, j` of a factor `a`.
#[derive(Debug, Clone)]
pub struct KernelPair {
    pub factor: usize,
    /// Edge `(a, i)`.
    pub from: usize,
    /// Edge `(a, j)`.
    pub to: usize,
    /// `b_{i|a}`, the stationary law of `k`.
    pub marginal: Vec<f64>,
    /// `B[k, l] = b_a(x_j = l | x_i = k)`.
    pub b: DMatrix<f64>,
    /// `K = B^(iaj) B^(jai)`.
    pub k: DMatrix<f64>,
}

impl KernelPair {
    /// Second-largest-modulus eigenvalue of `K` (real: `K` is reversible).
    /// Values at round-off level are returned as zero.
    pub fn k_second_eigenvalue(&self) -> f64 {
        let ev = linalg::reversible_eigenvalues(&self.k, &self.marginal);
        let v = linalg::second_eigenvalue(ev.into_iter().map(|v| Complex::new(v, 0.0)).collect()).re;
        if v.abs() <= ROUND_OFF {
            0.0
        } else {
            v
        }
    }

    /// Second-largest-modulus eigenvalue of `B`, zero at round-off level.
    pub fn b_second_eigenvalue(&self) -> Complex {
        let v = linalg::second_eigenvalue(linalg::eigenvalues(&self.b));
        if v.norm() <= ROUND_OFF {
            Complex::new(0.0, 0.0)
        } else {
            v
        }
    }

    /// Largest `|π_k K_kl - π_l K_lk|`.
    pub fn detailed_balance_residual(&self) -> f64 {
        let q = self.k.nrows();
        let pi = &self.marginal;
        (0..q)
            .flat_map(|k| (0..q).map(move |l| (k, l)))
            .map(|(k, l)| (pi[k] * self.k[(k, l)] - pi[l] * self.k[(l, k)]).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct ConditionalKernels {
    pairs: Vec<KernelPair>,
    index: HashMap<(usize, usize), usize>,
}

impl ConditionalKernels {
    pub fn pairs(&self) -> &[KernelPair] {
        &self.pairs
    }

    /// Kernel from edge `(a, i)` to edge `(a, j)`.
    pub fn get(&self, from: usize, to: usize) -> Option<&KernelPair> {
        self.index.get(&(from, to)).map(|&p| &self.pairs[p])
    }

    /// `max |λ_2(K)|^{1/2}` over all pairs; zero without pairs.
    pub fn mu2(&self) -> f64 {
        self.pairs
            .iter()
            .map(|p| p.k_second_eigenvalue().abs().sqrt())
            .fold(0.0, f64::max)
    }

    /// `max |λ_2(B)|` over all pairs.
    pub fn mu2_b(&self) -> f64 {
        self.pairs
            .iter()
            .map(|p| p.b_second_eigenvalue().norm())
            .fold(0.0, f64::max)
    }

    /// All `B` equal entrywise within `tol`.
    pub fn is_homogeneous(&self, tol: f64) -> bool {
        match self.pairs.first() {
            None => true,
            Some(first) => self
                .pairs
                .iter()
                .all(|p| (&p.b - &first.b).abs().max() <= tol),
        }
    }

    pub fn max_row_sum_defect(&self) -> f64 {
        self.pairs
            .iter()
            .flat_map(|p| p.b.row_iter().map(|r| (r.sum() - 1.0).abs()).collect::<Vec<_>>())
            .fold(0.0, f64::max)
    }

    pub fn max_detailed_balance_residual(&self) -> f64 {
        self.pairs
            .iter()
            .map(KernelPair::detailed_balance_residual)
            .fold(0.0, f64::max)
    }
}

fn conditional(g: &FactorGraph, b: &BeliefSet, a: usize, s: usize, t: usize) -> (Vec<f64>, DMatrix<f64>) {
    let q = g.q();
    let joint = b.pair_marginal(g, a, s, t);
    let marginal: Vec<f64> = (0..q).map(|k| joint[k * q..(k + 1) * q].iter().sum()).collect();
    let m = DMatrix::from_fn(q, q, |k, l| joint[k * q + l] / marginal[k]);
    (marginal, m)
}

pub fn conditional_kernels(g: &FactorGraph, b: &BeliefSet) -> Result<ConditionalKernels> {
    conditional_kernels_with(g, b, Execution::default())
}

pub fn conditional_kernels_with(g: &FactorGraph, b: &BeliefSet, exec: Execution) -> Result<ConditionalKernels> {
    b.validate(g, KERNEL_COMPAT_TOL)?;
    let per_factor = par::map_indexed(exec, g.num_factors(), |a| {
        let d = g.factor_degree(a);
        let base = g.factor_edges(a).start;
        let mut out = Vec::with_capacity(d * d.saturating_sub(1));
        for s in 0..d {
            for t in (0..d).filter(|&t| t != s) {
                let (marginal, forward) = conditional(g, b, a, s, t);
                let (_, backward) = conditional(g, b, a, t, s);
                let k = &forward * &backward;
                out.push(KernelPair {
                    factor: a,
                    from: base + s,
                    to: base + t,
                    marginal,
                    b: forward,
                    k,
                });
            }
        }
        out
    });
    let pairs: Vec<KernelPair> = per_factor.into_iter().flatten().collect();
    let index = pairs.iter().enumerate().map(|(n, p)| ((p.from, p.to), n)).collect();
    Ok(ConditionalKernels { pairs, index })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bp::{beliefs, MessageState};
    use crate::error::BpError;
    use crate::factor_graph::graph_from_indices;
    use crate::model::{random_compatible_beliefs, Model};

    #[test]
    fn uniform_beliefs_give_uniform_kernels() {
        let g = graph_from_indices(3, 3, &[vec![0, 1, 2], vec![1, 2]]).unwrap();
        let k = conditional_kernels(&g, &BeliefSet::uniform(&g)).unwrap();
        assert_eq!(k.pairs().len(), 6 + 2);
        for p in k.pairs() {
            assert!(p.b.iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-15));
            assert!(p.k.iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-15));
            assert!(p.k_second_eigenvalue().abs() < 1e-14);
        }
        assert_eq!(k.mu2(), 0.0);
    }

    #[test]
    fn independent_factor_kills_correlation() {
        let g = graph_from_indices(2, 2, &[vec![0, 1]]).unwrap();
        let (bi, bj) = ([0.3, 0.7], [0.6, 0.4]);
        let b = BeliefSet {
            variables: vec![bi.to_vec(), bj.to_vec()],
            factors: vec![vec![bi[0] * bj[0], bi[0] * bj[1], bi[1] * bj[0], bi[1] * bj[1]]],
            log_z_variables: vec![0.0; 2],
            log_z_factors: vec![0.0],
        };
        let k = conditional_kernels(&g, &b).unwrap();
        let p = k.get(0, 1).unwrap();
        for r in 0..2 {
            assert!((p.b[(r, 0)] - 0.6).abs() < 1e-15 && (p.b[(r, 1)] - 0.4).abs() < 1e-15);
        }
        assert_eq!(k.mu2(), 0.0);
        assert_eq!(k.mu2_b(), 0.0);
    }

    #[test]
    fn strong_coupling_second_eigenvalue() {
        // b_a = [[10,1],[1,10]]/22, so B = [[10,1],[1,10]]/11 with second
        // eigenvalue 9/11, and K = B^2 with 81/121
        let g = graph_from_indices(2, 2, &[vec![0, 1]]).unwrap();
        let model = Model::new(g.clone(), vec![vec![1.0; 2]; 2], vec![vec![10.0, 1.0, 1.0, 10.0]]).unwrap();
        let b = beliefs(&model, &MessageState::constant(&g, 1.0));
        let k = conditional_kernels(&g, &b).unwrap();
        let p = k.get(0, 1).unwrap();
        assert!((p.k_second_eigenvalue() - 81.0 / 121.0).abs() < 1e-14);
        assert!((p.b_second_eigenvalue().re - 9.0 / 11.0).abs() < 1e-14);
        let dense = linalg::second_eigenvalue(linalg::dense_eigenvalues(&p.k));
        assert!((dense.re - 81.0 / 121.0).abs() < 1e-13);
        assert!((k.mu2() - 9.0 / 11.0).abs() < 1e-14);
    }

    #[test]
    fn random_kernels_are_stochastic_and_reversible() {
        let g = graph_from_indices(3, 4, &[vec![0, 1, 2], vec![2, 3], vec![0, 3], vec![1, 3]]).unwrap();
        let b = random_compatible_beliefs(&g, 5, 1.5).unwrap();
        let k = conditional_kernels(&g, &b).unwrap();
        assert!(k.max_row_sum_defect() <= 1e-12);
        assert!(k.max_detailed_balance_residual() <= 1e-10);
        for p in k.pairs() {
            let edge = g.edge(p.from);
            for (x, y) in p.marginal.iter().zip(&b.variables[edge.variable]) {
                assert!((x - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn incompatible_beliefs_rejected() {
        let g = graph_from_indices(2, 2, &[vec![0, 1]]).unwrap();
        let mut b = BeliefSet::uniform(&g);
        b.variables[0] = vec![0.9, 0.1];
        assert!(matches!(
            conditional_kernels(&g, &b),
            Err(BpError::IncompatibleBeliefs(_))
        ));
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let g = graph_from_indices(2, 4, &[vec![0, 1], vec![1, 2], vec![2, 3], vec![3, 0]]).unwrap();
        let b = random_compatible_beliefs(&g, 2, 1.0).unwrap();
        let s = conditional_kernels_with(&g, &b, Execution::Sequential).unwrap();
        let p = conditional_kernels_with(&g, &b, Execution::Parallel).unwrap();
        for (x, y) in s.pairs().iter().zip(p.pairs()) {
            assert_eq!(x.k, y.k);
        }
    }
}
