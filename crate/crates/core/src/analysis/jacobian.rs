//! Jacobians of the log-domain update at a belief fixed point.
//!
//! Rows and columns are indexed by `(edge, state)` as `e * q + k`.

use nalgebra::{DMatrix, DVector};

use crate::bp::MessageState;
use crate::factor_graph::FactorGraph;

use super::kernels::ConditionalKernels;

/// `J[(ai,k),(a'j,l)] = B^(iaj)[k,l]` on the line-graph pattern.
pub fn jacobian_from_kernels(g: &FactorGraph, kernels: &ConditionalKernels) -> DMatrix<f64> {
    let q = g.q();
    let n = g.num_edges() * q;
    let mut j = DMatrix::zeros(n, n);
    for e in 0..g.num_edges() {
        let a = g.edge(e).factor;
        for &f in g.successors(e) {
            let via = g
                .edge_index(a, g.edge(f).variable)
                .expect("successor variable is a member of the factor");
            let b = &kernels.get(e, via).expect("kernel exists for every member pair").b;
            for k in 0..q {
                for l in 0..q {
                    j[(e * q + k, f * q + l)] = b[(k, l)];
                }
            }
        }
    }
    j
}

/// `(I - M) J` where `M` averages each edge block with weights `w_e`
/// (unit-sum per edge): `(M x)_(e,k) = Σ_l w_e(l) x_(e,l)`.
pub fn project_rows(j: &DMatrix<f64>, q: usize, weights: impl Fn(usize) -> Vec<f64>) -> DMatrix<f64> {
    let mut out = j.clone();
    for e in 0..j.nrows() / q {
        let w = weights(e);
        let avg = (0..q).fold(DVector::zeros(j.ncols()).transpose(), |acc, l| {
            acc + j.row(e * q + l) * w[l]
        });
        for k in 0..q {
            let mut row = out.row_mut(e * q + k);
            row -= &avg;
        }
    }
    out
}

/// The per-edge projector `M` with `M[(e,k),(e,l)] = w_e(l)`.
pub fn edge_projector(q: usize, edges: usize, weights: impl Fn(usize) -> Vec<f64>) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(edges * q, edges * q);
    for e in 0..edges {
        let w = weights(e);
        for k in 0..q {
            for l in 0..q {
                m[(e * q + k, e * q + l)] = w[l];
            }
        }
    }
    m
}

/// `J~ = (I - M) J` with `M` built from the sum-normalized messages.
pub fn normalized_from_plain(j: &DMatrix<f64>, m: &MessageState) -> DMatrix<f64> {
    let n = m.sum_normalized();
    project_rows(j, m.q(), |e| n.message(e).to_vec())
}

/// `[J] = (I - M0) J` with `M0` the uniform per-edge average.
pub fn quotient_from_plain(j: &DMatrix<f64>, q: usize) -> DMatrix<f64> {
    project_rows(j, q, |_| vec![1.0 / q as f64; q])
}

/// Lifts an edge vector constantly across states.
pub fn lift(v: &DVector<f64>, q: usize) -> DVector<f64> {
    DVector::from_fn(v.len() * q, |r, _| v[r / q])
}
