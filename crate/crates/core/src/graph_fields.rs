//! Scalar and vector fields on a factor graph.
//!
//! A scalar field puts one value on every node, a vector field one value on
//! every edge. Gradient fields `w_ai = u_a - u_i` and divergenceless fields
//! (zero sum around every node) are orthogonal complements. Divergenceless
//! fields are eigenvectors of the line-graph matrix `A` with eigenvalue 1,
//! which is what makes `(I - A) x = y` solvable for gradient right-hand sides
//! except on single-cycle graphs.

use nalgebra::{DMatrix, DVector};

use crate::error::{BpError, Result};
use crate::factor_graph::FactorGraph;
use crate::linalg;

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub factors: Vec<f64>,
    pub variables: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(g: &FactorGraph) -> Self {
        Self::constant(g, 0.0)
    }

    pub fn constant(g: &FactorGraph, value: f64) -> Self {
        ScalarField {
            factors: vec![value; g.num_factors()],
            variables: vec![value; g.num_variables()],
        }
    }

    pub fn dot(&self, other: &ScalarField) -> f64 {
        dot(&self.factors, &other.factors) + dot(&self.variables, &other.variables)
    }

    fn check(&self, g: &FactorGraph) -> Result<()> {
        check_len(g.num_factors(), self.factors.len())?;
        check_len(g.num_variables(), self.variables.len())
    }

    fn from_vector(g: &FactorGraph, v: &DVector<f64>) -> Self {
        let nf = g.num_factors();
        ScalarField {
            factors: v.rows(0, nf).iter().copied().collect(),
            variables: v.rows(nf, g.num_variables()).iter().copied().collect(),
        }
    }
}

/// One value per edge, in canonical edge order.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField(pub Vec<f64>);

impl VectorField {
    pub fn zeros(g: &FactorGraph) -> Self {
        VectorField(vec![0.0; g.num_edges()])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dot(&self, other: &VectorField) -> f64 {
        dot(&self.0, &other.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    fn check(&self, g: &FactorGraph) -> Result<()> {
        check_len(g.num_edges(), self.0.len())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(BpError::SizeMismatch { expected, found })
    }
}

/// Node sums of a vector field: `sum_{i in a} w_ai` per factor and
/// `sum_{a ∋ i} w_ai` per variable. The field is divergenceless iff all vanish.
pub fn divergence_defect(g: &FactorGraph, w: &VectorField) -> Result<(Vec<f64>, Vec<f64>)> {
    w.check(g)?;
    let mut fac = vec![0.0; g.num_factors()];
    let mut var = vec![0.0; g.num_variables()];
    for (e, edge) in g.edges().iter().enumerate() {
        fac[edge.factor] += w.0[e];
        var[edge.variable] += w.0[e];
    }
    Ok((fac, var))
}

pub fn gradient_field(g: &FactorGraph, u: &ScalarField) -> Result<VectorField> {
    u.check(g)?;
    Ok(VectorField(
        g.edges()
            .iter()
            .map(|edge| u.factors[edge.factor] - u.variables[edge.variable])
            .collect(),
    ))
}

pub fn laplace_apply(g: &FactorGraph, u: &ScalarField) -> Result<ScalarField> {
    u.check(g)?;
    let mut out = ScalarField {
        factors: (0..g.num_factors())
            .map(|a| g.factor_degree(a) as f64 * u.factors[a])
            .collect(),
        variables: (0..g.num_variables())
            .map(|i| g.variable_degree(i) as f64 * u.variables[i])
            .collect(),
    };
    for edge in g.edges() {
        out.factors[edge.factor] -= u.variables[edge.variable];
        out.variables[edge.variable] -= u.factors[edge.factor];
    }
    Ok(out)
}

/// Dense Laplacian over nodes ordered factors first, then variables.
fn laplacian_matrix(g: &FactorGraph) -> DMatrix<f64> {
    let nf = g.num_factors();
    let n = nf + g.num_variables();
    let mut l = DMatrix::zeros(n, n);
    for edge in g.edges() {
        let (a, i) = (edge.factor, nf + edge.variable);
        l[(a, a)] += 1.0;
        l[(i, i)] += 1.0;
        l[(a, i)] -= 1.0;
        l[(i, a)] -= 1.0;
    }
    l
}

/// Dense gradient operator, edges x nodes.
fn gradient_matrix(g: &FactorGraph) -> DMatrix<f64> {
    let nf = g.num_factors();
    let mut m = DMatrix::zeros(g.num_edges(), nf + g.num_variables());
    for (e, edge) in g.edges().iter().enumerate() {
        m[(e, edge.factor)] = 1.0;
        m[(e, nf + edge.variable)] = -1.0;
    }
    m
}

/// Orthogonal split of a vector field into gradient and divergenceless parts.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub gradient: VectorField,
    pub divergenceless: VectorField,
    /// Zero-mean scalar potential of the gradient part.
    pub potential: ScalarField,
}

/// Least-squares projection onto the gradient subspace.
///
/// The normal equations are `Δ u = Gᵀ w`; on a connected graph the kernel of
/// `Δ` is the constants, so `Δ + 11ᵀ/n` is positive definite and yields the
/// zero-mean potential directly.
pub fn decompose(g: &FactorGraph, w: &VectorField) -> Result<Decomposition> {
    w.check(g)?;
    let (fac, var) = divergence_defect(g, w)?;
    // Gᵀ w
    let rhs = DVector::from_iterator(
        fac.len() + var.len(),
        fac.iter().copied().chain(var.iter().map(|v| -v)),
    );
    let n = rhs.len();
    let mut l = laplacian_matrix(g);
    l.add_scalar_mut(1.0 / n as f64);
    let chol = l
        .cholesky()
        .expect("shifted Laplacian of a connected graph is positive definite");
    let u = chol.solve(&rhs);
    let potential = ScalarField::from_vector(g, &u);
    let gradient = gradient_field(g, &potential)?;
    let divergenceless = VectorField(w.0.iter().zip(&gradient.0).map(|(a, b)| a - b).collect());
    Ok(Decomposition {
        gradient,
        divergenceless,
        potential,
    })
}

/// Tolerances for [`solve_identity_minus_a`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Max-norm of the divergenceless part of `y`, relative to `|y|_inf`.
    pub gradient_rel_tol: f64,
    /// Absolute tolerance on the single-cycle compatibility sum.
    pub compat_tol: f64,
    /// Max-norm residual of the returned solution, relative to `max(1, |y|_inf)`.
    pub residual_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            gradient_rel_tol: 1e-8,
            compat_tol: 1e-9,
            residual_tol: 1e-9,
        }
    }
}

/// Single-cycle compatibility sum `Σ_a y_a + Σ_i (1 - d_i) y_i` of a scalar
/// potential. Invariant under constant shifts exactly when the graph has one
/// cycle.
pub fn single_cycle_defect(g: &FactorGraph, u: &ScalarField) -> f64 {
    let fsum: f64 = u.factors.iter().sum();
    let vsum: f64 = u
        .variables
        .iter()
        .enumerate()
        .map(|(i, y)| (1.0 - g.variable_degree(i) as f64) * y)
        .sum();
    fsum + vsum
}

/// Solves `(I - A) x = y` for a gradient field `y`.
///
/// Returns the minimum-norm solution, which is orthogonal to every
/// divergenceless field and therefore of gradient type. On a single-cycle
/// graph the system is only consistent when the compatibility sum of the
/// potential of `y` vanishes.
pub fn solve_identity_minus_a(
    g: &FactorGraph,
    y: &VectorField,
    opts: &SolveOptions,
) -> Result<VectorField> {
    y.check(g)?;
    let dec = decompose(g, y)?;
    let scale = y.max_abs();
    let residual = dec.divergenceless.max_abs();
    if residual > opts.gradient_rel_tol * scale {
        return Err(BpError::NotGradientInput { residual });
    }
    if g.cycle_count() == 1 {
        let defect = single_cycle_defect(g, &dec.potential);
        if defect.abs() > opts.compat_tol {
            return Err(BpError::IncompatibleC1 { defect });
        }
    }
    let n = g.num_edges();
    let system = DMatrix::identity(n, n) - g.line_graph_adjacency();
    let rhs = DVector::from_column_slice(&y.0);
    let x = linalg::min_norm_solve(&system, &rhs);
    let res = (&system * &x - &rhs).amax();
    let tol = opts.residual_tol * scale.max(1.0);
    if res > tol {
        return Err(BpError::SolveFailed { residual: res, tol });
    }
    Ok(VectorField(x.iter().copied().collect()))
}

/// Dimension of the space of gradient fields `x` with `A x = x`. Zero unless
/// the graph has exactly one cycle, where it is one.
pub fn gradient_unit_eigenspace_dim(g: &FactorGraph) -> usize {
    let n = g.num_edges();
    let system = (DMatrix::identity(n, n) - g.line_graph_adjacency()) * gradient_matrix(g);
    let nodes = system.ncols();
    // constants are always in the kernel of the gradient operator
    nodes - linalg::rank(&system, 1e-10) - 1
}
