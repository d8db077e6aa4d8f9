//! Dense linear-algebra helpers: spectra, Perron pairs, minimum-norm solves.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

pub type Complex = nalgebra::Complex<f64>;

/// Above this dimension spectral radii come from power iteration instead of a
/// dense eigendecomposition.
pub const DENSE_EIGEN_LIMIT: usize = 4096;

const POWER_TOL: f64 = 1e-12;
const POWER_MAX_ITER: usize = 200_000;

/// Eigenvalues of a dense matrix, without any structural splitting.
pub fn dense_eigenvalues(m: &DMatrix<f64>) -> Vec<Complex> {
    let n = m.nrows();
    if n == 0 {
        return Vec::new();
    }
    let mat = faer::Mat::<f64>::from_fn(n, n, |i, j| m[(i, j)]);
    match mat.eigenvalues() {
        Ok(ev) => ev.iter().map(|z| Complex::new(z.re, z.im)).collect(),
        // the Hessenberg QR only fails on NaN/inf input
        Err(_) => vec![Complex::new(f64::NAN, 0.0); n],
    }
}

/// All eigenvalues of a real square matrix.
///
/// The matrix is split along the strongly connected components of its
/// nonzero pattern; the spectrum is the union of the diagonal-block spectra.
/// Acyclic parts therefore contribute exact zeros instead of the
/// `eps^(1/k)` noise a dense solver produces on nilpotent blocks.
pub fn eigenvalues(m: &DMatrix<f64>) -> Vec<Complex> {
    components(m)
        .iter()
        .flat_map(|c| {
            if c.len() == 1 {
                vec![Complex::new(m[(c[0], c[0])], 0.0)]
            } else {
                dense_eigenvalues(&submatrix(m, c))
            }
        })
        .collect()
}

/// Spectral radius; dense per component up to [`DENSE_EIGEN_LIMIT`], power
/// iteration beyond.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    components(m)
        .iter()
        .map(|c| {
            if c.len() == 1 {
                m[(c[0], c[0])].abs()
            } else if c.len() <= DENSE_EIGEN_LIMIT {
                dense_eigenvalues(&submatrix(m, c))
                    .iter()
                    .map(|z| z.norm())
                    .fold(0.0, f64::max)
            } else {
                power_iteration_radius(&submatrix(m, c), POWER_TOL, POWER_MAX_ITER)
            }
        })
        .fold(0.0, f64::max)
}

/// Spectral radius estimate by power iteration on `M^2`, which also settles
/// when the dominant eigenvalues form a `±λ` or complex-conjugate pair.
pub fn power_iteration_radius(m: &DMatrix<f64>, tol: f64, max_iter: usize) -> f64 {
    let n = m.nrows();
    if n == 0 {
        return 0.0;
    }
    // deterministic, generic start vector
    let mut x = DVector::from_fn(n, |i, _| 1.0 + 0.5 * ((i as f64 + 1.0) * 0.7548776662).fract());
    x /= x.norm();
    let mut prev = f64::INFINITY;
    for _ in 0..max_iter {
        let y = m * &x;
        let z = m * &y;
        let zn = z.norm();
        if zn == 0.0 || !zn.is_finite() {
            return if zn == 0.0 { 0.0 } else { f64::NAN };
        }
        let est = zn.sqrt();
        if (est - prev).abs() <= tol * est.max(1e-300) {
            return est;
        }
        prev = est;
        x = z / zn;
    }
    prev
}

/// Perron root and positive right Perron vector of a non-negative matrix.
#[derive(Debug, Clone)]
pub struct PerronPair {
    pub value: f64,
    /// Positive, unit-sum vector; `None` when the matrix is reducible or the
    /// iteration did not settle.
    pub vector: Option<DVector<f64>>,
}

/// Perron root of a non-negative matrix: the largest Perron root of its
/// irreducible diagonal blocks.
///
/// Each block's root is bracketed by Collatz-Wielandt bounds while iterating
/// `M + I` (aperiodic even when `M` is periodic); a bracket that fails to
/// close falls back to the dense spectral radius of the block.
pub fn perron(m: &DMatrix<f64>) -> PerronPair {
    let comps = components(m);
    let mut value = 0.0f64;
    let mut vector = None;
    for c in &comps {
        if c.len() == 1 {
            value = value.max(m[(c[0], c[0])]);
            continue;
        }
        let block = submatrix(m, c);
        let (v, x) = match irreducible_perron(&block) {
            Some((v, x)) => (v, Some(x)),
            None => (spectral_radius(&block), None),
        };
        value = value.max(v);
        if comps.len() == 1 {
            vector = x;
        }
    }
    PerronPair { value, vector }
}

fn irreducible_perron(m: &DMatrix<f64>) -> Option<(f64, DVector<f64>)> {
    let n = m.nrows();
    let mut x = DVector::from_element(n, 1.0 / n as f64);
    for _ in 0..POWER_MAX_ITER {
        let mx = m * &x;
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for i in 0..n {
            let r = mx[i] / x[i];
            lo = lo.min(r);
            hi = hi.max(r);
        }
        if hi - lo <= POWER_TOL * hi.max(1e-300) {
            return Some((0.5 * (lo + hi), &mx / mx.sum()));
        }
        let next = mx + &x;
        x = &next / next.sum();
    }
    None
}

fn submatrix(m: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])])
}

fn components(m: &DMatrix<f64>) -> Vec<Vec<usize>> {
    let n = m.nrows();
    strongly_connected_components(n, |i| (0..n).filter(|&j| m[(i, j)] != 0.0).collect())
}

/// Strongly connected components of a directed graph given by successor
/// lists (Kosaraju, iterative). Each component is sorted.
pub fn strongly_connected_components<F>(n: usize, successors: F) -> Vec<Vec<usize>>
where
    F: Fn(usize) -> Vec<usize>,
{
    let forward: Vec<Vec<usize>> = (0..n).map(&successors).collect();
    let mut backward = vec![Vec::new(); n];
    for (u, outs) in forward.iter().enumerate() {
        for &v in outs {
            backward[v].push(u);
        }
    }
    // finishing order on the forward graph
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for root in 0..n {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        let mut stack = vec![(root, 0usize)];
        while let Some((u, k)) = stack.pop() {
            if k < forward[u].len() {
                stack.push((u, k + 1));
                let v = forward[u][k];
                if !seen[v] {
                    seen[v] = true;
                    stack.push((v, 0));
                }
            } else {
                order.push(u);
            }
        }
    }
    let mut comp = vec![usize::MAX; n];
    let mut out = Vec::new();
    for &root in order.iter().rev() {
        if comp[root] != usize::MAX {
            continue;
        }
        let id = out.len();
        comp[root] = id;
        let mut members = vec![root];
        let mut stack = vec![root];
        while let Some(u) = stack.pop() {
            for &v in &backward[u] {
                if comp[v] == usize::MAX {
                    comp[v] = id;
                    members.push(v);
                    stack.push(v);
                }
            }
        }
        members.sort_unstable();
        out.push(members);
    }
    out
}

/// Strong connectivity of a directed graph given by successor lists.
pub fn strongly_connected<F>(n: usize, successors: F) -> bool
where
    F: Fn(usize) -> Vec<usize>,
{
    n > 0 && strongly_connected_components(n, successors).len() == 1
}

/// Irreducibility of a square matrix, judged on its nonzero pattern.
pub fn pattern_irreducible(m: &DMatrix<f64>) -> bool {
    let n = m.nrows();
    strongly_connected(n, |i| (0..n).filter(|&j| m[(i, j)] != 0.0).collect())
}

/// Minimum-norm least-squares solution of `m x = b`.
pub fn min_norm_solve(m: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let (rows, cols) = m.shape();
    let mat = faer::Mat::<f64>::from_fn(rows, cols, |i, j| m[(i, j)]);
    let Ok(svd) = mat.thin_svd() else {
        return DVector::from_element(cols, f64::NAN);
    };
    let (u, v, s) = (svd.U(), svd.V(), svd.S().column_vector());
    let smax = (0..s.nrows()).map(|k| s[k]).fold(0.0, f64::max);
    let eps = 1e-11 * smax.max(1e-300) * (rows.max(cols) as f64);
    let mut x = DVector::zeros(cols);
    for k in 0..s.nrows() {
        if s[k] > eps {
            let coef = (0..rows).map(|i| u[(i, k)] * b[i]).sum::<f64>() / s[k];
            for j in 0..cols {
                x[j] += coef * v[(j, k)];
            }
        }
    }
    x
}

/// Numerical rank from singular values, relative threshold `rel_tol`.
pub fn rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    let mat = faer::Mat::<f64>::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)]);
    let sv = mat.singular_values().unwrap_or_default();
    let smax = sv.iter().copied().fold(0.0, f64::max);
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}

/// Eigenvalues of a matrix reversible with respect to the positive measure
/// `pi`, via the symmetric similarity `D^{1/2} K D^{-1/2}`. Sorted by
/// decreasing modulus.
pub fn reversible_eigenvalues(k: &DMatrix<f64>, pi: &[f64]) -> Vec<f64> {
    let n = k.nrows();
    let s = DMatrix::from_fn(n, n, |i, j| {
        let v = k[(i, j)] * (pi[i] / pi[j]).sqrt();
        let w = k[(j, i)] * (pi[j] / pi[i]).sqrt();
        0.5 * (v + w)
    });
    let mut ev: Vec<f64> = SymmetricEigen::new(s).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.abs().total_cmp(&a.abs()));
    ev
}

/// Largest-modulus eigenvalue after removing the one closest to 1 (the
/// Perron eigenvalue of a stochastic matrix). Zero for `1x1` input.
pub fn second_eigenvalue(mut eigenvalues: Vec<Complex>) -> Complex {
    if eigenvalues.len() < 2 {
        return Complex::new(0.0, 0.0);
    }
    let perron = eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - 1.0).norm().total_cmp(&(b.1 - 1.0).norm()))
        .map(|(idx, _)| idx)
        .unwrap_or(0);
    eigenvalues.swap_remove(perron);
    eigenvalues
        .into_iter()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .unwrap_or(Complex::new(0.0, 0.0))
}

/// Greedy matching of every value in `sub` to a distinct nearest value of
/// `sup`. Returns the worst matched distance, or `None` when `sub` is larger.
pub fn match_spectra(sub: &[Complex], sup: &[Complex]) -> Option<f64> {
    if sub.len() > sup.len() {
        return None;
    }
    let mut order: Vec<usize> = (0..sub.len()).collect();
    order.sort_by(|&a, &b| sub[b].norm().total_cmp(&sub[a].norm()));
    let mut used = vec![false; sup.len()];
    let mut worst = 0.0f64;
    for idx in order {
        let (best, dist) = sup
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, z)| (j, (z - sub[idx]).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))?;
        used[best] = true;
        worst = worst.max(dist);
    }
    Some(worst)
}

/// Removes from `values` one nearest match per entry of `remove`.
pub fn multiset_difference(values: &[Complex], remove: &[Complex]) -> Vec<Complex> {
    let mut left: Vec<Complex> = values.to_vec();
    for r in remove {
        if let Some((idx, _)) = left
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - r).norm().total_cmp(&(b.1 - r).norm()))
        {
            left.swap_remove(idx);
        }
    }
    left
}
