//! Fixed-point analysis: conditional kernels, Jacobians, stability verdicts
//! and the Bethe free energy.

pub mod free_energy;
pub mod jacobian;
pub mod kernels;
pub mod stability;

use nalgebra::DMatrix;

pub use free_energy::{
    bethe_free_energy, free_energy_report, free_energy_scaling_check, optimal_scale, FreeEnergyReport, OptimalScale,
};
pub use kernels::{conditional_kernels, ConditionalKernels, KernelPair};
pub use stability::{stability_report, Jacobians, StabilityReport, Verdict, Verdicts};

use crate::bp::{self, MessageState};
use crate::error::{BpError, Result};
use crate::model::{BeliefSet, Model};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisOptions {
    /// Bound on `max |b_{i|a} / b_i - 1|` for a state to count as a fixed point.
    pub fixed_point_tol: f64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions { fixed_point_tol: 1e-7 }
    }
}

/// `max |b_{i|a}(x) / b_i(x) - 1|`, zero exactly at belief fixed points.
pub fn compatibility_residual(model: &Model, b: &BeliefSet) -> f64 {
    let g = model.graph();
    g.edges()
        .iter()
        .map(|edge| {
            b.factor_marginal(g, edge.factor, edge.slot)
                .iter()
                .zip(&b.variables[edge.variable])
                .map(|(m, v)| (m / v - 1.0).abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

/// Beliefs of `m`, provided they are a fixed point.
pub fn fixed_point_beliefs(model: &Model, m: &MessageState, opts: &AnalysisOptions) -> Result<BeliefSet> {
    let b = bp::beliefs(model, m);
    let residual = compatibility_residual(model, &b);
    if residual <= opts.fixed_point_tol {
        Ok(b)
    } else {
        Err(BpError::NotAFixedPoint {
            residual,
            tol: opts.fixed_point_tol,
        })
    }
}

fn kernels_at(model: &Model, m: &MessageState, opts: &AnalysisOptions) -> Result<ConditionalKernels> {
    let b = fixed_point_beliefs(model, m, opts)?;
    conditional_kernels(model.graph(), &b)
}

/// `J` at a fixed point, in log-message coordinates.
pub fn jacobian_plain(model: &Model, m: &MessageState, opts: &AnalysisOptions) -> Result<DMatrix<f64>> {
    let k = kernels_at(model, m, opts)?;
    Ok(jacobian::jacobian_from_kernels(model.graph(), &k))
}

/// `J~ = (I - M) J` with `M` built from `m` normalized to unit sums.
pub fn jacobian_normalized(model: &Model, m: &MessageState, opts: &AnalysisOptions) -> Result<DMatrix<f64>> {
    let j = jacobian_plain(model, m, opts)?;
    Ok(jacobian::normalized_from_plain(&j, m))
}

/// `[J] = (I - M0) J` with uniform per-edge averaging.
pub fn jacobian_quotient(model: &Model, m: &MessageState, opts: &AnalysisOptions) -> Result<DMatrix<f64>> {
    let j = jacobian_plain(model, m, opts)?;
    Ok(jacobian::quotient_from_plain(&j, model.graph().q()))
}

/// Stability and free-energy reports at a message fixed point.
pub fn analyze_messages(
    model: &Model,
    m: &MessageState,
    opts: &AnalysisOptions,
) -> Result<(StabilityReport, FreeEnergyReport)> {
    let b = fixed_point_beliefs(model, m, opts)?;
    let stability = stability_report(model.graph(), &b, Some(m))?;
    Ok((stability, free_energy_report(model, &b, true)))
}
