//! Linear stability verdicts at a belief fixed point.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::bp::MessageState;
use crate::error::Result;
use crate::factor_graph::FactorGraph;
use crate::linalg;
use crate::model::BeliefSet;

use super::jacobian::{jacobian_from_kernels, normalized_from_plain, quotient_from_plain};
use super::kernels::{conditional_kernels, ConditionalKernels};

/// Half-width of the band around 1 reported as marginal.
pub const MARGINAL_BAND: f64 = 1e-9;
/// Entrywise tolerance for declaring all `B` kernels identical.
pub const HOMOGENEOUS_TOL: f64 = 1e-12;
/// Tolerance of the homogeneous identity `ρ(J~) = λ1 |μ2(B)|`.
pub const HOMOGENEOUS_EXACT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Stable,
    Marginal,
    Unstable,
    Inconclusive,
    NotApplicable,
}

impl Verdict {
    pub fn from_radius(rho: f64) -> Self {
        if !rho.is_finite() {
            Verdict::Inconclusive
        } else if rho < 1.0 - MARGINAL_BAND {
            Verdict::Stable
        } else if rho > 1.0 + MARGINAL_BAND {
            Verdict::Unstable
        } else {
            Verdict::Marginal
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdicts {
    /// From the spectral radius of `J`.
    pub plain: Verdict,
    /// Structural verdict: unstable whenever `C > 1` and `J` is irreducible;
    /// inconclusive when `C > 1` but irreducibility fails; not applicable
    /// for `C <= 1`.
    pub plain_structural: Verdict,
    /// `λ1 μ2 < 1`.
    pub sufficient_stable: bool,
    /// From the spectral radius of `J~`.
    pub normalized: Verdict,
    /// For identical kernels: whether `ρ(J~) = λ1 |μ2(B)|` held.
    pub homogeneous_exact: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub lambda1: f64,
    pub mu2: f64,
    #[serde(rename = "mu2_B")]
    pub mu2_b: f64,
    #[serde(rename = "rho_J")]
    pub rho_j: f64,
    #[serde(rename = "rho_Jtilde")]
    pub rho_jtilde: f64,
    pub rho_quotient: f64,
    #[serde(rename = "C")]
    pub cycle_count: usize,
    pub j_irreducible: bool,
    pub homogeneous: bool,
    pub verdicts: Verdicts,
}

/// The three Jacobians at one fixed point.
#[derive(Debug, Clone)]
pub struct Jacobians {
    pub plain: DMatrix<f64>,
    pub normalized: DMatrix<f64>,
    pub quotient: DMatrix<f64>,
}

impl Jacobians {
    /// `messages` selects the normalization projector; `None` uses uniform
    /// messages, the prescribed-belief reduction where all three projectors
    /// coincide.
    pub fn build(g: &FactorGraph, kernels: &ConditionalKernels, messages: Option<&MessageState>) -> Self {
        let plain = jacobian_from_kernels(g, kernels);
        let quotient = quotient_from_plain(&plain, g.q());
        let normalized = match messages {
            Some(m) => normalized_from_plain(&plain, m),
            None => quotient.clone(),
        };
        Jacobians {
            plain,
            normalized,
            quotient,
        }
    }
}

/// Stability report for fixed-point beliefs `b`.
pub fn stability_report(g: &FactorGraph, b: &BeliefSet, messages: Option<&MessageState>) -> Result<StabilityReport> {
    let kernels = conditional_kernels(g, b)?;
    let jac = Jacobians::build(g, &kernels, messages);
    Ok(report_from_parts(g, &kernels, &jac))
}

pub fn report_from_parts(g: &FactorGraph, kernels: &ConditionalKernels, jac: &Jacobians) -> StabilityReport {
    let lambda1 = linalg::perron(&g.line_graph_adjacency()).value;
    let mu2 = kernels.mu2();
    let mu2_b = kernels.mu2_b();
    // J is non-negative: its spectral radius is its Perron root
    let rho_j = linalg::perron(&jac.plain).value;
    let rho_jtilde = linalg::spectral_radius(&jac.normalized);
    let rho_quotient = linalg::spectral_radius(&jac.quotient);
    let cycle_count = g.cycle_count();
    let j_irreducible = linalg::pattern_irreducible(&jac.plain);
    let homogeneous = kernels.is_homogeneous(HOMOGENEOUS_TOL);
    let plain_structural = match (cycle_count > 1, j_irreducible) {
        (true, true) => Verdict::Unstable,
        (true, false) => Verdict::Inconclusive,
        (false, _) => Verdict::NotApplicable,
    };
    let verdicts = Verdicts {
        plain: Verdict::from_radius(rho_j),
        plain_structural,
        sufficient_stable: lambda1 * mu2 < 1.0,
        normalized: Verdict::from_radius(rho_jtilde),
        homogeneous_exact: homogeneous.then(|| (rho_jtilde - lambda1 * mu2_b).abs() <= HOMOGENEOUS_EXACT_TOL),
    };
    StabilityReport {
        lambda1,
        mu2,
        mu2_b,
        rho_j,
        rho_jtilde,
        rho_quotient,
        cycle_count,
        j_irreducible,
        homogeneous,
        verdicts,
    }
}
