//! Bethe free energy and its behaviour under global rescaling of beliefs.

use serde::{Deserialize, Serialize};

use crate::error::{BpError, Result};
use crate::model::{BeliefSet, Model};

/// Relative agreement required between the closed-form and searched scale.
pub const OPTIMAL_SCALE_TOL: f64 = 1e-6;

/// `Σ_a Σ β_a log(β_a/ψ_a) + Σ_i Σ β_i log(β_i^{1-d_i}/φ_i)`, evaluated
/// literally, so unnormalized tables are accepted.
pub fn bethe_free_energy_tables(model: &Model, variables: &[Vec<f64>], factors: &[Vec<f64>]) -> f64 {
    let g = model.graph();
    let f: f64 = factors
        .iter()
        .enumerate()
        .map(|(a, t)| {
            t.iter()
                .zip(model.psi(a))
                .map(|(b, psi)| b * (b.ln() - psi.ln()))
                .sum::<f64>()
        })
        .sum();
    let v: f64 = variables
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let e = 1.0 - g.variable_degree(i) as f64;
            t.iter()
                .zip(model.phi(i))
                .map(|(b, phi)| b * (e * b.ln() - phi.ln()))
                .sum::<f64>()
        })
        .sum();
    f + v
}

pub fn bethe_free_energy(model: &Model, b: &BeliefSet) -> f64 {
    bethe_free_energy_tables(model, &b.variables, &b.factors)
}

/// `F(Z b)` with every table multiplied by `z`.
pub fn scaled_free_energy(model: &Model, b: &BeliefSet, z: f64) -> f64 {
    let scale = |t: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
        t.iter().map(|r| r.iter().map(|v| v * z).collect()).collect()
    };
    bethe_free_energy_tables(model, &scale(&b.variables), &scale(&b.factors))
}

/// `|F(Zb) - Z (F(b) + (1 - C) log Z)|`.
pub fn free_energy_scaling_check(model: &Model, b: &BeliefSet, z: f64) -> f64 {
    let c = model.graph().cycle_count() as f64;
    let f = bethe_free_energy(model, b);
    (scaled_free_energy(model, b, z) - z * (f + (1.0 - c) * z.ln())).abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalScale {
    /// `exp(F(b)/(C-1) - 1)`.
    pub z_hat: f64,
    /// `(C - 1) Z_hat`.
    pub f_beta_hat: f64,
    /// Stationary point located by golden-section search over `log Z`.
    pub z_numeric: f64,
    pub relative_error: f64,
}

/// Stationary scale of `Z -> F(Zb)` (a minimum when `C = 0`, a maximum when
/// `C > 1`), in closed form and by direct search.
pub fn optimal_scale(model: &Model, b: &BeliefSet) -> Result<OptimalScale> {
    let c = model.graph().cycle_count() as f64;
    if c == 1.0 {
        return Err(BpError::SingleCycleUndefined);
    }
    let f = bethe_free_energy(model, b);
    let log_z_hat = f / (c - 1.0) - 1.0;
    let z_hat = log_z_hat.exp();
    let sign = if c > 1.0 { -1.0 } else { 1.0 };
    // stay clear of overflow in the literal evaluation
    let half_width = (f.abs() + 10.0).min(700.0);
    let t = golden_section(
        |t| sign * scaled_free_energy(model, b, t.exp()),
        -half_width,
        half_width,
        1e-12,
    );
    let z_numeric = t.exp();
    Ok(OptimalScale {
        z_hat,
        f_beta_hat: (c - 1.0) * z_hat,
        z_numeric,
        relative_error: (z_numeric / z_hat - 1.0).abs(),
    })
}

/// Minimizer of a unimodal function on `[lo, hi]`.
pub fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol * (1.0 + lo.abs().max(hi.abs())) {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingCheck {
    #[serde(rename = "Z")]
    pub z: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreeEnergyReport {
    #[serde(rename = "F_bethe")]
    pub f_bethe: f64,
    #[serde(rename = "C")]
    pub cycle_count: usize,
    /// `None` on single-cycle graphs.
    #[serde(rename = "Z_hat")]
    pub z_hat: Option<f64>,
    #[serde(rename = "F_beta_hat")]
    pub f_beta_hat: Option<f64>,
    #[serde(rename = "Z_hat_numeric")]
    pub z_hat_numeric: Option<f64>,
    pub scaling: Vec<ScalingCheck>,
    /// `-Σ_a log Z_a - Σ_i (1 - d_i) log Z_i` from the belief constants,
    /// equal to `F(b)` at any fixed point.
    #[serde(rename = "F_from_constants")]
    pub f_from_constants: Option<f64>,
}

/// Scales probed by [`free_energy_report`].
pub const REPORT_SCALES: [f64; 4] = [0.1, 0.5, 2.0, 10.0];

/// `with_constants` adds the constant-based value, meaningful only when the
/// belief constants come from messages.
pub fn free_energy_report(model: &Model, b: &BeliefSet, with_constants: bool) -> FreeEnergyReport {
    let g = model.graph();
    let scale = optimal_scale(model, b).ok();
    FreeEnergyReport {
        f_bethe: bethe_free_energy(model, b),
        cycle_count: g.cycle_count(),
        z_hat: scale.map(|s| s.z_hat),
        f_beta_hat: scale.map(|s| s.f_beta_hat),
        z_hat_numeric: scale.map(|s| s.z_numeric),
        scaling: REPORT_SCALES
            .iter()
            .map(|&z| ScalingCheck {
                z,
                residual: free_energy_scaling_check(model, b, z),
            })
            .collect(),
        f_from_constants: with_constants.then(|| -crate::bp::log_prod_z(g, b)),
    }
}
