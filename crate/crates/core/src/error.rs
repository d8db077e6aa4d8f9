use thiserror::Error;

use crate::bp::RunReport;

/// Errors raised across the toolkit.
///
/// Variants carry enough context to produce the CLI's JSON error objects; the
/// stable machine-readable tag is available through [`BpError::code`].
#[derive(Debug, Error)]
pub enum BpError {
    #[error("state count q = {0} is invalid, every variable needs at least 2 states")]
    BadCardinality(usize),
    #[error("factor graph is not connected ({components} components)")]
    DisconnectedGraph { components: usize },
    #[error("duplicate membership: {0}")]
    DuplicateMembership(String),
    #[error("factor `{0}` has no member variables")]
    EmptyFactor(String),
    #[error("duplicate identifier `{0}`")]
    DuplicateId(String),
    #[error("factor `{factor}` references unknown variable `{variable}`")]
    UnknownVariable { factor: String, variable: String },
    #[error("table for `{owner}` has {found} entries, expected {expected}")]
    TableSize {
        owner: String,
        expected: usize,
        found: usize,
    },
    #[error("potential for `{owner}` has a non-positive or non-finite entry {value}")]
    NonPositivePotential { owner: String, value: f64 },
    #[error("size mismatch: expected {expected}, found {found}")]
    SizeMismatch { expected: usize, found: usize },
    #[error("joint state space of {states} states exceeds the cap of {cap}")]
    StateSpaceTooLarge { states: f64, cap: u64 },
    #[error("beliefs are incompatible: {0}")]
    IncompatibleBeliefs(String),
    #[error("beliefs must be strictly positive and finite: {0}")]
    NonPositiveBeliefs(String),
    #[error("message on edge {edge} has a non-positive or non-finite entry")]
    NonPositiveMessage { edge: usize },
    #[error("message left the representable range at iteration {iteration} (edge {edge}, value {value:e})")]
    NumericalOverflow {
        iteration: usize,
        edge: usize,
        value: f64,
        /// Run state up to the last finite iteration, when the overflow happened inside `run`.
        partial: Option<Box<RunReport>>,
    },
    #[error("message states are not equivalent: ratio varies on edge {edge}")]
    NotEquivalent { edge: usize },
    #[error("not a fixed point: residual {residual:e} exceeds tolerance {tol:e}")]
    NotAFixedPoint { residual: f64, tol: f64 },
    #[error("no plain fixed point: single-cycle condition violated, log prod Z = {log_prod_z}")]
    NoPlainFixedPoint { log_prod_z: f64 },
    #[error("right-hand side is not a gradient field (divergenceless residual {residual:e})")]
    NotGradientInput { residual: f64 },
    #[error("single-cycle compatibility violated: sum = {defect:e}")]
    IncompatibleC1 { defect: f64 },
    #[error("linear solve residual {residual:e} exceeds {tol:e}")]
    SolveFailed { residual: f64, tol: f64 },
    #[error("optimal scale is undefined on a graph with exactly one cycle")]
    SingleCycleUndefined,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl BpError {
    /// Stable error tag used in JSON error objects.
    pub fn code(&self) -> &'static str {
        match self {
            BpError::BadCardinality(_) => "BadCardinality",
            BpError::DisconnectedGraph { .. } => "DisconnectedGraph",
            BpError::DuplicateMembership(_) => "DuplicateMembership",
            BpError::EmptyFactor(_) => "EmptyFactor",
            BpError::DuplicateId(_) => "DuplicateId",
            BpError::UnknownVariable { .. } => "UnknownVariable",
            BpError::TableSize { .. } => "TableSize",
            BpError::NonPositivePotential { .. } => "NonPositivePotential",
            BpError::SizeMismatch { .. } => "SizeMismatch",
            BpError::StateSpaceTooLarge { .. } => "StateSpaceTooLarge",
            BpError::IncompatibleBeliefs(_) => "IncompatibleBeliefs",
            BpError::NonPositiveBeliefs(_) => "NonPositiveBeliefs",
            BpError::NonPositiveMessage { .. } => "NonPositiveMessage",
            BpError::NumericalOverflow { .. } => "NumericalOverflow",
            BpError::NotEquivalent { .. } => "NotEquivalent",
            BpError::NotAFixedPoint { .. } => "NotAFixedPoint",
            BpError::NoPlainFixedPoint { .. } => "NoPlainFixedPoint",
            BpError::NotGradientInput { .. } => "NotGradientInput",
            BpError::IncompatibleC1 { .. } => "IncompatibleC1",
            BpError::SolveFailed { .. } => "SolveFailed",
            BpError::SingleCycleUndefined => "SingleCycleUndefined",
            BpError::InvalidParameter(_) => "InvalidParameter",
        }
    }
}

pub type Result<T, E = BpError> = std::result::Result<T, E>;
