//! Belief propagation with interchangeable message normalization, exact
//! enumeration oracle, and linear stability analysis.

pub mod analysis;
pub mod bp;
pub mod cli;
pub mod error;
pub mod factor_graph;
pub mod graph_fields;
pub mod linalg;
pub mod model;
pub mod par;

pub use bp::{Criterion, Init, MessageState, RunOptions, RunReport, Schedule, Strategy};
pub use error::{BpError, Result};
pub use factor_graph::{FactorGraph, GraphSpec};
pub use model::{BeliefSet, Model};
pub use par::Execution;
