//! Exact learning of decision lists through partial weighted MaxSAT.
//!
//! The pipeline is: [`dataset`] turns a CSV table into binary features,
//! [`encoder`] compiles "is there a decision list with at most N nodes"
//! into a WCNF formula, [`maxsat`] solves it exactly, [`model`] decodes the
//! assignment back into a [`model::DecisionList`], and [`metrics`] scores the
//! result (accuracy, literal size, explanation size). [`trainer`] drives the
//! whole loop, including the per-class separated variants, and [`crossval`]
//! wraps it in k-fold cross validation.

pub mod crossval;
pub mod dataset;
pub mod encoder;
pub mod maxsat;
pub mod metrics;
pub mod model;
pub mod trainer;

pub use dataset::{BinDataset, Instance, RawDataset};
pub use encoder::{Encoding, SparseConfig, VariableLayout, WcnfFormula};
pub use maxsat::{BuiltinSolver, ExternalSolver, MaxSatSolver, OptResult, SolveStatus};
pub use model::{DecisionList, DecisionSet, Literal, Rule};
