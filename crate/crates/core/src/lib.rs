//! Composable coresets for determinant maximisation under matroid
//! constraints.

pub mod coreset;
pub mod document;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod instances;
pub mod localsearch;
pub mod matroid;
pub mod objective;
pub mod solver;

pub use error::{Error, Result};
pub use geometry::{PointId, PointSet};
pub use matroid::{Constraint, LaminarConstraint, PartitionConstraint};
pub use objective::{Regime, WeightProfile};
