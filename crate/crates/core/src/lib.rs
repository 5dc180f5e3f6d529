//! Chemical-graph featurization with two-layered and cycle-configuration
//! descriptors, Lasso property models, and solver-agnostic MILP generation
//! for inverse molecular design.
//!
//! The pipeline has four stages:
//!
//! 1. read a dataset (SDF + property values),
//! 2. build a descriptor dictionary and feature matrix,
//! 3. train a Lasso hyperplane with cross-validated R²,
//! 4. emit a MILP whose feasible solutions are chemical graphs that match a
//!    seed-tree specification and whose predicted property lies in a target
//!    range; decode and verify solver solutions.

pub mod chemgraph;
pub mod cycleconf;
pub mod error;
pub mod features;
pub mod fringetree;
pub mod milp;
pub mod regress;
pub mod twolayer;

pub use error::{Error, Result};
