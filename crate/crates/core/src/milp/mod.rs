//! MILP generation for inverse design: build the model for a seed-tree
//! specification plus a trained hyperplane, write it as an LP file with a
//! variable map, decode solver solutions into chemical graphs, and verify
//! them independently.

mod build;
mod decode;
mod model;
mod spec;
mod verify;

pub use build::{build_milp, xi_hat, Direction, ObjectiveSense};
pub use decode::{
    decode_solution, encode_trace, extract_trace, AssignmentTrace, DecodedGraph, RingChoice,
};
pub use model::{
    format_solution, read_solution, write_lp, write_varmap, Cmp, Constraint, MilpModel, Objective,
    VarKind, Variable,
};
pub use spec::{
    read_seed_tree_json, read_spec_json, SeedEdge, SeedNode, SeedTree, SpecBounds, Specification,
};
pub use verify::{compare_descriptor_variables, verify_solution, Check, VerificationReport};
