//! Decision-DNNF toolkit.
//!
//! The crate is organised around a small arena representation of
//! ∧-FBDD / decision-DNNF circuits ([`circuit`]), assignment-based
//! semantics and counting ([`semantics`]), vtrees and variable orders
//! ([`structure`]), size-preserving circuit transformations
//! ([`transforms`]), graph-derived CNF instance families with tree
//! decomposition certificates ([`instances`]), an exhaustive trace
//! compiler with a reduced-OBDD oracle ([`compiler`]) and an experiment
//! harness ([`experiments`]). Text formats live in [`io`].

pub mod circuit;
pub mod compiler;
pub mod experiments;
pub mod instances;
pub mod io;
pub mod semantics;
pub mod structure;
pub mod transforms;

pub use circuit::{Circuit, Node, NodeId, Var, VarPool};
pub use semantics::PartialAssignment;
