//! Engine for composing e-learning modules on a canvas: modules are nodes,
//! conditional flows are edges.
//!
//! Graphs are built with [`model::CompositionGraph`], checked with
//! [`analysis::validate`], run with [`session`] and packaged with [`h5p`].

pub mod analysis;
pub mod condition;
pub mod h5p;
pub mod model;
pub mod registry;
pub mod remix;
pub mod scheduler;
pub mod session;
