//! Reference implementations the engine is checked against. Each one works
//! from plain data (text, adjacency matrices, JSON values, maps) rather than
//! the engine's own types, and favours brute force over cleverness.
#![allow(dead_code)]

pub mod archive;
pub mod condition;
pub mod content;
pub mod graph;
pub mod merge;
pub mod rewards;
pub mod sm2;
