//! Community service for modcanvas: accounts, restricted chat, likes,
//! favourites and search, plus the HTTP API and the persistent store that
//! bind the engine's modules into a running service.

pub mod accounts;
pub mod api;
pub mod chat;
pub mod cli;
pub mod config;
pub mod error;
pub mod state;
pub mod store;
