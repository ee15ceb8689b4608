//! Command-line and HTTP front ends for `wand-core`.

pub mod api;
pub mod cli;
pub mod pipeline;
