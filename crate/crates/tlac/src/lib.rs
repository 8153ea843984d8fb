//! File formats, the grid road-network environment and the end-to-end
//! pipeline behind the `tlac` binary.

pub mod config;
pub mod format;
pub mod grid;
pub mod pipeline;
