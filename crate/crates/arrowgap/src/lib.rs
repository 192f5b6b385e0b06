//! Command-line front end, file formats and plotting for `arrowgap-core`.

pub mod cli;
pub mod commands;
pub mod config;
pub mod output;
pub mod svg;
pub mod sweep;
