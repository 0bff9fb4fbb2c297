//! Command-line front end, file formats and the acceptance suite for
//! `polyglue-core`.

pub mod cli;
pub mod grid_csv;
pub mod report;
pub mod surface_json;
pub mod sweep;
pub mod verify;
