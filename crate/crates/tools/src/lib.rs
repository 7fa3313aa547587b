//! File formats, parallel simulation drivers, figure data and the validation
//! harness behind the `bs5` command-line tool.

pub mod cli;
pub mod error;
pub mod figures;
pub mod fixtures;
pub mod manifest;
pub mod replicas;
pub mod table_io;
pub mod validate;

pub use error::{Result, ToolError};
