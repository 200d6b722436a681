//! File formats, dataset loaders, reports and the `boolnet` command line
//! on top of `boolnet-core`.

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod datasets;
pub mod error;
pub mod manifest;
pub mod netlist;
pub mod pipeline;
pub mod report;

pub use boolnet_core as core;
pub use error::{BoolnetError, Result};
