//! File formats, run configuration and the experiment workflow around
//! [`gmp_core`].

pub mod checkpoint;
pub mod error;
pub mod jsonl;
pub mod pipeline;
pub mod report;
pub mod runconfig;

pub use error::{CliError, CliResult};
