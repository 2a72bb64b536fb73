//! File formats, validation suites, benchmarks and the command-line front end
//! around [`sigkernel_core`].

pub use sigkernel_core as core;

pub mod bench;
pub mod cli;
pub mod error;
pub mod io;
pub mod validate;

pub use error::{exit, CliError, Result};
