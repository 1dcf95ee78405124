//! File formats, SVG plots, the benchmark runner and the `fad` command line
//! built on `fad-core`.

pub mod bench;
pub mod cli;
pub mod error;
pub mod io;
pub mod svg;

pub use error::{FadError, Result};
