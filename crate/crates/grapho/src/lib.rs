//! Corpus IO, artifact formats and the `grapho` command line built on
//! [`grapho_core`].

pub mod cli;
pub mod formats;
pub mod io;

pub use io::{FormatError, TuOptions};
