//! IO, file formats, benchmark cases, and the video background pipeline
//! around the `rmc-core` solvers.

pub mod background;
pub mod cases;
pub mod error;
pub mod formats;

pub use error::{CliError, Result};
