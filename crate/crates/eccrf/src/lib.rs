//! File formats, audio front-end and cross-validation harness around
//! [`eccrf_core`].

pub mod artifacts;
pub mod audio;
pub mod config;
mod error;
pub mod harness;
pub mod io;

pub use error::{Error, Result};
