pub mod arch;
pub mod config;
pub mod cost;
pub mod criterion;
pub mod engine;
pub mod expansion;
mod error;

pub use error::{Error, Result};
