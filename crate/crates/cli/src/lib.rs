//! Configuration-driven experiments on top of the `hseom` library.

pub mod config;
pub mod error;
pub mod output;
pub mod run;
pub mod validate;
