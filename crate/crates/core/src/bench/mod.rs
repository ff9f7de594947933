//! Synthetic instance generation and the experiment runner.

pub mod experiment;
pub mod gen;
