//! Command-line runs, baselines and analyses for deep evolutionary
//! learning on the toy fragment domain, plus their file formats.

pub mod commands;
pub mod config;
pub mod format;
pub mod run;
