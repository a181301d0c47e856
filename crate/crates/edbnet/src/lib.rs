//! File formats, parallel drivers and the `edbnet` command line on top of
//! [`edbnet_core`].

pub mod artifacts;
pub mod cli;
pub mod config;
pub mod io;
pub mod parallel;
pub mod report;
