//! Command-line front end for the `masknet` simulator: scenario file
//! parsing, metrics rendering, and a shortest-path referee.

pub mod commands;
pub mod format;
pub mod oracle;
pub mod output;
