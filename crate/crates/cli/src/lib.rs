//! Command-line front end for the `mcrisk-core` engine: project files, CSV
//! export, SVG charts and the subcommand driver.

pub mod cli;
pub mod export;
pub mod plot;
pub mod project_file;
