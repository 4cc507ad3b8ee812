//! File formats and the command-line front end for `tl-core`.

pub mod cli;
pub mod io;
pub mod params;
