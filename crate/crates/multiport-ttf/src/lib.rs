//! Parallel drivers, result tables and the command-line front end for
//! [`multiport_ttf_core`].

pub mod cli;
pub mod config;
pub mod parallel;
pub mod range;
pub mod table;

pub use table::{Cell, Table};
