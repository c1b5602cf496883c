//! Command-line front end for the `qbridge` solver: JSON experiment configs in,
//! JSON result documents and CSV tables out.

pub mod commands;
pub mod config;
pub mod result;
