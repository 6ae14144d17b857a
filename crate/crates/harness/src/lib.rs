//! Command-line front end and Monte-Carlo campaign runner for `ddx-core`.

pub mod campaign;
pub mod cli;
