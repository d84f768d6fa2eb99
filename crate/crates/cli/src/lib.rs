//! Experiment harness for `wnorm-core`: figure sweeps, property suites and
//! their CSV/SVG output.

pub mod config;
pub mod figures;
pub mod output;
pub mod suites;
