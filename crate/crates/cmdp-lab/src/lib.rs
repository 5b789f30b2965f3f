//! Experiment harness around the `cmdp` library.
//!
//! [`formats`] loads environments (builtin layouts, grid files, raw model
//! files), [`config`] describes an experiment, [`runner`] executes seeded
//! runs with a fixed act → step → observe order and an independent count
//! cross-check, [`metrics`] turns cost tallies into regret and violation
//! curves, and [`csv_out`] writes traces in a pinned schema.

pub mod config;
pub mod csv_out;
pub mod formats;
pub mod metrics;
pub mod runner;
