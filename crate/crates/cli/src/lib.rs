//! Experiment harness and file formats for the `coinop` platform.
//!
//! The deterministic substance — environments, feature pipelines,
//! agents, planners, and metrics — lives in `coinop-core`. This crate
//! adds everything that touches the outside world:
//!
//! * [`config`] — the key-value experiment config format, validation,
//!   canonical hashing, and the tuned per-pipeline learning settings;
//! * [`harness`] — preprocessing builds, seeded parallel trial
//!   execution, and baseline sweeps;
//! * [`report`] — score tables, the three normalization schemes,
//!   aggregates, score distributions, paired significance matrices,
//!   and plot files;
//! * [`formats`] — delimited score files, JSON records, binary model
//!   files, and standalone SVG charts;
//! * [`oracle`] — independent brute-force reference implementations
//!   (value iteration, exhaustive tree search, quadrature statistics)
//!   used by the acceptance suite to cross-check the fast paths.

pub mod config;
pub mod formats;
pub mod harness;
pub mod oracle;
pub mod report;
