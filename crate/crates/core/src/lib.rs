//! Core library for the `coinop` agent-evaluation platform.
//!
//! Everything in this crate is deterministic and `no_std`-compatible
//! (allocation is required): toy arcade environments with exact
//! save/restore, sparse feature pipelines over screens and RAM, linear
//! reinforcement-learning agents, search-based planners, and the score
//! normalization / significance-testing toolkit used to compare them.
//!
//! File formats, parallel experiment drivers, and the command-line
//! interface live in the companion `coinop` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod agents;
pub mod codec;
pub mod env;
pub mod features;
pub mod metrics;
pub mod planners;
pub mod rng;
