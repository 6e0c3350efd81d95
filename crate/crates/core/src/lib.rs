//! Activity recognition for upper-limb strength-training motions.
//!
//! The pipeline runs from labeled multi-sensor frames ([`sensor`]) collected
//! over HTTP ([`ingest`]), through windowing and statistics ([`dataset`]),
//! Pearson-filter channel selection ([`features`]) to a stacked LSTM
//! classifier ([`lstm`]). [`sim`] generates synthetic sessions so every stage
//! can be exercised without recorded data, and [`pipeline`] chains the stages
//! for the `har` command line tool.

pub mod sensor;
pub mod dataset;
pub mod features;
pub mod ingest;
pub mod lstm;
pub mod sim;
pub mod pipeline;
pub mod cli;
