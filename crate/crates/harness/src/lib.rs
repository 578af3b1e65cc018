//! Experiment runner and acceptance driver for `singhyp-core`.

pub mod acceptance;
pub mod config;
pub mod experiments;
pub mod manifest;
