//! Federated learning simulator for binary clinical risk prediction.
//!
//! The crate simulates a consortium of hospitals that jointly train a small
//! MLP without sharing records. Clients run DP-SGD locally (per-sample
//! clipping plus Gaussian noise), the server aggregates their deltas with one
//! of six pluggable strategies, and a Rényi-DP accountant tracks the
//! cumulative (ε, δ) budget. A benchmark harness compares strategies over
//! multiple seeds with Welch t-tests and emits plot-ready CSV reports.
//!
//! Module map:
//!
//! - [`model`]: fixed 6-64-32-1 MLP with exact per-sample gradients.
//! - [`data`]: synthetic cohort generator, risk labelling, IID / specialty
//!   partitioning.
//! - [`privacy`]: clipping, noise injection, RDP accountant.
//! - [`strategies`]: FedAvg, FedProx, FedCluster, FedAdagrad, FedYogi, FedCvr.
//! - [`engine`]: round orchestration and client-local training.
//! - [`metrics`], [`stats`]: evaluation and multi-seed significance tests.
//! - [`cli`]: the `gen-data` / `run` / `bench` / `report` commands.
//!
//! Every stochastic choice is derived from a single run seed through
//! [`seed::hash64`], so a run is bit-reproducible regardless of how many
//! worker threads execute the clients. See the `examples/` directory for
//! runnable entry points covering each capability.

pub mod cli;
pub mod data;
pub mod engine;
pub mod metrics;
pub mod model;
pub mod privacy;
pub mod seed;
pub mod special;
pub mod stats;
pub mod strategies;

pub use model::{ParamVector, Sample};
