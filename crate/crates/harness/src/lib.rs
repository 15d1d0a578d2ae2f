//! Experiment driver for `mssvdd`.
//!
//! A TOML [`config::ExperimentConfig`] names a dataset, the hyperparameter
//! grids and the protocol. [`protocol::run_protocol`] performs model selection
//! by cross-validated Gmean, refits, evaluates on held-out data and returns
//! per-split and averaged [`protocol::ResultRow`]s that [`report`] renders as
//! Markdown or CSV. Trained models are stored with [`persist`].

pub mod config;
pub mod error;
pub mod grid;
pub mod persist;
pub mod protocol;
pub mod report;

pub use config::ExperimentConfig;
pub use error::{HarnessError, Result};
pub use protocol::{run_protocol, ProtocolOutcome, ResultRow};
