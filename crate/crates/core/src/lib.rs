//! Federated learning laboratory for studying backdoor attacks.
//!
//! The crate trains small image classifiers from scratch ([`nn`]), splits
//! data across simulated clients and poisons some of them ([`data`]), runs
//! FedAvg rounds ([`fl`]) and measures how far each local update moves every
//! weight tensor away from the joint model ([`anomaly`]). The [`cli`] module
//! wraps all of it behind a configuration file ([`config`]).

pub mod anomaly;
pub mod cli;
pub mod config;
pub mod data;
pub mod error;
pub mod fl;
pub mod nn;
pub mod seed;
pub mod tensor;

pub use config::ExperimentConfig;
pub use error::{Error, Result};
pub use tensor::Tensor;
