// SPDX-License-Identifier: Apache-2.0

//! Command-line client for the arbovirus forecast hub: fetch datasets,
//! register models, upload predictions and score them offline.

pub mod client;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod rows;
pub mod score;

pub use client::HubClient;
pub use config::{ClientConfig, ConfigLayer};
pub use error::CliError;
