//! Std companion to `cnm-core`: dataset files, embeddings, checkpoints,
//! reports and the `cnm` command-line tool.

pub mod checkpoint;
pub mod commands;
pub mod dataset;
pub mod error;
pub mod config;
pub mod glove;
pub mod inspect;
pub mod reports;
pub mod synthetic;
