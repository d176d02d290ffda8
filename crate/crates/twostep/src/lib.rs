// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright The twostep Authors

//! File formats, index storage, benchmarking, synthetic data and the
//! command-line interface for the two-step sparse retrieval engine in
//! `twostep-core`.

pub mod bench;
pub mod cli;
pub mod config;
pub mod error;
pub mod jsonl;
pub mod store;
pub mod synth;
pub mod trec;

pub use error::{Error, Result};
