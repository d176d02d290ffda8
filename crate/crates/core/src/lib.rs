// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright The twostep Authors

//! Two-step learned sparse retrieval.
//!
//! An approximate first step searches a statically pruned, impact-quantized
//! inverted index with a pruned query and saturated term weights; a second
//! step rescores the resulting candidates exactly with the full query and
//! full document vectors. The crate also carries the evaluation machinery
//! used to validate the approximation: effectiveness metrics, the top-k
//! intersection metric and paired significance tests.
//!
//! The crate is `no_std` and only needs `alloc`.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod corpus;
pub mod error;
pub mod eval;
pub mod index;
pub mod pipeline;
pub mod pruning;
pub mod retrieval;
pub mod scoring;
pub mod vector;

pub use corpus::{Collection, CollectionBuilder, CollectionStats, Lexicon, Qrels};
pub use error::{Error, Result};
pub use eval::RunFile;
pub use index::{DocId, ForwardIndex, InvertedIndex, PostingList};
pub use pipeline::{gt_search, two_step_search, RescoreSource, TwoStepConfig, TwoStepResult};
pub use retrieval::{Algorithm, Hit, ScoredList, SearchParams, SearchStats};
pub use scoring::{Bm25Params, Scorer, K1};
pub use vector::{SparseVector, TermId};
