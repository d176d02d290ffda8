// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright The twostep Authors

use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A weight was negative, NaN or infinite.
    InvalidWeight {
        term: u32,
        weight: f64,
    },
    DuplicateTerm(u32),
    DuplicateDocId(String),
    EmptyCollection,
    /// Every vector in the collection is empty, so there is nothing to index.
    NothingToIndex,
    InvalidConfig(&'static str),
    DocOutOfRange {
        doc: u32,
        num_docs: u32,
    },
    Parse {
        line: usize,
        message: String,
    },
    MissingQueries(alloc::vec::Vec<String>),
    LengthMismatch {
        left: usize,
        right: usize,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidWeight { term, weight } => {
                write!(f, "invalid weight {weight} for term {term}")
            }
            Error::DuplicateTerm(t) => write!(f, "duplicate term id {t}"),
            Error::DuplicateDocId(id) => write!(f, "duplicate document id {id:?}"),
            Error::EmptyCollection => f.write_str("collection is empty"),
            Error::NothingToIndex => f.write_str("every vector in the collection is empty"),
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            Error::DocOutOfRange { doc, num_docs } => {
                write!(f, "docid {doc} out of range (num_docs = {num_docs})")
            }
            Error::Parse { line, message } => write!(f, "line {line}: {message}"),
            Error::MissingQueries(qids) => {
                write!(f, "queries missing from one side: {}", qids.join(", "))
            }
            Error::LengthMismatch { left, right } => {
                write!(f, "paired samples differ in length ({left} vs {right})")
            }
        }
    }
}

impl core::error::Error for Error {}
