// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright The twostep Authors

//! JSON-lines vector files: one `{"id": ..., "vector": {term: weight}}`
//! object per line.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use twostep_core::{Collection, CollectionBuilder, Lexicon};

use crate::error::{Error, Result};

#[derive(Debug, Deserialize, Serialize)]
struct Record<'a> {
    #[serde(borrow)]
    id: std::borrow::Cow<'a, str>,
    vector: BTreeMap<String, f64>,
}

/// Loads a vector file. With `lexicon`, terms are mapped through it and
/// unknown terms are reported by [`Collection::oov_terms`].
pub fn load_vectors(path: &Path, lexicon: Option<&Lexicon>) -> Result<Collection> {
    let file = File::open(path).map_err(Error::io(path))?;
    read_vectors(BufReader::new(file), path, lexicon)
}

pub fn read_vectors(reader: impl BufRead, path: &Path, lexicon: Option<&Lexicon>) -> Result<Collection> {
    let mut builder = match lexicon {
        Some(l) => CollectionBuilder::with_lexicon(l.clone()),
        None => CollectionBuilder::new(),
    };
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(Error::io(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let record: Record<'_> = serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        builder
            .push(&record.id, record.vector.iter().map(|(t, w)| (t.as_str(), *w)))
            .map_err(|e| parse_err(e.to_string()))?;
    }
    Ok(builder.finish())
}

/// Writes a collection in the same format, terms spelled through its
/// lexicon.
pub fn write_vectors(path: &Path, c: &Collection) -> Result<()> {
    let file = File::create(path).map_err(Error::io(path))?;
    let mut out = BufWriter::new(file);
    for (id, v) in c.iter() {
        let vector = v
            .iter()
            .map(|(t, w)| {
                let term = c
                    .lexicon()
                    .term(t)
                    .ok_or_else(|| Error::Invalid(format!("term id {t} missing from lexicon")))?;
                Ok((term.to_string(), w))
            })
            .collect::<Result<BTreeMap<_, _>>>()?;
        let record = Record {
            id: id.into(),
            vector,
        };
        serde_json::to_writer(&mut out, &record).map_err(|e| Error::Invalid(e.to_string()))?;
        out.write_all(b"\n").map_err(Error::io(path))?;
    }
    out.flush().map_err(Error::io(path))
}
