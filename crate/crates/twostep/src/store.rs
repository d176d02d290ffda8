// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright The twostep Authors

//! On-disk index directories.
//!
//! ```text
//! meta.json      format, version, num_docs, vocab_size, quant_scale, block_size, label
//! lexicon.bin    term strings in id order
//! postings.bin   per term: varint length, delta-varint docids, raw impact bytes
//! blockmax.bin   per term: varint block count, (delta-varint last docid, max impact) pairs
//! forward.bin    per doc: varint nnz, delta-varint term ids, f64 LE weights
//! docids.txt     external document ids, one per line
//! ```
//!
//! Every binary file is framed as `magic[4] | version u32 | payload length
//! u64 | payload | FNV-1a-64 checksum u64`, all little endian. The checksum
//! covers everything before it.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use twostep_core::index::PostingList;
use twostep_core::{ForwardIndex, InvertedIndex, Lexicon, SparseVector};

use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;
const FORMAT_NAME: &str = "twostep-index";
const HEADER_LEN: usize = 16;
const CHECKSUM_LEN: usize = 8;

pub const META_FILE: &str = "meta.json";
pub const LEXICON_FILE: &str = "lexicon.bin";
pub const POSTINGS_FILE: &str = "postings.bin";
pub const BLOCKMAX_FILE: &str = "blockmax.bin";
pub const FORWARD_FILE: &str = "forward.bin";
pub const DOCIDS_FILE: &str = "docids.txt";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexMeta {
    pub format: String,
    pub version: u32,
    pub num_docs: u32,
    pub vocab_size: usize,
    pub quant_scale: f64,
    pub block_size: usize,
    /// Free-form description of the static pruning applied, e.g. `top50`.
    #[serde(default)]
    pub label: Option<String>,
}

/// A loaded index directory.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredIndex {
    pub meta: IndexMeta,
    pub inverted: InvertedIndex,
    pub forward: ForwardIndex,
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

pub fn put_varint(out: &mut Vec<u8>, mut v: u64) {
    while v >= 0x80 {
        out.push((v as u8) | 0x80);
        v >>= 7;
    }
    out.push(v as u8);
}

/// Cursor over a payload; any overrun is reported as corruption.
struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn corrupt(&self, message: &str) -> Error {
        Error::Corrupt {
            path: self.path.to_path_buf(),
            message: format!("{message} at payload offset {}", self.pos),
        }
    }

    fn varint(&mut self) -> Result<u64> {
        let mut v: u64 = 0;
        for shift in (0..64).step_by(7) {
            let b = *self
                .bytes
                .get(self.pos)
                .ok_or_else(|| self.corrupt("unexpected end"))?;
            self.pos += 1;
            v |= ((b & 0x7f) as u64) << shift;
            if b & 0x80 == 0 {
                return Ok(v);
            }
        }
        Err(self.corrupt("varint too long"))
    }

    fn len(&mut self) -> Result<usize> {
        let v = self.varint()?;
        // a length can never exceed the remaining payload bytes
        if v > (self.bytes.len() - self.pos) as u64 {
            return Err(self.corrupt("length exceeds payload"));
        }
        Ok(v as usize)
    }

    fn u32(&mut self) -> Result<u32> {
        u32::try_from(self.varint()?).map_err(|_| self.corrupt("value exceeds u32"))
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(self.corrupt("unexpected end"));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(self.corrupt("trailing bytes"));
        }
        Ok(())
    }
}

fn frame(magic: &[u8; 4], payload: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len() + CHECKSUM_LEN);
    out.extend_from_slice(magic);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    out.extend_from_slice(payload);
    let sum = fnv1a64(&out);
    out.extend_from_slice(&sum.to_le_bytes());
    out
}

fn unframe<'a>(magic: &[u8; 4], bytes: &'a [u8], path: &Path) -> Result<&'a [u8]> {
    let path_buf = || path.to_path_buf();
    if bytes.len() < HEADER_LEN + CHECKSUM_LEN {
        return Err(Error::Truncated { path: path_buf() });
    }
    if &bytes[..4] != magic {
        return Err(Error::Corrupt {
            path: path_buf(),
            message: "bad magic".into(),
        });
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(Error::Version {
            path: path_buf(),
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let payload_len = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let expected = (HEADER_LEN + CHECKSUM_LEN) as u64 + payload_len;
    if (bytes.len() as u64) < expected {
        return Err(Error::Truncated { path: path_buf() });
    }
    if bytes.len() as u64 > expected {
        return Err(Error::Corrupt {
            path: path_buf(),
            message: "trailing bytes after checksum".into(),
        });
    }
    let body = bytes.len() - CHECKSUM_LEN;
    let stored = u64::from_le_bytes(bytes[body..].try_into().unwrap());
    if fnv1a64(&bytes[..body]) != stored {
        return Err(Error::Checksum { path: path_buf() });
    }
    Ok(&bytes[HEADER_LEN..body])
}

fn encode_lexicon(lex: &Lexicon) -> Vec<u8> {
    let mut p = Vec::new();
    put_varint(&mut p, lex.len() as u64);
    for t in lex.terms() {
        put_varint(&mut p, t.len() as u64);
        p.extend_from_slice(t.as_bytes());
    }
    p
}

fn encode_postings(idx: &InvertedIndex) -> Vec<u8> {
    let mut p = Vec::new();
    put_varint(&mut p, idx.vocab_size() as u64);
    for list in idx.postings() {
        put_varint(&mut p, list.len() as u64);
        let mut prev = 0;
        for &d in list.doc_ids() {
            put_varint(&mut p, (d - prev) as u64);
            prev = d;
        }
        p.extend_from_slice(list.impacts());
    }
    p
}

fn encode_blockmax(idx: &InvertedIndex) -> Vec<u8> {
    let mut p = Vec::new();
    put_varint(&mut p, idx.vocab_size() as u64);
    for list in idx.postings() {
        put_varint(&mut p, list.blocks().len() as u64);
        let mut prev = 0;
        for b in list.blocks() {
            put_varint(&mut p, (b.last_doc - prev) as u64);
            p.push(b.max_impact);
            prev = b.last_doc;
        }
    }
    p
}

fn encode_forward(fwd: &ForwardIndex) -> Vec<u8> {
    let mut p = Vec::new();
    put_varint(&mut p, fwd.num_docs() as u64);
    for v in fwd.vectors() {
        put_varint(&mut p, v.nnz() as u64);
        let mut prev = 0;
        for &t in v.terms() {
            put_varint(&mut p, (t - prev) as u64);
            prev = t;
        }
        for w in v.weights() {
            p.extend_from_slice(&w.to_le_bytes());
        }
    }
    p
}

fn write(path: PathBuf, bytes: &[u8]) -> Result<()> {
    fs::write(&path, bytes).map_err(Error::io(path))
}

/// Writes an index directory, creating it if needed. Output bytes depend
/// only on the index contents.
pub fn save_index(
    dir: &Path,
    inverted: &InvertedIndex,
    forward: &ForwardIndex,
    label: Option<&str>,
) -> Result<()> {
    if forward.num_docs() != inverted.num_docs() {
        return Err(Error::Invalid(
            "forward and inverted indexes have different document counts".into(),
        ));
    }
    if let Some(bad) = inverted.doc_names().iter().find(|n| n.contains(['\n', '\r'])) {
        return Err(Error::Invalid(format!(
            "document id {bad:?} contains a line break"
        )));
    }
    fs::create_dir_all(dir).map_err(Error::io(dir))?;
    let meta = IndexMeta {
        format: FORMAT_NAME.into(),
        version: FORMAT_VERSION,
        num_docs: inverted.num_docs(),
        vocab_size: inverted.vocab_size(),
        quant_scale: inverted.quant_scale(),
        block_size: inverted.block_size(),
        label: label.map(str::to_string),
    };
    let mut json = serde_json::to_vec_pretty(&meta).map_err(|e| Error::Invalid(e.to_string()))?;
    json.push(b'\n');
    write(dir.join(META_FILE), &json)?;
    write(
        dir.join(LEXICON_FILE),
        &frame(b"TSLX", &encode_lexicon(inverted.lexicon())),
    )?;
    write(
        dir.join(POSTINGS_FILE),
        &frame(b"TSPO", &encode_postings(inverted)),
    )?;
    write(
        dir.join(BLOCKMAX_FILE),
        &frame(b"TSBM", &encode_blockmax(inverted)),
    )?;
    write(dir.join(FORWARD_FILE), &frame(b"TSFW", &encode_forward(forward)))?;
    let mut names = inverted.doc_names().join("\n");
    names.push('\n');
    write(dir.join(DOCIDS_FILE), names.as_bytes())
}

fn read(path: PathBuf) -> Result<Vec<u8>> {
    fs::read(&path).map_err(Error::io(path))
}

pub fn load_meta(dir: &Path) -> Result<IndexMeta> {
    let path = dir.join(META_FILE);
    let bytes = read(path.clone())?;
    let meta: IndexMeta = serde_json::from_slice(&bytes).map_err(|e| Error::Parse {
        path: path.clone(),
        line: e.line(),
        message: e.to_string(),
    })?;
    if meta.format != FORMAT_NAME {
        return Err(Error::Corrupt {
            path,
            message: format!("unknown format {:?}", meta.format),
        });
    }
    if meta.version != FORMAT_VERSION {
        return Err(Error::Version {
            path,
            found: meta.version,
            expected: FORMAT_VERSION,
        });
    }
    Ok(meta)
}

pub fn load_index(dir: &Path) -> Result<StoredIndex> {
    let meta = load_meta(dir)?;

    let path = dir.join(LEXICON_FILE);
    let bytes = read(path.clone())?;
    let mut r = Reader {
        bytes: unframe(b"TSLX", &bytes, &path)?,
        pos: 0,
        path: &path,
    };
    let n = r.len()?;
    let mut terms = Vec::with_capacity(n);
    for _ in 0..n {
        let len = r.len()?;
        let s = std::str::from_utf8(r.take(len)?).map_err(|_| r.corrupt("term is not UTF-8"))?;
        terms.push(s.to_string());
    }
    r.finish()?;
    let lexicon = Lexicon::from_terms(terms).map_err(|e| Error::Corrupt {
        path: path.clone(),
        message: e.to_string(),
    })?;

    let path = dir.join(POSTINGS_FILE);
    let bytes = read(path.clone())?;
    let mut r = Reader {
        bytes: unframe(b"TSPO", &bytes, &path)?,
        pos: 0,
        path: &path,
    };
    let vocab = r.len()?;
    if vocab != meta.vocab_size || vocab != lexicon.len() {
        return Err(r.corrupt("vocabulary size disagrees with meta.json or lexicon"));
    }
    let mut postings = Vec::with_capacity(vocab);
    for _ in 0..vocab {
        let len = r.len()?;
        let mut docs = Vec::with_capacity(len);
        let mut prev: u32 = 0;
        for i in 0..len {
            let gap = r.u32()?;
            if i > 0 && gap == 0 {
                return Err(r.corrupt("docids not strictly increasing"));
            }
            prev = prev.checked_add(gap).ok_or_else(|| r.corrupt("docid overflow"))?;
            docs.push(prev);
        }
        let impacts = r.take(len)?.to_vec();
        postings.push(PostingList::new(docs, impacts, meta.block_size.max(1)));
    }
    r.finish()?;

    let path = dir.join(BLOCKMAX_FILE);
    let bytes = read(path.clone())?;
    let mut r = Reader {
        bytes: unframe(b"TSBM", &bytes, &path)?,
        pos: 0,
        path: &path,
    };
    if r.len()? != vocab {
        return Err(r.corrupt("block metadata count disagrees with postings"));
    }
    for list in &postings {
        let n = r.len()?;
        if n != list.blocks().len() {
            return Err(r.corrupt("block count disagrees with postings"));
        }
        let mut prev: u32 = 0;
        for expected in list.blocks() {
            prev = prev
                .checked_add(r.u32()?)
                .ok_or_else(|| r.corrupt("docid overflow"))?;
            let max = r.take(1)?[0];
            if prev != expected.last_doc || max != expected.max_impact {
                return Err(r.corrupt("block metadata disagrees with postings"));
            }
        }
    }
    r.finish()?;

    let path = dir.join(DOCIDS_FILE);
    let bytes = read(path.clone())?;
    let text = String::from_utf8(bytes).map_err(|_| Error::Corrupt {
        path: path.clone(),
        message: "not UTF-8".into(),
    })?;
    let names: Vec<String> = text.lines().map(str::to_string).collect();

    let inverted = InvertedIndex::from_parts(
        postings,
        meta.num_docs,
        meta.quant_scale,
        meta.block_size,
        names,
        lexicon,
    )
    .map_err(|e| Error::Corrupt {
        path: dir.to_path_buf(),
        message: e.to_string(),
    })?;

    let path = dir.join(FORWARD_FILE);
    let bytes = read(path.clone())?;
    let mut r = Reader {
        bytes: unframe(b"TSFW", &bytes, &path)?,
        pos: 0,
        path: &path,
    };
    let n = r.len()?;
    if n != meta.num_docs as usize {
        return Err(r.corrupt("forward document count disagrees with meta.json"));
    }
    let mut vectors = Vec::with_capacity(n);
    for _ in 0..n {
        let nnz = r.len()?;
        let mut terms = Vec::with_capacity(nnz);
        let mut prev: u32 = 0;
        for _ in 0..nnz {
            prev = prev
                .checked_add(r.u32()?)
                .ok_or_else(|| r.corrupt("term overflow"))?;
            terms.push(prev);
        }
        let raw = r.take(nnz * 8)?;
        let weights = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
        let v = SparseVector::from_pairs(terms.into_iter().zip(weights))
            .map_err(|e| r.corrupt(&e.to_string()))?;
        if v.nnz() != nnz {
            return Err(r.corrupt("zero weight in forward vector"));
        }
        vectors.push(v);
    }
    r.finish()?;

    Ok(StoredIndex {
        meta,
        inverted,
        forward: ForwardIndex::from_vectors(vectors),
    })
}

/// On-disk bytes per section of an index directory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SizeReport {
    pub postings: u64,
    /// meta.json, lexicon, block-max metadata and document ids.
    pub metadata: u64,
    pub forward: u64,
    /// Every file in the directory.
    pub total: u64,
}

pub fn index_size_report(dir: &Path) -> Result<SizeReport> {
    let size = |name: &str| -> Result<u64> {
        let p = dir.join(name);
        Ok(fs::metadata(&p).map_err(Error::io(p))?.len())
    };
    let mut total = 0;
    for entry in fs::read_dir(dir).map_err(Error::io(dir))? {
        let entry = entry.map_err(Error::io(dir))?;
        let md = entry.metadata().map_err(Error::io(entry.path()))?;
        if md.is_file() {
            total += md.len();
        }
    }
    Ok(SizeReport {
        postings: size(POSTINGS_FILE)?,
        metadata: size(META_FILE)? + size(LEXICON_FILE)? + size(BLOCKMAX_FILE)? + size(DOCIDS_FILE)?,
        forward: size(FORWARD_FILE)?,
        total,
    })
}
