// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright The twostep Authors

//! TREC qrels and run files.

use std::fs;
use std::path::Path;

use twostep_core::{Qrels, RunFile};

use crate::error::{Error, Result};

fn with_path(path: &Path, err: twostep_core::Error) -> Error {
    match err {
        twostep_core::Error::Parse { line, message } => Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        },
        other => other.into(),
    }
}

pub fn load_qrels(path: &Path) -> Result<Qrels> {
    let text = fs::read_to_string(path).map_err(Error::io(path))?;
    Qrels::parse(&text).map_err(|e| with_path(path, e))
}

pub fn load_run(path: &Path) -> Result<RunFile> {
    let text = fs::read_to_string(path).map_err(Error::io(path))?;
    RunFile::parse(&text).map_err(|e| with_path(path, e))
}

pub fn write_run(path: &Path, run: &RunFile, tag: &str) -> Result<()> {
    fs::write(path, run.to_trec(tag)).map_err(Error::io(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_errors_name_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("qrels.txt");
        fs::write(&p, "q1 0 d3 2\nq1 0 d4 -1\n").unwrap();
        let err = load_qrels(&p).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert!(err.to_string().contains("qrels.txt:2"));
    }

    #[test]
    fn run_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.trec");
        let mut run = RunFile::new();
        run.insert("q1", vec![("d1".into(), 2.5), ("d7".into(), 0.125)])
            .unwrap();
        write_run(&p, &run, "twostep").unwrap();
        assert_eq!(load_run(&p).unwrap(), run);
    }
}
