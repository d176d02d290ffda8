// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright The twostep Authors

//! `key = value` configuration files.
//!
//! Each key names a command-line flag (`k1`, `doc-prune`, ...). Loading a
//! file exports `TWOSTEP_<KEY>` for every key not already set in the
//! environment, so flags override the environment, which overrides the
//! file, which overrides built-in defaults.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};

pub const ENV_PREFIX: &str = "TWOSTEP_";

/// Parses `key = value` lines. `#` starts a comment; blank lines are
/// ignored; a repeated key is an error.
pub fn parse(text: &str, path: &Path) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: &str| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: message.to_string(),
        };
        let (key, value) = line.split_once('=').ok_or_else(|| err("expected key = value"))?;
        let key = key.trim();
        if key.is_empty()
            || !key
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
        {
            return Err(err("invalid key"));
        }
        let key = key.to_ascii_lowercase().replace('_', "-");
        if out.insert(key, value.trim().to_string()).is_some() {
            return Err(err("duplicate key"));
        }
    }
    Ok(out)
}

/// Environment variable consulted for a flag.
pub fn env_name(key: &str) -> String {
    format!("{ENV_PREFIX}{}", key.to_ascii_uppercase().replace('-', "_"))
}

/// Reads `path` and exports its entries as environment defaults.
pub fn apply_file(path: &Path) -> Result<()> {
    let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
    for (key, value) in parse(&text, path)? {
        let name = env_name(&key);
        if std::env::var_os(&name).is_none() {
            std::env::set_var(name, value);
        }
    }
    Ok(())
}
