//! GloVe-style text vectors: one `token v1 v2 ...` line per word.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use cnm_core::text::Vocabulary;

use crate::error::{require_path, CliError, Result};

/// Reads vectors, keeping only tokens accepted by `keep`. Every kept row must
/// have `dim` values (or the width of the first row when `dim` is `None`).
pub fn read_vectors(
    reader: impl BufRead,
    origin: &Path,
    dim: Option<usize>,
    keep: impl Fn(&str) -> bool,
) -> Result<BTreeMap<String, Vec<f64>>> {
    let mut out = BTreeMap::new();
    let mut width = dim;
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| CliError::io(origin, e))?;
        let mut parts = line.split_whitespace();
        let Some(token) = parts.next() else { continue };
        if !keep(token) {
            continue;
        }
        let values = parts
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| CliError::parse(origin, idx + 1, format!("bad value for {token:?}: {e}")))?;
        let w = *width.get_or_insert(values.len());
        if values.len() != w || w == 0 {
            return Err(CliError::parse(
                origin,
                idx + 1,
                format!("{token:?} has {} values, expected {w}", values.len()),
            ));
        }
        out.insert(token.to_string(), values);
    }
    Ok(out)
}

/// Loads the vectors of the tokens in `vocab`.
pub fn load_for_vocab(path: &Path, vocab: &Vocabulary, dim: usize) -> Result<BTreeMap<String, Vec<f64>>> {
    require_path(path)?;
    let file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    read_vectors(BufReader::new(file), path, Some(dim), |t| vocab.get(t).is_some())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_and_filters() {
        let text = "the 0.1 0.2\ncat -1 2.5\ndog 3 4\n";
        let v = read_vectors(text.as_bytes(), Path::new("g"), None, |t| t != "dog").unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!(v["cat"], [-1.0, 2.5]);
    }

    #[test]
    fn ragged_row_is_parse_error() {
        let err = read_vectors("a 1 2\nb 1\n".as_bytes(), Path::new("g"), None, |_| true).unwrap_err();
        assert!(matches!(err, CliError::Parse { line: 2, .. }));
        let err = read_vectors("a 1 2\n".as_bytes(), Path::new("g"), Some(3), |_| true).unwrap_err();
        assert!(matches!(err, CliError::Parse { line: 1, .. }));
    }
}
