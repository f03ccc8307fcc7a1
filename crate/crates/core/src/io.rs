//! JSON tensor files.
//!
//! Two layouts are accepted:
//!
//! ```json
//! {"order": 4, "dim": 3, "entries_default": 2, "entries": [[[1,1,1,1], 6], ...]}
//! {"order": 2, "dim": 2, "dense": [1, 0, 0, 1]}
//! ```
//!
//! Sparse indices are 1-based; positions not listed take `entries_default`
//! (0 when omitted). Dense entries are in lexicographic order, first index slowest.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TensorFile {
    order: usize,
    dim: usize,
    #[serde(default)]
    entries_default: Option<f64>,
    #[serde(default)]
    entries: Option<Vec<(Vec<usize>, f64)>>,
    #[serde(default)]
    dense: Option<Vec<f64>>,
    #[serde(default)]
    symmetric: Option<bool>,
}

#[derive(Serialize)]
struct DenseOut<'a> {
    order: usize,
    dim: usize,
    dense: &'a [f64],
}

#[derive(Serialize)]
struct SparseOut {
    order: usize,
    dim: usize,
    entries_default: f64,
    entries: Vec<(Vec<usize>, f64)>,
}

pub fn parse_tensor(text: &str) -> Result<Tensor> {
    let file: TensorFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let mut tensor = match (file.dense, file.entries) {
        (Some(_), Some(_)) => {
            return Err(Error::Parse(
                "tensor file has both \"dense\" and \"entries\"".into(),
            ))
        }
        (Some(dense), None) => {
            if file.entries_default.is_some() {
                return Err(Error::Parse(
                    "\"entries_default\" is only valid with \"entries\"".into(),
                ));
            }
            Tensor::new(file.order, file.dim, dense)?
        }
        (None, entries) => {
            let mut t = Tensor::filled(file.order, file.dim, file.entries_default.unwrap_or(0.0))?;
            let mut seen = HashSet::new();
            for (k, (index, value)) in entries.unwrap_or_default().into_iter().enumerate() {
                if index.contains(&0) {
                    return Err(Error::Parse(format!("entries[{k}]: indices are 1-based")));
                }
                let zero_based: Vec<usize> = index.iter().map(|i| i - 1).collect();
                let off = t
                    .offset(&zero_based)
                    .map_err(|e| Error::Parse(format!("entries[{k}]: {e}")))?;
                if !seen.insert(off) {
                    return Err(Error::Parse(format!(
                        "entries[{k}]: duplicate index {index:?}"
                    )));
                }
                t.set(&zero_based, value)?;
            }
            t
        }
    };
    if let Some(v) = tensor.entries().iter().find(|v| !v.is_finite()) {
        return Err(Error::Parse(format!("non-finite entry {v}")));
    }
    if file.symmetric == Some(true) {
        tensor.mark_symmetric()?;
    }
    Ok(tensor)
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<Tensor> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    parse_tensor(&text).map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Compact dense JSON, newline-terminated.
pub fn to_dense_json(t: &Tensor) -> String {
    let mut s = serde_json::to_string(&DenseOut {
        order: t.order(),
        dim: t.dim(),
        dense: t.entries(),
    })
    .expect("finite floats serialize");
    s.push('\n');
    s
}

/// Sparse JSON listing every entry that differs from `default`.
pub fn to_sparse_json(t: &Tensor, default: f64) -> String {
    let mut entries = Vec::new();
    let mut idx = crate::tensor::MultiIndex::new(t.order(), t.dim());
    for &v in t.entries() {
        if v != default {
            entries.push((idx.digits().iter().map(|i| i + 1).collect(), v));
        }
        idx.advance();
    }
    let mut s = serde_json::to_string(&SparseOut {
        order: t.order(),
        dim: t.dim(),
        entries_default: default,
        entries,
    })
    .expect("finite floats serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sparse_with_default() {
        let t = parse_tensor(
            r#"{"order": 3, "dim": 2, "entries_default": 0.5, "entries": [[[1,1,1], 3], [[2,1,2], -1]]}"#,
        )
        .unwrap();
        assert_eq!(t.get(&[0, 0, 0]).unwrap(), 3.0);
        assert_eq!(t.get(&[1, 0, 1]).unwrap(), -1.0);
        assert_eq!(t.get(&[1, 1, 1]).unwrap(), 0.5);
    }

    #[test]
    fn dense_layout() {
        let t = parse_tensor(r#"{"order": 2, "dim": 2, "dense": [1, 2, 3, 4]}"#).unwrap();
        assert_eq!(t.get(&[1, 0]).unwrap(), 3.0);
        assert_eq!(parse_tensor(&to_dense_json(&t)).unwrap(), t);
    }

    #[test]
    fn rejects_bad_files() {
        assert!(parse_tensor(r#"{"order": 2, "dim": 2, "dense": [1, 2, 3]}"#).is_err());
        assert!(parse_tensor(r#"{"order": 2, "dim": 2, "entries": [[[0, 1], 1]]}"#).is_err());
        assert!(parse_tensor(r#"{"order": 2, "dim": 2, "entries": [[[3, 1], 1]]}"#).is_err());
        assert!(parse_tensor(r#"{"order": 2, "dim": 2, "entries": [[[1, 1, 1], 1]]}"#).is_err());
        assert!(
            parse_tensor(r#"{"order": 2, "dim": 2, "entries": [[[1, 1], 1], [[1, 1], 2]]}"#)
                .is_err()
        );
        assert!(
            parse_tensor(r#"{"order": 2, "dim": 2, "dense": [1,2,3,4], "entries": []}"#).is_err()
        );
        assert!(parse_tensor(r#"{"order": 2, "dim": 2, "dense": [1,2,3,4], "extra": 1}"#).is_err());
        let err = parse_tensor("{\"order\": 2,\n \"dim\": }").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn symmetric_flag_is_validated() {
        assert!(parse_tensor(
            r#"{"order": 2, "dim": 2, "dense": [1, 2, 2, 4], "symmetric": true}"#
        )
        .unwrap()
        .symmetric_flag());
        assert!(parse_tensor(
            r#"{"order": 2, "dim": 2, "dense": [1, 2, 3, 4], "symmetric": true}"#
        )
        .is_err());
    }

    #[test]
    fn sparse_round_trip() {
        let t = Tensor::from_fn(3, 2, |d| if d[0] == d[2] { 1.5 } else { 2.0 }).unwrap();
        assert_eq!(parse_tensor(&to_sparse_json(&t, 2.0)).unwrap(), t);
    }
}
