//! JSON tensor files.
//!
//! ```text
//! { "m": 2, "n": 2, "dense": [[[[a_1111, a_1112], ...]]] }
//! { "m": 2, "n": 2, "sparse": [[1, 1, 1, 1, 2.0], [1, 2, 1, 1, 3.0]] }
//! ```
//!
//! Dense arrays nest `i -> j -> k -> l`. Sparse indices are 1-based and each
//! listed entry is written over its whole symmetry orbit. Numbers are written
//! with 17 significant digits so a store/load round trip is exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Deserialize;

use super::{Array4, HierSymTensor, TensorSource};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TensorFormat {
    Dense,
    Sparse,
}

/// Extra facts gathered while loading a file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadInfo {
    pub format: TensorFormat,
    /// Largest orbit disagreement before the final projection.
    pub pre_symmetrization_violation: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TensorFile {
    m: usize,
    n: usize,
    #[serde(default)]
    dense: Option<Vec<Vec<Vec<Vec<f64>>>>>,
    #[serde(default)]
    sparse: Option<Vec<SparseEntry>>,
}

type SparseEntry = (usize, usize, usize, usize, f64);

pub fn load(path: impl AsRef<Path>) -> Result<HierSymTensor> {
    load_with_info(path).map(|(t, _)| t)
}

pub fn load_with_info(path: impl AsRef<Path>) -> Result<(HierSymTensor, LoadInfo)> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse(&text, &path.display().to_string())
}

pub(crate) fn parse(text: &str, origin: &str) -> Result<(HierSymTensor, LoadInfo)> {
    let file: TensorFile = serde_json::from_str(text).map_err(|e| Error::Parse {
        context: format!("{origin}:{}:{}", e.line(), e.column()),
        message: e.to_string(),
    })?;
    let (m, n) = (file.m, file.n);
    if m == 0 || n == 0 {
        return Err(Error::Parse {
            context: origin.to_string(),
            message: format!("dimensions must be positive, got m={m}, n={n}"),
        });
    }
    let (source, format) = match (file.dense, file.sparse) {
        (Some(dense), None) => (
            TensorSource::Dense(flatten_dense(m, n, dense, origin)?),
            TensorFormat::Dense,
        ),
        (None, Some(entries)) => (TensorSource::Sparse { m, n, entries }, TensorFormat::Sparse),
        _ => {
            return Err(Error::Parse {
                context: origin.to_string(),
                message: "exactly one of \"dense\" or \"sparse\" must be present".into(),
            })
        }
    };
    let (tensor, violation) = source.build().map_err(|e| match e {
        Error::Parse { context, message } => Error::Parse {
            context: format!("{origin}: {context}"),
            message,
        },
        other => other,
    })?;
    Ok((
        tensor,
        LoadInfo {
            format,
            pre_symmetrization_violation: violation,
        },
    ))
}

fn flatten_dense(
    m: usize,
    n: usize,
    dense: Vec<Vec<Vec<Vec<f64>>>>,
    origin: &str,
) -> Result<Array4> {
    let shape_err = |path: String, want: usize, got: usize| Error::Parse {
        context: format!("{origin}: dense{path}"),
        message: format!("expected {want} elements, found {got}"),
    };
    if dense.len() != m {
        return Err(shape_err(String::new(), m, dense.len()));
    }
    let mut data = Vec::with_capacity(m * n * m * n);
    for (i, a) in dense.into_iter().enumerate() {
        if a.len() != n {
            return Err(shape_err(format!("[{i}]"), n, a.len()));
        }
        for (j, b) in a.into_iter().enumerate() {
            if b.len() != m {
                return Err(shape_err(format!("[{i}][{j}]"), m, b.len()));
            }
            for (k, c) in b.into_iter().enumerate() {
                if c.len() != n {
                    return Err(shape_err(format!("[{i}][{j}][{k}]"), n, c.len()));
                }
                data.extend(c);
            }
        }
    }
    Array4::from_vec(m, n, data)
}

/// Writes the dense form.
pub fn store(tensor: &HierSymTensor, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, to_json(tensor))?;
    Ok(())
}

pub(crate) fn to_json(tensor: &HierSymTensor) -> String {
    let (m, n) = (tensor.m(), tensor.n());
    let mut out = String::new();
    let _ = writeln!(out, "{{\n  \"m\": {m},\n  \"n\": {n},\n  \"dense\": [");
    for i in 0..m {
        out.push_str("    [\n");
        for j in 0..n {
            out.push_str("      [\n");
            for k in 0..m {
                out.push_str("        [");
                for l in 0..n {
                    if l > 0 {
                        out.push_str(", ");
                    }
                    let _ = write!(out, "{}", fmt_f64(tensor.get(i, j, k, l)));
                }
                out.push(']');
                out.push_str(if k + 1 < m { ",\n" } else { "\n" });
            }
            out.push_str("      ]");
            out.push_str(if j + 1 < n { ",\n" } else { "\n" });
        }
        out.push_str("    ]");
        out.push_str(if i + 1 < m { ",\n" } else { "\n" });
    }
    out.push_str("  ]\n}\n");
    out
}

/// 17 significant digits, valid JSON.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}
