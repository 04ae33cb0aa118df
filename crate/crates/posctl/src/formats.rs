//! Input file formats and parsing.
//!
//! Systems and networks are read from JSON. All node and drug indices in
//! files are zero-based, matching the library. Parse failures report the
//! line and column from the JSON parser; structurally valid JSON with bad
//! content (ragged matrices, negative weights) is a domain violation
//! instead.

use poslin::netgraph::DirectedNetwork;
use poslin::possys::PositiveSystem;
use poslin::{Matrix, Vector};
use serde::Deserialize;

use crate::CliError;

/// A positive system in JSON form: matrices as row-major nested arrays.
/// `b` and `c` default to the identity when omitted.
#[derive(Debug, Deserialize)]
pub struct SystemFile {
    pub a: Vec<Vec<f64>>,
    #[serde(default)]
    pub b: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub c: Option<Vec<Vec<f64>>>,
    pub d: Vec<Vec<f64>>,
}

/// A weighted digraph in JSON form: node count and `[from, to, weight]`
/// edge triples with zero-based node indices.
#[derive(Debug, Deserialize)]
pub struct NetworkFile {
    pub n: usize,
    pub edges: Vec<(usize, usize, f64)>,
}

fn to_matrix(rows: &[Vec<f64>], name: &str) -> Result<Matrix, CliError> {
    if rows.is_empty() {
        return Err(CliError::Domain(format!("matrix {name} has no rows")));
    }
    let cols = rows[0].len();
    if cols == 0 {
        return Err(CliError::Domain(format!("matrix {name} has empty rows")));
    }
    if rows.iter().any(|r| r.len() != cols) {
        return Err(CliError::Domain(format!(
            "matrix {name} has ragged rows; every row must have {cols} entries"
        )));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(Matrix::from_row_slice(rows.len(), cols, &flat))
}

impl SystemFile {
    /// Builds the system, defaulting `b` and `c` to identity maps.
    pub fn to_system(&self) -> Result<PositiveSystem, CliError> {
        let a = to_matrix(&self.a, "a")?;
        let n = a.nrows();
        let b = match &self.b {
            Some(rows) => to_matrix(rows, "b")?,
            None => Matrix::identity(n, n),
        };
        let c = match &self.c {
            Some(rows) => to_matrix(rows, "c")?,
            None => Matrix::identity(n, n),
        };
        let d = to_matrix(&self.d, "d")?;
        PositiveSystem::new(a, b, c, d).map_err(|e| CliError::Domain(e.to_string()))
    }
}

impl NetworkFile {
    pub fn to_network(&self) -> Result<DirectedNetwork, CliError> {
        DirectedNetwork::new(self.n, self.edges.iter().copied())
            .map_err(|e| CliError::Domain(e.to_string()))
    }
}

/// Reads a file and parses it as JSON into `T`.
pub fn load_json<T: serde::de::DeserializeOwned>(path: &str) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {path}: {e}")))?;
    serde_json::from_str(&text).map_err(|e| {
        if e.is_syntax() || e.is_eof() {
            CliError::Parse {
                path: path.to_string(),
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            }
        } else {
            CliError::Domain(format!("{path}: {e}"))
        }
    })
}

/// Parses a comma-separated list of doses or weights.
pub fn parse_vector(text: &str) -> Result<Vector, CliError> {
    let entries: Result<Vec<f64>, _> = text
        .split(',')
        .map(|tok| tok.trim().parse::<f64>())
        .collect();
    match entries {
        Ok(v) if !v.is_empty() => Ok(Vector::from_row_slice(&v)),
        _ => Err(CliError::Usage(format!(
            "expected a comma-separated list of numbers, got {text:?}"
        ))),
    }
}

/// Parses semicolon-separated groups of comma-separated indices, e.g.
/// `"0,1;2,3"`.
pub fn parse_subsets(text: &str) -> Result<Vec<Vec<usize>>, CliError> {
    text.split(';')
        .map(|group| {
            group
                .split(',')
                .map(|tok| {
                    tok.trim().parse::<usize>().map_err(|_| {
                        CliError::Usage(format!("bad index {tok:?} in subset list {text:?}"))
                    })
                })
                .collect()
        })
        .collect()
}
