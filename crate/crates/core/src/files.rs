//! Instance files: JSON documents with every number stored as a decimal
//! string, so values survive a round trip bit for bit.
//!
//! ```json
//! {
//!   "name": "pair",
//!   "problem": {
//!     "name": "pair", "n": 2,
//!     "rows": [{"coeffs": [[0, "1"], [1, "0.6"]], "relation": "<=", "rhs": "1"}],
//!     "lower": ["0", "0"], "upper": ["1", "1"],
//!     "integer": [true, true], "objective": ["-1", "-1"]
//!   },
//!   "c0": ["-1", "-1"],
//!   "x_hat": ["0", "1"]
//! }
//! ```
//!
//! `problem` may instead be a string naming an MPS file relative to the
//! instance file. Infinite bounds are written `"inf"` and `"-inf"`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ForwardProblem, InverseInstance, ModelError, Relation, Row};
use crate::mps::{parse_mps, MpsError};

#[derive(Debug, Error)]
pub enum FileError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed instance document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed number {0:?}")]
    Number(String),
    #[error("{path}: {source}")]
    Mps {
        path: PathBuf,
        #[source]
        source: MpsError,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Serialize, Deserialize)]
struct RowDoc {
    coeffs: Vec<(usize, String)>,
    relation: Relation,
    rhs: String,
}

#[derive(Serialize, Deserialize)]
struct ProblemDoc {
    name: String,
    n: usize,
    rows: Vec<RowDoc>,
    lower: Vec<String>,
    upper: Vec<String>,
    integer: Vec<bool>,
    objective: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ProblemRef {
    Inline(ProblemDoc),
    Mps(String),
}

#[derive(Serialize, Deserialize)]
struct InstanceDoc {
    name: String,
    problem: ProblemRef,
    c0: Vec<String>,
    x_hat: Vec<String>,
}

fn num(v: f64) -> String {
    v.to_string()
}

fn parse_num(s: &str) -> Result<f64, FileError> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| !v.is_nan())
        .ok_or_else(|| FileError::Number(s.to_string()))
}

fn parse_vec(v: &[String]) -> Result<Vec<f64>, FileError> {
    v.iter().map(|s| parse_num(s)).collect()
}

fn problem_doc(p: &ForwardProblem) -> ProblemDoc {
    ProblemDoc {
        name: p.name.clone(),
        n: p.n,
        rows: p
            .rows
            .iter()
            .map(|r| RowDoc {
                coeffs: r.coeffs.iter().map(|&(j, v)| (j, num(v))).collect(),
                relation: r.relation,
                rhs: num(r.rhs),
            })
            .collect(),
        lower: p.lower.iter().copied().map(num).collect(),
        upper: p.upper.iter().copied().map(num).collect(),
        integer: p.is_integer.clone(),
        objective: p.objective.iter().copied().map(num).collect(),
    }
}

fn problem_from_doc(d: ProblemDoc) -> Result<ForwardProblem, FileError> {
    let rows = d
        .rows
        .into_iter()
        .map(|r| {
            let coeffs = r
                .coeffs
                .iter()
                .map(|(j, v)| Ok((*j, parse_num(v)?)))
                .collect::<Result<Vec<_>, FileError>>()?;
            Ok(Row::new(coeffs, r.relation, parse_num(&r.rhs)?))
        })
        .collect::<Result<Vec<_>, FileError>>()?;
    let p = ForwardProblem::new(
        d.name,
        d.n,
        rows,
        parse_vec(&d.lower)?,
        parse_vec(&d.upper)?,
        d.integer,
    )?;
    Ok(p.with_objective(parse_vec(&d.objective)?)?)
}

/// Serializes with the problem inline.
pub fn instance_to_string(inst: &InverseInstance) -> String {
    let doc = InstanceDoc {
        name: inst.label.clone(),
        problem: ProblemRef::Inline(problem_doc(&inst.problem)),
        c0: inst.c0.iter().copied().map(num).collect(),
        x_hat: inst.x_hat.iter().copied().map(num).collect(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("instance documents always serialize");
    s.push('\n');
    s
}

/// Parses an instance document; MPS references resolve against `base_dir`.
pub fn instance_from_str(text: &str, base_dir: &Path) -> Result<InverseInstance, FileError> {
    let doc: InstanceDoc = serde_json::from_str(text)?;
    let problem = match doc.problem {
        ProblemRef::Inline(p) => problem_from_doc(p)?,
        ProblemRef::Mps(rel) => {
            let path = base_dir.join(rel);
            let text = fs::read_to_string(&path).map_err(|source| FileError::Io {
                path: path.clone(),
                source,
            })?;
            parse_mps(&text).map_err(|source| FileError::Mps { path, source })?
        }
    };
    Ok(InverseInstance::new(
        problem,
        parse_vec(&doc.c0)?,
        parse_vec(&doc.x_hat)?,
        doc.name,
    ))
}

pub fn read_instance(path: &Path) -> Result<InverseInstance, FileError> {
    let text = fs::read_to_string(path).map_err(|source| FileError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    instance_from_str(&text, base)
}

pub fn write_instance(path: &Path, inst: &InverseInstance) -> Result<(), FileError> {
    fs::write(path, instance_to_string(inst)).map_err(|source| FileError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads whitespace-separated vectors, one per line; `#` starts a comment.
pub fn read_point_list(path: &Path) -> Result<Vec<Vec<f64>>, FileError> {
    let text = fs::read_to_string(path).map_err(|source| FileError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_point_list(&text)
}

pub fn parse_point_list(text: &str) -> Result<Vec<Vec<f64>>, FileError> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(|l| l.split_whitespace().map(parse_num).collect())
        .collect()
}
