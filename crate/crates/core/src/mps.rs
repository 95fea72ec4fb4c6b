//! Free-format MPS reader.
//!
//! Supported sections: NAME, ROWS, COLUMNS (with `'MARKER'` / `'INTORG'` /
//! `'INTEND'` integer blocks), RHS, RANGES, BOUNDS, ENDATA. The first `N` row
//! is the objective; further `N` rows are ignored. Columns default to
//! `[0, +inf)`, integer ones included; `BV` sets `[0, 1]`. An `UP` bound
//! below zero on a variable whose lower bound is still 0 moves the lower
//! bound to `-inf`, as most MPS readers do.
//!
//! Ranged rows become two rows: `>= lo` then `<= hi`.

use std::collections::HashMap;

use thiserror::Error;

use crate::model::{ForwardProblem, ModelError, Relation, Row};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MpsError {
    #[error("line {line}: unknown section {name:?}")]
    UnknownSection { line: usize, name: String },
    #[error("line {line}: row {name:?} defined twice")]
    DuplicateRow { line: usize, name: String },
    #[error("line {line}: reference to undefined row {name:?}")]
    UnknownRowReference { line: usize, name: String },
    #[error("line {line}: reference to undefined column {name:?}")]
    UnknownColumn { line: usize, name: String },
    #[error("line {line}: malformed number {text:?}")]
    MalformedNumber { line: usize, text: String },
    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("line {line}: input ended before ENDATA")]
    UnexpectedEof { line: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Rows,
    Columns,
    Rhs,
    Ranges,
    Bounds,
}

#[derive(Clone, Copy, PartialEq)]
enum RowKind {
    Objective,
    Free,
    Constraint(Relation),
}

struct RowData {
    kind: RowKind,
    coeffs: Vec<(usize, f64)>,
    rhs: f64,
    range: Option<f64>,
}

fn number(text: &str, line: usize) -> Result<f64, MpsError> {
    text.parse::<f64>()
        .ok()
        .filter(|v| !v.is_nan())
        .ok_or_else(|| MpsError::MalformedNumber {
            line,
            text: text.to_string(),
        })
}

fn malformed(line: usize, reason: impl Into<String>) -> MpsError {
    MpsError::MalformedLine {
        line,
        reason: reason.into(),
    }
}

pub fn parse_mps(text: &str) -> Result<ForwardProblem, MpsError> {
    let mut name = String::new();
    let mut section = Section::None;
    let mut rows: Vec<RowData> = Vec::new();
    let mut row_index: HashMap<String, usize> = HashMap::new();
    let mut objective_row: Option<usize> = None;
    let mut cols: Vec<String> = Vec::new();
    let mut col_index: HashMap<String, usize> = HashMap::new();
    let mut integer: Vec<bool> = Vec::new();
    let mut lower: Vec<f64> = Vec::new();
    let mut upper: Vec<f64> = Vec::new();
    let mut in_marker = false;
    let mut last_line = 0;
    let mut ended = false;

    let lookup_row = |row_index: &HashMap<String, usize>, n: &str, line: usize| {
        row_index
            .get(n)
            .copied()
            .ok_or_else(|| MpsError::UnknownRowReference {
                line,
                name: n.to_string(),
            })
    };

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        last_line = line;
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        let fields: Vec<&str> = raw.split_whitespace().collect();
        if !raw.starts_with(char::is_whitespace) {
            section = match fields[0] {
                "NAME" => {
                    name = fields.get(1).copied().unwrap_or("").to_string();
                    Section::None
                }
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "RANGES" => Section::Ranges,
                "BOUNDS" => Section::Bounds,
                "ENDATA" => {
                    ended = true;
                    break;
                }
                other => {
                    return Err(MpsError::UnknownSection {
                        line,
                        name: other.to_string(),
                    })
                }
            };
            continue;
        }
        match section {
            Section::None => return Err(malformed(line, "data line outside any section")),
            Section::Rows => {
                let [kind, rname] = fields[..] else {
                    return Err(malformed(line, "expected `type name` in ROWS"));
                };
                let kind = match kind {
                    "N" | "n" => {
                        if objective_row.is_none() {
                            objective_row = Some(rows.len());
                            RowKind::Objective
                        } else {
                            RowKind::Free
                        }
                    }
                    "G" | "g" => RowKind::Constraint(Relation::Ge),
                    "L" | "l" => RowKind::Constraint(Relation::Le),
                    "E" | "e" => RowKind::Constraint(Relation::Eq),
                    other => return Err(malformed(line, format!("unknown row type {other:?}"))),
                };
                if row_index.contains_key(rname) {
                    return Err(MpsError::DuplicateRow {
                        line,
                        name: rname.to_string(),
                    });
                }
                row_index.insert(rname.to_string(), rows.len());
                rows.push(RowData {
                    kind,
                    coeffs: Vec::new(),
                    rhs: 0.0,
                    range: None,
                });
            }
            Section::Columns => {
                if fields.len() >= 3 && fields[1].trim_matches('\'') == "MARKER" {
                    match fields[2].trim_matches('\'') {
                        "INTORG" => in_marker = true,
                        "INTEND" => in_marker = false,
                        other => return Err(malformed(line, format!("unknown marker {other:?}"))),
                    }
                    continue;
                }
                if fields.len() != 3 && fields.len() != 5 {
                    return Err(malformed(line, "expected `column row value [row value]`"));
                }
                let cname = fields[0];
                let j = match col_index.get(cname) {
                    Some(&j) => j,
                    None => {
                        let j = cols.len();
                        col_index.insert(cname.to_string(), j);
                        cols.push(cname.to_string());
                        integer.push(in_marker);
                        lower.push(0.0);
                        upper.push(f64::INFINITY);
                        j
                    }
                };
                for pair in fields[1..].chunks(2) {
                    let r = lookup_row(&row_index, pair[0], line)?;
                    let v = number(pair[1], line)?;
                    rows[r].coeffs.push((j, v));
                }
            }
            Section::Rhs | Section::Ranges => {
                // The set name is optional: an even field count means it is absent.
                let pairs = if fields.len() % 2 == 1 {
                    &fields[1..]
                } else {
                    &fields[..]
                };
                if pairs.is_empty() || pairs.len() > 4 {
                    return Err(malformed(line, "expected `[set] row value [row value]`"));
                }
                for pair in pairs.chunks(2) {
                    let r = lookup_row(&row_index, pair[0], line)?;
                    let v = number(pair[1], line)?;
                    if section == Section::Rhs {
                        rows[r].rhs = v;
                    } else {
                        rows[r].range = Some(v);
                    }
                }
            }
            Section::Bounds => {
                let kind = fields[0].to_ascii_uppercase();
                let needs_value = !matches!(kind.as_str(), "FR" | "MI" | "PL" | "BV");
                let (col, value) = match (needs_value, fields.len()) {
                    (true, 4) => (fields[2], Some(fields[3])),
                    (true, 3) => (fields[1], Some(fields[2])),
                    (false, 3) => (fields[2], None),
                    (false, 2) => (fields[1], None),
                    (false, 4) if kind == "BV" => (fields[2], None),
                    _ => return Err(malformed(line, "wrong number of fields in BOUNDS")),
                };
                let j = *col_index.get(col).ok_or_else(|| MpsError::UnknownColumn {
                    line,
                    name: col.to_string(),
                })?;
                let v = value.map(|t| number(t, line)).transpose()?;
                match (kind.as_str(), v) {
                    ("UP", Some(v)) | ("UI", Some(v)) => {
                        if v < 0.0 && lower[j] == 0.0 {
                            lower[j] = f64::NEG_INFINITY;
                        }
                        upper[j] = v;
                        if kind == "UI" {
                            integer[j] = true;
                        }
                    }
                    ("LO", Some(v)) | ("LI", Some(v)) => {
                        lower[j] = v;
                        if kind == "LI" {
                            integer[j] = true;
                        }
                    }
                    ("FX", Some(v)) => {
                        lower[j] = v;
                        upper[j] = v;
                    }
                    ("FR", None) => {
                        lower[j] = f64::NEG_INFINITY;
                        upper[j] = f64::INFINITY;
                    }
                    ("MI", None) => lower[j] = f64::NEG_INFINITY,
                    ("PL", None) => upper[j] = f64::INFINITY,
                    ("BV", None) => {
                        lower[j] = 0.0;
                        upper[j] = 1.0;
                        integer[j] = true;
                    }
                    _ => return Err(malformed(line, format!("unsupported bound type {kind:?}"))),
                }
            }
        }
    }
    if !ended {
        return Err(MpsError::UnexpectedEof { line: last_line });
    }

    let n = cols.len();
    let mut objective = vec![0.0; n];
    let mut out_rows = Vec::new();
    for r in rows {
        match r.kind {
            RowKind::Objective => {
                for (j, v) in r.coeffs {
                    objective[j] += v;
                }
            }
            RowKind::Free => {}
            RowKind::Constraint(rel) => match r.range {
                None => out_rows.push(Row::new(r.coeffs, rel, r.rhs)),
                Some(range) => {
                    let (lo, hi) = match rel {
                        Relation::Ge => (r.rhs, r.rhs + range.abs()),
                        Relation::Le => (r.rhs - range.abs(), r.rhs),
                        Relation::Eq if range >= 0.0 => (r.rhs, r.rhs + range),
                        Relation::Eq => (r.rhs + range, r.rhs),
                    };
                    if lo == hi {
                        out_rows.push(Row::new(r.coeffs, Relation::Eq, lo));
                    } else {
                        out_rows.push(Row::new(r.coeffs.clone(), Relation::Ge, lo));
                        out_rows.push(Row::new(r.coeffs, Relation::Le, hi));
                    }
                }
            },
        }
    }
    let problem = ForwardProblem::new(name, n, out_rows, lower, upper, integer)?;
    Ok(problem.with_objective(objective)?)
}
