//! Canonical issue JSONL: one issue object per line.

use std::collections::HashSet;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use chrono::{DateTime, Utc};
use serde_json::{json, Map, Value};
use thiserror::Error;

use super::{format_timestamp, IssueRecord, IssueType, Patch};

#[derive(Debug, Error)]
pub enum ImportError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("line {line}: invalid JSON: {message}")]
    Json { line: usize, message: String },
    #[error("line {line}: missing field {field}")]
    MissingField { line: usize, field: String },
    #[error("line {line}: invalid field {field}: {reason}")]
    InvalidField {
        line: usize,
        field: String,
        reason: String,
    },
    #[error("line {line}: duplicate key {key}")]
    DuplicateKey { line: usize, key: String },
}

struct Fields<'a> {
    line: usize,
    prefix: String,
    obj: &'a Map<String, Value>,
}

impl<'a> Fields<'a> {
    fn name(&self, field: &str) -> String {
        format!("{}{}", self.prefix, field)
    }

    fn get(&self, field: &str) -> Result<&'a Value, ImportError> {
        self.obj
            .get(field)
            .ok_or_else(|| ImportError::MissingField {
                line: self.line,
                field: self.name(field),
            })
    }

    fn invalid(&self, field: &str, reason: impl Into<String>) -> ImportError {
        ImportError::InvalidField {
            line: self.line,
            field: self.name(field),
            reason: reason.into(),
        }
    }

    fn string(&self, field: &str) -> Result<&'a str, ImportError> {
        self.get(field)?
            .as_str()
            .ok_or_else(|| self.invalid(field, "expected a string"))
    }

    fn timestamp(&self, field: &str) -> Result<DateTime<Utc>, ImportError> {
        let s = self.string(field)?;
        DateTime::parse_from_rfc3339(s)
            .map(|t| t.with_timezone(&Utc))
            .map_err(|e| self.invalid(field, e.to_string()))
    }

    fn count(&self, field: &str) -> Result<u64, ImportError> {
        self.get(field)?
            .as_u64()
            .ok_or_else(|| self.invalid(field, "expected a nonnegative integer"))
    }
}

fn parse_patch(line: usize, index: usize, value: &Value) -> Result<Patch, ImportError> {
    let prefix = format!("patches[{index}].");
    let obj = value.as_object().ok_or_else(|| ImportError::InvalidField {
        line,
        field: format!("patches[{index}]"),
        reason: "expected an object".into(),
    })?;
    let f = Fields { line, prefix, obj };
    let approved = match obj.get("approved") {
        None | Some(Value::Null) => true,
        Some(Value::Bool(b)) => *b,
        Some(_) => return Err(f.invalid("approved", "expected a boolean")),
    };
    Ok(Patch {
        author_email: f.string("author_email")?.to_string(),
        added_loc: f.count("added_loc")?,
        deleted_loc: f.count("deleted_loc")?,
        submitted_at: f.timestamp("submitted_at")?,
        approved,
    })
}

fn parse_record(line: usize, text: &str) -> Result<IssueRecord, ImportError> {
    let value: Value = serde_json::from_str(text).map_err(|e| ImportError::Json {
        line,
        message: e.to_string(),
    })?;
    let obj = value.as_object().ok_or_else(|| ImportError::Json {
        line,
        message: "expected an object".into(),
    })?;
    let f = Fields {
        line,
        prefix: String::new(),
        obj,
    };

    let key = f.string("key")?;
    if key.is_empty() {
        return Err(f.invalid("key", "must be non-empty"));
    }
    let ty = f.string("type")?;
    let issue_type = IssueType::from_canonical(ty)
        .ok_or_else(|| f.invalid("type", format!("unknown issue type {ty:?}")))?;
    let fix_versions = f
        .get("fix_versions")?
        .as_array()
        .ok_or_else(|| f.invalid("fix_versions", "expected an array"))?
        .iter()
        .map(|v| {
            v.as_str()
                .map(str::to_string)
                .ok_or_else(|| f.invalid("fix_versions", "expected an array of strings"))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let created_at = f.timestamp("created_at")?;
    let resolved_at = match f.get("resolved_at")? {
        Value::Null => None,
        _ => Some(f.timestamp("resolved_at")?),
    };
    if resolved_at.is_some_and(|r| r < created_at) {
        return Err(f.invalid("resolved_at", "precedes created_at"));
    }
    let reporter_email = f.string("reporter_email")?.to_string();
    let patches = f
        .get("patches")?
        .as_array()
        .ok_or_else(|| f.invalid("patches", "expected an array"))?
        .iter()
        .enumerate()
        .map(|(i, p)| parse_patch(line, i, p))
        .collect::<Result<Vec<_>, _>>()?;

    Ok(IssueRecord {
        key: key.to_string(),
        issue_type,
        fix_versions,
        created_at,
        resolved_at,
        reporter_email,
        patches,
    })
}

/// Reads canonical JSONL from any reader. Blank lines are skipped.
pub fn read_jsonl(reader: impl BufRead) -> Result<Vec<IssueRecord>, ImportError> {
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| ImportError::Json {
            line: lineno,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record = parse_record(lineno, &line)?;
        if !seen.insert(record.key.clone()) {
            return Err(ImportError::DuplicateKey {
                line: lineno,
                key: record.key,
            });
        }
        records.push(record);
    }
    Ok(records)
}

pub fn import_jsonl(path: impl AsRef<Path>) -> Result<Vec<IssueRecord>, ImportError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| ImportError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_jsonl(BufReader::new(file))
}

fn record_to_json(r: &IssueRecord) -> Value {
    let patches: Vec<Value> = r
        .patches
        .iter()
        .map(|p| {
            let mut v = json!({
                "author_email": p.author_email,
                "added_loc": p.added_loc,
                "deleted_loc": p.deleted_loc,
                "submitted_at": format_timestamp(&p.submitted_at),
            });
            if !p.approved {
                v["approved"] = Value::Bool(false);
            }
            v
        })
        .collect();
    json!({
        "key": r.key,
        "type": r.issue_type.as_str(),
        "fix_versions": r.fix_versions,
        "created_at": format_timestamp(&r.created_at),
        "resolved_at": r.resolved_at.as_ref().map(format_timestamp),
        "reporter_email": r.reporter_email,
        "patches": patches,
    })
}

/// Writes records as canonical JSONL, one object per line, LF-terminated.
pub fn write_jsonl<'a>(
    records: impl IntoIterator<Item = &'a IssueRecord>,
    mut out: impl Write,
) -> io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, &record_to_json(r))?;
        out.write_all(b"\n")?;
    }
    out.flush()
}
