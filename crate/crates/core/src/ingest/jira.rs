//! Parsing of JIRA REST issue documents into [`IssueRecord`]s.

use chrono::{DateTime, Utc};
use serde::Deserialize;
use thiserror::Error;

use super::diff::{count_lines, has_diff_header};
use super::{parse_timestamp, IssueRecord, IssueType, Patch, RawIssueDocument};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{source_id}: {reason}")]
pub struct ParseError {
    pub source_id: String,
    pub reason: String,
}

#[derive(Debug, Deserialize)]
struct JiraIssue {
    key: String,
    fields: JiraFields,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
struct JiraFields {
    issuetype: Option<Named>,
    #[serde(default)]
    fix_versions: Vec<Named>,
    created: String,
    resolutiondate: Option<String>,
    reporter: Option<User>,
    #[serde(default)]
    attachment: Vec<Attachment>,
}

#[derive(Debug, Deserialize)]
struct Named {
    name: String,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
struct User {
    email_address: Option<String>,
}

#[derive(Debug, Deserialize)]
struct Attachment {
    id: String,
    filename: String,
    author: Option<User>,
    created: String,
}

/// Patch detection: by file extension, or by the body opening like a diff.
pub fn is_patch_attachment(filename: &str, body: Option<&str>) -> bool {
    let lower = filename.to_ascii_lowercase();
    lower.ends_with(".patch") || lower.ends_with(".diff") || body.is_some_and(has_diff_header)
}

fn timestamp(
    doc: &RawIssueDocument,
    field: &str,
    value: &str,
) -> Result<DateTime<Utc>, ParseError> {
    parse_timestamp(value).ok_or_else(|| ParseError {
        source_id: doc.source_id.clone(),
        reason: format!("invalid timestamp in {field}: {value:?}"),
    })
}

/// Parses one issue document. Non-fatal problems (unreadable patch bodies)
/// are returned alongside the record.
pub(crate) fn parse_issue_with_warnings(
    doc: &RawIssueDocument,
) -> Result<(IssueRecord, Vec<String>), ParseError> {
    let err = |reason: String| ParseError {
        source_id: doc.source_id.clone(),
        reason,
    };
    let issue: JiraIssue =
        serde_json::from_str(&doc.payload).map_err(|e| err(format!("malformed payload: {e}")))?;
    if issue.key.is_empty() {
        return Err(err("empty issue key".into()));
    }
    let f = issue.fields;

    let created_at = timestamp(doc, "created", &f.created)?;
    let resolved_at = match f.resolutiondate.as_deref() {
        Some(s) => Some(timestamp(doc, "resolutiondate", s)?),
        None => None,
    };
    if resolved_at.is_some_and(|r| r < created_at) {
        return Err(err("resolutiondate precedes created".into()));
    }
    let reporter_email = f
        .reporter
        .and_then(|u| u.email_address)
        .ok_or_else(|| err("reporter has no email address".into()))?;

    let mut warnings = Vec::new();
    let mut patches = Vec::new();
    for att in &f.attachment {
        let body = doc.attachments.get(&att.id).map(String::as_str);
        if !is_patch_attachment(&att.filename, body) {
            continue;
        }
        let author = att
            .author
            .as_ref()
            .and_then(|u| u.email_address.clone())
            .ok_or_else(|| err(format!("attachment {} has no author email", att.id)))?;
        let submitted_at = timestamp(doc, "attachment.created", &att.created)?;
        let (added, deleted) = match body.map(count_lines) {
            Some(Ok(stats)) => (stats.added, stats.deleted),
            Some(Err(e)) => {
                warnings.push(format!(
                    "{}: attachment {} ({}): unparseable diff: {e}",
                    doc.source_id, att.id, att.filename
                ));
                (0, 0)
            }
            None => {
                warnings.push(format!(
                    "{}: attachment {} ({}): body not fetched",
                    doc.source_id, att.id, att.filename
                ));
                (0, 0)
            }
        };
        patches.push(Patch::new(author, added, deleted, submitted_at));
    }

    let record = IssueRecord {
        key: issue.key,
        issue_type: f
            .issuetype
            .map(|t| IssueType::from_tracker_name(&t.name))
            .unwrap_or(IssueType::Other),
        fix_versions: f.fix_versions.into_iter().map(|v| v.name).collect(),
        created_at,
        resolved_at,
        reporter_email,
        patches,
    };
    Ok((record, warnings))
}

/// Normalizes a fetched issue document. Patch attachments whose diff cannot
/// be read are kept with zero line counts and a logged warning.
pub fn parse_issue(doc: &RawIssueDocument) -> Result<IssueRecord, ParseError> {
    let (record, warnings) = parse_issue_with_warnings(doc)?;
    for w in warnings {
        log::warn!(target: "ingest", "{w}");
    }
    Ok(record)
}
