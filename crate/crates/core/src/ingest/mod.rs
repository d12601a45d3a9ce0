//! Issue-tracker ingestion: crawling, parsing tracker documents, and the
//! canonical JSONL corpus format.

mod crawl;
pub mod diff;
mod jira;
mod jsonl;
mod store;

use std::fmt;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

pub use crawl::{crawl, CrawlConfig, CrawlCursor, CrawlError, CrawlStats, Crawler, RetryPolicy};
pub use jira::{is_patch_attachment, parse_issue, ParseError};
pub use jsonl::{import_jsonl, read_jsonl, write_jsonl, ImportError};
pub use store::{IssueStore, SessionLog, StoreError};

/// Tracker issue type, collapsed to the three kinds the analysis cares about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IssueType {
    Feature,
    Improvement,
    Bug,
    Other,
}

impl IssueType {
    pub const ALL: [IssueType; 4] = [
        IssueType::Feature,
        IssueType::Improvement,
        IssueType::Bug,
        IssueType::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            IssueType::Feature => "feature",
            IssueType::Improvement => "improvement",
            IssueType::Bug => "bug",
            IssueType::Other => "other",
        }
    }

    /// Parses a canonical type name. Only the four lowercase names are accepted.
    pub fn from_canonical(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.as_str() == s)
    }

    /// Maps a tracker's display name ("New Feature", "Bug", ...) onto a type.
    /// Anything unrecognised becomes `Other`.
    pub fn from_tracker_name(name: &str) -> Self {
        match name.trim().to_ascii_lowercase().as_str() {
            "new feature" | "feature" => IssueType::Feature,
            "improvement" => IssueType::Improvement,
            "bug" => IssueType::Bug,
            _ => IssueType::Other,
        }
    }
}

impl fmt::Display for IssueType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One attachment contribution to an issue.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Patch {
    pub author_email: String,
    pub added_loc: u64,
    pub deleted_loc: u64,
    pub submitted_at: DateTime<Utc>,
    /// Whether the patch was committed. Trackers rarely expose this, so it
    /// defaults to `true`.
    pub approved: bool,
}

impl Patch {
    pub fn new(
        author_email: impl Into<String>,
        added_loc: u64,
        deleted_loc: u64,
        submitted_at: DateTime<Utc>,
    ) -> Self {
        Patch {
            author_email: author_email.into(),
            added_loc,
            deleted_loc,
            submitted_at,
            approved: true,
        }
    }

    /// Added minus deleted lines. May be negative.
    pub fn net_loc(&self) -> i64 {
        self.added_loc as i64 - self.deleted_loc as i64
    }
}

/// A normalized tracker issue.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IssueRecord {
    pub key: String,
    pub issue_type: IssueType,
    pub fix_versions: Vec<String>,
    pub created_at: DateTime<Utc>,
    pub resolved_at: Option<DateTime<Utc>>,
    pub reporter_email: String,
    pub patches: Vec<Patch>,
}

impl IssueRecord {
    pub fn is_resolved(&self) -> bool {
        self.resolved_at.is_some()
    }
}

/// A tracker document exactly as it was fetched.
///
/// `payload` holds the issue JSON byte-for-byte as served. Attachment bodies
/// are fetched separately and kept verbatim in `attachments`, keyed by the
/// tracker's attachment id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawIssueDocument {
    pub source_id: String,
    pub payload: String,
    #[serde(default)]
    pub attachments: std::collections::BTreeMap<String, String>,
    pub fetched_at: DateTime<Utc>,
}

impl RawIssueDocument {
    pub fn new(source_id: impl Into<String>, payload: impl Into<String>) -> Self {
        RawIssueDocument {
            source_id: source_id.into(),
            payload: payload.into(),
            attachments: Default::default(),
            fetched_at: Utc::now(),
        }
    }
}

/// Parses RFC 3339 as well as the `+0000`-style offsets JIRA emits, and
/// normalizes to UTC.
pub fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.with_timezone(&Utc));
    }
    DateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S%.f%z")
        .ok()
        .map(|t| t.with_timezone(&Utc))
}

pub fn format_timestamp(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tracker_type_names() {
        assert_eq!(
            IssueType::from_tracker_name("New Feature"),
            IssueType::Feature
        );
        assert_eq!(
            IssueType::from_tracker_name("Improvement"),
            IssueType::Improvement
        );
        assert_eq!(IssueType::from_tracker_name("bug"), IssueType::Bug);
        assert_eq!(IssueType::from_tracker_name("Sub-task"), IssueType::Other);
        assert_eq!(IssueType::from_tracker_name("Test"), IssueType::Other);
    }

    #[test]
    fn timestamps_normalize_to_utc() {
        let a = parse_timestamp("2015-07-06T10:00:00.000+0200").unwrap();
        let b = parse_timestamp("2015-07-06T08:00:00Z").unwrap();
        assert_eq!(a, b);
        assert_eq!(format_timestamp(&b), "2015-07-06T08:00:00Z");
        assert!(parse_timestamp("06/Jul/15").is_none());
    }

    #[test]
    fn net_loc_can_be_negative() {
        let t = parse_timestamp("2015-07-06T08:00:00Z").unwrap();
        assert_eq!(Patch::new("a@x.org", 0, 4, t).net_loc(), -4);
        assert_eq!(Patch::new("a@x.org", 7, 7, t).net_loc(), 0);
    }
}
