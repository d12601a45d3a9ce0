use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::AnalyticsError;
use crate::ingest::IssueRecord;

/// A dotted numeric version such as `2.7.1`. At least major and minor are
/// required.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Version(Vec<u64>);

impl Version {
    pub fn parse(s: &str) -> Option<Version> {
        let parts = s
            .trim()
            .split('.')
            .map(|p| {
                if p.is_empty() || !p.bytes().all(|b| b.is_ascii_digit()) {
                    None
                } else {
                    p.parse::<u64>().ok()
                }
            })
            .collect::<Option<Vec<u64>>>()?;
        (parts.len() >= 2).then_some(Version(parts))
    }

    pub fn major_minor(&self) -> (u64, u64) {
        (self.0[0], self.0[1])
    }
}

/// One entry of the release configuration file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReleaseSpec {
    pub id: String,
    pub released_at: DateTime<Utc>,
}

impl ReleaseSpec {
    pub fn new(id: impl Into<String>, released_at: DateTime<Utc>) -> Self {
        ReleaseSpec {
            id: id.into(),
            released_at,
        }
    }

    /// Parses `R<major>.<minor>`.
    pub fn major_minor(&self) -> Result<(u64, u64), AnalyticsError> {
        let invalid = || AnalyticsError::InvalidReleaseId(self.id.clone());
        let rest = self.id.strip_prefix('R').ok_or_else(invalid)?;
        let v = Version::parse(rest).ok_or_else(invalid)?;
        if v.0.len() != 2 {
            return Err(invalid());
        }
        Ok(v.major_minor())
    }
}

pub fn load_release_config(path: impl AsRef<Path>) -> Result<Vec<ReleaseSpec>, AnalyticsError> {
    let path = path.as_ref();
    let err = |message: String| AnalyticsError::Config {
        path: path.display().to_string(),
        message,
    };
    let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
    serde_json::from_str(&text).map_err(|e| err(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Release {
    pub id: String,
    pub member_versions: Vec<String>,
    pub start_at: DateTime<Utc>,
    pub released_at: DateTime<Utc>,
    /// Keys of the assigned issues, sorted.
    pub issues: Vec<String>,
}

/// Releases ordered by release date, then id.
pub fn chronological(releases: &BTreeMap<String, Release>) -> Vec<&Release> {
    let mut ordered: Vec<&Release> = releases.values().collect();
    ordered.sort_by(|a, b| {
        a.released_at
            .cmp(&b.released_at)
            .then_with(|| a.id.cmp(&b.id))
    });
    ordered
}

/// Assigns each issue to the configured `R<major>.<minor>` release matching
/// one of its fix versions. When fix versions span several configured
/// releases the earliest-released one wins. Issues matching no configured
/// release are left out.
///
/// A release starts when the previous configured release shipped; the first
/// release starts at its earliest patch (or issue creation if it has no
/// patches), capped at its release date.
pub fn assign_releases(
    corpus: &[IssueRecord],
    config: &[ReleaseSpec],
) -> Result<BTreeMap<String, Release>, AnalyticsError> {
    let mut specs: Vec<(&ReleaseSpec, (u64, u64))> = Vec::with_capacity(config.len());
    let mut ids = BTreeSet::new();
    for spec in config {
        if !ids.insert(spec.id.as_str()) {
            return Err(AnalyticsError::DuplicateRelease(spec.id.clone()));
        }
        specs.push((spec, spec.major_minor()?));
    }
    specs.sort_by(|a, b| {
        a.0.released_at
            .cmp(&b.0.released_at)
            .then_with(|| a.0.id.cmp(&b.0.id))
    });
    let position: BTreeMap<(u64, u64), usize> = specs
        .iter()
        .enumerate()
        .map(|(i, (_, mm))| (*mm, i))
        .collect();

    let mut members: Vec<Vec<&IssueRecord>> = vec![Vec::new(); specs.len()];
    let mut versions: Vec<BTreeSet<Version>> = vec![BTreeSet::new(); specs.len()];
    for issue in corpus {
        let mut best: Option<usize> = None;
        let mut parsed = Vec::new();
        for raw in &issue.fix_versions {
            match Version::parse(raw) {
                Some(v) => {
                    if let Some(&pos) = position.get(&v.major_minor()) {
                        best = Some(best.map_or(pos, |b| b.min(pos)));
                    }
                    parsed.push(v);
                }
                None => log::warn!(
                    target: "analytics",
                    "{}: ignoring unparseable fix version {raw:?}", issue.key
                ),
            }
        }
        if let Some(pos) = best {
            let mm = specs[pos].1;
            versions[pos].extend(parsed.into_iter().filter(|v| v.major_minor() == mm));
            members[pos].push(issue);
        }
    }

    let mut releases = BTreeMap::new();
    for (pos, (spec, _)) in specs.iter().enumerate() {
        let issues = &members[pos];
        let start_at = if pos > 0 {
            specs[pos - 1].0.released_at
        } else {
            let earliest_patch = issues
                .iter()
                .flat_map(|i| i.patches.iter().map(|p| p.submitted_at))
                .min();
            let earliest = earliest_patch.or_else(|| issues.iter().map(|i| i.created_at).min());
            earliest.map_or(spec.released_at, |t| t.min(spec.released_at))
        };
        let mut keys: Vec<String> = issues.iter().map(|i| i.key.clone()).collect();
        keys.sort();
        let member_versions = versions[pos]
            .iter()
            .map(|v| v.0.iter().map(u64::to_string).collect::<Vec<_>>().join("."))
            .collect();
        releases.insert(
            spec.id.clone(),
            Release {
                id: spec.id.clone(),
                member_versions,
                start_at,
                released_at: spec.released_at,
                issues: keys,
            },
        );
    }
    Ok(releases)
}

/// Issues whose fix versions fall under `release_id`'s major.minor, without
/// consulting a release configuration.
pub fn issues_for_prefix<'a>(
    corpus: &'a [IssueRecord],
    release_id: &str,
) -> Result<Vec<&'a IssueRecord>, AnalyticsError> {
    let spec = ReleaseSpec::new(release_id, DateTime::<Utc>::MIN_UTC);
    let mm = spec.major_minor()?;
    Ok(corpus
        .iter()
        .filter(|i| {
            i.fix_versions
                .iter()
                .filter_map(|v| Version::parse(v))
                .any(|v| v.major_minor() == mm)
        })
        .collect())
}
