//! Release-level analytics: release windows, innovation counts, cycle time,
//! stakeholder rankings, category cross-tabulation and the share of
//! self-implemented patches.

mod crosstab;
mod ranking;
mod releases;

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

use crate::ingest::{IssueRecord, IssueType};

pub use crosstab::{category_crosstab, CategoryCrosstab};
pub use ranking::{
    average_rank, format_average_rank, rank_release, ranking_series, RankEntry, RankingSeries,
    ReleaseRanking,
};
pub use releases::{
    assign_releases, chronological, issues_for_prefix, load_release_config, Release, ReleaseSpec,
    Version,
};

#[derive(Debug, Error)]
pub enum AnalyticsError {
    #[error("duplicate release id {0}")]
    DuplicateRelease(String),
    #[error("release id {0:?} is not of the form R<major>.<minor>")]
    InvalidReleaseId(String),
    #[error("{path}: {message}")]
    Config { path: String, message: String },
    #[error("no innovation reports to summarize")]
    NoReports,
    #[error("corpus has no patches")]
    NoPatches,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InnovationReport {
    pub release_id: String,
    pub feature_count: u64,
    pub improvement_count: u64,
    pub bug_count: u64,
    pub other_count: u64,
    /// Net changed lines over all patches of the counted issues.
    pub change_size_loc: i64,
    pub cycle_time_days: f64,
}

/// Counts only resolved issues. Cycle time runs from the release's start to
/// its release date, in fractional days.
pub fn innovation_report(release: &Release, corpus: &[IssueRecord]) -> InnovationReport {
    let by_key: HashMap<&str, &IssueRecord> = corpus.iter().map(|i| (i.key.as_str(), i)).collect();
    let mut report = InnovationReport {
        release_id: release.id.clone(),
        feature_count: 0,
        improvement_count: 0,
        bug_count: 0,
        other_count: 0,
        change_size_loc: 0,
        cycle_time_days: (release.released_at - release.start_at).num_milliseconds() as f64
            / 86_400_000.0,
    };
    let resolved = release
        .issues
        .iter()
        .filter_map(|k| by_key.get(k.as_str()))
        .filter(|i| i.is_resolved());
    for issue in resolved {
        match issue.issue_type {
            IssueType::Feature => report.feature_count += 1,
            IssueType::Improvement => report.improvement_count += 1,
            IssueType::Bug => report.bug_count += 1,
            IssueType::Other => report.other_count += 1,
        }
        report.change_size_loc += issue.patches.iter().map(|p| p.net_loc()).sum::<i64>();
    }
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    pub median: f64,
    /// Population standard deviation (n denominator).
    pub std_dev: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Summary> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mid = sorted.len() / 2;
        let median = if sorted.len().is_multiple_of(2) {
            (sorted[mid - 1] + sorted[mid]) / 2.0
        } else {
            sorted[mid]
        };
        let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Some(Summary {
            mean,
            median,
            std_dev: variance.sqrt(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IssueTypeStatistics {
    pub feature: Summary,
    pub improvement: Summary,
    pub bug: Summary,
}

pub fn issue_type_statistics(
    reports: &[InnovationReport],
) -> Result<IssueTypeStatistics, AnalyticsError> {
    let of = |f: fn(&InnovationReport) -> u64| {
        let values: Vec<f64> = reports.iter().map(|r| f(r) as f64).collect();
        Summary::of(&values).ok_or(AnalyticsError::NoReports)
    };
    Ok(IssueTypeStatistics {
        feature: of(|r| r.feature_count)?,
        improvement: of(|r| r.improvement_count)?,
        bug: of(|r| r.bug_count)?,
    })
}

/// Fraction of patches whose author email is exactly the issue's reporter
/// email.
pub fn self_implementation_ratio(corpus: &[IssueRecord]) -> Result<f64, AnalyticsError> {
    let mut total = 0u64;
    let mut own = 0u64;
    for issue in corpus {
        for patch in &issue.patches {
            total += 1;
            if patch.author_email == issue.reporter_email {
                own += 1;
            }
        }
    }
    if total == 0 {
        return Err(AnalyticsError::NoPatches);
    }
    Ok(own as f64 / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{parse_timestamp, Patch};
    use chrono::{DateTime, Utc};

    fn t(s: &str) -> DateTime<Utc> {
        parse_timestamp(s).unwrap()
    }

    fn issue(key: &str, ty: IssueType, resolved: bool, patches: &[(u64, u64)]) -> IssueRecord {
        IssueRecord {
            key: key.into(),
            issue_type: ty,
            fix_versions: vec!["2.2.0".into()],
            created_at: t("2013-11-01T00:00:00Z"),
            resolved_at: resolved.then(|| t("2013-12-01T00:00:00Z")),
            reporter_email: "r@x.com".into(),
            patches: patches
                .iter()
                .map(|(a, d)| Patch::new("r@x.com", *a, *d, t("2013-11-02T00:00:00Z")))
                .collect(),
        }
    }

    fn release(keys: &[&str], start: &str, end: &str) -> Release {
        Release {
            id: "R2.2".into(),
            member_versions: vec!["2.2.0".into()],
            start_at: t(start),
            released_at: t(end),
            issues: keys.iter().map(|k| k.to_string()).collect(),
        }
    }

    /// Days since 1970-01-01 for a proleptic Gregorian date.
    fn civil_days(y: i64, m: i64, d: i64) -> i64 {
        let y = if m <= 2 { y - 1 } else { y };
        let era = y.div_euclid(400);
        let yoe = y - era * 400;
        let mp = (m + 9) % 12;
        let doy = (153 * mp + 2) / 5 + d - 1;
        let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
        era * 146097 + doe - 719468
    }

    #[test]
    fn counts_by_type() {
        let corpus = [
            issue("A", IssueType::Feature, true, &[]),
            issue("B", IssueType::Bug, true, &[]),
            issue("C", IssueType::Bug, true, &[]),
            issue("D", IssueType::Other, true, &[]),
        ];
        let r = innovation_report(
            &release(
                &["A", "B", "C", "D"],
                "2013-10-15T00:00:00Z",
                "2014-02-20T12:00:00Z",
            ),
            &corpus,
        );
        assert_eq!(
            (
                r.feature_count,
                r.improvement_count,
                r.bug_count,
                r.other_count
            ),
            (1, 0, 2, 1)
        );
    }

    #[test]
    fn change_size_and_unresolved() {
        let corpus = [
            issue("A", IssueType::Feature, true, &[(200, 50), (100, 0)]),
            issue("B", IssueType::Bug, false, &[(999, 0)]),
        ];
        let r = innovation_report(
            &release(&["A", "B"], "2013-10-15T00:00:00Z", "2014-02-20T12:00:00Z"),
            &corpus,
        );
        assert_eq!(r.change_size_loc, 250);
        assert_eq!((r.feature_count, r.bug_count), (1, 0));
    }

    #[test]
    fn cycle_time_against_calendar() {
        let r = innovation_report(
            &release(&[], "2013-10-15T00:00:00Z", "2014-02-20T12:00:00Z"),
            &[],
        );
        let oracle = (civil_days(2014, 2, 20) - civil_days(2013, 10, 15)) as f64 + 0.5;
        assert_eq!(oracle, 128.5);
        assert_eq!(r.cycle_time_days, oracle);
    }

    fn report(f: u64, i: u64, b: u64) -> InnovationReport {
        InnovationReport {
            release_id: "R".into(),
            feature_count: f,
            improvement_count: i,
            bug_count: b,
            other_count: 0,
            change_size_loc: 0,
            cycle_time_days: 0.0,
        }
    }

    #[test]
    fn statistics() {
        let s =
            issue_type_statistics(&[report(1, 2, 0), report(1, 4, 0), report(1, 0, 0)]).unwrap();
        assert_eq!(
            (s.feature.mean, s.feature.median, s.feature.std_dev),
            (1.0, 1.0, 0.0)
        );

        let s = issue_type_statistics(&[report(2, 0, 0), report(4, 0, 0)]).unwrap();
        assert_eq!(
            (s.feature.mean, s.feature.median, s.feature.std_dev),
            (3.0, 3.0, 1.0)
        );

        // oracle: python statistics.pstdev([33, 37, 20, 45, 28, 38])
        let counts = [33, 37, 20, 45, 28, 38];
        let reports: Vec<_> = counts.iter().map(|&c| report(c, 0, 0)).collect();
        let s = issue_type_statistics(&reports).unwrap();
        assert_eq!(s.feature.mean, 33.5);
        assert_eq!(s.feature.median, 35.0);
        assert!((s.feature.std_dev - 7.932002689527196).abs() < 1e-12);

        assert!(matches!(
            issue_type_statistics(&[]),
            Err(AnalyticsError::NoReports)
        ));
    }

    #[test]
    fn self_implementation() {
        let mut own = issue("A", IssueType::Bug, true, &[(1, 0), (2, 0)]);
        assert_eq!(
            self_implementation_ratio(std::slice::from_ref(&own)).unwrap(),
            1.0
        );
        for p in &mut own.patches {
            p.author_email = "other@x.com".into();
        }
        assert_eq!(
            self_implementation_ratio(std::slice::from_ref(&own)).unwrap(),
            0.0
        );
        assert!(matches!(
            self_implementation_ratio(&[issue("B", IssueType::Bug, true, &[])]),
            Err(AnalyticsError::NoPatches)
        ));
    }
}
