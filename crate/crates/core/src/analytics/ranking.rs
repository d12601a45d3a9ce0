use std::collections::BTreeMap;

use serde::Serialize;

use crate::identity::StakeholderId;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankEntry {
    pub stakeholder: StakeholderId,
    pub value: f64,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReleaseRanking {
    pub release_id: String,
    /// Ordered by rank.
    pub entries: Vec<RankEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankingSeries {
    pub metric: String,
    pub releases: Vec<ReleaseRanking>,
    /// Mean rank over the releases the stakeholder appears in.
    pub average_rank: BTreeMap<StakeholderId, f64>,
    /// Metric value summed over all releases.
    pub accumulated: BTreeMap<StakeholderId, f64>,
}

impl RankingSeries {
    /// The `n` stakeholders with the highest accumulated value, ties by id.
    pub fn top_n(&self, n: usize) -> Vec<StakeholderId> {
        let mut all: Vec<(&StakeholderId, f64)> =
            self.accumulated.iter().map(|(k, v)| (k, *v)).collect();
        all.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        all.into_iter().take(n).map(|(k, _)| k.clone()).collect()
    }

    pub fn rank_of(&self, release_id: &str, stakeholder: &StakeholderId) -> Option<usize> {
        self.releases
            .iter()
            .find(|r| r.release_id == release_id)?
            .entries
            .iter()
            .find(|e| &e.stakeholder == stakeholder)
            .map(|e| e.rank)
    }
}

/// Ranks one release: descending value, ties by ascending id, ranks 1..m.
pub fn rank_release(values: &BTreeMap<StakeholderId, f64>) -> Vec<RankEntry> {
    let mut sorted: Vec<(&StakeholderId, f64)> = values.iter().map(|(k, v)| (k, *v)).collect();
    sorted.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    sorted
        .into_iter()
        .enumerate()
        .map(|(i, (id, value))| RankEntry {
            stakeholder: id.clone(),
            value,
            rank: i + 1,
        })
        .collect()
}

pub fn average_rank(ranks: &[usize]) -> f64 {
    ranks.iter().sum::<usize>() as f64 / ranks.len() as f64
}

/// Average ranks are reported to one decimal.
pub fn format_average_rank(avg: f64) -> String {
    format!("{avg:.1}")
}

/// Builds per-release rankings for one metric. `per_release` must be in
/// release order; each map holds the stakeholders present in that release.
pub fn ranking_series(
    metric: &str,
    per_release: &[(String, BTreeMap<StakeholderId, f64>)],
) -> RankingSeries {
    let mut ranks: BTreeMap<StakeholderId, Vec<usize>> = BTreeMap::new();
    let mut accumulated: BTreeMap<StakeholderId, f64> = BTreeMap::new();
    let mut releases = Vec::with_capacity(per_release.len());

    for (release_id, values) in per_release {
        let entries = rank_release(values);
        for e in &entries {
            ranks.entry(e.stakeholder.clone()).or_default().push(e.rank);
            *accumulated.entry(e.stakeholder.clone()).or_default() += e.value;
        }
        releases.push(ReleaseRanking {
            release_id: release_id.clone(),
            entries,
        });
    }

    RankingSeries {
        metric: metric.to_string(),
        releases,
        average_rank: ranks
            .into_iter()
            .map(|(id, r)| (id, average_rank(&r)))
            .collect(),
        accumulated,
    }
}
