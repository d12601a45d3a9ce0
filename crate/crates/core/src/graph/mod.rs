//! Per-release stakeholder collaboration networks.
//!
//! Every issue with patches from two or more stakeholders contributes a
//! directed edge between each ordered pair of them. The edge from `a`
//! carries `a`'s share of the issue's net added lines, so a stakeholder who
//! wrote most of a change exerts most of the influence on that issue. Edge
//! weights accumulate over all issues of the release.

mod export;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::identity::{AffiliationMap, StakeholderId};
use crate::ingest::IssueRecord;

pub use export::{format_weight, write_dot, write_graphml};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NetworkOptions {
    /// Only count patches marked as committed.
    pub committed_only: bool,
}

/// Net contribution of each stakeholder to one issue.
#[derive(Debug, Clone, PartialEq)]
pub struct IssueContribution {
    pub issue_key: String,
    pub shares: BTreeMap<StakeholderId, f64>,
}

/// Stakeholders that co-contributed to one issue (two or more).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IssueCollaboration {
    pub issue_key: String,
    pub stakeholders: BTreeSet<StakeholderId>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetworkError {
    #[error("self-loop on {0}")]
    SelfLoop(StakeholderId),
    #[error("edge {0} -> {1} has non-positive or non-finite weight {2}")]
    BadWeight(StakeholderId, StakeholderId, f64),
}

/// Directed, weighted, self-loop-free graph over stakeholders.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CollaborationNetwork {
    release_id: String,
    vertices: BTreeSet<StakeholderId>,
    edges: BTreeMap<(StakeholderId, StakeholderId), f64>,
    collaborations: Vec<IssueCollaboration>,
}

impl CollaborationNetwork {
    pub fn new(release_id: impl Into<String>) -> Self {
        CollaborationNetwork {
            release_id: release_id.into(),
            ..Default::default()
        }
    }

    pub fn release_id(&self) -> &str {
        &self.release_id
    }

    pub fn vertices(&self) -> &BTreeSet<StakeholderId> {
        &self.vertices
    }

    pub fn edges(&self) -> &BTreeMap<(StakeholderId, StakeholderId), f64> {
        &self.edges
    }

    pub fn collaborations(&self) -> &[IssueCollaboration] {
        &self.collaborations
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn weight(&self, source: &str, target: &str) -> Option<f64> {
        self.edges
            .get(&(
                StakeholderId::new(source).ok()?,
                StakeholderId::new(target).ok()?,
            ))
            .copied()
    }

    pub fn add_vertex(&mut self, id: StakeholderId) {
        self.vertices.insert(id);
    }

    /// Adds `weight` to the edge `source -> target`, creating both vertices
    /// and the edge as needed.
    pub fn add_weight(
        &mut self,
        source: StakeholderId,
        target: StakeholderId,
        weight: f64,
    ) -> Result<(), NetworkError> {
        if source == target {
            return Err(NetworkError::SelfLoop(source));
        }
        if !(weight.is_finite() && weight > 0.0) {
            return Err(NetworkError::BadWeight(source, target, weight));
        }
        self.vertices.insert(source.clone());
        self.vertices.insert(target.clone());
        *self.edges.entry((source, target)).or_insert(0.0) += weight;
        Ok(())
    }

    fn add_collaboration(&mut self, c: &IssueContribution) {
        for ((a, b), w) in issue_edge_weights(c) {
            // shares are strictly positive and keyed by distinct ids
            self.add_weight(a, b, w).expect("valid per-issue edge");
        }
        if c.shares.len() >= 2 {
            self.collaborations.push(IssueCollaboration {
                issue_key: c.issue_key.clone(),
                stakeholders: c.shares.keys().cloned().collect(),
            });
        }
    }
}

fn eligible(
    issue: &IssueRecord,
    opts: NetworkOptions,
) -> impl Iterator<Item = &crate::ingest::Patch> {
    issue
        .patches
        .iter()
        .filter(move |p| !opts.committed_only || p.approved)
}

/// Stakeholders that submitted at least one counted patch to `issue`.
pub fn patch_contributors(
    issue: &IssueRecord,
    map: &AffiliationMap,
    opts: NetworkOptions,
) -> BTreeSet<StakeholderId> {
    eligible(issue, opts)
        .map(|p| map.stakeholder_id_for(&p.author_email))
        .collect()
}

/// Contribution shares with explicit options. Returns `None` when the issue
/// has no counted patches.
pub fn issue_shares_with(
    issue: &IssueRecord,
    map: &AffiliationMap,
    opts: NetworkOptions,
) -> Option<IssueContribution> {
    let mut net: BTreeMap<StakeholderId, u64> = BTreeMap::new();
    for patch in eligible(issue, opts) {
        let positive = patch.net_loc().max(0) as u64;
        *net.entry(map.stakeholder_id_for(&patch.author_email))
            .or_default() += positive;
    }
    if net.is_empty() {
        return None;
    }
    let shares: BTreeMap<StakeholderId, f64> = if net.values().all(|&x| x == 0) {
        // nobody added net lines; fall back to one unit per contributor
        net.into_keys().map(|id| (id, 1.0)).collect()
    } else {
        net.into_iter()
            .filter(|&(_, x)| x > 0)
            .map(|(id, x)| (id, x as f64))
            .collect()
    };
    Some(IssueContribution {
        issue_key: issue.key.clone(),
        shares,
    })
}

/// Net-LOC contribution of each stakeholder to `issue`: the sum of each of
/// their patches' added-minus-deleted lines, floored at zero per patch.
/// Stakeholders with no positive contribution are dropped unless everyone
/// is at zero, in which case each contributor gets an equal share.
pub fn issue_shares(issue: &IssueRecord, map: &AffiliationMap) -> Option<IssueContribution> {
    issue_shares_with(issue, map, NetworkOptions::default())
}

/// Per-issue edge weights: `w(a -> b) = share(a) / total` for every ordered
/// pair of distinct contributors.
pub fn issue_edge_weights(c: &IssueContribution) -> BTreeMap<(StakeholderId, StakeholderId), f64> {
    let total: f64 = c.shares.values().sum();
    let mut weights = BTreeMap::new();
    for (source, &x) in &c.shares {
        let w = x / total;
        for target in c.shares.keys().filter(|t| *t != source) {
            weights.insert((source.clone(), target.clone()), w);
        }
    }
    weights
}

/// Builds the network for one release. Issues are folded in key order so the
/// floating-point sums do not depend on input order.
pub fn build_network_with(
    issues: &[IssueRecord],
    map: &AffiliationMap,
    release_id: &str,
    opts: NetworkOptions,
) -> CollaborationNetwork {
    let mut ordered: Vec<&IssueRecord> = issues.iter().collect();
    ordered.sort_by(|a, b| a.key.cmp(&b.key));

    let mut net = CollaborationNetwork::new(release_id);
    for issue in ordered {
        for id in patch_contributors(issue, map, opts) {
            net.add_vertex(id);
        }
        if let Some(c) = issue_shares_with(issue, map, opts) {
            net.add_collaboration(&c);
        }
    }
    net
}

pub fn build_network(
    issues: &[IssueRecord],
    map: &AffiliationMap,
    release_id: &str,
) -> CollaborationNetwork {
    build_network_with(issues, map, release_id, NetworkOptions::default())
}
