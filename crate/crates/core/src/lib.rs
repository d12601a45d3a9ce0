//! Stakeholder collaboration networks mined from issue trackers.
//!
//! The pipeline reads tracker issues and their patch attachments, maps
//! contributor emails to organizations, and builds one directed weighted
//! network per release in which an edge `a -> b` accumulates `a`'s share of
//! the net lines added to issues both organizations worked on. On top of
//! those networks it computes centralities, clustering and density, and
//! release-level innovation and cycle-time figures.

pub mod analytics;
pub mod graph;
pub mod identity;
pub mod ingest;
pub mod metrics;
pub mod report;

pub use graph::{build_network, issue_edge_weights, issue_shares, CollaborationNetwork};
pub use identity::{resolve, AffiliationMap, StakeholderId, UserCategory};
pub use ingest::{import_jsonl, parse_issue, IssueRecord, IssueType, Patch, RawIssueDocument};
pub use report::{run_pipeline, PipelineConfig};
