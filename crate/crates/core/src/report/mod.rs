//! End-to-end pipeline: import, resolve, build per-release networks, compute
//! metrics and analytics, export, and record a manifest of everything
//! written.
//!
//! Outputs are staged in a scratch directory and only moved into the output
//! directory once every stage has succeeded, so a failed run leaves neither
//! partial artifacts nor a manifest behind. Nothing time-dependent is
//! written, so identical inputs give byte-identical outputs.

pub mod tables;

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::analytics::{
    self, assign_releases, category_crosstab, chronological, format_average_rank,
    innovation_report, issue_type_statistics, load_release_config, ranking_series,
    self_implementation_ratio, AnalyticsError, IssueTypeStatistics, RankingSeries,
};
use crate::graph::{build_network_with, write_graphml, CollaborationNetwork, NetworkOptions};
use crate::identity::{unresolved_report, AffiliationMap, IdentityError, StakeholderId};
use crate::ingest::{import_jsonl, ImportError, IssueRecord};
use crate::metrics::{centrality_table, graph_stats, CentralityTable, GraphStats};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config {path}: {message}")]
    Config { path: String, message: String },
    #[error(transparent)]
    Import(#[from] ImportError),
    #[error(transparent)]
    Identity(#[from] IdentityError),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("no issues in scope")]
    NoIssuesInScope,
    #[error("{} unresolved contributor email(s):\n{}", .0.len(), format_unresolved(.0))]
    Unresolved(Vec<(String, usize)>),
}

pub fn format_unresolved(report: &[(String, usize)]) -> String {
    report
        .iter()
        .map(|(email, n)| format!("  {email}\t{n}"))
        .collect::<Vec<_>>()
        .join("\n")
}

fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> PipelineError {
    let path = path.into();
    move |source| PipelineError::Io { path, source }
}

fn default_top_n() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub corpus: PathBuf,
    pub affiliations: PathBuf,
    pub releases: PathBuf,
    pub out: PathBuf,
    #[serde(default = "default_top_n")]
    pub top_n: usize,
    #[serde(default)]
    pub strict: bool,
    #[serde(default)]
    pub committed_only: bool,
}

impl PipelineConfig {
    /// Loads a JSON config; relative paths are taken relative to the config
    /// file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let err = |message: String| PipelineError::Config {
            path: path.display().to_string(),
            message,
        };
        let text = fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        let mut config: PipelineConfig =
            serde_json::from_str(&text).map_err(|e| err(e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [
            &mut config.corpus,
            &mut config.affiliations,
            &mut config.releases,
            &mut config.out,
        ] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        for (name, p) in [
            ("corpus", &self.corpus),
            ("affiliations", &self.affiliations),
            ("releases", &self.releases),
        ] {
            if !p.is_file() {
                return Err(PipelineError::Config {
                    path: p.display().to_string(),
                    message: format!("{name} file not found"),
                });
            }
        }
        fs::create_dir_all(&self.out).map_err(io_err(&self.out))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub files: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, Serialize)]
struct AverageRank {
    stakeholder: StakeholderId,
    average_rank: String,
}

#[derive(Debug, Clone, Serialize)]
struct Summary {
    releases: Vec<String>,
    issues_in_scope: usize,
    issue_type_statistics: IssueTypeStatistics,
    self_implementation_ratio: Option<f64>,
    crosstab_unlabeled_pairs: u64,
    unresolved_contributors: usize,
    average_ranks: BTreeMap<String, Vec<AverageRank>>,
}

/// Writes into a scratch directory and tracks what was written.
struct Staging {
    root: PathBuf,
    files: Vec<String>,
}

impl Staging {
    fn new(out: &Path) -> Result<Self, PipelineError> {
        let root = out.join(format!(".staging-{}", std::process::id()));
        if root.exists() {
            fs::remove_dir_all(&root).map_err(io_err(&root))?;
        }
        fs::create_dir_all(&root).map_err(io_err(&root))?;
        Ok(Staging {
            root,
            files: Vec::new(),
        })
    }

    fn write<F>(&mut self, rel: &str, fill: F) -> Result<(), PipelineError>
    where
        F: FnOnce(&mut BufWriter<File>) -> io::Result<()>,
    {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
        let file = File::create(&path).map_err(io_err(&path))?;
        let mut w = BufWriter::new(file);
        fill(&mut w)
            .and_then(|_| w.flush())
            .map_err(io_err(&path))?;
        self.files.push(rel.to_string());
        Ok(())
    }

    /// Moves staged files into `out` and returns their manifest entries.
    fn commit(self, out: &Path) -> Result<Manifest, PipelineError> {
        let mut entries = Vec::with_capacity(self.files.len());
        for rel in &self.files {
            let from = self.root.join(rel);
            let to = out.join(rel);
            if let Some(parent) = to.parent() {
                fs::create_dir_all(parent).map_err(io_err(parent))?;
            }
            let bytes = fs::read(&from).map_err(io_err(&from))?;
            fs::rename(&from, &to).map_err(io_err(&to))?;
            entries.push(ManifestEntry {
                path: rel.clone(),
                sha256: hex::encode(Sha256::digest(&bytes)),
                bytes: bytes.len() as u64,
            });
        }
        let _ = fs::remove_dir_all(&self.root);
        entries.sort_by(|a, b| a.path.cmp(&b.path));
        Ok(Manifest { files: entries })
    }

    fn abort(self) {
        let _ = fs::remove_dir_all(&self.root);
    }
}

fn csv_io(e: csv::Error) -> io::Error {
    io::Error::other(e)
}

/// Per-release results, in release-date order.
struct ReleaseAnalysis {
    network: CollaborationNetwork,
    centralities: CentralityTable,
    stats: GraphStats,
}

fn analyze(config: &PipelineConfig, staging: &mut Staging) -> Result<(), PipelineError> {
    log::info!(target: "import", "reading {}", config.corpus.display());
    let corpus = import_jsonl(&config.corpus)?;
    let map = AffiliationMap::load(&config.affiliations)?;
    let release_config = load_release_config(&config.releases)?;

    let releases = assign_releases(&corpus, &release_config)?;
    let ordered = chronological(&releases);
    let by_key: BTreeMap<&str, &IssueRecord> = corpus.iter().map(|i| (i.key.as_str(), i)).collect();
    let in_scope: Vec<IssueRecord> = ordered
        .iter()
        .flat_map(|r| r.issues.iter())
        .map(|k| by_key[k.as_str()].clone())
        .collect();
    if in_scope.is_empty() {
        return Err(PipelineError::NoIssuesInScope);
    }
    log::info!(target: "import", "{} of {} issues in {} releases", in_scope.len(), corpus.len(), ordered.len());

    let unresolved = unresolved_report(&in_scope, &map);
    if config.strict && !unresolved.is_empty() {
        return Err(PipelineError::Unresolved(unresolved));
    }
    if !unresolved.is_empty() {
        log::warn!(target: "resolve", "{} unresolved emails grouped as _unaffiliated", unresolved.len());
    }

    let opts = NetworkOptions {
        committed_only: config.committed_only,
    };
    let mut analyses = Vec::with_capacity(ordered.len());
    for release in &ordered {
        let issues: Vec<IssueRecord> = release
            .issues
            .iter()
            .map(|k| by_key[k.as_str()].clone())
            .collect();
        let network = build_network_with(&issues, &map, &release.id, opts);
        log::info!(
            target: "network",
            "{}: {} vertices, {} edges", release.id, network.vertex_count(), network.edge_count()
        );
        let centralities = centrality_table(&network);
        let stats = graph_stats(&network);
        analyses.push(ReleaseAnalysis {
            network,
            centralities,
            stats,
        });
    }

    for a in &analyses {
        staging.write(
            &format!("networks/{}.graphml", a.network.release_id()),
            |w| write_graphml(&a.network, &map, w),
        )?;
    }
    staging.write("metrics.csv", |w| {
        tables::write_centralities(
            analyses
                .iter()
                .map(|a| (a.network.release_id(), &a.centralities)),
            w,
        )
        .map_err(csv_io)
    })?;
    staging.write("graph_stats.csv", |w| {
        tables::write_graph_stats(
            analyses.iter().map(|a| (a.network.release_id(), &a.stats)),
            w,
        )
        .map_err(csv_io)
    })?;

    log::info!(target: "analytics", "innovation and rankings");
    let reports: Vec<_> = ordered
        .iter()
        .map(|r| innovation_report(r, &corpus))
        .collect();
    staging.write("innovation.csv", |w| {
        tables::write_innovation(&reports, w).map_err(csv_io)
    })?;

    let metric = |name: &str, f: fn(&crate::metrics::Centrality) -> f64| -> RankingSeries {
        let per_release: Vec<(String, BTreeMap<StakeholderId, f64>)> = analyses
            .iter()
            .map(|a| {
                let values = a
                    .centralities
                    .iter()
                    .map(|(k, c)| (k.clone(), f(c)))
                    .collect();
                (a.network.release_id().to_string(), values)
            })
            .collect();
        ranking_series(name, &per_release)
    };
    let series = [
        metric("out_degree", |c| c.out_degree),
        metric("betweenness", |c| c.betweenness),
        metric("closeness", |c| c.closeness),
    ];
    let tops: Vec<Vec<StakeholderId>> = series.iter().map(|s| s.top_n(config.top_n)).collect();
    staging.write("rankings.csv", |w| {
        tables::write_rankings(series.iter().zip(tops.iter().map(Vec::as_slice)), w).map_err(csv_io)
    })?;

    let networks: Vec<CollaborationNetwork> = analyses.into_iter().map(|a| a.network).collect();
    let crosstab = category_crosstab(&networks, &map);
    staging.write("crosstab.csv", |w| {
        tables::write_crosstab(&crosstab, w).map_err(csv_io)
    })?;

    let summary = Summary {
        releases: ordered.iter().map(|r| r.id.clone()).collect(),
        issues_in_scope: in_scope.len(),
        issue_type_statistics: issue_type_statistics(&reports)?,
        self_implementation_ratio: match self_implementation_ratio(&in_scope) {
            Ok(r) => Some(r),
            Err(analytics::AnalyticsError::NoPatches) => None,
            Err(e) => return Err(e.into()),
        },
        crosstab_unlabeled_pairs: crosstab.unlabeled_pairs,
        unresolved_contributors: unresolved.len(),
        average_ranks: series
            .iter()
            .zip(&tops)
            .map(|(s, top)| {
                let ranks = top
                    .iter()
                    .map(|id| AverageRank {
                        stakeholder: id.clone(),
                        average_rank: format_average_rank(s.average_rank[id]),
                    })
                    .collect();
                (s.metric.clone(), ranks)
            })
            .collect(),
    };
    staging.write("summary.json", |w| {
        serde_json::to_writer_pretty(&mut *w, &summary)?;
        w.write_all(b"\n")
    })?;
    Ok(())
}

/// Runs every stage and writes `manifest.json` last. On error the output
/// directory holds no new artifacts and no manifest.
pub fn run_pipeline(config: &PipelineConfig) -> Result<Manifest, PipelineError> {
    config.validate()?;
    let manifest_path = config.out.join(MANIFEST);
    if manifest_path.exists() {
        fs::remove_file(&manifest_path).map_err(io_err(&manifest_path))?;
    }
    let mut staging = Staging::new(&config.out)?;
    if let Err(e) = analyze(config, &mut staging) {
        log::error!(target: "report", "pipeline failed: {e}");
        staging.abort();
        return Err(e);
    }
    let manifest = staging.commit(&config.out)?;
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    fs::write(&manifest_path, text).map_err(io_err(&manifest_path))?;
    log::info!(target: "report", "wrote {} files", manifest.files.len());
    Ok(manifest)
}
