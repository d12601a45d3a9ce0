use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use ecograph::analytics::{assign_releases, issues_for_prefix, load_release_config};
use ecograph::graph::{build_network_with, write_dot, write_graphml, NetworkOptions};
use ecograph::identity::{resolve, unresolved_report, Resolution};
use ecograph::ingest::{self, CrawlConfig, CrawlCursor, IssueStore, SessionLog};
use ecograph::metrics::{centrality_table, graph_stats};
use ecograph::report::{self, format_unresolved, tables, PipelineConfig};
use ecograph::{AffiliationMap, CollaborationNetwork, IssueRecord};

#[derive(Parser)]
#[command(
    name = "ecograph",
    version,
    about = "Stakeholder collaboration networks from issue trackers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Crawl a JIRA instance into raw session logs and a normalized corpus
    Crawl(CrawlArgs),
    /// Validate a canonical JSONL corpus
    Import {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Resolve contributor emails against an affiliation map
    Resolve {
        #[arg(long)]
        map: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        /// Only list emails that do not resolve, with occurrence counts
        #[arg(long)]
        report_unresolved: bool,
    },
    /// Build one release's collaboration network
    Network {
        #[command(flatten)]
        release: ReleaseArgs,
        #[arg(long)]
        out_graphml: PathBuf,
        #[arg(long)]
        out_dot: Option<PathBuf>,
    },
    /// Compute one release's centralities and graph statistics
    Metrics {
        #[command(flatten)]
        release: ReleaseArgs,
        #[arg(long)]
        out_csv: PathBuf,
        /// Graph statistics CSV; printed to stdout when omitted
        #[arg(long)]
        out_stats_csv: Option<PathBuf>,
    },
    /// Run the full analysis over all configured releases
    Analyze {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        releases: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10)]
        top_n: usize,
        #[arg(long)]
        strict: bool,
        #[arg(long)]
        committed_only: bool,
    },
    /// Run the full analysis from a JSON pipeline config
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct CrawlArgs {
    #[arg(long)]
    endpoint: String,
    #[arg(long)]
    query: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 50)]
    page_size: usize,
    #[arg(long, default_value_t = 4)]
    parallelism: usize,
    /// Continue from the cursor left by a failed crawl in the same directory
    #[arg(long)]
    resume: bool,
}

#[derive(Args)]
struct ReleaseArgs {
    /// Release id, e.g. R2.7
    #[arg(long)]
    release: String,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    map: PathBuf,
    /// Release config; without it membership is by fix-version prefix alone
    #[arg(long)]
    releases: Option<PathBuf>,
    #[arg(long)]
    strict: bool,
    #[arg(long)]
    committed_only: bool,
}

fn init_logging() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format(|buf, record| {
            let line = serde_json::json!({
                "level": record.level().as_str(),
                "stage": record.target(),
                "msg": record.args().to_string(),
            });
            writeln!(buf, "{line}")
        })
        .target(env_logger::Target::Stderr)
        .init();
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| parent.display().to_string())?;
    }
    Ok(BufWriter::new(
        File::create(path).with_context(|| path.display().to_string())?,
    ))
}

fn crawl(args: CrawlArgs) -> Result<()> {
    let cursor_path = args.out.join("cursor.json");
    let mut config = CrawlConfig::new(&args.endpoint, &args.query);
    config.page_size = args.page_size.max(1);
    config.parallelism = args.parallelism.max(1);
    if args.resume {
        let text = fs::read_to_string(&cursor_path)
            .with_context(|| format!("no cursor to resume from at {}", cursor_path.display()))?;
        let cursor: CrawlCursor = serde_json::from_str(&text)?;
        if cursor.endpoint != args.endpoint || cursor.query != args.query {
            bail!("cursor was written for a different endpoint or query");
        }
        config = config.resume_from(&cursor);
    }

    let session = chrono::Utc::now().format("%Y%m%dT%H%M%S%.3fZ");
    let log = SessionLog::open(
        args.out
            .join("raw")
            .join(format!("session-{session}.jsonl")),
    )?;
    let store = IssueStore::open(args.out.join("issues"))?;
    let mut crawler = ingest::crawl(config, &log)?;
    let mut parse_failures = 0usize;
    let mut failure = None;
    for doc in crawler.by_ref() {
        match doc {
            Ok(doc) => match ingest::parse_issue(&doc) {
                Ok(record) => store.put(&record)?,
                Err(e) => {
                    parse_failures += 1;
                    log::error!(target: "ingest", "{e}");
                }
            },
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
    }
    let stats = crawler.stats();
    if let Some(e) = failure {
        if let ingest::CrawlError::Exhausted { cursor, .. } = &e {
            fs::write(&cursor_path, serde_json::to_string_pretty(cursor)?)?;
            log::error!(target: "crawl", "cursor saved to {}", cursor_path.display());
        }
        return Err(e.into());
    }
    let _ = fs::remove_file(&cursor_path);
    let n = store.export(args.out.join("corpus.jsonl"))?;
    log::info!(
        target: "crawl",
        "{} documents over {} pages ({} retries, {} unparseable); corpus has {n} issues",
        stats.documents, stats.pages, stats.retries, parse_failures
    );
    Ok(())
}

fn release_issues(args: &ReleaseArgs, corpus: &[IssueRecord]) -> Result<Vec<IssueRecord>> {
    let issues: Vec<IssueRecord> = match &args.releases {
        Some(path) => {
            let config = load_release_config(path)?;
            let releases = assign_releases(corpus, &config)?;
            let release = releases
                .get(&args.release)
                .with_context(|| format!("release {} is not configured", args.release))?;
            corpus
                .iter()
                .filter(|i| release.issues.binary_search(&i.key).is_ok())
                .cloned()
                .collect()
        }
        None => issues_for_prefix(corpus, &args.release)?
            .into_iter()
            .cloned()
            .collect(),
    };
    Ok(issues)
}

fn release_network(args: &ReleaseArgs) -> Result<(CollaborationNetwork, AffiliationMap)> {
    let corpus = ingest::import_jsonl(&args.input)?;
    let map = AffiliationMap::load(&args.map)?;
    let issues = release_issues(args, &corpus)?;
    let unresolved = unresolved_report(&issues, &map);
    if args.strict && !unresolved.is_empty() {
        bail!(
            "{} unresolved contributor email(s):\n{}",
            unresolved.len(),
            format_unresolved(&unresolved)
        );
    }
    let opts = NetworkOptions {
        committed_only: args.committed_only,
    };
    Ok((build_network_with(&issues, &map, &args.release, opts), map))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Crawl(args) => crawl(args)?,
        Command::Import { input } => {
            let records = ingest::import_jsonl(&input)?;
            let patches: usize = records.iter().map(|r| r.patches.len()).sum();
            println!("{} issues, {patches} patches", records.len());
        }
        Command::Resolve {
            map,
            input,
            report_unresolved,
        } => {
            let map = AffiliationMap::load(&map)?;
            let corpus = ingest::import_jsonl(&input)?;
            let mut out = io::stdout().lock();
            if report_unresolved {
                writeln!(out, "email,count")?;
                for (email, n) in unresolved_report(&corpus, &map) {
                    writeln!(out, "{email},{n}")?;
                }
            } else {
                let emails: std::collections::BTreeSet<&str> = corpus
                    .iter()
                    .flat_map(|i| {
                        std::iter::once(i.reporter_email.as_str())
                            .chain(i.patches.iter().map(|p| p.author_email.as_str()))
                    })
                    .collect();
                writeln!(out, "email,stakeholder")?;
                for email in emails {
                    let who = match resolve(email, &map) {
                        Ok(Resolution::Resolved(s)) => s.id.to_string(),
                        Ok(Resolution::Unresolved(_)) => String::new(),
                        Err(e) => {
                            log::warn!(target: "resolve", "{e}");
                            String::new()
                        }
                    };
                    writeln!(out, "{email},{who}")?;
                }
            }
        }
        Command::Network {
            release,
            out_graphml,
            out_dot,
        } => {
            let (net, map) = release_network(&release)?;
            write_graphml(&net, &map, create(&out_graphml)?)?;
            if let Some(dot) = out_dot {
                write_dot(&net, &map, create(&dot)?)?;
            }
            log::info!(
                target: "network",
                "{}: {} vertices, {} edges", net.release_id(), net.vertex_count(), net.edge_count()
            );
        }
        Command::Metrics {
            release,
            out_csv,
            out_stats_csv,
        } => {
            let (net, _) = release_network(&release)?;
            let table = centrality_table(&net);
            let stats = graph_stats(&net);
            tables::write_centralities([(net.release_id(), &table)], create(&out_csv)?)?;
            match out_stats_csv {
                Some(path) => {
                    tables::write_graph_stats([(net.release_id(), &stats)], create(&path)?)?
                }
                None => {
                    tables::write_graph_stats([(net.release_id(), &stats)], io::stdout().lock())?
                }
            }
        }
        Command::Analyze {
            input,
            map,
            releases,
            out,
            top_n,
            strict,
            committed_only,
        } => {
            let config = PipelineConfig {
                corpus: input,
                affiliations: map,
                releases,
                out,
                top_n,
                strict,
                committed_only,
            };
            report::run_pipeline(&config)?;
        }
        Command::Run { config } => {
            let config = PipelineConfig::load(&config)?;
            report::run_pipeline(&config)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
