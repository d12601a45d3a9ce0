//! Paginated issue crawler for JIRA's REST search API.
//!
//! Pages are requested with `startAt`/`maxResults` until the server's
//! `total` is reached or it returns an empty page. After the first page, up
//! to `parallelism` pages are fetched concurrently; results are still
//! persisted and yielded in page order. Every document is appended to the
//! session log before the iterator hands it out.

use std::collections::{HashSet, VecDeque};
use std::time::Duration;

use chrono::Utc;
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use thiserror::Error;

use super::store::{SessionLog, StoreError};
use super::RawIssueDocument;

pub const TIMEOUT_ENV: &str = "ECOGRAPH_HTTP_TIMEOUT_SECS";
const SEARCH_PATH: &str = "/rest/api/2/search";
const FIELDS: &str = "issuetype,fixVersions,created,resolutiondate,reporter,attachment";

#[derive(Debug, Clone, Copy)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay: Duration,
    pub max_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 5,
            base_delay: Duration::from_millis(500),
            max_delay: Duration::from_secs(30),
        }
    }
}

impl RetryPolicy {
    fn delay(&self, attempt: u32) -> Duration {
        let factor = 1u32.checked_shl(attempt).unwrap_or(u32::MAX);
        self.base_delay.saturating_mul(factor).min(self.max_delay)
    }
}

#[derive(Debug, Clone)]
pub struct CrawlConfig {
    /// Tracker base URL, e.g. `https://issues.apache.org/jira`.
    pub endpoint: String,
    pub query: String,
    pub page_size: usize,
    pub parallelism: usize,
    pub timeout: Duration,
    pub retry: RetryPolicy,
    /// Offset of the first page; nonzero when resuming.
    pub start_at: usize,
    /// Attachments larger than this (by the tracker's reported size) are not fetched.
    pub max_attachment_bytes: u64,
}

impl CrawlConfig {
    pub fn new(endpoint: impl Into<String>, query: impl Into<String>) -> Self {
        CrawlConfig {
            endpoint: endpoint.into(),
            query: query.into(),
            page_size: 50,
            parallelism: 4,
            timeout: timeout_from_env(),
            retry: RetryPolicy::default(),
            start_at: 0,
            max_attachment_bytes: 8 << 20,
        }
    }

    pub fn resume_from(mut self, cursor: &CrawlCursor) -> Self {
        self.start_at = cursor.start_at;
        self
    }
}

/// HTTP timeout from `ECOGRAPH_HTTP_TIMEOUT_SECS`, default 30 s.
pub fn timeout_from_env() -> Duration {
    let secs = std::env::var(TIMEOUT_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<u64>().ok())
        .unwrap_or(30);
    Duration::from_secs(secs)
}

/// Where to pick up a failed crawl.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrawlCursor {
    pub endpoint: String,
    pub query: String,
    pub start_at: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CrawlStats {
    pub pages: usize,
    pub documents: usize,
    pub retries: usize,
    pub duplicates: usize,
}

#[derive(Debug, Error)]
pub enum CrawlError {
    #[error("{url}: HTTP {status}: {message}")]
    Client {
        url: String,
        status: u16,
        message: String,
    },
    #[error("giving up after {attempts} attempts ({last}); resume at startAt={}", cursor.start_at)]
    Exhausted {
        cursor: CrawlCursor,
        attempts: u32,
        last: String,
    },
    #[error("{url}: unexpected response: {message}")]
    Protocol { url: String, message: String },
    #[error("http client: {0}")]
    Setup(String),
    #[error(transparent)]
    Store(#[from] StoreError),
}

enum FetchError {
    Client { status: u16, message: String },
    Transient { attempts: u32, last: String },
}

struct Fetched {
    body: Vec<u8>,
    retries: usize,
}

fn fetch(
    client: &reqwest::blocking::Client,
    url: &str,
    query: &[(&str, String)],
    policy: &RetryPolicy,
) -> Result<Fetched, FetchError> {
    let mut attempt = 0u32;
    loop {
        let result = client.get(url).query(query).send();
        let transient = match result {
            Ok(resp) => {
                let status = resp.status();
                if status.is_success() {
                    match resp.bytes() {
                        Ok(body) => {
                            return Ok(Fetched {
                                body: body.to_vec(),
                                retries: attempt as usize,
                            })
                        }
                        Err(e) => e.to_string(),
                    }
                } else if status.is_client_error() && status.as_u16() != 429 {
                    let message = resp.text().unwrap_or_default();
                    return Err(FetchError::Client {
                        status: status.as_u16(),
                        message: message.trim().to_string(),
                    });
                } else {
                    format!("HTTP {status}")
                }
            }
            Err(e) => e.to_string(),
        };
        if attempt >= policy.max_retries {
            return Err(FetchError::Transient {
                attempts: attempt + 1,
                last: transient,
            });
        }
        let delay = policy.delay(attempt);
        attempt += 1;
        log::warn!(target: "crawl", "retry {attempt} for {url} in {delay:?}: {transient}");
        std::thread::sleep(delay);
    }
}

#[derive(Deserialize)]
struct SearchPage<'a> {
    total: usize,
    #[serde(borrow)]
    issues: Vec<&'a RawValue>,
}

#[derive(Deserialize)]
struct IssueHead {
    key: String,
    #[serde(default)]
    fields: Option<HeadFields>,
}

#[derive(Deserialize)]
struct HeadFields {
    #[serde(default)]
    attachment: Vec<AttachmentHead>,
}

#[derive(Deserialize)]
struct AttachmentHead {
    id: String,
    content: String,
    #[serde(default)]
    size: Option<u64>,
}

struct PageResult {
    total: usize,
    docs: Vec<RawIssueDocument>,
    retries: usize,
}

/// Streams issue documents from a tracker. Construct with [`crawl`].
pub struct Crawler<'a> {
    config: CrawlConfig,
    client: reqwest::blocking::Client,
    log: &'a SessionLog,
    search_url: String,
    buffer: VecDeque<RawIssueDocument>,
    next_start: usize,
    total: Option<usize>,
    stride: usize,
    seen: HashSet<String>,
    stats: CrawlStats,
    done: bool,
    failed: Option<CrawlError>,
}

/// Starts a crawl session that persists into `log`.
pub fn crawl(config: CrawlConfig, log: &SessionLog) -> Result<Crawler<'_>, CrawlError> {
    let client = reqwest::blocking::Client::builder()
        .timeout(config.timeout)
        .user_agent(concat!("ecograph/", env!("CARGO_PKG_VERSION")))
        .build()
        .map_err(|e| CrawlError::Setup(e.to_string()))?;
    let search_url = format!("{}{}", config.endpoint.trim_end_matches('/'), SEARCH_PATH);
    Ok(Crawler {
        next_start: config.start_at,
        stride: config.page_size.max(1),
        config,
        client,
        log,
        search_url,
        buffer: VecDeque::new(),
        total: None,
        seen: HashSet::new(),
        stats: CrawlStats::default(),
        done: false,
        failed: None,
    })
}

impl Crawler<'_> {
    pub fn stats(&self) -> CrawlStats {
        self.stats
    }

    pub fn cursor(&self) -> CrawlCursor {
        CrawlCursor {
            endpoint: self.config.endpoint.clone(),
            query: self.config.query.clone(),
            start_at: self.next_start,
        }
    }

    fn fetch_page(&self, start_at: usize) -> Result<PageResult, CrawlError> {
        let query = [
            ("jql", self.config.query.clone()),
            ("startAt", start_at.to_string()),
            ("maxResults", self.config.page_size.to_string()),
            ("fields", FIELDS.to_string()),
        ];
        let cursor = CrawlCursor {
            start_at,
            ..self.cursor()
        };
        let lift = |url: &str, e: FetchError| match e {
            FetchError::Client { status, message } => CrawlError::Client {
                url: url.to_string(),
                status,
                message,
            },
            FetchError::Transient { attempts, last } => CrawlError::Exhausted {
                cursor: cursor.clone(),
                attempts,
                last,
            },
        };

        let fetched = fetch(&self.client, &self.search_url, &query, &self.config.retry)
            .map_err(|e| lift(&self.search_url, e))?;
        let mut retries = fetched.retries;
        let text = String::from_utf8(fetched.body).map_err(|e| CrawlError::Protocol {
            url: self.search_url.clone(),
            message: e.to_string(),
        })?;
        let page: SearchPage<'_> =
            serde_json::from_str(&text).map_err(|e| CrawlError::Protocol {
                url: self.search_url.clone(),
                message: e.to_string(),
            })?;

        let mut docs = Vec::with_capacity(page.issues.len());
        for raw in page.issues {
            let head: IssueHead =
                serde_json::from_str(raw.get()).map_err(|e| CrawlError::Protocol {
                    url: self.search_url.clone(),
                    message: format!("issue without key: {e}"),
                })?;
            let mut doc = RawIssueDocument {
                source_id: head.key,
                payload: raw.get().to_string(),
                attachments: Default::default(),
                fetched_at: Utc::now(),
            };
            for att in head.fields.into_iter().flat_map(|f| f.attachment) {
                if att
                    .size
                    .is_some_and(|s| s > self.config.max_attachment_bytes)
                {
                    continue;
                }
                match fetch(&self.client, &att.content, &[], &self.config.retry) {
                    Ok(body) => {
                        retries += body.retries;
                        // binary attachments cannot be diffs
                        if let Ok(text) = String::from_utf8(body.body) {
                            doc.attachments.insert(att.id, text);
                        }
                    }
                    Err(FetchError::Client { status, message }) => {
                        log::warn!(
                            target: "crawl",
                            "{}: attachment {} skipped: HTTP {status}: {message}",
                            doc.source_id, att.id
                        );
                    }
                    Err(e) => return Err(lift(&att.content, e)),
                }
            }
            docs.push(doc);
        }
        Ok(PageResult {
            total: page.total,
            docs,
            retries,
        })
    }

    fn next_batch(&mut self) -> Result<(), CrawlError> {
        let offsets: Vec<usize> = match self.total {
            None => vec![self.next_start],
            Some(total) => (0..self.config.parallelism.max(1))
                .map(|i| self.next_start + i * self.stride)
                .take_while(|&s| s < total)
                .collect(),
        };
        if offsets.is_empty() {
            self.done = true;
            return Ok(());
        }

        let results: Vec<Result<PageResult, CrawlError>> = if offsets.len() == 1 {
            vec![self.fetch_page(offsets[0])]
        } else {
            let this = &*self;
            std::thread::scope(|scope| {
                let handles: Vec<_> = offsets
                    .iter()
                    .map(|&start| scope.spawn(move || this.fetch_page(start)))
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("page fetch panicked"))
                    .collect()
            })
        };

        let first_page = self.total.is_none();
        for (start, result) in offsets.into_iter().zip(results) {
            let page = result?;
            self.stats.pages += 1;
            self.stats.retries += page.retries;
            self.total = Some(page.total);
            let returned = page.docs.len();
            if first_page && returned > 0 && returned < self.config.page_size {
                // server caps maxResults below what we asked for
                self.stride = returned;
            }
            for doc in page.docs {
                if !self.seen.insert(doc.source_id.clone()) {
                    self.stats.duplicates += 1;
                    continue;
                }
                self.log.append(&doc)?;
                self.stats.documents += 1;
                self.buffer.push_back(doc);
            }
            self.next_start = start + self.stride.max(returned);
            if returned == 0 || self.next_start >= page.total {
                self.done = true;
                break;
            }
        }
        Ok(())
    }
}

impl Iterator for Crawler<'_> {
    type Item = Result<RawIssueDocument, CrawlError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if let Some(doc) = self.buffer.pop_front() {
                return Some(Ok(doc));
            }
            if let Some(e) = self.failed.take() {
                return Some(Err(e));
            }
            if self.done {
                return None;
            }
            if let Err(e) = self.next_batch() {
                // documents from earlier pages of the batch go out first
                self.done = true;
                self.failed = Some(e);
            }
        }
    }
}
