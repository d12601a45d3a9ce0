//! A minimal in-process JIRA search endpoint for crawler tests.

use std::collections::HashSet;
use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;

#[derive(Clone, Default)]
pub struct TrackerSpec {
    pub issues: usize,
    /// Server-side cap on `maxResults`.
    pub max_page: usize,
    /// `startAt` offsets that answer 503 on their first request.
    pub fail_once: Vec<usize>,
    /// `startAt` offsets that always answer 503.
    pub fail_always: Vec<usize>,
    /// Status returned for every search request, if set.
    pub status: Option<u16>,
}

pub struct StubTracker {
    pub base: String,
    pub search_hits: Arc<AtomicUsize>,
    pub attachment_hits: Arc<AtomicUsize>,
}

pub fn added(i: usize) -> u64 {
    (i % 4 + 1) as u64
}

pub fn deleted(i: usize) -> u64 {
    (i % 3) as u64
}

pub fn key(i: usize) -> String {
    format!("HAD-{}", i + 1)
}

fn diff(i: usize) -> String {
    let (a, d) = (added(i), deleted(i));
    let mut s = format!(
        "--- a/f.txt\n+++ b/f.txt\n@@ -1,{} +1,{} @@\n ctx\n",
        d + 1,
        a + 1
    );
    for j in 0..d {
        s.push_str(&format!("-old {j}\n"));
    }
    for j in 0..a {
        s.push_str(&format!("+new {j}\n"));
    }
    s
}

fn issue(i: usize, base: &str) -> String {
    let ty = ["New Feature", "Improvement", "Bug"][i % 3];
    format!(
        r#"{{"id":"{id}","key":"{key}","fields":{{"issuetype":{{"name":"{ty}"}},"fixVersions":[{{"name":"2.7.0"}}],"created":"2015-01-01T00:00:00.000+0000","resolutiondate":null,"reporter":{{"emailAddress":"dev{r}@org{o}.com"}},"attachment":[{{"id":"{id}","filename":"{key}.patch","author":{{"emailAddress":"dev{r}@org{a}.com"}},"created":"2015-01-02T00:00:00.000+0000","size":100,"content":"{base}/attachments/{id}"}}]}}}}"#,
        id = 1000 + i,
        key = key(i),
        r = i % 5,
        o = i % 3,
        a = (i + 1) % 3,
    )
}

fn respond(stream: &mut TcpStream, status: u16, body: &str) {
    let reason = match status {
        200 => "OK",
        404 => "Not Found",
        503 => "Service Unavailable",
        _ => "Error",
    };
    let _ = write!(
        stream,
        "HTTP/1.1 {status} {reason}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    );
    let _ = stream.flush();
}

fn param(query: &str, name: &str) -> Option<usize> {
    query
        .split('&')
        .filter_map(|kv| kv.split_once('='))
        .find(|(k, _)| *k == name)
        .and_then(|(_, v)| v.parse().ok())
}

impl StubTracker {
    pub fn start(spec: TrackerSpec) -> StubTracker {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let base = format!("http://{}", listener.local_addr().unwrap());
        let search_hits = Arc::new(AtomicUsize::new(0));
        let attachment_hits = Arc::new(AtomicUsize::new(0));
        let failed: Arc<Mutex<HashSet<usize>>> = Arc::default();
        let spec = Arc::new(spec);
        {
            let base = base.clone();
            let search_hits = search_hits.clone();
            let attachment_hits = attachment_hits.clone();
            thread::spawn(move || {
                for stream in listener.incoming() {
                    let Ok(mut stream) = stream else { continue };
                    let (spec, failed, base) = (spec.clone(), failed.clone(), base.clone());
                    let (search_hits, attachment_hits) =
                        (search_hits.clone(), attachment_hits.clone());
                    thread::spawn(move || {
                        let mut reader = BufReader::new(stream.try_clone().unwrap());
                        let mut line = String::new();
                        if reader.read_line(&mut line).is_err() {
                            return;
                        }
                        loop {
                            let mut header = String::new();
                            if reader.read_line(&mut header).unwrap_or(0) == 0 || header == "\r\n" {
                                break;
                            }
                        }
                        let target = line.split_whitespace().nth(1).unwrap_or("/").to_string();
                        let (path, query) = target.split_once('?').unwrap_or((&target, ""));
                        if let Some(id) = path.strip_prefix("/attachments/") {
                            attachment_hits.fetch_add(1, Ordering::SeqCst);
                            let i: usize = id.parse::<usize>().unwrap() - 1000;
                            respond(&mut stream, 200, &diff(i));
                            return;
                        }
                        if path != "/rest/api/2/search" {
                            respond(&mut stream, 404, "{}");
                            return;
                        }
                        search_hits.fetch_add(1, Ordering::SeqCst);
                        if let Some(status) = spec.status {
                            respond(&mut stream, status, r#"{"errorMessages":["denied"]}"#);
                            return;
                        }
                        let start = param(query, "startAt").unwrap_or(0);
                        let max = param(query, "maxResults")
                            .unwrap_or(50)
                            .min(spec.max_page.max(1));
                        if spec.fail_always.contains(&start)
                            || (spec.fail_once.contains(&start)
                                && failed.lock().unwrap().insert(start))
                        {
                            respond(&mut stream, 503, "{}");
                            return;
                        }
                        let end = (start + max).min(spec.issues);
                        let issues: Vec<String> =
                            (start.min(end)..end).map(|i| issue(i, &base)).collect();
                        let body = format!(
                            r#"{{"startAt":{start},"maxResults":{max},"total":{},"issues":[{}]}}"#,
                            spec.issues,
                            issues.join(",")
                        );
                        respond(&mut stream, 200, &body);
                    });
                }
            });
        }
        StubTracker {
            base,
            search_hits,
            attachment_hits,
        }
    }
}
