//! Monthly activity collection from the GitHub REST API.
//!
//! Every raw response page is written to a cache directory keyed by
//! (repository, endpoint, page) together with an `index.json` manifest.
//! Aggregation only ever reads from the cache, so a re-run against an
//! unchanged cache produces the same series.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::Duration;

use chrono::{DateTime, Datelike, NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::model::{month_end_of, next_month_end, MonthlyActivity};
use crate::datasets::ActivitySeries;
use crate::error::{Error, Result};

pub const DEFAULT_API_BASE: &str = "https://api.github.com";
pub const TOKEN_ENV: &str = "GITHUB_TOKEN";
const PER_PAGE: usize = 100;

#[derive(Debug, Clone)]
pub struct CollectionSpec {
    /// `owner/name`.
    pub repo: String,
    pub start: NaiveDate,
    pub end: NaiveDate,
    /// Environment variable holding the API token.
    pub token_env: String,
    pub cache_dir: PathBuf,
    /// When false, every page must already be cached.
    pub allow_network: bool,
    pub api_base: String,
}

impl CollectionSpec {
    pub fn new(repo: &str, start: NaiveDate, end: NaiveDate, cache_dir: impl Into<PathBuf>) -> Result<Self> {
        let parts: Vec<&str> = repo.split('/').collect();
        if parts.len() != 2 || parts.iter().any(|p| p.is_empty()) {
            return Err(Error::InvalidArgument(format!(
                "repository must be owner/name, got `{repo}`"
            )));
        }
        if start >= end {
            return Err(Error::InvalidArgument(format!(
                "collection range start {start} is not before end {end}"
            )));
        }
        Ok(CollectionSpec {
            repo: repo.to_string(),
            start,
            end,
            token_env: TOKEN_ENV.to_string(),
            cache_dir: cache_dir.into(),
            allow_network: false,
            api_base: DEFAULT_API_BASE.to_string(),
        })
    }

    fn repo_dir(&self) -> PathBuf {
        self.cache_dir.join(self.repo.replace('/', "__"))
    }
}

#[derive(Debug, Clone)]
pub struct HttpResponse {
    pub status: u16,
    pub retry_after: Option<u64>,
    pub rate_remaining: Option<u64>,
    pub rate_reset: Option<u64>,
    pub body: String,
}

pub trait Transport {
    fn get(&self, url: &str, accept: &str) -> Result<HttpResponse>;
}

pub struct ReqwestTransport {
    client: reqwest::blocking::Client,
    token: Option<String>,
}

impl ReqwestTransport {
    pub fn new(token: Option<String>) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .user_agent(concat!("effort-core/", env!("CARGO_PKG_VERSION")))
            .timeout(Duration::from_secs(60))
            .build()
            .map_err(|e| Error::Http(e.to_string()))?;
        Ok(ReqwestTransport { client, token })
    }
}

impl Transport for ReqwestTransport {
    fn get(&self, url: &str, accept: &str) -> Result<HttpResponse> {
        let mut req = self.client.get(url).header("Accept", accept);
        if let Some(token) = &self.token {
            req = req.bearer_auth(token);
        }
        let resp = req.send().map_err(|e| Error::Http(e.to_string()))?;
        let header = |name: &str| {
            resp.headers()
                .get(name)
                .and_then(|v| v.to_str().ok())
                .and_then(|v| v.parse::<u64>().ok())
        };
        let status = resp.status().as_u16();
        let retry_after = header("retry-after");
        let rate_remaining = header("x-ratelimit-remaining");
        let rate_reset = header("x-ratelimit-reset");
        let body = resp.text().map_err(|e| Error::Http(e.to_string()))?;
        Ok(HttpResponse {
            status,
            retry_after,
            rate_remaining,
            rate_reset,
            body,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Endpoint {
    Commits,
    CommitComments,
    Pulls,
    PullComments,
    Issues,
    IssueComments,
    Stargazers,
    Forks,
}

impl Endpoint {
    const ALL: [Endpoint; 8] = [
        Endpoint::Commits,
        Endpoint::CommitComments,
        Endpoint::Pulls,
        Endpoint::PullComments,
        Endpoint::Issues,
        Endpoint::IssueComments,
        Endpoint::Stargazers,
        Endpoint::Forks,
    ];

    fn slug(self) -> &'static str {
        match self {
            Endpoint::Commits => "commits",
            Endpoint::CommitComments => "commit_comments",
            Endpoint::Pulls => "pulls",
            Endpoint::PullComments => "pull_comments",
            Endpoint::Issues => "issues",
            Endpoint::IssueComments => "issue_comments",
            Endpoint::Stargazers => "stargazers",
            Endpoint::Forks => "forks",
        }
    }

    fn path(self) -> &'static str {
        match self {
            Endpoint::Commits => "commits",
            Endpoint::CommitComments => "comments",
            Endpoint::Pulls => "pulls",
            Endpoint::PullComments => "pulls/comments",
            Endpoint::Issues => "issues",
            Endpoint::IssueComments => "issues/comments",
            Endpoint::Stargazers => "stargazers",
            Endpoint::Forks => "forks",
        }
    }

    fn accept(self) -> &'static str {
        match self {
            Endpoint::Stargazers => "application/vnd.github.star+json",
            _ => "application/vnd.github+json",
        }
    }

    fn url(self, spec: &CollectionSpec, page: usize) -> String {
        let base = format!("{}/repos/{}/{}", spec.api_base, spec.repo, self.path());
        let window = match self {
            Endpoint::Commits => format!(
                "&since={}T00:00:00Z&until={}T00:00:00Z",
                month_start(spec.start),
                month_end_of(spec.end).succ_opt().expect("date in range")
            ),
            Endpoint::Pulls | Endpoint::Issues => "&state=all".to_string(),
            _ => String::new(),
        };
        format!("{base}?per_page={PER_PAGE}&page={page}{window}")
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
struct Manifest {
    /// key: `endpoint/page-NNNN.json`, value: source URL.
    pages: BTreeMap<String, String>,
}

/// Backoff policy for rate-limited requests.
pub struct Backoff<'a> {
    pub max_retries: usize,
    pub max_wait: Duration,
    pub sleep: &'a dyn Fn(Duration),
}

impl Default for Backoff<'static> {
    fn default() -> Self {
        Backoff {
            max_retries: 3,
            max_wait: Duration::from_secs(15 * 60),
            sleep: &std::thread::sleep,
        }
    }
}

struct PageSource<'a> {
    spec: &'a CollectionSpec,
    transport: Option<&'a dyn Transport>,
    backoff: &'a Backoff<'a>,
    manifest: Manifest,
    dirty: bool,
}

impl<'a> PageSource<'a> {
    fn open(spec: &'a CollectionSpec, transport: Option<&'a dyn Transport>, backoff: &'a Backoff<'a>) -> Result<Self> {
        let path = spec.repo_dir().join("index.json");
        let manifest = if path.exists() {
            let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            serde_json::from_str(&text)
                .map_err(|e| Error::Fixture(format!("{}: {e}", path.display())))?
        } else {
            Manifest::default()
        };
        Ok(PageSource {
            spec,
            transport,
            backoff,
            manifest,
            dirty: false,
        })
    }

    fn page(&mut self, key: &str, url: &str, accept: &str) -> Result<Value> {
        let file = self.spec.repo_dir().join(key);
        let body = if file.exists() {
            std::fs::read_to_string(&file).map_err(|e| Error::io(&file, e))?
        } else {
            let transport = match (self.spec.allow_network, self.transport) {
                (true, Some(t)) => t,
                _ => return Err(Error::CacheMiss(url.to_string())),
            };
            let body = fetch(transport, url, accept, self.backoff)?;
            if let Some(dir) = file.parent() {
                std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
            std::fs::write(&file, &body).map_err(|e| Error::io(&file, e))?;
            self.manifest.pages.insert(key.to_string(), url.to_string());
            self.dirty = true;
            body
        };
        serde_json::from_str(&body).map_err(|e| Error::Fixture(format!("{}: {e}", file.display())))
    }

    fn all_pages(&mut self, endpoint: Endpoint) -> Result<Vec<Value>> {
        let mut items = Vec::new();
        for page in 1.. {
            let key = format!("{}/page-{page:04}.json", endpoint.slug());
            let url = endpoint.url(self.spec, page);
            let value = self.page(&key, &url, endpoint.accept())?;
            let batch = value
                .as_array()
                .ok_or_else(|| Error::Fixture(format!("{key}: expected a JSON array")))?;
            items.extend(batch.iter().cloned());
            if batch.len() < PER_PAGE {
                break;
            }
        }
        Ok(items)
    }

    fn pull_detail(&mut self, number: u64) -> Result<Value> {
        let key = format!("pulls/detail-{number}.json");
        let url = format!("{}/repos/{}/pulls/{number}", self.spec.api_base, self.spec.repo);
        self.page(&key, &url, "application/vnd.github+json")
    }

    fn finish(self) -> Result<()> {
        if !self.dirty {
            return Ok(());
        }
        let path = self.spec.repo_dir().join("index.json");
        let text = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }
}

fn fetch(transport: &dyn Transport, url: &str, accept: &str, backoff: &Backoff<'_>) -> Result<String> {
    let mut attempt = 0;
    loop {
        let resp = transport.get(url, accept)?;
        match resp.status {
            200..=299 => return Ok(resp.body),
            401 => return Err(Error::AuthFailure(url.to_string())),
            404 => return Err(Error::RepoNotFound(url.to_string())),
            403 | 429 if resp.retry_after.is_some() || resp.rate_remaining == Some(0) => {
                if attempt >= backoff.max_retries {
                    return Err(Error::RateLimited {
                        url: url.to_string(),
                    });
                }
                attempt += 1;
                let wait = resp
                    .retry_after
                    .or_else(|| {
                        let now = Utc::now().timestamp().max(0) as u64;
                        resp.rate_reset.map(|reset| reset.saturating_sub(now))
                    })
                    .unwrap_or(60)
                    .max(1);
                let wait = Duration::from_secs(wait).min(backoff.max_wait);
                log::warn!("rate limited on {url}; retrying in {wait:?}");
                (backoff.sleep)(wait);
            }
            403 => return Err(Error::AuthFailure(url.to_string())),
            status => return Err(Error::Http(format!("{url}: HTTP {status}"))),
        }
    }
}

/// Collects the monthly series for `spec`, reading the token from the
/// environment when network access is allowed.
pub fn collect(spec: &CollectionSpec) -> Result<ActivitySeries> {
    let transport = if spec.allow_network {
        Some(ReqwestTransport::new(std::env::var(&spec.token_env).ok())?)
    } else {
        None
    };
    collect_with(spec, transport.as_ref().map(|t| t as &dyn Transport), &Backoff::default())
}

pub fn collect_with(spec: &CollectionSpec, transport: Option<&dyn Transport>, backoff: &Backoff<'_>) -> Result<ActivitySeries> {
    let mut source = PageSource::open(spec, transport, backoff)?;
    let mut raw = BTreeMap::new();
    for endpoint in Endpoint::ALL {
        raw.insert(endpoint, source.all_pages(endpoint)?);
    }

    let months = month_ends(spec.start, spec.end);
    let mut buckets = Buckets::new(&months);

    for c in &raw[&Endpoint::Commits] {
        let Some(ts) = str_at(c, &["commit", "author", "date"]).and_then(parse_ts) else {
            continue;
        };
        if let Some(b) = buckets.get(ts) {
            b.commits += 1;
            let author = str_at(c, &["author", "login"])
                .map(|l| format!("login:{l}"))
                .or_else(|| str_at(c, &["commit", "author", "email"]).map(|e| format!("email:{e}")))
                .unwrap_or_else(|| "unknown".to_string());
            b.authors.insert(author);
        }
    }
    for c in &raw[&Endpoint::CommitComments] {
        if let Some(b) = created(c).and_then(|ts| buckets.get(ts)) {
            b.commit_comments += 1;
        }
    }
    let mut merged_numbers = Vec::new();
    for pr in &raw[&Endpoint::Pulls] {
        if let Some(b) = created(pr).and_then(|ts| buckets.get(ts)) {
            b.open_prs += 1;
        }
        if let Some(b) = ts_at(pr, "closed_at").and_then(|ts| buckets.get(ts)) {
            b.closed_prs += 1;
        }
        if let Some(ts) = ts_at(pr, "merged_at") {
            if let Some(b) = buckets.get(ts) {
                b.merged_prs += 1;
                if let Some(n) = pr.get("number").and_then(Value::as_u64) {
                    merged_numbers.push((n, ts));
                }
            }
        }
    }
    for (number, ts) in merged_numbers {
        let detail = source.pull_detail(number)?;
        if let (Some(login), Some(b)) = (str_at(&detail, &["merged_by", "login"]), buckets.get(ts)) {
            b.mergers.insert(login.to_string());
        }
    }
    for c in &raw[&Endpoint::PullComments] {
        if let Some(b) = created(c).and_then(|ts| buckets.get(ts)) {
            b.pr_comments += 1;
        }
    }
    for issue in &raw[&Endpoint::Issues] {
        if issue.get("pull_request").is_some_and(|v| !v.is_null()) {
            continue;
        }
        if let Some(b) = created(issue).and_then(|ts| buckets.get(ts)) {
            b.open_issues += 1;
        }
        if let Some(b) = ts_at(issue, "closed_at").and_then(|ts| buckets.get(ts)) {
            b.closed_issues += 1;
        }
    }
    for c in &raw[&Endpoint::IssueComments] {
        let on_pull = str_at(c, &["html_url"]).is_some_and(|u| u.contains("/pull/"));
        if let Some(b) = created(c).and_then(|ts| buckets.get(ts)) {
            if on_pull {
                b.pr_comments += 1;
            } else {
                b.issue_comments += 1;
            }
        }
    }
    for s in &raw[&Endpoint::Stargazers] {
        if let Some(b) = ts_at(s, "starred_at").and_then(|ts| buckets.get(ts)) {
            b.stargazers += 1;
        }
    }
    for f in &raw[&Endpoint::Forks] {
        if let Some(b) = created(f).and_then(|ts| buckets.get(ts)) {
            b.forks += 1;
        }
    }
    source.finish()?;

    let series = buckets
        .into_months(&months)
        .into_iter()
        .map(|m| {
            m.validate()?;
            Ok(m)
        })
        .collect::<Result<Vec<_>>>()?;
    ActivitySeries::new(spec.repo.clone(), series)
}

#[derive(Default)]
struct Bucket {
    commits: u64,
    authors: BTreeSet<String>,
    commit_comments: u64,
    open_prs: u64,
    closed_prs: u64,
    merged_prs: u64,
    mergers: BTreeSet<String>,
    pr_comments: u64,
    open_issues: u64,
    closed_issues: u64,
    issue_comments: u64,
    stargazers: u64,
    forks: u64,
}

struct Buckets {
    index: BTreeMap<(i32, u32), usize>,
    slots: Vec<Bucket>,
}

impl Buckets {
    fn new(months: &[NaiveDate]) -> Self {
        Buckets {
            index: months
                .iter()
                .enumerate()
                .map(|(i, m)| ((m.year(), m.month()), i))
                .collect(),
            slots: months.iter().map(|_| Bucket::default()).collect(),
        }
    }

    fn get(&mut self, ts: DateTime<Utc>) -> Option<&mut Bucket> {
        let i = *self.index.get(&(ts.year(), ts.month()))?;
        Some(&mut self.slots[i])
    }

    fn into_months(self, months: &[NaiveDate]) -> Vec<MonthlyActivity> {
        months
            .iter()
            .zip(self.slots)
            .map(|(&end, b)| MonthlyActivity {
                month_end: end,
                commits: b.commits,
                commit_comments: b.commit_comments,
                contributors: b.authors.len() as u64,
                open_prs: b.open_prs,
                closed_prs: b.closed_prs,
                merged_prs: b.merged_prs,
                pr_mergers: b.mergers.len() as u64,
                pr_comments: b.pr_comments,
                open_issues: b.open_issues,
                closed_issues: b.closed_issues,
                issue_comments: b.issue_comments,
                stargazers: b.stargazers,
                forks: b.forks,
                // the API reports watchers as stargazers
                watchers: b.stargazers,
            })
            .collect()
    }
}

fn month_start(date: NaiveDate) -> NaiveDate {
    NaiveDate::from_ymd_opt(date.year(), date.month(), 1).expect("valid date")
}

fn month_ends(start: NaiveDate, end: NaiveDate) -> Vec<NaiveDate> {
    let last = month_end_of(end);
    let mut out = vec![month_end_of(start)];
    while *out.last().unwrap() < last {
        let next = next_month_end(*out.last().unwrap());
        out.push(next);
    }
    out
}

fn str_at<'v>(value: &'v Value, path: &[&str]) -> Option<&'v str> {
    let mut v = value;
    for key in path {
        v = v.get(key)?;
    }
    v.as_str()
}

fn parse_ts(s: &str) -> Option<DateTime<Utc>> {
    DateTime::parse_from_rfc3339(s)
        .ok()
        .map(|t| t.with_timezone(&Utc))
}

fn ts_at(value: &Value, key: &str) -> Option<DateTime<Utc>> {
    value.get(key).and_then(Value::as_str).and_then(parse_ts)
}

fn created(value: &Value) -> Option<DateTime<Utc>> {
    ts_at(value, "created_at")
}

/// Path of the cached page for `endpoint` (one of the REST list slugs, e.g.
/// `commits`) inside the cache directory of `spec`.
pub fn cache_page_path(spec: &CollectionSpec, endpoint: &str, page: usize) -> PathBuf {
    spec.repo_dir().join(endpoint).join(format!("page-{page:04}.json"))
}

/// Path of a cached single pull-request document.
pub fn cache_pull_path(spec: &CollectionSpec, number: u64) -> PathBuf {
    spec.repo_dir().join("pulls").join(format!("detail-{number}.json"))
}

pub fn cache_root(spec: &CollectionSpec) -> PathBuf {
    spec.repo_dir()
}

#[allow(dead_code)]
fn _assert_path(_: &Path) {}

#[cfg(test)]
mod tests {
    use super::*;
    use std::cell::{Cell, RefCell};

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    struct Scripted {
        responses: RefCell<Vec<HttpResponse>>,
        calls: Cell<usize>,
    }

    impl Transport for Scripted {
        fn get(&self, _url: &str, _accept: &str) -> Result<HttpResponse> {
            self.calls.set(self.calls.get() + 1);
            Ok(self.responses.borrow_mut().remove(0))
        }
    }

    fn response(status: u16, body: &str) -> HttpResponse {
        HttpResponse {
            status,
            retry_after: None,
            rate_remaining: None,
            rate_reset: None,
            body: body.to_string(),
        }
    }

    fn spec(dir: &Path) -> CollectionSpec {
        let mut s = CollectionSpec::new("octo/demo", d(2020, 1, 1), d(2020, 2, 29), dir).unwrap();
        s.allow_network = true;
        s
    }

    #[test]
    fn spec_validation() {
        assert!(CollectionSpec::new("nope", d(2020, 1, 1), d(2020, 2, 1), "c").is_err());
        assert!(CollectionSpec::new("a/b", d(2020, 2, 1), d(2020, 1, 1), "c").is_err());
    }

    #[test]
    fn month_range_is_inclusive() {
        assert_eq!(
            month_ends(d(2020, 11, 15), d(2021, 1, 3)),
            vec![d(2020, 11, 30), d(2020, 12, 31), d(2021, 1, 31)]
        );
    }

    #[test]
    fn rate_limit_retries_then_fails() {
        let mut limited = response(403, "{}");
        limited.retry_after = Some(2);
        let t = Scripted {
            responses: RefCell::new(vec![limited.clone(), limited.clone(), limited]),
            calls: Cell::new(0),
        };
        let waits = RefCell::new(Vec::new());
        let sleep = |d: Duration| waits.borrow_mut().push(d);
        let backoff = Backoff {
            max_retries: 2,
            max_wait: Duration::from_secs(10),
            sleep: &sleep,
        };
        let err = fetch(&t, "u", "a", &backoff).unwrap_err();
        assert!(matches!(err, Error::RateLimited { .. }));
        assert_eq!(t.calls.get(), 3);
        assert_eq!(*waits.borrow(), vec![Duration::from_secs(2); 2]);
    }

    #[test]
    fn rate_limit_recovers() {
        let mut limited = response(429, "{}");
        limited.retry_after = Some(1);
        let t = Scripted {
            responses: RefCell::new(vec![limited, response(200, "[]")]),
            calls: Cell::new(0),
        };
        let sleep = |_: Duration| {};
        let backoff = Backoff {
            max_retries: 3,
            max_wait: Duration::from_secs(10),
            sleep: &sleep,
        };
        assert_eq!(fetch(&t, "u", "a", &backoff).unwrap(), "[]");
    }

    #[test]
    fn distinct_http_failures() {
        let sleep = |_: Duration| {};
        let backoff = Backoff {
            max_retries: 0,
            max_wait: Duration::from_secs(1),
            sleep: &sleep,
        };
        for (status, check) in [
            (404u16, (|e: &Error| matches!(e, Error::RepoNotFound(_))) as fn(&Error) -> bool),
            (401, |e| matches!(e, Error::AuthFailure(_))),
            (500, |e| matches!(e, Error::Http(_))),
        ] {
            let t = Scripted {
                responses: RefCell::new(vec![response(status, "")]),
                calls: Cell::new(0),
            };
            let err = fetch(&t, "u", "a", &backoff).unwrap_err();
            assert!(check(&err), "{status}: {err:?}");
            assert!(err.is_network());
        }
    }

    #[test]
    fn offline_cache_miss_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = spec(dir.path());
        s.allow_network = false;
        let err = collect_with(&s, None, &Backoff::default()).unwrap_err();
        assert!(matches!(err, Error::CacheMiss(_)));
    }

    #[test]
    fn network_pages_are_cached_and_indexed() {
        let dir = tempfile::tempdir().unwrap();
        let s = spec(dir.path());
        let commit = r#"[{"commit":{"author":{"date":"2020-01-05T10:00:00Z","email":"a@x"}},"author":{"login":"a"}}]"#;
        let mut responses = vec![response(200, commit)];
        responses.extend((0..7).map(|_| response(200, "[]")));
        let t = Scripted {
            responses: RefCell::new(responses),
            calls: Cell::new(0),
        };
        let first = collect_with(&s, Some(&t), &Backoff::default()).unwrap();
        assert_eq!(t.calls.get(), 8);
        assert_eq!(first.months()[0].commits, 1);
        assert!(cache_page_path(&s, "commits", 1).exists());
        let index = std::fs::read_to_string(cache_root(&s).join("index.json")).unwrap();
        assert!(index.contains("commits/page-0001.json"));

        // second run is served from the cache
        let mut offline = s.clone();
        offline.allow_network = false;
        let second = collect_with(&offline, None, &Backoff::default()).unwrap();
        assert_eq!(first, second);
    }
}
