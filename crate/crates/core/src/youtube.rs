//! YouTube Data API v3 `commentThreads` client.
//!
//! Only the `topLevelComment` of each thread is read; replies are never
//! requested. The HTTP layer sits behind [`Transport`] so tests replay
//! recorded pages from a fixtures directory instead of using quota.

use std::fs;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use chrono::{DateTime, Utc};
use serde_json::Value;
use thiserror::Error;

use crate::corpus::Comment;

pub const API_URL: &str = "https://www.googleapis.com/youtube/v3/commentThreads";
pub const API_KEY_ENV: &str = "YT_API_KEY";
pub const PAGE_SIZE: usize = 100;
/// Concurrent videos in [`fetch_many`].
pub const MAX_PARALLEL_VIDEOS: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum YoutubeError {
    #[error("no API key: set {API_KEY_ENV} or pass --api-key")]
    MissingKey,
    #[error("max_comments must be at least 1")]
    ZeroMax,
    #[error("API key rejected ({reason})")]
    InvalidKey { reason: String },
    #[error("API quota exceeded ({reason})")]
    QuotaExceeded { reason: String },
    #[error("comments are disabled for video {video_id}")]
    CommentsDisabled { video_id: String },
    #[error("video {video_id} not found")]
    VideoNotFound { video_id: String },
    #[error("API error HTTP {status} ({reason})")]
    Api { status: u16, reason: String },
    #[error("transient failure after {attempts} attempts: {message}")]
    Transient { attempts: usize, message: String },
    #[error("malformed API response: {0}")]
    MalformedBody(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommentOrder {
    #[default]
    Relevance,
    Time,
}

impl CommentOrder {
    pub fn as_str(self) -> &'static str {
        match self {
            CommentOrder::Relevance => "relevance",
            CommentOrder::Time => "time",
        }
    }
}

#[derive(Clone, PartialEq)]
pub struct FetchRequest {
    pub video_id: String,
    pub max_comments: usize,
    pub api_key: String,
    pub order: CommentOrder,
}

impl std::fmt::Debug for FetchRequest {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FetchRequest")
            .field("video_id", &self.video_id)
            .field("max_comments", &self.max_comments)
            .field("api_key", &"<redacted>")
            .field("order", &self.order)
            .finish()
    }
}

/// One `commentThreads` page request.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PageRequest {
    pub video_id: String,
    pub page_token: Option<String>,
    pub order: CommentOrder,
}

impl PageRequest {
    /// Query parameters without the key.
    pub fn query(&self) -> Vec<(&'static str, String)> {
        let mut q = vec![
            ("part", "snippet".to_string()),
            ("videoId", self.video_id.clone()),
            ("maxResults", PAGE_SIZE.to_string()),
            ("textFormat", "plainText".to_string()),
            ("order", self.order.as_str().to_string()),
        ];
        if let Some(token) = &self.page_token {
            q.push(("pageToken", token.clone()));
        }
        q
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
}

/// Sends one page request. `Err` means no HTTP response (network failure).
pub trait Transport: Sync {
    fn get(&self, request: &PageRequest, api_key: &str) -> Result<HttpResponse, String>;
}

pub struct HttpTransport {
    agent: ureq::Agent,
    url: String,
}

impl HttpTransport {
    pub fn new() -> Self {
        Self::with_url(API_URL)
    }

    pub fn with_url(url: &str) -> Self {
        let config = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(30)))
            .build();
        HttpTransport {
            agent: ureq::Agent::new_with_config(config),
            url: url.to_string(),
        }
    }
}

impl Default for HttpTransport {
    fn default() -> Self {
        Self::new()
    }
}

impl Transport for HttpTransport {
    fn get(&self, request: &PageRequest, api_key: &str) -> Result<HttpResponse, String> {
        let mut req = self.agent.get(&self.url);
        for (k, v) in request.query() {
            req = req.query(k, v);
        }
        let mut resp = req.query("key", api_key).call().map_err(|e| e.to_string())?;
        let status = resp.status().as_u16();
        let body = resp.body_mut().read_to_string().map_err(|e| e.to_string())?;
        Ok(HttpResponse { status, body })
    }
}

/// Replays `<video_id>.page<N>.json` files (N from 1). The page for a token
/// is the one after the page whose `nextPageToken` equals it. A body with
/// `error.code` is returned with that HTTP status; a video without fixtures
/// answers 404.
pub struct FixtureTransport {
    dir: PathBuf,
    log: Mutex<Vec<PageRequest>>,
}

impl FixtureTransport {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        FixtureTransport {
            dir: dir.into(),
            log: Mutex::new(Vec::new()),
        }
    }

    /// Every request served so far, in order.
    pub fn requests(&self) -> Vec<PageRequest> {
        self.log.lock().expect("request log poisoned").clone()
    }

    fn page(&self, video_id: &str, n: usize) -> Option<String> {
        fs::read_to_string(self.dir.join(format!("{video_id}.page{n}.json"))).ok()
    }
}

fn not_found_body() -> String {
    r#"{"error":{"code":404,"message":"video not found","errors":[{"reason":"videoNotFound"}]}}"#.to_string()
}

impl Transport for FixtureTransport {
    fn get(&self, request: &PageRequest, _api_key: &str) -> Result<HttpResponse, String> {
        self.log.lock().expect("request log poisoned").push(request.clone());
        let mut n = 1;
        let mut body = self.page(&request.video_id, n);
        if let Some(token) = &request.page_token {
            while let Some(current) = body {
                let next = serde_json::from_str::<Value>(&current)
                    .ok()
                    .and_then(|v| v.get("nextPageToken").and_then(Value::as_str).map(str::to_string));
                n += 1;
                body = self.page(&request.video_id, n);
                if next.as_deref() == Some(token.as_str()) {
                    break;
                }
            }
        }
        let Some(body) = body else {
            return Ok(HttpResponse {
                status: 404,
                body: not_found_body(),
            });
        };
        let status = serde_json::from_str::<Value>(&body)
            .ok()
            .and_then(|v| v.pointer("/error/code").and_then(Value::as_u64))
            .map_or(200, |c| c as u16);
        Ok(HttpResponse { status, body })
    }
}

/// Parsed `commentThreads` page.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedPage {
    pub comments: Vec<Comment>,
    pub next_page_token: Option<String>,
    /// Items dropped because a required field was missing or invalid.
    pub skipped: usize,
}

fn parse_item(item: &Value, fallback_video: &str) -> Option<Comment> {
    let id = item.get("id")?.as_str()?;
    let snippet = item.pointer("/snippet/topLevelComment/snippet")?;
    let text = snippet
        .get("textOriginal")
        .or_else(|| snippet.get("textDisplay"))?
        .as_str()?;
    let published_at = DateTime::parse_from_rfc3339(snippet.get("publishedAt")?.as_str()?)
        .ok()?
        .with_timezone(&Utc);
    let like_count = match snippet.get("likeCount") {
        None => 0,
        Some(v) => v.as_u64()?,
    };
    let video_id = snippet
        .get("videoId")
        .or_else(|| item.pointer("/snippet/videoId"))
        .and_then(Value::as_str)
        .unwrap_or(fallback_video);
    Some(Comment {
        id: id.to_string(),
        video_id: video_id.to_string(),
        text: text.to_string(),
        published_at,
        like_count,
    })
}

/// Extracts top-level comments. `video_id` fills in items that lack one.
pub fn parse_page(raw_body: &str, video_id: &str) -> Result<ParsedPage, YoutubeError> {
    let body: Value = serde_json::from_str(raw_body).map_err(|e| YoutubeError::MalformedBody(e.to_string()))?;
    let items = body
        .get("items")
        .and_then(Value::as_array)
        .ok_or_else(|| YoutubeError::MalformedBody("no `items` array".into()))?;
    let comments: Vec<Comment> = items.iter().filter_map(|it| parse_item(it, video_id)).collect();
    Ok(ParsedPage {
        skipped: items.len() - comments.len(),
        next_page_token: body.get("nextPageToken").and_then(Value::as_str).map(str::to_string),
        comments,
    })
}

fn error_reason(body: &str) -> String {
    let v: Option<Value> = serde_json::from_str(body).ok();
    v.as_ref()
        .and_then(|v| v.pointer("/error/errors/0/reason"))
        .and_then(Value::as_str)
        .map(str::to_string)
        .unwrap_or_else(|| "unknown".to_string())
}

/// Maps a non-2xx response to an error. 5xx maps to `Transient`.
pub fn classify_error(status: u16, body: &str, video_id: &str) -> YoutubeError {
    let reason = error_reason(body);
    match (status, reason.as_str()) {
        (403, "quotaExceeded" | "dailyLimitExceeded" | "rateLimitExceeded") => YoutubeError::QuotaExceeded { reason },
        (403, "commentsDisabled") => YoutubeError::CommentsDisabled {
            video_id: video_id.to_string(),
        },
        (400 | 403, r) if r.to_ascii_lowercase().contains("key") || r == "forbidden" => {
            YoutubeError::InvalidKey { reason }
        }
        (404, _) => YoutubeError::VideoNotFound {
            video_id: video_id.to_string(),
        },
        (500..=599, _) => YoutubeError::Transient {
            attempts: 1,
            message: format!("HTTP {status} ({reason})"),
        },
        _ => YoutubeError::Api { status, reason },
    }
}

pub struct YoutubeClient<T: Transport> {
    transport: T,
    backoff: Vec<Duration>,
}

impl<T: Transport> YoutubeClient<T> {
    /// Retries 5xx and network failures after 1 s, 2 s and 4 s.
    pub fn new(transport: T) -> Self {
        YoutubeClient {
            transport,
            backoff: vec![Duration::from_secs(1), Duration::from_secs(2), Duration::from_secs(4)],
        }
    }

    /// One entry per retry; the length is the retry count.
    pub fn with_backoff(mut self, backoff: Vec<Duration>) -> Self {
        self.backoff = backoff;
        self
    }

    pub fn transport(&self) -> &T {
        &self.transport
    }

    fn get_page(&self, page: &PageRequest, api_key: &str) -> Result<String, YoutubeError> {
        let mut attempt = 0;
        loop {
            let outcome = match self.transport.get(page, api_key) {
                Ok(resp) if (200..300).contains(&resp.status) => return Ok(resp.body),
                Ok(resp) => classify_error(resp.status, &resp.body, &page.video_id),
                Err(message) => YoutubeError::Transient { attempts: 1, message },
            };
            let YoutubeError::Transient { message, .. } = outcome else {
                return Err(outcome);
            };
            match self.backoff.get(attempt) {
                Some(&delay) => {
                    log::warn!("{} page request failed ({message}); retrying in {delay:?}", page.video_id);
                    std::thread::sleep(delay);
                    attempt += 1;
                }
                None => {
                    return Err(YoutubeError::Transient {
                        attempts: attempt + 1,
                        message,
                    })
                }
            }
        }
    }

    /// Follows page tokens until `max_comments` or the last page.
    pub fn fetch_comments(&self, req: &FetchRequest) -> Result<Vec<Comment>, YoutubeError> {
        if req.api_key.is_empty() {
            return Err(YoutubeError::MissingKey);
        }
        if req.max_comments == 0 {
            return Err(YoutubeError::ZeroMax);
        }
        let mut out = Vec::new();
        let mut page = PageRequest {
            video_id: req.video_id.clone(),
            page_token: None,
            order: req.order,
        };
        loop {
            let body = self.get_page(&page, &req.api_key)?;
            let parsed = parse_page(&body, &req.video_id)?;
            if parsed.skipped > 0 {
                log::warn!("{}: skipped {} malformed comment items", req.video_id, parsed.skipped);
            }
            let room = req.max_comments - out.len();
            out.extend(parsed.comments.into_iter().take(room));
            match parsed.next_page_token {
                Some(token) if out.len() < req.max_comments => page.page_token = Some(token),
                _ => return Ok(out),
            }
        }
    }

    /// Fetches several videos, at most [`MAX_PARALLEL_VIDEOS`] at a time.
    /// Results line up with `requests`.
    pub fn fetch_many(&self, requests: &[FetchRequest]) -> Vec<Result<Vec<Comment>, YoutubeError>> {
        let next = AtomicUsize::new(0);
        type Slot = Mutex<Option<Result<Vec<Comment>, YoutubeError>>>;
        let results: Vec<Slot> = requests.iter().map(|_| Mutex::new(None)).collect();
        std::thread::scope(|scope| {
            for _ in 0..MAX_PARALLEL_VIDEOS.min(requests.len()) {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(req) = requests.get(i) else { break };
                    let r = self.fetch_comments(req);
                    *results[i].lock().expect("result slot poisoned") = Some(r);
                });
            }
        });
        results
            .into_iter()
            .map(|m| m.into_inner().expect("result slot poisoned").expect("every slot filled"))
            .collect()
    }
}

/// Resolves the key from an explicit value, else the environment.
pub fn resolve_api_key(explicit: Option<&str>) -> Result<String, YoutubeError> {
    explicit
        .map(str::to_string)
        .or_else(|| std::env::var(API_KEY_ENV).ok())
        .filter(|k| !k.is_empty())
        .ok_or(YoutubeError::MissingKey)
}
