//! Minimal blocking HTTP transport with fixture replay.
//!
//! Every network-facing component talks through [`Transport`], so the test
//! suite and offline runs can substitute [`ReplayTransport`], which serves
//! responses from `<dir>/<sha256-of-request>.<ext>` files.

use std::path::{Path, PathBuf};
use std::time::Duration;

use sha2::{Digest, Sha256};

#[derive(Debug, Clone, thiserror::Error)]
pub enum TransportError {
    #[error("HTTP {status} from {url}: {body}")]
    Status { url: String, status: u16, body: String },
    #[error("request to {url} failed: {message}")]
    Network { url: String, message: String },
    #[error("no replay fixture for {url} (expected {})", path.display())]
    MissingFixture { url: String, path: PathBuf },
}

impl TransportError {
    /// Whether retrying the same request could plausibly succeed.
    pub fn is_retryable(&self) -> bool {
        match self {
            TransportError::Status { status, .. } => *status == 429 || *status >= 500,
            TransportError::Network { .. } => true,
            TransportError::MissingFixture { .. } => false,
        }
    }
}

pub trait Transport: Send + Sync {
    fn get(&self, url: &str) -> Result<String, TransportError>;

    fn post_json(&self, url: &str, body: &str, headers: &[(String, String)]) -> Result<String, TransportError>;
}

/// Query parameters that must not influence fixture names (credentials).
const UNHASHED_PARAMS: &[&str] = &["api_key"];

/// Removes credential parameters from a URL so fixture names do not depend
/// on whether a key was configured.
pub fn canonical_url(url: &str) -> String {
    let Some((base, query)) = url.split_once('?') else {
        return url.to_string();
    };
    let kept: Vec<&str> = query
        .split('&')
        .filter(|kv| {
            let key = kv.split('=').next().unwrap_or("");
            !UNHASHED_PARAMS.contains(&key)
        })
        .collect();
    if kept.is_empty() {
        base.to_string()
    } else {
        format!("{base}?{}", kept.join("&"))
    }
}

/// Hex SHA-256 of the canonical URL, plus the body for POST requests.
pub fn fixture_key(url: &str, body: Option<&str>) -> String {
    let mut h = Sha256::new();
    h.update(canonical_url(url).as_bytes());
    if let Some(body) = body {
        h.update(b"\n");
        h.update(body.as_bytes());
    }
    hex::encode(h.finalize())
}

pub struct HttpTransport {
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn new(timeout: Duration) -> Result<Self, TransportError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .user_agent(concat!("scholar-profile/", env!("CARGO_PKG_VERSION")))
            .build()
            .map_err(|e| TransportError::Network {
                url: String::new(),
                message: e.to_string(),
            })?;
        Ok(Self { client })
    }

    fn finish(url: &str, resp: reqwest::Result<reqwest::blocking::Response>) -> Result<String, TransportError> {
        let net = |e: reqwest::Error| TransportError::Network {
            url: url.to_string(),
            message: e.to_string(),
        };
        let resp = resp.map_err(net)?;
        let status = resp.status();
        let body = resp.text().map_err(net)?;
        if !status.is_success() {
            return Err(TransportError::Status {
                url: url.to_string(),
                status: status.as_u16(),
                body: body.chars().take(500).collect(),
            });
        }
        Ok(body)
    }
}

impl Transport for HttpTransport {
    fn get(&self, url: &str) -> Result<String, TransportError> {
        Self::finish(url, self.client.get(url).send())
    }

    fn post_json(&self, url: &str, body: &str, headers: &[(String, String)]) -> Result<String, TransportError> {
        let mut req = self
            .client
            .post(url)
            .header("content-type", "application/json")
            .body(body.to_string());
        for (k, v) in headers {
            req = req.header(k.as_str(), v.as_str());
        }
        Self::finish(url, req.send())
    }
}

/// Serves recorded responses; never touches the network.
pub struct ReplayTransport {
    dir: PathBuf,
    extension: String,
}

impl ReplayTransport {
    pub fn new(dir: impl Into<PathBuf>, extension: &str) -> Self {
        Self {
            dir: dir.into(),
            extension: extension.trim_start_matches('.').to_string(),
        }
    }

    pub fn fixture_path(&self, url: &str, body: Option<&str>) -> PathBuf {
        fixture_path(&self.dir, &self.extension, url, body)
    }

    fn read(&self, url: &str, body: Option<&str>) -> Result<String, TransportError> {
        let path = self.fixture_path(url, body);
        std::fs::read_to_string(&path).map_err(|_| TransportError::MissingFixture {
            url: canonical_url(url),
            path,
        })
    }
}

fn fixture_path(dir: &Path, ext: &str, url: &str, body: Option<&str>) -> PathBuf {
    dir.join(format!("{}.{ext}", fixture_key(url, body)))
}

impl Transport for ReplayTransport {
    fn get(&self, url: &str) -> Result<String, TransportError> {
        self.read(url, None)
    }

    fn post_json(&self, url: &str, body: &str, _headers: &[(String, String)]) -> Result<String, TransportError> {
        self.read(url, Some(body))
    }
}

/// Forwards to another transport and stores every successful response in a
/// replay directory.
pub struct RecordingTransport<T> {
    inner: T,
    dir: PathBuf,
    extension: String,
}

impl<T: Transport> RecordingTransport<T> {
    pub fn new(inner: T, dir: impl Into<PathBuf>, extension: &str) -> Self {
        Self {
            inner,
            dir: dir.into(),
            extension: extension.trim_start_matches('.').to_string(),
        }
    }

    fn store(&self, url: &str, body: Option<&str>, response: &str) {
        let path = fixture_path(&self.dir, &self.extension, url, body);
        if let Err(e) = std::fs::create_dir_all(&self.dir).and_then(|_| std::fs::write(&path, response)) {
            log::warn!("could not record fixture {}: {e}", path.display());
        }
    }
}

impl<T: Transport> Transport for RecordingTransport<T> {
    fn get(&self, url: &str) -> Result<String, TransportError> {
        let resp = self.inner.get(url)?;
        self.store(url, None, &resp);
        Ok(resp)
    }

    fn post_json(&self, url: &str, body: &str, headers: &[(String, String)]) -> Result<String, TransportError> {
        let resp = self.inner.post_json(url, body, headers)?;
        self.store(url, Some(body), &resp);
        Ok(resp)
    }
}
