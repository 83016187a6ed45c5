use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::http::{Transport, TransportError};

pub const DEFAULT_CONTEXT_LIMIT: usize = 128_000;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub system: String,
    pub user: String,
    pub max_output_tokens: usize,
}

impl CompletionRequest {
    /// Stable key for transcript replay.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.system.as_bytes());
        h.update([0x1e]);
        h.update(self.user.as_bytes());
        h.update([0x1e]);
        h.update(self.max_output_tokens.to_string().as_bytes());
        hex::encode(h.finalize())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ProviderError {
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error("malformed provider response: {0}")]
    Response(String),
    #[error("no transcript entry for request {0}")]
    MissingTranscript(String),
    #[error("{0}")]
    Failed(String),
}

/// A text-completion backend.
pub trait LlmProvider: Send + Sync {
    fn complete(&self, request: &CompletionRequest) -> Result<String, ProviderError>;

    fn context_limit_tokens(&self) -> usize {
        DEFAULT_CONTEXT_LIMIT
    }

    /// Number of requests that may be in flight at once.
    fn max_concurrency(&self) -> usize {
        1
    }

    fn name(&self) -> String;
}

/// Deterministic offline providers.
#[derive(Debug)]
pub enum MockProvider {
    /// Always returns the same text.
    Echo(String),
    /// Returns the user text unchanged.
    Identity,
    /// Returns the first `max_words` words of the prompt material, skipping
    /// the one-shot example and the instruction paragraph.
    Extractive { max_words: usize },
    /// Returns "call N" where N counts calls from 1, followed by any earlier
    /// "call M" labels spliced into the prompt.
    Counter(AtomicUsize),
    /// Looks up canned completions by request hash.
    Transcript(HashMap<String, String>),
}

impl MockProvider {
    pub fn counter() -> Self {
        Self::Counter(AtomicUsize::new(0))
    }

    /// Reads JSON Lines of `{"request_hash": ..., "completion": ...}`.
    pub fn load_transcript(path: &Path) -> Result<Self, String> {
        #[derive(Deserialize)]
        struct Entry {
            request_hash: String,
            completion: String,
        }
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let mut map = HashMap::new();
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let e: Entry = serde_json::from_str(line).map_err(|e| format!("{} line {}: {e}", path.display(), i + 1))?;
            map.insert(e.request_hash, e.completion);
        }
        Ok(Self::Transcript(map))
    }
}

/// The material of a prompt: the one-shot example block and the leading
/// instruction paragraph are dropped.
fn material(user: &str) -> String {
    let without_example = match (user.find("### Example"), user.find("### End of example")) {
        (Some(a), Some(b)) if a < b => format!("{}{}", &user[..a], &user[b + "### End of example".len()..]),
        _ => user.to_string(),
    };
    let paragraphs: Vec<&str> = without_example.split("\n\n").map(str::trim).filter(|p| !p.is_empty()).collect();
    if paragraphs.len() > 1 {
        paragraphs[1..].join("\n\n")
    } else {
        paragraphs.concat()
    }
}

fn extract(user: &str, max_words: usize) -> String {
    let material = material(user);
    let words: Vec<&str> = material
        .lines()
        .filter(|l| !l.trim_end().ends_with(':'))
        .flat_map(str::split_whitespace)
        .filter(|w| *w != "-")
        .take(max_words)
        .collect();
    let mut s = words.join(" ");
    if !s.is_empty() && !s.ends_with('.') {
        s.push('.');
    }
    s
}

/// "call N", followed by the earlier call labels found in the prompt.
fn count_call(n: usize, user: &str) -> String {
    let mut seen = Vec::new();
    let mut rest = user;
    while let Some(i) = rest.find("call ") {
        let digits: String = rest[i + 5..].chars().take_while(char::is_ascii_digit).collect();
        if !digits.is_empty() {
            seen.push(format!("call {digits}"));
        }
        rest = &rest[i + 5..];
    }
    seen.dedup();
    if seen.is_empty() {
        format!("call {n}")
    } else {
        format!("call {n} after {}", seen.join(", "))
    }
}

impl LlmProvider for MockProvider {
    fn complete(&self, request: &CompletionRequest) -> Result<String, ProviderError> {
        Ok(match self {
            Self::Echo(text) => text.clone(),
            Self::Identity => request.user.clone(),
            Self::Extractive { max_words } => extract(&request.user, *max_words),
            Self::Counter(n) => count_call(n.fetch_add(1, Ordering::SeqCst) + 1, &request.user),
            Self::Transcript(map) => {
                let key = request.hash();
                map.get(&key).cloned().ok_or(ProviderError::MissingTranscript(key))?
            }
        })
    }

    fn max_concurrency(&self) -> usize {
        match self {
            Self::Counter(_) => 1,
            _ => 4,
        }
    }

    fn name(&self) -> String {
        match self {
            Self::Echo(_) => "mock:echo",
            Self::Identity => "mock:identity",
            Self::Extractive { .. } => "mock:extractive",
            Self::Counter(_) => "mock:counter",
            Self::Transcript(_) => "mock:transcript",
        }
        .into()
    }
}

/// Chat-completions client: POSTs `{"model", "messages": [system, user],
/// "max_tokens", "temperature"}` and reads `choices[0].message.content`.
pub struct HttpChatProvider {
    transport: Arc<dyn Transport>,
    endpoint: String,
    model: String,
    api_key: Option<String>,
    temperature: f64,
    context_limit: usize,
    concurrency: usize,
}

impl HttpChatProvider {
    pub fn new(transport: Arc<dyn Transport>, config: &ProviderConfig) -> Result<Self, String> {
        let endpoint = config.endpoint.clone().ok_or("http-chat provider needs an endpoint")?;
        let model = config.model.clone().ok_or("http-chat provider needs a model")?;
        let api_key = match &config.api_key_env {
            Some(var) => Some(std::env::var(var).map_err(|_| format!("environment variable {var} is not set"))?),
            None => None,
        };
        Ok(Self {
            transport,
            endpoint,
            model,
            api_key,
            temperature: config.temperature,
            context_limit: config.context_limit_tokens,
            concurrency: config.max_concurrency.max(1),
        })
    }
}

impl LlmProvider for HttpChatProvider {
    fn complete(&self, request: &CompletionRequest) -> Result<String, ProviderError> {
        let body = serde_json::json!({
            "model": self.model,
            "messages": [
                { "role": "system", "content": request.system },
                { "role": "user", "content": request.user },
            ],
            "max_tokens": request.max_output_tokens,
            "temperature": self.temperature,
        })
        .to_string();
        let headers: Vec<(String, String)> =
            self.api_key.iter().map(|k| ("Authorization".to_string(), format!("Bearer {k}"))).collect();
        let reply = self.transport.post_json(&self.endpoint, &body, &headers)?;
        let v: serde_json::Value = serde_json::from_str(&reply).map_err(|e| ProviderError::Response(e.to_string()))?;
        v.pointer("/choices/0/message/content")
            .and_then(|c| c.as_str())
            .map(str::to_string)
            .ok_or_else(|| ProviderError::Response("missing choices[0].message.content".into()))
    }

    fn context_limit_tokens(&self) -> usize {
        self.context_limit
    }

    fn max_concurrency(&self) -> usize {
        self.concurrency
    }

    fn name(&self) -> String {
        format!("http-chat:{}", self.model)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProviderKind {
    HttpChat,
    Mock,
}

/// Provider configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderConfig {
    pub kind: ProviderKind,
    #[serde(default)]
    pub endpoint: Option<String>,
    #[serde(default)]
    pub model: Option<String>,
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default = "default_context_limit")]
    pub context_limit_tokens: usize,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "one")]
    pub max_concurrency: usize,
    /// Mock behaviour: "echo", "identity", "extractive" or "transcript".
    #[serde(default)]
    pub mock: Option<String>,
    #[serde(default)]
    pub text: Option<String>,
    #[serde(default)]
    pub max_words: Option<usize>,
    /// Transcript path, relative to the config file.
    #[serde(default)]
    pub transcript: Option<PathBuf>,
}

fn default_context_limit() -> usize {
    DEFAULT_CONTEXT_LIMIT
}

fn one() -> usize {
    1
}

/// A provider built from configuration, with the configured context limit.
pub struct ConfiguredProvider {
    inner: Box<dyn LlmProvider>,
    context_limit: usize,
}

impl LlmProvider for ConfiguredProvider {
    fn complete(&self, request: &CompletionRequest) -> Result<String, ProviderError> {
        self.inner.complete(request)
    }
    fn context_limit_tokens(&self) -> usize {
        self.context_limit
    }
    fn max_concurrency(&self) -> usize {
        self.inner.max_concurrency()
    }
    fn name(&self) -> String {
        self.inner.name()
    }
}

impl ProviderConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let mut cfg: Self = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        if let (Some(t), Some(dir)) = (&cfg.transcript, path.parent()) {
            if t.is_relative() {
                cfg.transcript = Some(dir.join(t));
            }
        }
        Ok(cfg)
    }

    pub fn build(&self, transport: Arc<dyn Transport>) -> Result<ConfiguredProvider, String> {
        let inner: Box<dyn LlmProvider> = match self.kind {
            ProviderKind::HttpChat => Box::new(HttpChatProvider::new(transport, self)?),
            ProviderKind::Mock => Box::new(match self.mock.as_deref().unwrap_or("extractive") {
                "echo" => MockProvider::Echo(self.text.clone().ok_or("echo mock needs \"text\"")?),
                "identity" => MockProvider::Identity,
                "extractive" => MockProvider::Extractive { max_words: self.max_words.unwrap_or(120) },
                "counter" => MockProvider::counter(),
                "transcript" => MockProvider::load_transcript(self.transcript.as_deref().ok_or("transcript mock needs \"transcript\"")?)?,
                other => return Err(format!("unknown mock behaviour '{other}'")),
            }),
        };
        Ok(ConfiguredProvider { inner, context_limit: self.context_limit_tokens })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::http::HttpTransport;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::time::Duration;

    fn req(user: &str) -> CompletionRequest {
        CompletionRequest { system: "sys".into(), user: user.into(), max_output_tokens: 50 }
    }

    #[test]
    fn mocks_are_deterministic() {
        assert_eq!(MockProvider::Echo("fixed".into()).complete(&req("x")).unwrap(), "fixed");
        assert_eq!(MockProvider::Identity.complete(&req("same text")).unwrap(), "same text");
        let m = MockProvider::Extractive { max_words: 4 };
        let r = req("Header line\n\nMethodology terms:\n- Genomics\n- Cohort Studies\n- Precision Medicine");
        assert_eq!(m.complete(&r).unwrap(), "Genomics Cohort Studies Precision.");
        let with_example = req("### Example\nInstructions: x\n\nProfile:\ny\n### End of example\n\nWrite it.\n\nAlpha beta.");
        assert_eq!(m.complete(&with_example).unwrap(), "Alpha beta.");
        assert_eq!(m.complete(&r).unwrap(), m.complete(&r).unwrap());
        let c = MockProvider::counter();
        assert_eq!(c.complete(&req("a")).unwrap(), "call 1");
        assert_eq!(c.complete(&req("a")).unwrap(), "call 2");
        assert_eq!(c.complete(&req("call 1\n\ncall 2")).unwrap(), "call 3 after call 1, call 2");
    }

    #[test]
    fn transcript_lookup() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.jsonl");
        let line = serde_json::json!({ "request_hash": req("q").hash(), "completion": "canned" }).to_string();
        std::fs::write(&p, format!("{line}\n")).unwrap();
        let m = MockProvider::load_transcript(&p).unwrap();
        assert_eq!(m.complete(&req("q")).unwrap(), "canned");
        assert!(matches!(m.complete(&req("other")), Err(ProviderError::MissingTranscript(_))));
    }

    #[test]
    fn config_builds_providers() {
        let cfg: ProviderConfig = serde_json::from_str(r#"{"kind":"mock","mock":"echo","text":"hi","context_limit_tokens":900}"#).unwrap();
        let p = cfg.build(Arc::new(crate::http::ReplayTransport::new("/nonexistent", "json"))).unwrap();
        assert_eq!(p.context_limit_tokens(), 900);
        assert_eq!(p.complete(&req("x")).unwrap(), "hi");
        let bad: ProviderConfig = serde_json::from_str(r#"{"kind":"http-chat"}"#).unwrap();
        assert!(bad.build(Arc::new(crate::http::ReplayTransport::new("/x", "json"))).is_err());
    }

    /// Serves one canned HTTP response and returns the request body it saw.
    fn serve_once(status: &str, body: &'static str) -> (String, std::thread::JoinHandle<String>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
        let status = status.to_string();
        let handle = std::thread::spawn(move || {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut len = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if line == "\r\n" || line.is_empty() {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
            }
            let mut buf = vec![0; len];
            reader.read_exact(&mut buf).unwrap();
            let mut stream = stream;
            write!(stream, "HTTP/1.1 {status}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}", body.len()).unwrap();
            String::from_utf8(buf).unwrap()
        });
        (url, handle)
    }

    #[test]
    fn http_chat_wire_shape() {
        let (url, server) = serve_once("200 OK", r#"{"choices":[{"message":{"role":"assistant","content":"A profile."}}]}"#);
        let cfg = ProviderConfig {
            kind: ProviderKind::HttpChat,
            endpoint: Some(url),
            model: Some("test-model".into()),
            api_key_env: None,
            context_limit_tokens: 1000,
            temperature: 0.0,
            max_concurrency: 2,
            mock: None,
            text: None,
            max_words: None,
            transcript: None,
        };
        let p = cfg.build(Arc::new(HttpTransport::new(Duration::from_secs(10)).unwrap())).unwrap();
        assert_eq!(p.complete(&req("user text")).unwrap(), "A profile.");
        let sent: serde_json::Value = serde_json::from_str(&server.join().unwrap()).unwrap();
        assert_eq!(sent["model"], "test-model");
        assert_eq!(sent["messages"][0]["role"], "system");
        assert_eq!(sent["messages"][1]["content"], "user text");
        assert_eq!(sent["max_tokens"], 50);
    }

    #[test]
    fn http_chat_errors_are_typed() {
        let (url, server) = serve_once("500 Internal Server Error", r#"{"error":"boom"}"#);
        let t: Arc<dyn Transport> = Arc::new(HttpTransport::new(Duration::from_secs(10)).unwrap());
        let cfg: ProviderConfig = serde_json::from_value(serde_json::json!({"kind": "http-chat", "endpoint": url, "model": "m"})).unwrap();
        let p = cfg.build(t).unwrap();
        assert!(matches!(p.complete(&req("x")), Err(ProviderError::Transport(TransportError::Status { status: 500, .. }))));
        server.join().unwrap();
    }
}
