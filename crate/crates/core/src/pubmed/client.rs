use std::collections::HashSet;
use std::sync::Arc;
use std::time::Duration;

use crate::corpus::PublicationRecord;
use crate::http::Transport;

use super::parse::{parse_efetch, parse_esearch, ParseError};
use super::rate_limit::{Clock, RateLimiter};
use super::{FetchPolicy, PubmedError, SearchQuery};

pub const EUTILS_BASE: &str = "https://eutils.ncbi.nlm.nih.gov/entrez/eutils";
pub const API_KEY_ENV: &str = "NCBI_API_KEY";

/// Records returned by efetch plus the requested ids that did not come back.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FetchOutcome {
    pub records: Vec<PublicationRecord>,
    pub missing: Vec<String>,
}

/// E-utilities client. All requests go through one shared rate limiter, so
/// a single client may be used from several threads.
pub struct EutilsClient {
    transport: Arc<dyn Transport>,
    limiter: Arc<RateLimiter>,
    policy: FetchPolicy,
    api_key: Option<String>,
    base_url: String,
}

impl EutilsClient {
    pub fn new(
        transport: Arc<dyn Transport>,
        policy: FetchPolicy,
        api_key: Option<String>,
        clock: Arc<dyn Clock>,
    ) -> Result<Self, PubmedError> {
        policy.validate()?;
        let limiter = Arc::new(RateLimiter::per_second(policy.max_requests_per_second, clock));
        Ok(Self {
            transport,
            limiter,
            policy,
            api_key: api_key.filter(|k| !k.trim().is_empty()),
            base_url: EUTILS_BASE.to_string(),
        })
    }

    /// Reads `NCBI_API_KEY`; its presence raises the default rate cap.
    pub fn from_env(transport: Arc<dyn Transport>, clock: Arc<dyn Clock>) -> Result<Self, PubmedError> {
        let key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.trim().is_empty());
        let policy = FetchPolicy::for_api_key(key.is_some());
        Self::new(transport, policy, key, clock)
    }

    pub fn with_base_url(mut self, base: impl Into<String>) -> Self {
        self.base_url = base.into().trim_end_matches('/').to_string();
        self
    }

    pub fn policy(&self) -> &FetchPolicy {
        &self.policy
    }

    fn url(&self, endpoint: &str, mut params: Vec<(&str, String)>) -> String {
        if let Some(key) = &self.api_key {
            params.push(("api_key", key.clone()));
        }
        reqwest::Url::parse_with_params(&format!("{}/{endpoint}", self.base_url), &params)
            .expect("base url is valid")
            .to_string()
    }

    pub fn esearch_url(&self, query: &SearchQuery, retstart: usize) -> String {
        self.url(
            "esearch.fcgi",
            vec![
                ("db", "pubmed".into()),
                ("term", query.term()),
                ("retstart", retstart.to_string()),
                ("retmax", self.policy.batch_size.to_string()),
                ("datetype", "pdat".into()),
                ("mindate", query.date_from.to_string()),
                ("maxdate", query.date_to.to_string()),
            ],
        )
    }

    pub fn efetch_url(&self, pmids: &[String]) -> String {
        self.url(
            "efetch.fcgi",
            vec![
                ("db", "pubmed".into()),
                ("id", pmids.join(",")),
                ("retmode", "xml".into()),
            ],
        )
    }

    fn get(&self, url: &str) -> Result<String, PubmedError> {
        let mut attempt = 0;
        loop {
            self.limiter.acquire();
            match self.transport.get(url) {
                Ok(body) => return Ok(body),
                Err(e) if e.is_retryable() && attempt < self.policy.retries => {
                    let backoff = Duration::from_millis(500 << attempt.min(6));
                    log::warn!("retrying after {e} (attempt {})", attempt + 1);
                    self.limiter.clock().sleep(backoff);
                    attempt += 1;
                }
                Err(e) => return Err(PubmedError::Transport(e)),
            }
        }
    }

    /// All PMIDs matching the query, following `retstart` pagination.
    pub fn search_pmids(&self, query: &SearchQuery) -> Result<Vec<String>, PubmedError> {
        query.validate()?;
        let mut ids = Vec::new();
        let mut retstart = 0;
        loop {
            let body = self.get(&self.esearch_url(query, retstart))?;
            let page = parse_esearch(&body).map_err(|e| match e {
                ParseError::Xml(x) => PubmedError::Xml(x),
                ParseError::Envelope(m) => PubmedError::Envelope(m),
            })?;
            let n = page.ids.len();
            ids.extend(page.ids);
            retstart += self.policy.batch_size;
            if n == 0 || retstart >= page.count {
                return Ok(ids);
            }
        }
    }

    /// Fetches records in batches. Returned records are restricted to the
    /// requested ids; ids absent from the response are reported as missing.
    pub fn fetch_records(&self, pmids: &[String]) -> Result<FetchOutcome, PubmedError> {
        if let Some(bad) = pmids.iter().find(|p| p.is_empty() || !p.bytes().all(|b| b.is_ascii_digit())) {
            return Err(PubmedError::InvalidPmid(bad.clone()));
        }
        let requested: HashSet<&str> = pmids.iter().map(String::as_str).collect();
        let mut seen = HashSet::new();
        let mut records = Vec::new();
        for batch in pmids.chunks(self.policy.batch_size) {
            let body = self.get(&self.efetch_url(batch))?;
            for rec in parse_efetch(&body)? {
                if requested.contains(rec.pmid.as_str()) && seen.insert(rec.pmid.clone()) {
                    records.push(rec);
                }
            }
        }
        let missing = pmids.iter().filter(|p| !seen.contains(*p)).cloned().collect();
        Ok(FetchOutcome { records, missing })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::http::TransportError;
    use crate::pubmed::rate_limit::VirtualClock;
    use std::collections::HashMap;
    use std::sync::Mutex;

    struct MapTransport {
        responses: HashMap<String, String>,
        calls: Mutex<Vec<String>>,
        fail_first: Mutex<u32>,
    }

    impl Transport for MapTransport {
        fn get(&self, url: &str) -> Result<String, TransportError> {
            self.calls.lock().unwrap().push(url.to_string());
            let mut fail = self.fail_first.lock().unwrap();
            if *fail > 0 {
                *fail -= 1;
                return Err(TransportError::Status { url: url.into(), status: 503, body: String::new() });
            }
            self.responses.get(url).cloned().ok_or_else(|| TransportError::Status {
                url: url.into(),
                status: 404,
                body: String::new(),
            })
        }
        fn post_json(&self, url: &str, _: &str, _: &[(String, String)]) -> Result<String, TransportError> {
            self.get(url)
        }
    }

    fn client(responses: HashMap<String, String>, fail_first: u32) -> (EutilsClient, Arc<MapTransport>) {
        let t = Arc::new(MapTransport { responses, calls: Mutex::new(vec![]), fail_first: Mutex::new(fail_first) });
        let c = EutilsClient::new(t.clone(), FetchPolicy::default(), None, Arc::new(VirtualClock::new())).unwrap();
        (c, t)
    }

    fn esearch_page(count: usize, ids: &[usize]) -> String {
        let ids: String = ids.iter().map(|i| format!("<Id>{i}</Id>")).collect();
        format!("<eSearchResult><Count>{count}</Count><IdList>{ids}</IdList></eSearchResult>")
    }

    #[test]
    fn empty_search_is_empty() {
        let q = SearchQuery::new("Nobody X", None, 2014, 2023).unwrap();
        let (probe, _) = client(HashMap::new(), 0);
        let mut m = HashMap::new();
        m.insert(probe.esearch_url(&q, 0), esearch_page(0, &[]));
        let (c, t) = client(m, 0);
        assert!(c.search_pmids(&q).unwrap().is_empty());
        assert_eq!(t.calls.lock().unwrap().len(), 1);
    }

    #[test]
    fn retries_transient_failures() {
        let q = SearchQuery::new("Alvarez J", None, 2014, 2023).unwrap();
        let (probe, _) = client(HashMap::new(), 0);
        let mut m = HashMap::new();
        m.insert(probe.esearch_url(&q, 0), esearch_page(1, &[7]));
        let (c, t) = client(m, 2);
        assert_eq!(c.search_pmids(&q).unwrap(), vec!["7"]);
        assert_eq!(t.calls.lock().unwrap().len(), 3);
        let (c, _) = client(HashMap::new(), 10);
        assert!(matches!(c.search_pmids(&q), Err(PubmedError::Transport(_))));
    }

    #[test]
    fn fetch_reports_missing_and_ignores_unrequested() {
        let ids: Vec<String> = vec!["1".into(), "2".into()];
        let (probe, _) = client(HashMap::new(), 0);
        let xml = "<PubmedArticleSet>\
            <PubmedArticle><MedlineCitation><PMID>1</PMID><Article><ArticleTitle>A</ArticleTitle></Article></MedlineCitation></PubmedArticle>\
            <PubmedArticle><MedlineCitation><PMID>99</PMID><Article><ArticleTitle>B</ArticleTitle></Article></MedlineCitation></PubmedArticle>\
            </PubmedArticleSet>";
        let mut m = HashMap::new();
        m.insert(probe.efetch_url(&ids), xml.to_string());
        let (c, _) = client(m, 0);
        let out = c.fetch_records(&ids).unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.records[0].pmid, "1");
        assert_eq!(out.missing, vec!["2"]);
        assert!(matches!(c.fetch_records(&["12a".into()]), Err(PubmedError::InvalidPmid(_))));
    }

    #[test]
    fn api_key_is_appended() {
        let t: Arc<dyn Transport> = Arc::new(MapTransport { responses: HashMap::new(), calls: Mutex::new(vec![]), fail_first: Mutex::new(0) });
        let c = EutilsClient::new(t, FetchPolicy::for_api_key(true), Some("k3y".into()), Arc::new(VirtualClock::new())).unwrap();
        let url = c.efetch_url(&["1".into(), "2".into()]);
        assert_eq!(url, format!("{EUTILS_BASE}/efetch.fcgi?db=pubmed&id=1%2C2&retmode=xml&api_key=k3y"));
    }
}
