//! URL validity decisions. A URL is valid when it appears in the evidence
//! set, or when it sits under an approved prefix and a live probe answers
//! with an accepted status. Everything else, including probe timeouts and
//! transport errors, counts as invalid: the scorer fails closed.

use std::collections::BTreeSet;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::reward::url::canonicalize;

/// HTTP statuses that count as alive.
pub const LIVE_STATUSES: &[u16] = &[200, 301, 302];

/// Source of liveness information for probed URLs.
pub trait StatusChecker: Send + Sync {
    /// Status of a probe, or `None` when the URL did not answer in time.
    fn status(&self, url: &str) -> Option<u16>;
}

/// Fixed status map for tests and offline runs.
#[derive(Debug, Clone, Default)]
pub struct StaticStatusChecker {
    map: std::collections::BTreeMap<String, u16>,
    default: Option<u16>,
}

impl StaticStatusChecker {
    pub fn new(entries: impl IntoIterator<Item = (String, u16)>, default: Option<u16>) -> Self {
        Self {
            map: entries.into_iter().collect(),
            default,
        }
    }

    /// Checker that answers `status` for every URL.
    pub fn uniform(status: Option<u16>) -> Self {
        Self {
            map: Default::default(),
            default: status,
        }
    }
}

impl StatusChecker for StaticStatusChecker {
    fn status(&self, url: &str) -> Option<u16> {
        self.map.get(url).copied().or(self.default)
    }
}

/// Live checker: HEAD request, no redirect following (so 301/302 are
/// observed as such), hard timeout. Any transport failure reads as dead.
pub struct HttpStatusChecker {
    client: reqwest::blocking::Client,
}

impl HttpStatusChecker {
    pub fn new(timeout: Duration) -> Self {
        let client = reqwest::blocking::Client::builder()
            .redirect(reqwest::redirect::Policy::none())
            .timeout(timeout)
            .build()
            .expect("http client builds");
        Self { client }
    }
}

impl StatusChecker for HttpStatusChecker {
    fn status(&self, url: &str) -> Option<u16> {
        self.client
            .head(url)
            .send()
            .ok()
            .map(|r| r.status().as_u16())
    }
}

/// Approved URL prefixes. A URL passes when any canonical prefix is a
/// string prefix of its canonical form.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PrefixPool {
    prefixes: Vec<String>,
}

impl PrefixPool {
    pub fn new(prefixes: impl IntoIterator<Item = String>) -> Self {
        Self {
            prefixes: prefixes.into_iter().map(|p| canonicalize(&p)).collect(),
        }
    }

    /// One prefix per line; blank lines are skipped.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let raw = std::fs::read_to_string(path)?;
        Ok(Self::new(
            raw.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(String::from),
        ))
    }

    pub fn approves(&self, url: &str) -> bool {
        self.prefixes.iter().any(|p| url.starts_with(p))
    }

    pub fn is_empty(&self) -> bool {
        self.prefixes.is_empty()
    }

    pub fn prefixes(&self) -> &[String] {
        &self.prefixes
    }
}

/// Validation outcome for one URL, with the intermediate signals kept for
/// audit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UrlVerdict {
    pub url: String,
    pub in_evidence: bool,
    pub prefix_approved: bool,
    /// Probe status; `None` when no probe ran or the probe failed.
    pub http_status: Option<u16>,
    pub valid: bool,
}

/// Validates already-canonical, already-deduplicated URLs. The checker is
/// consulted at most once per URL, and only for URLs that are absent from
/// the evidence but sit under an approved prefix; everything else is
/// decided without network traffic.
pub fn validate_urls(
    urls: &[String],
    evidence_urls: &BTreeSet<String>,
    pool: &PrefixPool,
    checker: &dyn StatusChecker,
) -> Vec<UrlVerdict> {
    urls.iter()
        .map(|url| {
            let in_evidence = evidence_urls.contains(url);
            let prefix_approved = pool.approves(url);
            let mut http_status = None;
            let valid = in_evidence
                || (prefix_approved && {
                    http_status = checker.status(url);
                    matches!(http_status, Some(s) if LIVE_STATUSES.contains(&s))
                });
            UrlVerdict {
                url: url.clone(),
                in_evidence,
                prefix_approved,
                http_status,
                valid,
            }
        })
        .collect()
}

/// URL reward: (valid - invalid) / total, and 0.0 when the answer carries
/// no URLs at all. Range [-1, 1].
pub fn score_url_reward(verdicts: &[UrlVerdict]) -> f64 {
    if verdicts.is_empty() {
        return 0.0;
    }
    let total = verdicts.len() as f64;
    let valid = verdicts.iter().filter(|v| v.valid).count() as f64;
    (2.0 * valid - total) / total
}
