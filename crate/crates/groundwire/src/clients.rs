//! Pluggable collaborators for the pipeline: deterministic offline
//! personas for tests and evaluation, heuristic rewrite/rerank helpers,
//! and thin HTTP clients for real endpoints.
//!
//! The offline personas cover the behaviors the guardrail and evaluator
//! must handle: an answer grounded in evidence, an answer that invents
//! URLs (split across stream chunks, mid-URL), and an answer that buries
//! the content in filler.

use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hybrid::Rewriter;
use crate::orchestrator::Reranker;
use crate::pipeline::{GenerationPrompt, Generator};
use crate::reward::judge::JudgeClient;
use crate::text::content_terms;

// --- offline personas -------------------------------------------------------

/// First sentence of `text`, or all of it if there is no terminator. A
/// terminator only counts before whitespace or end of text, so dots
/// inside URLs and abbreviations do not cut the sentence.
fn first_sentence(text: &str) -> &str {
    for (idx, c) in text.char_indices() {
        if matches!(c, '.' | '!' | '?') {
            let next = idx + c.len_utf8();
            if text[next..].chars().next().is_none_or(char::is_whitespace) {
                return &text[..next];
            }
        }
    }
    text
}

/// Splits `text` into stream deltas of at most `width` bytes, cutting on
/// char boundaries only. Deliberately ignores word and URL boundaries so
/// downstream consumers see realistic mid-token chunking.
fn chop(text: &str, width: usize) -> Vec<String> {
    let mut deltas = Vec::new();
    let mut rest = text;
    while !rest.is_empty() {
        let mut cut = width.min(rest.len());
        while !rest.is_char_boundary(cut) {
            cut -= 1;
        }
        let (head, tail) = rest.split_at(cut);
        deltas.push(head.to_string());
        rest = tail;
    }
    deltas
}

/// FNV-1a, used where a persona needs a stable per-query coin flip.
fn fnv1a(text: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in text.as_bytes() {
        h ^= u64::from(*byte);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Answers with the first sentence of the top evidence chunk and cites a
/// URL from the evidence when one exists. Never invents anything.
pub struct FaithfulEcho {
    /// Stream delta width, bytes.
    pub delta_bytes: usize,
}

impl Default for FaithfulEcho {
    fn default() -> Self {
        Self { delta_bytes: 24 }
    }
}

fn grounded_answer(prompt: &GenerationPrompt) -> String {
    let Some(top) = prompt.evidence.first() else {
        return "No supporting material was retrieved.".to_string();
    };
    let mut answer = first_sentence(&top.text).trim().to_string();
    let cited = prompt
        .evidence
        .iter()
        .flat_map(|item| crate::reward::extract_urls(&item.text))
        .next();
    if let Some(url) = cited {
        if !answer.contains(&url) {
            answer.push_str(" See ");
            answer.push_str(&url);
            answer.push('.');
        }
    }
    answer
}

impl Generator for FaithfulEcho {
    fn generate(&self, prompt: &GenerationPrompt) -> Result<Vec<String>> {
        Ok(chop(&grounded_answer(prompt), self.delta_bytes))
    }
}

/// Grounded answer, but half the queries (stable per query text) get a
/// fabricated citation appended, and the chunking cuts through it.
pub struct UrlFabricator {
    pub delta_bytes: usize,
}

impl Default for UrlFabricator {
    fn default() -> Self {
        Self { delta_bytes: 24 }
    }
}

impl UrlFabricator {
    pub fn fabricates(&self, query: &str) -> bool {
        fnv1a(query).is_multiple_of(2)
    }
}

impl Generator for UrlFabricator {
    fn generate(&self, prompt: &GenerationPrompt) -> Result<Vec<String>> {
        let mut answer = grounded_answer(prompt);
        if self.fabricates(&prompt.query) {
            answer.push_str(&format!(
                " Full details at https://made-up.example/ref/{:x}.",
                fnv1a(&prompt.query) & 0xffff
            ));
        }
        Ok(chop(&answer, self.delta_bytes))
    }
}

/// Grounded answer wrapped in boilerplate; exercises style scoring and
/// token budgets without changing the facts.
pub struct Verbose {
    pub delta_bytes: usize,
}

impl Default for Verbose {
    fn default() -> Self {
        Self { delta_bytes: 48 }
    }
}

impl Generator for Verbose {
    fn generate(&self, prompt: &GenerationPrompt) -> Result<Vec<String>> {
        let core = grounded_answer(prompt);
        let answer = format!(
            "Thank you for the question. Let me walk through everything I found, \
             step by step, before getting to the point. {core} To summarize the \
             summary: the preceding sentences contain the answer. I hope this \
             exhaustive treatment helps."
        );
        Ok(chop(&answer, self.delta_bytes))
    }
}

/// Always fails; stands in for a dead model endpoint.
pub struct FailingGenerator {
    pub message: String,
}

impl Default for FailingGenerator {
    fn default() -> Self {
        Self { message: "generator endpoint unreachable".to_string() }
    }
}

impl Generator for FailingGenerator {
    fn generate(&self, _prompt: &GenerationPrompt) -> Result<Vec<String>> {
        Err(Error::GeneratorUnavailable(self.message.clone()))
    }
}

/// Wraps a generator and sleeps first; for latency and timeout tests.
pub struct SlowGenerator {
    pub inner: Arc<dyn Generator>,
    pub delay: Duration,
}

impl Generator for SlowGenerator {
    fn generate(&self, prompt: &GenerationPrompt) -> Result<Vec<String>> {
        std::thread::sleep(self.delay);
        self.inner.generate(prompt)
    }
}

// --- heuristic rewrite / rerank ---------------------------------------------

/// Offline query rewriter: content-term permutations, no model.
pub struct HeuristicRewriter;

impl Rewriter for HeuristicRewriter {
    fn rewrite(&self, query: &str) -> Result<Vec<String>> {
        let terms = content_terms(query);
        if terms.len() < 2 {
            return Ok(Vec::new());
        }
        let mut variants = Vec::new();
        // Bare content terms strip the phrasing.
        variants.push(terms.join(" "));
        // Reversed order shifts BM25 ties and dense hashing.
        let mut reversed = terms.clone();
        reversed.reverse();
        variants.push(reversed.join(" "));
        // Dropping the most generic (shortest) term sharpens the rest.
        if terms.len() > 2 {
            let (drop_idx, _) = terms
                .iter()
                .enumerate()
                .min_by_key(|(idx, t)| (t.chars().count(), *idx))
                .expect("nonempty");
            let kept: Vec<&str> = terms
                .iter()
                .enumerate()
                .filter(|(idx, _)| *idx != drop_idx)
                .map(|(_, t)| t.as_str())
                .collect();
            variants.push(kept.join(" "));
        }
        variants.retain(|v| v != query);
        variants.dedup();
        Ok(variants)
    }
}

/// Offline reranker: fraction of query content terms present in the
/// passage. Order-preserving for ties, cheap, deterministic.
pub struct OverlapReranker;

impl Reranker for OverlapReranker {
    fn score(&self, query: &str, passages: &[String]) -> Result<Vec<f64>> {
        let terms = content_terms(query);
        if terms.is_empty() {
            return Ok(vec![0.0; passages.len()]);
        }
        Ok(passages
            .iter()
            .map(|p| {
                let lower = p.to_lowercase();
                let hits = terms.iter().filter(|t| lower.contains(*t)).count();
                hits as f64 / terms.len() as f64
            })
            .collect())
    }
}

// --- HTTP-backed clients ------------------------------------------------------

/// Shared plumbing: POST a JSON body, get a JSON reply, with one timeout.
struct HttpJson {
    endpoint: String,
    client: reqwest::blocking::Client,
}

impl HttpJson {
    fn new(endpoint: impl Into<String>, timeout: Duration) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| Error::Config(format!("http client: {e}")))?;
        Ok(Self { endpoint: endpoint.into(), client })
    }

    fn post<B: Serialize, R: for<'de> Deserialize<'de>>(
        &self,
        body: &B,
    ) -> std::result::Result<R, String> {
        let resp = self
            .client
            .post(&self.endpoint)
            .json(body)
            .send()
            .map_err(|e| e.to_string())?;
        let status = resp.status();
        if !status.is_success() {
            return Err(format!("{} replied {status}", self.endpoint));
        }
        resp.json::<R>().map_err(|e| format!("bad reply body: {e}"))
    }
}

#[derive(Serialize)]
struct GenerateBody<'a> {
    query: &'a str,
    history: &'a [String],
    evidence: Vec<&'a str>,
}

#[derive(Deserialize)]
struct GenerateReply {
    deltas: Vec<String>,
}

/// Remote generator speaking `{query, history, evidence} -> {deltas}`.
pub struct HttpGenerator {
    http: HttpJson,
}

impl HttpGenerator {
    pub fn new(endpoint: impl Into<String>, timeout: Duration) -> Result<Self> {
        Ok(Self { http: HttpJson::new(endpoint, timeout)? })
    }
}

impl Generator for HttpGenerator {
    fn generate(&self, prompt: &GenerationPrompt) -> Result<Vec<String>> {
        let body = GenerateBody {
            query: &prompt.query,
            history: &prompt.history,
            evidence: prompt.evidence.iter().map(|e| e.text.as_str()).collect(),
        };
        let reply: GenerateReply =
            self.http.post(&body).map_err(Error::GeneratorUnavailable)?;
        Ok(reply.deltas)
    }
}

#[derive(Serialize)]
struct RewriteBody<'a> {
    query: &'a str,
}

#[derive(Deserialize)]
struct RewriteReply {
    rewrites: Vec<String>,
}

/// Remote rewriter speaking `{query} -> {rewrites}`.
pub struct HttpRewriter {
    http: HttpJson,
}

impl HttpRewriter {
    pub fn new(endpoint: impl Into<String>, timeout: Duration) -> Result<Self> {
        Ok(Self { http: HttpJson::new(endpoint, timeout)? })
    }
}

impl Rewriter for HttpRewriter {
    fn rewrite(&self, query: &str) -> Result<Vec<String>> {
        let reply: RewriteReply = self
            .http
            .post(&RewriteBody { query })
            .map_err(|e| Error::Config(format!("rewriter: {e}")))?;
        Ok(reply.rewrites)
    }
}

#[derive(Serialize)]
struct EmbedBody<'a> {
    text: &'a str,
}

#[derive(Deserialize)]
struct EmbedReply {
    vector: Vec<f32>,
}

/// Remote embedder speaking `{text} -> {vector}`. The declared width is
/// trusted; replies of a different width error.
pub struct HttpEmbedder {
    http: HttpJson,
    dims: usize,
}

impl HttpEmbedder {
    pub fn new(endpoint: impl Into<String>, dims: usize, timeout: Duration) -> Result<Self> {
        Ok(Self { http: HttpJson::new(endpoint, timeout)?, dims })
    }
}

impl crate::hybrid::Embedder for HttpEmbedder {
    fn embed(&self, text: &str) -> Result<Vec<f32>> {
        let reply: EmbedReply = self
            .http
            .post(&EmbedBody { text })
            .map_err(Error::EmbedderFailure)?;
        if reply.vector.len() != self.dims {
            return Err(Error::EmbedderFailure(format!(
                "expected {} dims, got {}",
                self.dims,
                reply.vector.len()
            )));
        }
        Ok(reply.vector)
    }

    fn dims(&self) -> usize {
        self.dims
    }
}

#[derive(Serialize)]
struct RerankBody<'a> {
    query: &'a str,
    passages: &'a [String],
}

#[derive(Deserialize)]
struct RerankReply {
    scores: Vec<f64>,
}

/// Remote reranker speaking `{query, passages} -> {scores}`.
pub struct HttpReranker {
    http: HttpJson,
}

impl HttpReranker {
    pub fn new(endpoint: impl Into<String>, timeout: Duration) -> Result<Self> {
        Ok(Self { http: HttpJson::new(endpoint, timeout)? })
    }
}

impl Reranker for HttpReranker {
    fn score(&self, query: &str, passages: &[String]) -> Result<Vec<f64>> {
        let reply: RerankReply = self
            .http
            .post(&RerankBody { query, passages })
            .map_err(Error::Config)?;
        Ok(reply.scores)
    }
}

#[derive(Serialize)]
struct JudgeBody<'a> {
    prompt: &'a str,
}

#[derive(Deserialize)]
struct JudgeReply {
    text: String,
}

/// Remote judge transport speaking `{prompt} -> {text}`; parsing of the
/// graded reply stays in the reward module.
pub struct HttpJudgeClient {
    http: HttpJson,
}

impl HttpJudgeClient {
    pub fn new(endpoint: impl Into<String>, timeout: Duration) -> Result<Self> {
        Ok(Self { http: HttpJson::new(endpoint, timeout)? })
    }
}

impl JudgeClient for HttpJudgeClient {
    fn evaluate(&self, prompt: &str) -> Result<String> {
        let reply: JudgeReply = self
            .http
            .post(&JudgeBody { prompt })
            .map_err(Error::JudgeUnavailable)?;
        Ok(reply.text)
    }
}
