//! End-to-end request path: build the indexes once, then serve each
//! question as retrieve -> generate -> guard. Every response carries the
//! evidence ids, the guardrail events, and a per-stage timing breakdown;
//! failure of the generator degrades the response, never the process.
//!
//! Invariants:
//! - Empty evidence short-circuits to the configured refusal text; the
//!   generator is not called.
//! - Generated text reaches the caller only through the guardrail, so an
//!   answer can never contain a URL the policy did not validate.
//! - Stage timings are measured around the actual work; their sum tracks
//!   the request wall-clock.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::config::{OrchestratorSettings, PipelineConfig, RouteMode};
use crate::error::Result;
use crate::graph::{build_graph, detect_communities, GazetteerExtractor, GraphChannel};
use crate::guardrail::{Guardrail, GuardrailEvent, UrlPolicy};
use crate::hybrid::{DenseIndex, HashedEmbedder, HybridChannel, LexicalIndex};
use crate::hybrid::Rewriter;
use crate::orchestrator::{EvidenceItem, Orchestrator, Reranker, RetrievalTrace};
use crate::reward::validate::{PrefixPool, StatusChecker};
use crate::store::CorpusStore;
use crate::types::{ChunkId, DegradationEvent};

// --- generation -----------------------------------------------------------

/// Everything the generator sees for one request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationPrompt {
    pub query: String,
    pub history: Vec<String>,
    pub evidence: Vec<EvidenceItem>,
}

/// Produces an answer as a sequence of stream deltas. Implementations
/// may be local stubs or remote model endpoints.
pub trait Generator: Send + Sync {
    fn generate(&self, prompt: &GenerationPrompt) -> Result<Vec<String>>;
}

// --- request / response -----------------------------------------------------

/// Per-request knobs; anything unset falls back to the pipeline config.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RequestOverrides {
    pub route: Option<RouteMode>,
    pub final_k: Option<usize>,
    pub token_budget: Option<usize>,
}

impl RequestOverrides {
    pub fn apply(&self, base: &OrchestratorSettings) -> OrchestratorSettings {
        let mut s = base.clone();
        if let Some(route) = self.route {
            s.route = route;
        }
        if let Some(final_k) = self.final_k {
            s.final_k = final_k;
        }
        if let Some(budget) = self.token_budget {
            s.token_budget = budget;
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QARequest {
    pub query: String,
    #[serde(default)]
    pub history: Vec<String>,
    #[serde(default)]
    pub overrides: RequestOverrides,
}

impl QARequest {
    pub fn new(query: impl Into<String>) -> Self {
        Self {
            query: query.into(),
            history: Vec::new(),
            overrides: RequestOverrides::default(),
        }
    }
}

/// Wall-clock per stage, milliseconds. `graph_ms` and `hybrid_ms` run
/// inside the retrieval fan-out, so they overlap `retrieval_ms` and stay
/// out of the contiguous sum.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub rewrite_ms: f64,
    pub retrieval_ms: f64,
    pub graph_ms: f64,
    pub hybrid_ms: f64,
    pub rerank_ms: f64,
    pub generation_ms: f64,
    pub guardrail_ms: f64,
    pub total_ms: f64,
}

impl StageTimings {
    /// Sum of the stages that run back to back; compare against
    /// `total_ms` to catch unaccounted time.
    pub fn contiguous(&self) -> f64 {
        self.rewrite_ms + self.retrieval_ms + self.rerank_ms + self.generation_ms
            + self.guardrail_ms
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorInfo {
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QAResponse {
    /// Guarded answer text (concatenation of `deltas`).
    pub answer: String,
    /// Guarded stream chunks in emission order.
    pub deltas: Vec<String>,
    pub evidence_ids: Vec<ChunkId>,
    pub guardrail_events: Vec<GuardrailEvent>,
    pub timings: StageTimings,
    pub refused: bool,
    pub error: Option<ErrorInfo>,
    pub degradations: Vec<DegradationEvent>,
}

// --- pipeline ----------------------------------------------------------------

/// External collaborators injected at build time.
pub struct PipelineClients {
    pub generator: Arc<dyn Generator>,
    pub rewriter: Option<Arc<dyn Rewriter>>,
    pub reranker: Option<Arc<dyn Reranker>>,
    pub checker: Arc<dyn StatusChecker>,
    pub prefix_pool: PrefixPool,
}

pub struct Pipeline {
    pub orchestrator: Orchestrator,
    pub config: PipelineConfig,
    generator: Arc<dyn Generator>,
    checker: Arc<dyn StatusChecker>,
    prefix_pool: PrefixPool,
    /// Canonical URLs per indexed chunk, frozen at build time.
    chunk_urls: Arc<BTreeMap<ChunkId, BTreeSet<String>>>,
}

impl Pipeline {
    /// Indexes the store's current snapshot: entity graph with
    /// communities for the graph channel, BM25 plus hashed-embedding
    /// cosine for the hybrid channel. Call `rolling_update` on the store
    /// first to pick the subset.
    pub fn build(
        store: &CorpusStore,
        config: &PipelineConfig,
        clients: PipelineClients,
    ) -> Result<Self> {
        let snapshot = store.snapshot();
        let mut texts: BTreeMap<ChunkId, String> = BTreeMap::new();
        let mut chunk_urls: BTreeMap<ChunkId, BTreeSet<String>> = BTreeMap::new();
        for id in &snapshot.chunk_ids {
            if let Some(chunk) = store.get(id) {
                texts.insert(id.clone(), chunk.text.clone());
                chunk_urls.insert(id.clone(), chunk.urls.clone());
            }
        }
        if texts.is_empty() {
            return Err(crate::error::Error::EmptyIndex);
        }

        let extractor =
            GazetteerExtractor::from_corpus(texts.values().map(|t| t.as_str()), &[] as &[&str]);
        let built = build_graph(&snapshot, store, &extractor)?;
        let graph = Arc::new(built.graph);
        let communities =
            Arc::new(detect_communities(&graph, store, &snapshot, &config.graph));

        let docs = || texts.iter().map(|(id, text)| (id.as_str(), text.as_str()));
        let lexical = LexicalIndex::build(docs(), config.hybrid.k1, config.hybrid.b);
        let embedder: Arc<dyn crate::hybrid::Embedder> =
            Arc::new(HashedEmbedder::new(config.hybrid.dims));
        let (dense, _) = DenseIndex::from_embedder(docs(), embedder.as_ref())?;

        let orchestrator = Orchestrator {
            graph: Arc::clone(&graph),
            graph_channel: Arc::new(GraphChannel::new(graph, communities, config.graph.hops)),
            hybrid_channel: Arc::new(HybridChannel {
                lexical: Arc::new(lexical),
                dense: Arc::new(dense),
                embedder,
                rrf_k: config.hybrid.rrf_k,
            }),
            rewriter: clients.rewriter,
            reranker: clients.reranker,
            texts: Arc::new(texts),
            settings: config.orchestrator.clone(),
            graph_k: config.graph.k,
            hybrid_k: config.hybrid.k,
            rrf_k: config.hybrid.rrf_k,
            max_rewrites: config.hybrid.max_rewrites,
        };

        Ok(Self {
            orchestrator,
            config: config.clone(),
            generator: clients.generator,
            checker: clients.checker,
            prefix_pool: clients.prefix_pool,
            chunk_urls: Arc::new(chunk_urls),
        })
    }

    pub fn num_indexed(&self) -> usize {
        self.orchestrator.texts.len()
    }

    pub fn prefix_pool(&self) -> &PrefixPool {
        &self.prefix_pool
    }

    /// Union of canonical URLs across the given indexed chunks.
    pub fn evidence_urls(&self, ids: &[ChunkId]) -> BTreeSet<String> {
        ids.iter()
            .filter_map(|id| self.chunk_urls.get(id))
            .flat_map(|urls| urls.iter().cloned())
            .collect()
    }

    pub fn answer(&self, req: &QARequest) -> QAResponse {
        self.answer_traced(req).0
    }

    /// Like `answer`, but also returns the retrieval trace and the raw
    /// (pre-guardrail) generator text when generation ran. Evaluation
    /// uses the raw text to measure what the guardrail prevented.
    pub fn answer_traced(&self, req: &QARequest) -> (QAResponse, RetrievalTrace, Option<String>) {
        let t0 = Instant::now();
        let settings = req.overrides.apply(&self.orchestrator.settings);
        let (evidence, trace) = self.orchestrator.retrieve_with(&req.query, &settings);

        let channel_ms = |name: &str| -> f64 {
            trace
                .outcomes
                .iter()
                .find(|o| o.name == name)
                .map(|o| o.elapsed_ms)
                .unwrap_or(0.0)
        };
        let mut timings = StageTimings {
            rewrite_ms: trace.rewrite_ms,
            retrieval_ms: trace.channels_ms,
            graph_ms: channel_ms("graph"),
            hybrid_ms: channel_ms("hybrid"),
            rerank_ms: trace.rerank_ms,
            ..StageTimings::default()
        };
        let degradations = trace.degradations.clone();

        if evidence.items.is_empty() {
            timings.total_ms = t0.elapsed().as_secs_f64() * 1e3;
            let refusal = self.config.refusal_text.clone();
            let response = QAResponse {
                answer: refusal.clone(),
                deltas: vec![refusal],
                evidence_ids: Vec::new(),
                guardrail_events: Vec::new(),
                timings,
                refused: true,
                error: None,
                degradations,
            };
            return (response, trace, None);
        }

        let prompt = GenerationPrompt {
            query: req.query.clone(),
            history: req.history.clone(),
            evidence: evidence.items.clone(),
        };
        let gen_start = Instant::now();
        let generated = self.generator.generate(&prompt);
        timings.generation_ms = gen_start.elapsed().as_secs_f64() * 1e3;

        let raw_deltas = match generated {
            Ok(deltas) => deltas,
            Err(e) => {
                timings.total_ms = t0.elapsed().as_secs_f64() * 1e3;
                let response = QAResponse {
                    answer: String::new(),
                    deltas: Vec::new(),
                    evidence_ids: evidence.ids(),
                    guardrail_events: Vec::new(),
                    timings,
                    refused: false,
                    error: Some(ErrorInfo {
                        code: "generator_unavailable".into(),
                        message: e.to_string(),
                    }),
                    degradations,
                };
                return (response, trace, None);
            }
        };

        let guard_start = Instant::now();
        let evidence_urls: BTreeSet<String> = evidence
            .items
            .iter()
            .filter_map(|item| self.chunk_urls.get(&item.chunk_id))
            .flat_map(|urls| urls.iter().cloned())
            .collect();
        let policy = UrlPolicy::new(
            evidence_urls,
            self.prefix_pool.clone(),
            Arc::clone(&self.checker),
        );
        let mut guard = Guardrail::new(self.config.guardrail.clone(), policy);
        let mut deltas = Vec::new();
        for raw in &raw_deltas {
            let out = guard.scan_chunk(raw);
            if !out.is_empty() {
                deltas.push(out);
            }
        }
        let tail = guard.finalize();
        if !tail.is_empty() {
            deltas.push(tail);
        }
        let guardrail_events = guard.take_events();
        timings.guardrail_ms = guard_start.elapsed().as_secs_f64() * 1e3;
        timings.total_ms = t0.elapsed().as_secs_f64() * 1e3;

        let response = QAResponse {
            answer: deltas.concat(),
            deltas,
            evidence_ids: evidence.ids(),
            guardrail_events,
            timings,
            refused: false,
            error: None,
            degradations,
        };
        (response, trace, Some(raw_deltas.concat()))
    }
}
