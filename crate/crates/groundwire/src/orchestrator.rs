//! Retrieval orchestration: route a query, fan it out over the graph and
//! hybrid channels in parallel under per-channel deadlines, merge and
//! deduplicate with provenance, optionally rerank, and cut the result to
//! a token budget. Every fallback leaves a degradation event; none of
//! them fails the request.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::mpsc;
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::config::{OrchestratorSettings, RouteMode};
use crate::error::{Error, Result};
use crate::graph::{seed_entities, GraphChannel, KnowledgeGraph};
use crate::hybrid::{rewrite_query, HybridChannel, QueryBundle, Rewriter};
use crate::text::{content_terms, count_tokens};
use crate::types::{Channel, ChannelHit, ChunkId, DegradationEvent};

/// Content-term threshold below which a query is too thin for the graph
/// channel (unless it names an entity outright).
const THIN_QUERY_TERMS: usize = 3;

// --- timeout plumbing ---------------------------------------------------

/// Runs `f` on a detached thread, waiting at most `timeout`. `None` means
/// the deadline passed; the thread keeps running but its result is
/// dropped.
pub fn run_with_timeout<T: Send + 'static>(
    timeout: Duration,
    f: impl FnOnce() -> T + Send + 'static,
) -> Option<T> {
    let (tx, rx) = mpsc::channel();
    std::thread::spawn(move || {
        let _ = tx.send(f());
    });
    rx.recv_timeout(timeout).ok()
}

/// Rewriter wrapper that converts overruns into errors, which
/// `rewrite_query` then degrades into a bare bundle.
pub struct TimedRewriter {
    pub inner: Arc<dyn Rewriter>,
    pub timeout: Duration,
}

impl Rewriter for TimedRewriter {
    fn rewrite(&self, query: &str) -> Result<Vec<String>> {
        let inner = Arc::clone(&self.inner);
        let q = query.to_string();
        run_with_timeout(self.timeout, move || inner.rewrite(&q)).unwrap_or_else(|| {
            Err(Error::Timeout {
                component: "rewriter".into(),
                ms: self.timeout.as_millis() as u64,
            })
        })
    }
}

// --- channels -------------------------------------------------------------

/// A retrieval channel the orchestrator can fan out to.
pub trait RetrievalChannel: Send + Sync {
    fn run(&self, bundle: &QueryBundle, k: usize) -> (Vec<ChannelHit>, Vec<DegradationEvent>);
}

impl RetrievalChannel for HybridChannel {
    fn run(&self, bundle: &QueryBundle, k: usize) -> (Vec<ChannelHit>, Vec<DegradationEvent>) {
        HybridChannel::run(self, bundle, k)
    }
}

/// The graph channel searches with the original query only; rewrites help
/// lexical and dense matching, not entity linking.
impl RetrievalChannel for GraphChannel {
    fn run(&self, bundle: &QueryBundle, k: usize) -> (Vec<ChannelHit>, Vec<DegradationEvent>) {
        (GraphChannel::run(self, &bundle.original, k), Vec::new())
    }
}

/// A named channel with its own deadline and result width.
pub struct ChannelSlot {
    pub name: String,
    pub channel: Arc<dyn RetrievalChannel>,
    pub timeout: Duration,
    pub k: usize,
}

/// What one channel did in one request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelOutcome {
    pub name: String,
    /// Accepted hits; empty when the channel timed out.
    pub hits: Vec<ChannelHit>,
    pub elapsed_ms: f64,
    pub timed_out: bool,
}

/// Fans the bundle out to every slot on detached threads. A result is
/// accepted only if it lands within its own slot's deadline; the wait as
/// a whole never exceeds the largest deadline still owed by an
/// unanswered slot, so one fast channel plus one stuck channel returns
/// at the stuck channel's deadline, not the global maximum.
pub fn run_channels(
    slots: &[ChannelSlot],
    bundle: &QueryBundle,
) -> (Vec<ChannelOutcome>, Vec<DegradationEvent>) {
    let start = Instant::now();
    let (tx, rx) = mpsc::channel();
    for (idx, slot) in slots.iter().enumerate() {
        let tx = tx.clone();
        let channel = Arc::clone(&slot.channel);
        let bundle = bundle.clone();
        let k = slot.k;
        std::thread::spawn(move || {
            let t = Instant::now();
            let (hits, degradations) = channel.run(&bundle, k);
            let _ = tx.send((idx, hits, degradations, t.elapsed()));
        });
    }
    drop(tx);

    let mut outcomes: Vec<Option<ChannelOutcome>> = (0..slots.len()).map(|_| None).collect();
    let mut degradations = Vec::new();
    let mut received = 0usize;
    while received < slots.len() {
        let outstanding = slots
            .iter()
            .enumerate()
            .filter(|(idx, _)| outcomes[*idx].is_none())
            .map(|(_, s)| s.timeout)
            .max();
        let Some(deadline) = outstanding else {
            break;
        };
        let Some(remaining) = deadline.checked_sub(start.elapsed()) else {
            break;
        };
        match rx.recv_timeout(remaining) {
            Ok((idx, hits, channel_degradations, elapsed)) => {
                received += 1;
                degradations.extend(channel_degradations);
                let timed_out = elapsed > slots[idx].timeout;
                if timed_out {
                    degradations.push(DegradationEvent::new(
                        slots[idx].name.clone(),
                        format!(
                            "exceeded {} ms deadline ({} ms); dropped",
                            slots[idx].timeout.as_millis(),
                            elapsed.as_millis()
                        ),
                    ));
                }
                outcomes[idx] = Some(ChannelOutcome {
                    name: slots[idx].name.clone(),
                    hits: if timed_out { Vec::new() } else { hits },
                    elapsed_ms: elapsed.as_secs_f64() * 1e3,
                    timed_out,
                });
            }
            Err(_) => break,
        }
    }
    let outcomes = outcomes
        .into_iter()
        .enumerate()
        .map(|(idx, o)| {
            o.unwrap_or_else(|| {
                degradations.push(DegradationEvent::new(
                    slots[idx].name.clone(),
                    format!("no reply within {} ms deadline", slots[idx].timeout.as_millis()),
                ));
                ChannelOutcome {
                    name: slots[idx].name.clone(),
                    hits: Vec::new(),
                    elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
                    timed_out: true,
                }
            })
        })
        .collect();
    (outcomes, degradations)
}

// --- merge ---------------------------------------------------------------

/// A deduplicated candidate: reciprocal-rank score across the channel
/// lists plus the union of every channel that found it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergedCandidate {
    pub chunk_id: ChunkId,
    pub score: f64,
    pub channels: BTreeSet<Channel>,
}

/// RRF across channel output lists, provenance unioned. Ordered score
/// desc, id asc.
pub fn merge_dedup(lists: &[Vec<ChannelHit>], rrf_k: f64) -> Vec<MergedCandidate> {
    let mut acc: BTreeMap<&str, (f64, BTreeSet<Channel>)> = BTreeMap::new();
    for list in lists {
        for (rank0, hit) in list.iter().enumerate() {
            let entry = acc.entry(hit.chunk_id.as_str()).or_insert((0.0, BTreeSet::new()));
            entry.0 += 1.0 / (rrf_k + (rank0 + 1) as f64);
            entry.1.extend(hit.channels.iter().copied());
        }
    }
    let mut out: Vec<MergedCandidate> = acc
        .into_iter()
        .map(|(id, (score, channels))| MergedCandidate {
            chunk_id: id.to_string(),
            score,
            channels,
        })
        .collect();
    out.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.chunk_id.cmp(&b.chunk_id))
    });
    out
}

// --- rerank ----------------------------------------------------------------

/// Scores passages against a query; higher is more relevant.
pub trait Reranker: Send + Sync {
    fn score(&self, query: &str, passages: &[String]) -> Result<Vec<f64>>;
}

/// Reorders `candidates` by reranker score (stable: ties keep the fused
/// order). Timeout, failure, or a malformed score vector leave the fused
/// order untouched and explain themselves in the returned event.
pub fn rerank_candidates(
    query: &str,
    candidates: &mut Vec<MergedCandidate>,
    texts: &BTreeMap<ChunkId, String>,
    reranker: &Arc<dyn Reranker>,
    timeout: Duration,
) -> Option<DegradationEvent> {
    if candidates.is_empty() {
        return None;
    }
    let passages: Vec<String> = candidates
        .iter()
        .map(|c| texts.get(&c.chunk_id).cloned().unwrap_or_default())
        .collect();
    let q = query.to_string();
    let rr = Arc::clone(reranker);
    let outcome = run_with_timeout(timeout, move || rr.score(&q, &passages));
    match outcome {
        None => Some(DegradationEvent::new(
            "reranker",
            format!("timed out after {} ms; keeping fused order", timeout.as_millis()),
        )),
        Some(Err(e)) => Some(DegradationEvent::new(
            "reranker",
            format!("failed ({e}); keeping fused order"),
        )),
        Some(Ok(scores)) if scores.len() != candidates.len() => Some(DegradationEvent::new(
            "reranker",
            format!(
                "returned {} scores for {} passages; keeping fused order",
                scores.len(),
                candidates.len()
            ),
        )),
        Some(Ok(scores)) => {
            let mut order: Vec<usize> = (0..candidates.len()).collect();
            order.sort_by(|&a, &b| {
                scores[b].partial_cmp(&scores[a]).unwrap_or(std::cmp::Ordering::Equal)
            });
            *candidates = order.into_iter().map(|i| candidates[i].clone()).collect();
            None
        }
    }
}

// --- budget -----------------------------------------------------------------

/// One piece of evidence handed to generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceItem {
    pub chunk_id: ChunkId,
    pub text: String,
    pub score: f64,
    pub channels: BTreeSet<Channel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct EvidenceSet {
    pub items: Vec<EvidenceItem>,
    /// Whitespace tokens across all items; never exceeds the budget.
    pub token_count: usize,
}

impl EvidenceSet {
    pub fn ids(&self) -> Vec<ChunkId> {
        self.items.iter().map(|i| i.chunk_id.clone()).collect()
    }

    pub fn joined_text(&self) -> String {
        self.items.iter().map(|i| i.text.as_str()).collect::<Vec<_>>().join("\n\n")
    }
}

/// Longest prefix whose cumulative token count fits the budget. An
/// oversized leading chunk yields an empty set plus a warning event.
pub fn truncate_to_budget(
    items: Vec<EvidenceItem>,
    budget: usize,
) -> (EvidenceSet, Option<DegradationEvent>) {
    let mut kept = Vec::new();
    let mut used = 0usize;
    let mut event = None;
    for (idx, item) in items.into_iter().enumerate() {
        let cost = count_tokens(&item.text);
        if used + cost > budget {
            if idx == 0 {
                event = Some(DegradationEvent::new(
                    "budget",
                    format!("leading chunk needs {cost} tokens, budget is {budget}; evidence empty"),
                ));
            }
            break;
        }
        used += cost;
        kept.push(item);
    }
    (EvidenceSet { items: kept, token_count: used }, event)
}

// --- routing ------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RouteDecision {
    pub run_graph: bool,
    pub reason: String,
}

/// Auto mode skips the graph channel only for thin queries (at most
/// three content terms) that mention no known entity.
pub fn route(query: &str, graph: &KnowledgeGraph, mode: RouteMode) -> RouteDecision {
    match mode {
        RouteMode::Both => RouteDecision { run_graph: true, reason: "forced: both".into() },
        RouteMode::HybridOnly => {
            RouteDecision { run_graph: false, reason: "forced: hybrid only".into() }
        }
        RouteMode::Auto => {
            let terms = content_terms(query).len();
            let seeds = seed_entities(graph, query).len();
            if terms <= THIN_QUERY_TERMS && seeds == 0 {
                RouteDecision {
                    run_graph: false,
                    reason: format!("thin query: {terms} content terms, no entity match"),
                }
            } else {
                RouteDecision {
                    run_graph: true,
                    reason: format!("{terms} content terms, {seeds} entity matches"),
                }
            }
        }
    }
}

// --- orchestrator ----------------------------------------------------------------

/// Full request trace for observability and tests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalTrace {
    pub bundle: QueryBundle,
    pub route: RouteDecision,
    pub outcomes: Vec<ChannelOutcome>,
    /// Fused pre-rerank ranking.
    pub merged: Vec<MergedCandidate>,
    pub final_ids: Vec<ChunkId>,
    pub degradations: Vec<DegradationEvent>,
    pub rewrite_ms: f64,
    pub channels_ms: f64,
    pub rerank_ms: f64,
    pub total_ms: f64,
}

pub struct Orchestrator {
    /// Graph substrate, used by routing; the graph channel itself is a
    /// slot like any other and can be stubbed.
    pub graph: Arc<KnowledgeGraph>,
    pub graph_channel: Arc<dyn RetrievalChannel>,
    pub hybrid_channel: Arc<dyn RetrievalChannel>,
    pub rewriter: Option<Arc<dyn Rewriter>>,
    pub reranker: Option<Arc<dyn Reranker>>,
    /// Chunk texts frozen at build time; retrieval never reads live state.
    pub texts: Arc<BTreeMap<ChunkId, String>>,
    pub settings: OrchestratorSettings,
    pub graph_k: usize,
    pub hybrid_k: usize,
    pub rrf_k: f64,
    pub max_rewrites: usize,
}

impl Orchestrator {
    pub fn retrieve(&self, query: &str) -> (EvidenceSet, RetrievalTrace) {
        self.retrieve_with(query, &self.settings)
    }

    /// Like `retrieve`, but under caller-supplied settings (per-request
    /// overrides); the indexes and channels stay shared.
    pub fn retrieve_with(
        &self,
        query: &str,
        settings: &OrchestratorSettings,
    ) -> (EvidenceSet, RetrievalTrace) {
        let t0 = Instant::now();
        let mut degradations = Vec::new();

        let rw_start = Instant::now();
        let (bundle, rewrite_event) = match &self.rewriter {
            Some(rw) => {
                let timed = TimedRewriter {
                    inner: Arc::clone(rw),
                    timeout: Duration::from_millis(settings.rewrite_timeout_ms),
                };
                rewrite_query(query, &timed, self.max_rewrites)
            }
            None => (QueryBundle::bare(query), None),
        };
        degradations.extend(rewrite_event);
        let rewrite_ms = rw_start.elapsed().as_secs_f64() * 1e3;

        let decision = route(query, &self.graph, settings.route);

        let mut slots: Vec<ChannelSlot> = Vec::new();
        if decision.run_graph {
            slots.push(ChannelSlot {
                name: "graph".into(),
                channel: Arc::clone(&self.graph_channel),
                timeout: Duration::from_millis(settings.graph_timeout_ms),
                k: self.graph_k,
            });
        }
        slots.push(ChannelSlot {
            name: "hybrid".into(),
            channel: Arc::clone(&self.hybrid_channel),
            timeout: Duration::from_millis(settings.hybrid_timeout_ms),
            k: self.hybrid_k,
        });

        let ch_start = Instant::now();
        let (outcomes, channel_degradations) = run_channels(&slots, &bundle);
        degradations.extend(channel_degradations);
        let channels_ms = ch_start.elapsed().as_secs_f64() * 1e3;

        let lists: Vec<Vec<ChannelHit>> = outcomes.iter().map(|o| o.hits.clone()).collect();
        let merged = merge_dedup(&lists, self.rrf_k);

        let rr_start = Instant::now();
        let mut ranked = merged.clone();
        if let Some(reranker) = &self.reranker {
            if let Some(event) = rerank_candidates(
                query,
                &mut ranked,
                &self.texts,
                reranker,
                Duration::from_millis(settings.rerank_timeout_ms),
            ) {
                degradations.push(event);
            }
        }
        ranked.truncate(settings.final_k);
        let rerank_ms = rr_start.elapsed().as_secs_f64() * 1e3;

        let mut items = Vec::new();
        for c in ranked {
            match self.texts.get(&c.chunk_id) {
                Some(text) => items.push(EvidenceItem {
                    chunk_id: c.chunk_id,
                    text: text.clone(),
                    score: c.score,
                    channels: c.channels,
                }),
                None => degradations.push(DegradationEvent::new(
                    "texts",
                    format!("no text for {}; dropped", c.chunk_id),
                )),
            }
        }
        let (evidence, budget_event) = truncate_to_budget(items, settings.token_budget);
        degradations.extend(budget_event);

        let trace = RetrievalTrace {
            bundle,
            route: decision,
            outcomes,
            merged,
            final_ids: evidence.ids(),
            degradations,
            rewrite_ms,
            channels_ms,
            rerank_ms,
            total_ms: t0.elapsed().as_secs_f64() * 1e3,
        };
        (evidence, trace)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hit(id: &str, channel: Channel) -> ChannelHit {
        ChannelHit {
            chunk_id: id.into(),
            score: 1.0,
            channels: std::iter::once(channel).collect(),
        }
    }

    fn hits(channel: Channel, ids: &[&str]) -> Vec<ChannelHit> {
        ids.iter().map(|id| hit(id, channel)).collect()
    }

    #[test]
    fn merge_unions_provenance_and_fuses_by_rank() {
        let graph = hits(Channel::Graph, &["a", "b"]);
        let hybrid = hits(Channel::Lexical, &["b", "c"]);
        let merged = merge_dedup(&[graph, hybrid], 60.0);
        let ids: Vec<&str> = merged.iter().map(|m| m.chunk_id.as_str()).collect();
        assert_eq!(ids, vec!["b", "a", "c"]);
        let b = &merged[0];
        assert!((b.score - (1.0 / 62.0 + 1.0 / 61.0)).abs() < 1e-12);
        assert_eq!(
            b.channels.iter().collect::<Vec<_>>(),
            vec![&Channel::Graph, &Channel::Lexical]
        );
    }

    #[test]
    fn merged_output_contains_every_input_id_once() {
        let graph = hits(Channel::Graph, &["a", "b", "c"]);
        let hybrid = hits(Channel::Dense, &["c", "d"]);
        let merged = merge_dedup(&[graph, hybrid], 60.0);
        let mut ids: Vec<&str> = merged.iter().map(|m| m.chunk_id.as_str()).collect();
        ids.sort();
        assert_eq!(ids, vec!["a", "b", "c", "d"]);
    }

    fn item(id: &str, text: &str) -> EvidenceItem {
        EvidenceItem {
            chunk_id: id.into(),
            text: text.into(),
            score: 0.0,
            channels: BTreeSet::new(),
        }
    }

    #[test]
    fn budget_keeps_the_longest_fitting_prefix() {
        let items = vec![item("a", "one two three"), item("b", "four five"), item("c", "six")];
        let (set, event) = truncate_to_budget(items, 5);
        assert!(event.is_none());
        assert_eq!(set.ids(), vec!["a", "b"]);
        assert_eq!(set.token_count, 5);
    }

    #[test]
    fn oversized_leading_chunk_empties_the_set_with_a_warning() {
        let items = vec![item("a", "one two three four five six")];
        let (set, event) = truncate_to_budget(items, 5);
        assert!(set.items.is_empty());
        assert_eq!(set.token_count, 0);
        assert_eq!(event.unwrap().component, "budget");
    }

    struct SleepChannel {
        delay: Duration,
        out: Vec<ChannelHit>,
    }

    impl RetrievalChannel for SleepChannel {
        fn run(&self, _b: &QueryBundle, _k: usize) -> (Vec<ChannelHit>, Vec<DegradationEvent>) {
            std::thread::sleep(self.delay);
            (self.out.clone(), Vec::new())
        }
    }

    fn slot(name: &str, delay_ms: u64, timeout_ms: u64, ids: &[&str]) -> ChannelSlot {
        ChannelSlot {
            name: name.into(),
            channel: Arc::new(SleepChannel {
                delay: Duration::from_millis(delay_ms),
                out: hits(Channel::Graph, ids),
            }),
            timeout: Duration::from_millis(timeout_ms),
            k: 10,
        }
    }

    #[test]
    fn slow_channel_is_dropped_fast_channel_survives() {
        let slots = vec![slot("fast", 5, 200, &["f"]), slot("slow", 400, 40, &["s"])];
        let start = Instant::now();
        let (outcomes, degradations) = run_channels(&slots, &QueryBundle::bare("q"));
        // Wait is bounded by the largest deadline, not the slow channel.
        assert!(start.elapsed() < Duration::from_millis(300));
        assert!(!outcomes[0].timed_out);
        assert_eq!(outcomes[0].hits.len(), 1);
        assert!(outcomes[1].timed_out);
        assert!(outcomes[1].hits.is_empty());
        assert!(degradations.iter().any(|d| d.component == "slow"));
    }

    #[test]
    fn late_reply_within_anothers_deadline_is_still_rejected() {
        // slow answers at ~100ms, inside fast's 400ms window but past its
        // own 30ms budget: must count as timed out.
        let slots = vec![slot("fast", 5, 400, &["f"]), slot("slow", 100, 30, &["s"])];
        let (outcomes, _) = run_channels(&slots, &QueryBundle::bare("q"));
        assert!(!outcomes[0].timed_out);
        assert!(outcomes[1].timed_out);
    }

    #[test]
    fn both_channels_fast_returns_early() {
        let slots = vec![slot("a", 5, 5_000, &["x"]), slot("b", 5, 5_000, &["y"])];
        let start = Instant::now();
        let (outcomes, degradations) = run_channels(&slots, &QueryBundle::bare("q"));
        assert!(start.elapsed() < Duration::from_millis(1_000));
        assert!(outcomes.iter().all(|o| !o.timed_out));
        assert!(degradations.is_empty());
    }

    struct FixedReranker(Vec<f64>);

    impl Reranker for FixedReranker {
        fn score(&self, _q: &str, _p: &[String]) -> Result<Vec<f64>> {
            Ok(self.0.clone())
        }
    }

    struct FailingReranker;

    impl Reranker for FailingReranker {
        fn score(&self, _q: &str, _p: &[String]) -> Result<Vec<f64>> {
            Err(Error::GeneratorUnavailable("rerank endpoint down".into()))
        }
    }

    fn candidates(ids: &[&str]) -> Vec<MergedCandidate> {
        ids.iter()
            .map(|id| MergedCandidate {
                chunk_id: id.to_string(),
                score: 0.5,
                channels: BTreeSet::new(),
            })
            .collect()
    }

    #[test]
    fn rerank_orders_by_score_with_stable_ties() {
        let mut c = candidates(&["a", "b", "c", "d"]);
        let texts = BTreeMap::new();
        let rr: Arc<dyn Reranker> = Arc::new(FixedReranker(vec![0.1, 0.9, 0.5, 0.5]));
        let event =
            rerank_candidates("q", &mut c, &texts, &rr, Duration::from_millis(1_000));
        assert!(event.is_none());
        let ids: Vec<&str> = c.iter().map(|m| m.chunk_id.as_str()).collect();
        // c and d tie at 0.5: incoming order (c before d) is kept.
        assert_eq!(ids, vec!["b", "c", "d", "a"]);
    }

    #[test]
    fn rerank_failure_keeps_fused_order() {
        let mut c = candidates(&["a", "b"]);
        let texts = BTreeMap::new();
        let rr: Arc<dyn Reranker> = Arc::new(FailingReranker);
        let event =
            rerank_candidates("q", &mut c, &texts, &rr, Duration::from_millis(1_000));
        assert_eq!(event.unwrap().component, "reranker");
        let ids: Vec<&str> = c.iter().map(|m| m.chunk_id.as_str()).collect();
        assert_eq!(ids, vec!["a", "b"]);
    }

    #[test]
    fn rerank_length_mismatch_keeps_fused_order() {
        let mut c = candidates(&["a", "b", "c"]);
        let texts = BTreeMap::new();
        let rr: Arc<dyn Reranker> = Arc::new(FixedReranker(vec![1.0]));
        let event =
            rerank_candidates("q", &mut c, &texts, &rr, Duration::from_millis(1_000));
        assert!(event.is_some());
        let ids: Vec<&str> = c.iter().map(|m| m.chunk_id.as_str()).collect();
        assert_eq!(ids, vec!["a", "b", "c"]);
    }

    struct HangingReranker;

    impl Reranker for HangingReranker {
        fn score(&self, _q: &str, _p: &[String]) -> Result<Vec<f64>> {
            std::thread::sleep(Duration::from_millis(500));
            Ok(vec![])
        }
    }

    #[test]
    fn rerank_timeout_keeps_fused_order() {
        let mut c = candidates(&["a", "b"]);
        let texts = BTreeMap::new();
        let rr: Arc<dyn Reranker> = Arc::new(HangingReranker);
        let start = Instant::now();
        let event = rerank_candidates("q", &mut c, &texts, &rr, Duration::from_millis(30));
        assert!(start.elapsed() < Duration::from_millis(300));
        assert!(event.unwrap().detail.contains("timed out"));
        assert_eq!(c[0].chunk_id, "a");
    }

    fn entity_graph(texts: &[&str]) -> KnowledgeGraph {
        use crate::graph::{build_graph, GazetteerExtractor};
        use crate::store::{CorpusStore, Snapshot};
        let mut store = CorpusStore::in_memory();
        for (i, t) in texts.iter().enumerate() {
            store.ingest(format!("c{i}"), *t, "d", 0).unwrap();
        }
        let snap = Snapshot {
            created_at: 0,
            percent: 100,
            chunk_ids: (0..texts.len()).map(|i| format!("c{i}")).collect(),
        };
        let ex = GazetteerExtractor::from_corpus(
            store.chunks().map(|c| c.text.as_str()).collect::<Vec<_>>(),
            &[] as &[&str],
        );
        build_graph(&snap, &store, &ex).unwrap().graph
    }

    #[test]
    fn auto_route_skips_graph_only_for_thin_entityless_queries() {
        let graph = entity_graph(&["Acme ships widgets."]);
        assert!(!route("the of and", &graph, RouteMode::Auto).run_graph);
        assert!(!route("refund me now", &graph, RouteMode::Auto).run_graph);
        // Thin but names an entity: graph runs.
        assert!(route("about Acme", &graph, RouteMode::Auto).run_graph);
        // Wide query without entities: graph still runs.
        assert!(route("how long does a refund usually take to appear", &graph, RouteMode::Auto).run_graph);
    }

    #[test]
    fn forced_modes_override_the_heuristic() {
        let graph = entity_graph(&["Acme ships widgets."]);
        assert!(route("x", &graph, RouteMode::Both).run_graph);
        assert!(!route("about Acme and widgets today", &graph, RouteMode::HybridOnly).run_graph);
    }
}
