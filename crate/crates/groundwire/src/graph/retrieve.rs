//! Local graph search: seed entities from the query, expand a bounded
//! number of hops, score chunks by how close their entities sit to the
//! seeds, with a small bonus when a community summary also echoes the
//! query.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::Arc;

use crate::graph::community::Communities;
use crate::graph::extract::entity_in_tokens;
use crate::graph::KnowledgeGraph;
use crate::text::{content_terms, tokenize};
use crate::types::{Channel, ChannelHit, ChunkId};

/// Weight added once per chunk when any contributing entity's level-0
/// community summary shares a content term with the query.
const COMMUNITY_BONUS: f64 = 0.25;

/// Entities whose name occurs contiguously in the query.
pub fn seed_entities(graph: &KnowledgeGraph, query: &str) -> Vec<String> {
    let tokens = tokenize(query);
    graph
        .entities
        .iter()
        .filter(|e| entity_in_tokens(e, &tokens))
        .cloned()
        .collect()
}

/// BFS distances from the seed set, capped at `hops`.
fn bfs_distances(
    graph: &KnowledgeGraph,
    seeds: &[String],
    hops: usize,
) -> BTreeMap<String, usize> {
    let adjacency = graph.adjacency();
    let mut dist: BTreeMap<String, usize> = BTreeMap::new();
    let mut queue: VecDeque<String> = VecDeque::new();
    for s in seeds {
        if adjacency.contains_key(s) && !dist.contains_key(s) {
            dist.insert(s.clone(), 0);
            queue.push_back(s.clone());
        }
    }
    while let Some(node) = queue.pop_front() {
        let d = dist[&node];
        if d == hops {
            continue;
        }
        for n in &adjacency[&node] {
            if !dist.contains_key(n) {
                dist.insert(n.clone(), d + 1);
                queue.push_back(n.clone());
            }
        }
    }
    dist
}

/// Scores chunks reachable within `hops` of the query's seed entities.
///
/// score(chunk) = sum over visited entities e attached to the chunk of
/// 1 / (1 + dist(e)), plus a one-time community bonus. Chunks with no
/// visited entity are absent. Empty seed set yields an empty result.
pub fn graph_retrieve(
    graph: &KnowledgeGraph,
    communities: &Communities,
    query: &str,
    hops: usize,
    k: usize,
) -> Vec<ChannelHit> {
    let seeds = seed_entities(graph, query);
    if seeds.is_empty() {
        return Vec::new();
    }
    let dist = bfs_distances(graph, &seeds, hops);
    let query_terms: BTreeSet<String> = content_terms(query).into_iter().collect();

    let mut scores: BTreeMap<&ChunkId, f64> = BTreeMap::new();
    let mut bonus_given: BTreeSet<&ChunkId> = BTreeSet::new();
    for (entity, d) in &dist {
        let Some(chunks) = graph.entity_chunks.get(entity) else {
            continue;
        };
        let summary_echoes_query = communities
            .base_community(entity)
            .and_then(|c| communities.summaries.get(c))
            .is_some_and(|summary| {
                let summary_tokens: BTreeSet<String> = tokenize(summary).into_iter().collect();
                query_terms.iter().any(|t| summary_tokens.contains(t))
            });
        for chunk in chunks {
            *scores.entry(chunk).or_insert(0.0) += 1.0 / (1.0 + *d as f64);
            if summary_echoes_query && bonus_given.insert(chunk) {
                *scores.get_mut(chunk).expect("just inserted") += COMMUNITY_BONUS;
            }
        }
    }

    let mut out: Vec<ChannelHit> = scores
        .into_iter()
        .map(|(id, score)| ChannelHit {
            chunk_id: id.clone(),
            score,
            channels: std::iter::once(Channel::Graph).collect(),
        })
        .collect();
    out.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.chunk_id.cmp(&b.chunk_id))
    });
    out.truncate(k);
    out
}

/// Graph channel handle: everything needed to answer a query.
pub struct GraphChannel {
    pub graph: Arc<KnowledgeGraph>,
    pub communities: Arc<Communities>,
    pub hops: usize,
}

impl GraphChannel {
    pub fn new(graph: Arc<KnowledgeGraph>, communities: Arc<Communities>, hops: usize) -> Self {
        Self { graph, communities, hops }
    }

    pub fn run(&self, query: &str, k: usize) -> Vec<ChannelHit> {
        graph_retrieve(&self.graph, &self.communities, query, self.hops, k)
    }
}
