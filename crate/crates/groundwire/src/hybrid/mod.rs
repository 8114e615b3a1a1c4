//! Hybrid retrieval: a query bundle (original plus rewrites) fanned out
//! over a lexical BM25 index and a dense cosine index, fused by
//! reciprocal rank.

pub mod dense;
pub mod fusion;
pub mod lexical;

pub use dense::{DenseIndex, Embedder, EmbeddingRecord, HashedEmbedder};
pub use fusion::rrf_fuse;
pub use lexical::{LexicalIndex, LexicalIndexData};

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::types::{Channel, ChannelHit, DegradationEvent, ScoredChunk};

/// The original query plus up to `max_rewrites` alternates. Rewrites are
/// deduplicated and never repeat the original.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryBundle {
    pub original: String,
    pub rewrites: Vec<String>,
}

impl QueryBundle {
    pub fn bare(query: impl Into<String>) -> Self {
        Self { original: query.into(), rewrites: Vec::new() }
    }

    /// All queries in the bundle, original first.
    pub fn all(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.original.as_str()).chain(self.rewrites.iter().map(String::as_str))
    }

    pub fn len(&self) -> usize {
        1 + self.rewrites.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Produces alternate phrasings of a query.
pub trait Rewriter: Send + Sync {
    fn rewrite(&self, query: &str) -> Result<Vec<String>>;
}

/// Builds a bundle through `rewriter`. A rewriter failure degrades to the
/// bare original rather than failing retrieval; the event says why.
pub fn rewrite_query(
    query: &str,
    rewriter: &dyn Rewriter,
    max_rewrites: usize,
) -> (QueryBundle, Option<DegradationEvent>) {
    match rewriter.rewrite(query) {
        Ok(candidates) => {
            let mut seen = BTreeSet::new();
            let mut rewrites = Vec::new();
            for c in candidates {
                let c = c.trim().to_string();
                if c.is_empty() || c == query {
                    continue;
                }
                if seen.insert(c.clone()) {
                    rewrites.push(c);
                }
                if rewrites.len() == max_rewrites {
                    break;
                }
            }
            (QueryBundle { original: query.to_string(), rewrites }, None)
        }
        Err(e) => (
            QueryBundle::bare(query),
            Some(DegradationEvent::new("rewriter", e.to_string())),
        ),
    }
}

/// The hybrid channel: every query in the bundle runs against both
/// indexes; per sub-channel the per-query rankings fuse first, then the
/// two sub-channel rankings fuse into one.
pub struct HybridChannel {
    pub lexical: Arc<LexicalIndex>,
    pub dense: Arc<DenseIndex>,
    pub embedder: Arc<dyn Embedder>,
    pub rrf_k: f64,
}

impl HybridChannel {
    pub fn new(
        lexical: Arc<LexicalIndex>,
        dense: Arc<DenseIndex>,
        embedder: Arc<dyn Embedder>,
        rrf_k: f64,
    ) -> Self {
        Self { lexical, dense, embedder, rrf_k }
    }

    /// Never fails hard: a sub-channel that errors contributes nothing and
    /// leaves a degradation event behind.
    pub fn run(&self, bundle: &QueryBundle, k: usize) -> (Vec<ChannelHit>, Vec<DegradationEvent>) {
        let mut degradations = Vec::new();

        let mut lexical_lists: Vec<Vec<ScoredChunk>> = Vec::new();
        for q in bundle.all() {
            match self.lexical.search(q, k) {
                Ok(hits) => lexical_lists.push(hits),
                Err(e) => {
                    degradations.push(DegradationEvent::new("lexical", e.to_string()));
                    break;
                }
            }
        }
        let lexical_refs: Vec<&[ScoredChunk]> = lexical_lists.iter().map(Vec::as_slice).collect();
        let mut lexical_fused = rrf_fuse(&lexical_refs, self.rrf_k);
        lexical_fused.truncate(k);

        let mut dense_lists: Vec<Vec<ScoredChunk>> = Vec::new();
        for q in bundle.all() {
            match self.dense.search_text(self.embedder.as_ref(), q, k) {
                Ok(hits) => dense_lists.push(hits),
                Err(e) => {
                    degradations.push(DegradationEvent::new("dense", e.to_string()));
                    break;
                }
            }
        }
        let dense_refs: Vec<&[ScoredChunk]> = dense_lists.iter().map(Vec::as_slice).collect();
        let mut dense_fused = rrf_fuse(&dense_refs, self.rrf_k);
        dense_fused.truncate(k);

        let mut found_in: std::collections::BTreeMap<&str, BTreeSet<Channel>> =
            std::collections::BTreeMap::new();
        for hit in &lexical_fused {
            found_in.entry(hit.chunk_id.as_str()).or_default().insert(Channel::Lexical);
        }
        for hit in &dense_fused {
            found_in.entry(hit.chunk_id.as_str()).or_default().insert(Channel::Dense);
        }

        let mut fused = rrf_fuse(&[&lexical_fused, &dense_fused], self.rrf_k);
        fused.truncate(k);
        let hits = fused
            .into_iter()
            .map(|s| ChannelHit {
                channels: found_in[s.chunk_id.as_str()].clone(),
                chunk_id: s.chunk_id,
                score: s.score,
            })
            .collect();
        (hits, degradations)
    }
}
