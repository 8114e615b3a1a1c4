//! Shared identifiers and carriers used across retrieval channels.

use serde::{Deserialize, Serialize};

/// Unique identifier of a knowledge chunk.
pub type ChunkId = String;

/// Unix timestamp, seconds.
pub type Timestamp = i64;

/// Which retrieval channel produced a scored chunk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Graph,
    Lexical,
    Dense,
}

impl std::fmt::Display for Channel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Channel::Graph => write!(f, "graph"),
            Channel::Lexical => write!(f, "lexical"),
            Channel::Dense => write!(f, "dense"),
        }
    }
}

/// A chunk id with a retrieval score and the channel that produced it.
///
/// Scores are channel-local (BM25 mass, cosine, RRF mass, ...) and only
/// comparable within one list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredChunk {
    pub chunk_id: ChunkId,
    pub score: f64,
    pub channel: Channel,
}

impl ScoredChunk {
    pub fn new(chunk_id: impl Into<ChunkId>, score: f64, channel: Channel) -> Self {
        debug_assert!(score.is_finite(), "chunk score must be finite");
        Self {
            chunk_id: chunk_id.into(),
            score,
            channel,
        }
    }
}

/// A ranked hit as reported by a whole retrieval channel, with the full
/// set of sub-channels that found the chunk. `ScoredChunk` tracks a single
/// origin; this tracks provenance across fusion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelHit {
    pub chunk_id: ChunkId,
    pub score: f64,
    pub channels: std::collections::BTreeSet<Channel>,
}

/// Record of a degraded (but non-fatal) step: a timed-out channel, a failed
/// rewriter, an unreachable embedder. Collected rather than surfaced as
/// errors so callers can audit what the pipeline fell back on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegradationEvent {
    /// The component that degraded, e.g. `"rewriter"` or `"graph-channel"`.
    pub component: String,
    pub detail: String,
}

impl DegradationEvent {
    pub fn new(component: impl Into<String>, detail: impl Into<String>) -> Self {
        Self {
            component: component.into(),
            detail: detail.into(),
        }
    }
}

/// Sorts (score desc, chunk id asc) — the tie order used by every ranked
/// list in the crate.
pub fn sort_ranked(items: &mut [ScoredChunk]) {
    items.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.chunk_id.cmp(&b.chunk_id))
    });
}
