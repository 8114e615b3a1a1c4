//! Evidence-grounded QA serving pipeline.
//!
//! `groundwire` answers questions over a private knowledge base while
//! guaranteeing that no unvalidated URL is ever served. The pipeline has
//! four legs:
//!
//! - **Retrieval**: a graph channel (entity/relation graph with community
//!   structure over the high-citation subset of the corpus, multi-hop local
//!   search) runs in parallel with a hybrid channel (query rewriting, BM25,
//!   dense cosine, reciprocal-rank fusion). Channel results are merged,
//!   deduplicated, reranked, and truncated to a token budget.
//! - **Reward**: answers are scored on faithfulness, style, safety, and URL
//!   validity. A URL counts as valid only if it appears in the retrieved
//!   evidence, or its prefix is in an approved pool *and* a live probe
//!   returns 200/301/302. Everything else fails closed.
//! - **Training**: a desk-scale GRPO loop (group-relative advantages,
//!   clipped surrogate, no reference-policy KL term) optimizes a toy
//!   template policy against the reward engine.
//! - **Guarding**: a streaming post-processor holds back URL spans across
//!   chunk boundaries, validates them, and redacts invalid links and
//!   blocklisted terms before any byte reaches the client.
//!
//! Start with the runnable programs in `examples/` — there is one per major
//! capability — or the `groundwire` binary, which exposes each stage as a
//! subcommand.

pub mod clients;
pub mod config;
pub mod error;
pub mod eval;
pub mod graph;
pub mod grpo;
pub mod guardrail;
pub mod hybrid;
pub mod orchestrator;
pub mod pipeline;
pub mod reward;
pub mod serve;
pub mod store;
pub mod text;
pub mod types;

pub use error::Error;
pub use types::{Channel, ChunkId, DegradationEvent, ScoredChunk, Timestamp};
