//! Dense retrieval: exhaustive cosine scan over unit-normalized vectors.
//! At the corpus sizes this crate targets, a linear scan is both exact and
//! fast enough; swap the `Embedder` to change the representation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::tokenize;
use crate::types::{Channel, ChunkId, ScoredChunk};

pub trait Embedder: Send + Sync {
    fn embed(&self, text: &str) -> Result<Vec<f32>>;
    fn dims(&self) -> usize;
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// FNV-1a over the token bytes. Stable across platforms and processes,
/// unlike the std hasher, so embeddings are reproducible artifacts.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

/// Bag-of-hashed-tokens embedder: each token increments the bucket
/// `fnv1a64(token) % dims`; the result is L2-normalized. A stand-in for a
/// neural encoder with the same interface and deterministic output.
#[derive(Debug, Clone, Copy)]
pub struct HashedEmbedder {
    dims: usize,
}

impl HashedEmbedder {
    pub fn new(dims: usize) -> Self {
        assert!(dims > 0, "embedder needs at least one dimension");
        Self { dims }
    }
}

impl Default for HashedEmbedder {
    fn default() -> Self {
        Self::new(256)
    }
}

impl Embedder for HashedEmbedder {
    fn embed(&self, text: &str) -> Result<Vec<f32>> {
        let mut v = vec![0.0f32; self.dims];
        for token in tokenize(text) {
            let bucket = (fnv1a64(token.as_bytes()) % self.dims as u64) as usize;
            v[bucket] += 1.0;
        }
        let norm = v.iter().map(|x| (*x as f64) * (*x as f64)).sum::<f64>().sqrt();
        if norm > 0.0 {
            for x in &mut v {
                *x = (*x as f64 / norm) as f32;
            }
        }
        Ok(v)
    }

    fn dims(&self) -> usize {
        self.dims
    }
}

/// Wire form of one stored embedding (embeddings.json holds a list).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbeddingRecord {
    pub chunk_id: ChunkId,
    pub vector: Vec<f32>,
}

pub struct DenseIndex {
    /// Unit vectors, ids ascending.
    vectors: Vec<(ChunkId, Vec<f32>)>,
    dims: usize,
}

impl DenseIndex {
    /// Normalizes and stores the records. Zero vectors cannot rank under
    /// cosine and are dropped; their ids come back for diagnostics.
    pub fn build(records: Vec<EmbeddingRecord>, dims: usize) -> (Self, Vec<ChunkId>) {
        let mut vectors = Vec::with_capacity(records.len());
        let mut skipped = Vec::new();
        for rec in records {
            debug_assert_eq!(rec.vector.len(), dims, "vector width mismatch");
            let norm = rec.vector.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
            if norm == 0.0 {
                tracing::warn!(chunk_id = %rec.chunk_id, "zero embedding skipped");
                skipped.push(rec.chunk_id);
                continue;
            }
            let unit = rec.vector.iter().map(|x| (*x as f64 / norm) as f32).collect();
            vectors.push((rec.chunk_id, unit));
        }
        vectors.sort_by(|a, b| a.0.cmp(&b.0));
        (Self { vectors, dims }, skipped)
    }

    /// Embeds every document with `embedder` and builds the index.
    pub fn from_embedder<'a, I>(docs: I, embedder: &dyn Embedder) -> Result<(Self, Vec<ChunkId>)>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut records = Vec::new();
        for (id, text) in docs {
            records.push(EmbeddingRecord {
                chunk_id: id.to_string(),
                vector: embedder.embed(text)?,
            });
        }
        Ok(Self::build(records, embedder.dims()))
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn records(&self) -> Vec<EmbeddingRecord> {
        self.vectors
            .iter()
            .map(|(id, v)| EmbeddingRecord { chunk_id: id.clone(), vector: v.clone() })
            .collect()
    }

    /// Top-k by cosine (dot product of unit vectors), score desc then id
    /// asc. Zero-similarity documents are absent.
    pub fn search(&self, query: &[f32], k: usize) -> Vec<ScoredChunk> {
        let mut out: Vec<ScoredChunk> = self
            .vectors
            .iter()
            .filter_map(|(id, v)| {
                let dot: f64 = v.iter().zip(query).map(|(a, b)| *a as f64 * *b as f64).sum();
                (dot > 0.0).then(|| ScoredChunk::new(id.clone(), dot, Channel::Dense))
            })
            .collect();
        crate::types::sort_ranked(&mut out);
        out.truncate(k);
        out
    }

    /// Embeds the query text and searches. Embedder failures propagate so
    /// the caller can degrade gracefully.
    pub fn search_text(&self, embedder: &dyn Embedder, query: &str, k: usize) -> Result<Vec<ScoredChunk>> {
        if embedder.dims() != self.dims {
            return Err(Error::EmbedderFailure(format!(
                "dimension mismatch: index {} vs embedder {}",
                self.dims,
                embedder.dims()
            )));
        }
        Ok(self.search(&embedder.embed(query)?, k))
    }
}
