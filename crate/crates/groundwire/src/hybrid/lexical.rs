//! BM25 lexical index over an inverted file.
//!
//! idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5))
//! score(d, q) = sum over t in q of
//!     idf(t) * tf * (k1 + 1) / (tf + k1 * (1 - b + b * |d| / avgdl))
//!
//! Query terms keep bag semantics: a term listed twice contributes twice.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{DefaultTokenizer, Tokenize};
use crate::types::{Channel, ChunkId, ScoredChunk};

/// Serializable skeleton of the index (index.json).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LexicalIndexData {
    pub k1: f64,
    pub b: f64,
    /// term -> (chunk id, term frequency), ids ascending.
    pub postings: BTreeMap<String, Vec<(ChunkId, u32)>>,
    pub doc_lengths: BTreeMap<ChunkId, u32>,
}

pub struct LexicalIndex {
    data: LexicalIndexData,
    avg_doc_len: f64,
    tokenizer: Arc<dyn Tokenize>,
}

impl LexicalIndex {
    /// Builds with the default tokenizer and the given BM25 constants.
    pub fn build<'a, I>(docs: I, k1: f64, b: f64) -> Self
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        Self::build_with(docs, Arc::new(DefaultTokenizer), k1, b)
    }

    pub fn build_with<'a, I>(docs: I, tokenizer: Arc<dyn Tokenize>, k1: f64, b: f64) -> Self
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut postings: BTreeMap<String, Vec<(ChunkId, u32)>> = BTreeMap::new();
        let mut doc_lengths: BTreeMap<ChunkId, u32> = BTreeMap::new();
        for (id, text) in docs {
            let tokens = tokenizer.tokenize(text);
            doc_lengths.insert(id.to_string(), tokens.len() as u32);
            let mut tf: BTreeMap<String, u32> = BTreeMap::new();
            for t in tokens {
                *tf.entry(t).or_insert(0) += 1;
            }
            for (term, count) in tf {
                postings.entry(term).or_default().push((id.to_string(), count));
            }
        }
        for list in postings.values_mut() {
            list.sort_by(|a, b| a.0.cmp(&b.0));
        }
        Self::from_data(LexicalIndexData { k1, b, postings, doc_lengths }, tokenizer)
    }

    pub fn from_data(data: LexicalIndexData, tokenizer: Arc<dyn Tokenize>) -> Self {
        let n = data.doc_lengths.len();
        let avg_doc_len = if n == 0 {
            0.0
        } else {
            data.doc_lengths.values().map(|&l| l as f64).sum::<f64>() / n as f64
        };
        Self { data, avg_doc_len, tokenizer }
    }

    pub fn data(&self) -> &LexicalIndexData {
        &self.data
    }

    pub fn doc_count(&self) -> usize {
        self.data.doc_lengths.len()
    }

    pub fn avg_doc_len(&self) -> f64 {
        self.avg_doc_len
    }

    fn idf(&self, term: &str) -> f64 {
        let n = self.doc_count() as f64;
        let df = self.data.postings.get(term).map_or(0, |l| l.len()) as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    /// Top-k by BM25, ordered score desc then id asc. Documents matching
    /// no query term are absent (their score would be zero).
    pub fn search(&self, query: &str, k: usize) -> Result<Vec<ScoredChunk>> {
        self.search_tokens(&self.tokenizer.tokenize(query), k)
    }

    pub fn search_tokens(&self, terms: &[String], k: usize) -> Result<Vec<ScoredChunk>> {
        if self.doc_count() == 0 {
            return Err(Error::EmptyIndex);
        }
        let mut scores: BTreeMap<&str, f64> = BTreeMap::new();
        for term in terms {
            let Some(list) = self.data.postings.get(term) else {
                continue;
            };
            let idf = self.idf(term);
            for (id, tf) in list {
                let len = self.data.doc_lengths[id] as f64;
                let tf = *tf as f64;
                let denom = tf + self.data.k1 * (1.0 - self.data.b + self.data.b * len / self.avg_doc_len);
                *scores.entry(id.as_str()).or_insert(0.0) += idf * tf * (self.data.k1 + 1.0) / denom;
            }
        }
        let mut out: Vec<ScoredChunk> = scores
            .into_iter()
            .map(|(id, score)| ScoredChunk::new(id, score, Channel::Lexical))
            .collect();
        crate::types::sort_ranked(&mut out);
        out.truncate(k);
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn index(docs: &[(&str, &str)]) -> LexicalIndex {
        LexicalIndex::build(docs.iter().copied(), 1.2, 0.75)
    }

    #[test]
    fn single_doc_score_is_the_idf() {
        // tf = 1 and |d| = avgdl collapse the tf factor to 1, so the score
        // is idf alone: ln(1 + (1 - 1 + 0.5) / (1 + 0.5)) = ln(4/3).
        let idx = index(&[("d1", "ad review policy")]);
        let hits = idx.search("review", 10).unwrap();
        assert_eq!(hits.len(), 1);
        assert!((hits[0].score - (4.0f64 / 3.0).ln()).abs() < 1e-12);
        assert!((hits[0].score - 0.2876820724517809).abs() < 1e-12);
    }

    #[test]
    fn repeated_query_terms_double_their_contribution() {
        let idx = index(&[("d1", "ad review policy"), ("d2", "other words entirely")]);
        let once = idx.search_tokens(&["review".into()], 10).unwrap()[0].score;
        let twice = idx.search_tokens(&["review".into(), "review".into()], 10).unwrap()[0].score;
        assert!((twice - 2.0 * once).abs() < 1e-12);
    }

    #[test]
    fn rarer_terms_outweigh_common_ones() {
        let idx = index(&[
            ("d1", "policy policy policy shared"),
            ("d2", "unique shared"),
            ("d3", "shared text here"),
        ]);
        let hits = idx.search("unique shared", 10).unwrap();
        assert_eq!(hits[0].chunk_id, "d2");
    }

    #[test]
    fn non_matching_docs_are_absent() {
        let idx = index(&[("d1", "alpha beta"), ("d2", "gamma delta")]);
        let hits = idx.search("alpha", 10).unwrap();
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].chunk_id, "d1");
    }

    #[test]
    fn ties_order_by_id() {
        let idx = index(&[("z", "same text"), ("a", "same text")]);
        let hits = idx.search("same", 10).unwrap();
        assert_eq!(hits[0].chunk_id, "a");
        assert_eq!(hits[1].chunk_id, "z");
        assert!((hits[0].score - hits[1].score).abs() < 1e-15);
    }

    #[test]
    fn empty_index_is_an_error() {
        let idx = index(&[]);
        assert!(matches!(idx.search("anything", 5), Err(Error::EmptyIndex)));
    }

    #[test]
    fn truncates_to_k() {
        let idx = index(&[("a", "w"), ("b", "w"), ("c", "w")]);
        assert_eq!(idx.search("w", 2).unwrap().len(), 2);
    }

    #[test]
    fn postings_are_id_sorted() {
        let idx = index(&[("zz", "tok"), ("aa", "tok"), ("mm", "tok")]);
        let ids: Vec<&str> = idx.data().postings["tok"].iter().map(|(id, _)| id.as_str()).collect();
        assert_eq!(ids, vec!["aa", "mm", "zz"]);
    }
}
