//! Synthetic evaluation corpus. Generates a chunk set, gold-labelled
//! cases, and an approved prefix pool, deterministically from a seed.
//!
//! Two case shapes:
//! - Flat: the query shares coined content terms with its gold chunk, so
//!   lexical retrieval alone can find it.
//! - Hop: the query names entity A plus terms that appear nowhere in the
//!   corpus; the gold chunk talks only about entity B and shares zero
//!   content terms with the query. A bridge chunk mentions A and B
//!   together, so only graph traversal reaches the gold.
//!
//! All vocabulary is coined from syllables and unique per draw, which
//! keeps term collisions from blurring the flat/hop distinction. Gold
//! answers cite a URL under the pool prefix, and the same URL sits in the
//! gold chunk, so a grounded answer validates in-evidence.

use std::collections::BTreeSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::EvalCase;
use crate::store::CorpusStore;
use crate::text::content_terms;

pub const SYNTH_PREFIX: &str = "https://kb.synth.example/";

const SYLLABLES: [&str; 16] = [
    "bor", "dak", "fen", "gri", "hul", "jas", "kol", "lum", "mir", "nep", "pra", "quo", "ser",
    "tev", "vax", "zur",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthChunk {
    pub id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthBundle {
    pub chunks: Vec<SynthChunk>,
    pub cases: Vec<EvalCase>,
    pub prefix_pool: Vec<String>,
}

impl SynthBundle {
    /// Loads every chunk into a fresh in-memory store and snapshots the
    /// whole corpus as hot, ready for `Pipeline::build`.
    pub fn into_store(&self) -> Result<CorpusStore> {
        let mut store = CorpusStore::in_memory();
        for (idx, chunk) in self.chunks.iter().enumerate() {
            store.ingest(chunk.id.clone(), chunk.text.clone(), "synth", idx as i64)?;
        }
        store.rolling_update(100, self.chunks.len() as i64);
        Ok(store)
    }
}

/// A fresh lowercase nonword, two or three syllables.
fn coin(rng: &mut ChaCha8Rng, used: &mut BTreeSet<String>) -> String {
    loop {
        let n = 2 + rng.random_range(0..2usize);
        let word: String =
            (0..n).map(|_| SYLLABLES[rng.random_range(0..SYLLABLES.len())]).collect();
        if used.insert(word.clone()) {
            return word;
        }
    }
}

/// A fresh entity name: coined word with a leading capital, so the
/// gazetteer learns it from the corpus.
fn coin_entity(rng: &mut ChaCha8Rng, used: &mut BTreeSet<String>) -> String {
    let base = coin(rng, used);
    let mut chars = base.chars();
    let head = chars.next().expect("coined words are nonempty");
    head.to_uppercase().chain(chars).collect()
}

/// Generates `size` cases (`hop_fraction` of them hop-shaped, rounded)
/// plus the chunks they need and a handful of distractors. Byte-identical
/// output for equal inputs.
pub fn synth_corpus(seed: u64, size: usize, hop_fraction: f64) -> Result<SynthBundle> {
    if size < 10 {
        return Err(Error::Config(format!(
            "synthetic corpus needs at least 10 cases, got {size}"
        )));
    }
    if !(0.0..=1.0).contains(&hop_fraction) || !hop_fraction.is_finite() {
        return Err(Error::Config(format!(
            "hop fraction must be within 0..=1, got {hop_fraction}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut used: BTreeSet<String> = BTreeSet::new();
    let hop_count = (hop_fraction * size as f64).round() as usize;

    let mut chunks = Vec::new();
    let mut cases = Vec::new();

    for i in 0..size {
        let url = format!("{SYNTH_PREFIX}doc-{i:04}");
        if i < hop_count {
            // Hop case: query names A; the answer lives with B.
            let a = coin_entity(&mut rng, &mut used);
            let b = coin_entity(&mut rng, &mut used);
            let q1 = coin(&mut rng, &mut used);
            let q2 = coin(&mut rng, &mut used);
            let g1 = coin(&mut rng, &mut used);
            let g2 = coin(&mut rng, &mut used);
            let gold_id = format!("hop-{i:04}");
            let bridge_id = format!("bridge-{i:04}");
            let gold_text = format!("{b} emits {g1} under {g2} budgeting; ref {url}");
            let bridge_text = format!("{a} routes every request into {b} first");
            let query = format!("what does {a} do with {q1} and {q2}");
            let gold_answer = gold_text.clone();
            chunks.push(SynthChunk { id: gold_id.clone(), text: gold_text });
            chunks.push(SynthChunk { id: bridge_id, text: bridge_text });
            cases.push(EvalCase {
                id: format!("case-{i:04}"),
                query,
                gold_answer,
                gold_chunk_ids: vec![gold_id],
                hop: true,
            });
        } else {
            // Flat case: the query's coined terms sit in the gold chunk.
            let e = coin_entity(&mut rng, &mut used);
            let t1 = coin(&mut rng, &mut used);
            let t2 = coin(&mut rng, &mut used);
            let t3 = coin(&mut rng, &mut used);
            let gold_id = format!("flat-{i:04}");
            let gold_text = format!("{e} applies {t1} to {t2} via {t3}; ref {url}");
            let query = format!("how does {e} apply {t1} to {t2}");
            let gold_answer = gold_text.clone();
            chunks.push(SynthChunk { id: gold_id.clone(), text: gold_text });
            cases.push(EvalCase {
                id: format!("case-{i:04}"),
                query,
                gold_answer,
                gold_chunk_ids: vec![gold_id],
                hop: false,
            });
        }
    }

    // Distractors: coined noise that belongs to no case.
    let fillers = (size / 10).max(4);
    for i in 0..fillers {
        let e = coin_entity(&mut rng, &mut used);
        let t1 = coin(&mut rng, &mut used);
        let t2 = coin(&mut rng, &mut used);
        chunks.push(SynthChunk {
            id: format!("fill-{i:04}"),
            text: format!("{e} archives {t1} beside {t2} nightly"),
        });
    }

    Ok(SynthBundle {
        chunks,
        cases,
        prefix_pool: vec![SYNTH_PREFIX.to_string()],
    })
}

/// True when query and chunk share no content terms; the property hop
/// golds must satisfy.
pub fn shares_no_content_terms(query: &str, chunk_text: &str) -> bool {
    let q: BTreeSet<String> = content_terms(query).into_iter().collect();
    content_terms(chunk_text).into_iter().all(|t| !q.contains(&t))
}
