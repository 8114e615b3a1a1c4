//! Randomized cross-module invariants. Properties that live naturally
//! next to one module stay in that module's unit tests; these are the
//! contracts that need an independent oracle or span module boundaries.

use std::collections::BTreeSet;

use proptest::prelude::*;

use groundwire::guardrail::{Guardrail, GuardrailConfig, UrlPolicy};
use groundwire::hybrid::LexicalIndex;
use groundwire::reward::{canonicalize, extract_urls};
use groundwire::store::select_count;

const VOCAB: &[&str] = &[
    "alpha", "bravo", "cargo", "delta", "ember", "fjord", "gamma", "hydra",
    "input", "joule", "karst", "lumen",
];

fn word() -> impl Strategy<Value = &'static str> {
    prop::sample::select(VOCAB)
}

fn doc() -> impl Strategy<Value = String> {
    prop::collection::vec(word(), 1..12).prop_map(|w| w.join(" "))
}

/// BM25 by the documented formula, computed the slow way: straight loops
/// over raw token lists, no inverted file.
fn bm25_oracle(docs: &[(String, String)], query: &[String]) -> Vec<(String, f64)> {
    let token_lists: Vec<Vec<String>> = docs
        .iter()
        .map(|(_, text)| {
            text.split(|c: char| !c.is_alphanumeric())
                .filter(|t| !t.is_empty())
                .map(|t| t.to_lowercase())
                .collect()
        })
        .collect();
    let n = docs.len() as f64;
    let avgdl = token_lists.iter().map(|t| t.len() as f64).sum::<f64>() / n;
    let (k1, b) = (1.2, 0.75);
    let mut out = Vec::new();
    for (i, (id, _)) in docs.iter().enumerate() {
        let len = token_lists[i].len() as f64;
        let mut score = 0.0;
        for term in query {
            let df = token_lists.iter().filter(|t| t.contains(term)).count() as f64;
            let tf = token_lists[i].iter().filter(|t| *t == term).count() as f64;
            if tf == 0.0 {
                continue;
            }
            let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
            score += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * len / avgdl));
        }
        if score > 0.0 {
            out.push((id.clone(), score));
        }
    }
    out
}

fn evidence_url() -> &'static str {
    "https://kb.example/good"
}

/// Builds a stream from typed parts so URLs land in realistic positions:
/// mid-sentence, wrapped in punctuation, back to back.
fn stream_parts() -> impl Strategy<Value = String> {
    let part = prop_oneof![
        word().prop_map(str::to_string),
        Just(evidence_url().to_string()),
        Just("https://fabricated.example/ref".to_string()),
        Just("(https://fabricated.example/deep/link),".to_string()),
        Just("see:".to_string()),
    ];
    prop::collection::vec(part, 1..10).prop_map(|p| p.join(" "))
}

fn guard_in_chunks(text: &str, cuts: &[usize]) -> (String, Vec<groundwire::guardrail::GuardrailEvent>) {
    let evidence: BTreeSet<String> = [evidence_url().to_string()].into();
    let mut guard = Guardrail::new(GuardrailConfig::default(), UrlPolicy::evidence_only(evidence));
    let mut out = String::new();
    let mut last = 0usize;
    for &cut in cuts {
        out.push_str(&guard.scan_chunk(&text[last..cut]));
        last = cut;
    }
    out.push_str(&guard.scan_chunk(&text[last..]));
    out.push_str(&guard.finalize());
    (out, guard.take_events())
}

proptest! {
    #[test]
    fn canonicalize_is_idempotent(raw in "[A-Za-z0-9:/.%?#&=~_-]{1,60}") {
        let once = canonicalize(&raw);
        prop_assert_eq!(canonicalize(&once), once);
    }

    #[test]
    fn hot_subset_size_matches_float_ceil(total in 0usize..5000, percent in 0u32..=150) {
        let expected = ((total as f64) * f64::from(percent.min(100)) / 100.0).ceil() as usize;
        prop_assert_eq!(select_count(total, percent), expected);
    }

    #[test]
    fn bm25_matches_brute_force_oracle(
        texts in prop::collection::vec(doc(), 1..8),
        query in prop::collection::vec(word().prop_map(str::to_string), 1..4),
    ) {
        let docs: Vec<(String, String)> =
            texts.into_iter().enumerate().map(|(i, t)| (format!("d{i}"), t)).collect();
        let index = LexicalIndex::build(docs.iter().map(|(id, t)| (id.as_str(), t.as_str())), 1.2, 0.75);
        let hits = index.search_tokens(&query, docs.len()).unwrap();
        let mut expected = bm25_oracle(&docs, &query);
        expected.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
        prop_assert_eq!(hits.len(), expected.len());
        for (hit, (id, score)) in hits.iter().zip(&expected) {
            prop_assert_eq!(&hit.chunk_id, id);
            prop_assert!((hit.score - score).abs() < 1e-9, "{} vs {}", hit.score, score);
        }
    }

    #[test]
    fn guarded_stream_is_chunking_invariant(
        text in stream_parts(),
        cut_picks in prop::collection::vec(any::<prop::sample::Index>(), 0..6),
    ) {
        let mut cuts: Vec<usize> = cut_picks
            .iter()
            .map(|p| {
                let mut at = p.index(text.len() + 1);
                while !text.is_char_boundary(at) {
                    at -= 1;
                }
                at
            })
            .collect();
        cuts.sort_unstable();
        let (whole, whole_events) = guard_in_chunks(&text, &[]);
        let (sliced, sliced_events) = guard_in_chunks(&text, &cuts);
        prop_assert_eq!(&sliced, &whole);
        prop_assert_eq!(sliced_events, whole_events);
        // Nothing outside the evidence set survives, whole or partial.
        for url in extract_urls(&sliced) {
            prop_assert_eq!(url, evidence_url());
        }
        prop_assert!(!sliced.contains("fabricated"));
    }
}
