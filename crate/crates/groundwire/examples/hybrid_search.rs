//! Lexical BM25 and hashed-embedding dense retrieval side by side, then
//! reciprocal-rank fusion merging both rankings. Shows why neither
//! channel alone is enough: exact-term queries favor BM25, paraphrased
//! ones favor the dense channel, and RRF keeps both honest.
//!
//! Run: cargo run -p groundwire --example hybrid_search

use groundwire::hybrid::{rrf_fuse, DenseIndex, HashedEmbedder, LexicalIndex};
use groundwire::ScoredChunk;

fn show(label: &str, hits: &[ScoredChunk]) {
    println!("{label}:");
    if hits.is_empty() {
        println!("  (no hits)");
    }
    for h in hits {
        println!("  {:<10} {:>7.4}  [{}]", h.chunk_id, h.score, h.channel);
    }
}

fn main() -> groundwire::error::Result<()> {
    let docs = [
        ("rotate", "Rotate the deploy key every thirty days using the key management console."),
        ("revoke", "Revoking a leaked deploy key takes effect within one minute."),
        ("audit", "Audit events for key usage are retained for ninety days."),
        ("vpn", "The VPN profile installs automatically on a managed laptop."),
        ("oncall", "The on-call engineer owns pages until the next handover."),
    ];

    let lexical = LexicalIndex::build(docs, 1.2, 0.75);
    println!(
        "lexical index: {} docs, avg length {:.2} tokens",
        lexical.doc_count(),
        lexical.avg_doc_len()
    );

    let embedder = HashedEmbedder::new(256);
    let (dense, skipped) = DenseIndex::from_embedder(docs, &embedder)?;
    println!("dense index:   {} vectors x {} dims, {} skipped\n", dense.len(), dense.dims(), skipped.len());

    // Exact vocabulary: BM25 nails it, cosine agrees.
    let q = "rotate deploy key";
    println!("query: {q:?}");
    show("  bm25", &lexical.search(q, 3)?);
    show("  dense", &dense.search_text(&embedder, q, 3)?);

    // Shared rare terms pull dense and lexical toward different docs;
    // fusion ranks by agreement instead of either raw score.
    let q = "how long are key audit events kept";
    println!("\nquery: {q:?}");
    let lex_hits = lexical.search(q, 5)?;
    let dense_hits = dense.search_text(&embedder, q, 5)?;
    show("  bm25", &lex_hits);
    show("  dense", &dense_hits);
    let fused = rrf_fuse(&[&lex_hits, &dense_hits], 60.0);
    show("  rrf(k=60)", &fused);

    // RRF score of a doc ranked r1 and r2 in the two lists is
    // 1/(60+r1) + 1/(60+r2); rank, not raw score, is what transfers.
    let top = &fused[0];
    println!("\ntop fused doc {:?} contributes via ranks only: score {:.6}", top.chunk_id, top.score);
    Ok(())
}
