//! Knowledge graph construction over the hot subset: gazetteer entity
//! extraction, co-occurrence edges, label-propagation communities with
//! summaries, and a multi-hop retrieval that lexical matching would miss.
//!
//! Run: cargo run -p groundwire --example graph_communities

use groundwire::config::GraphSettings;
use groundwire::graph::{
    build_graph, detect_communities, graph_retrieve, incremental_update, GazetteerExtractor,
};
use groundwire::store::CorpusStore;

fn main() -> groundwire::error::Result<()> {
    let mut store = CorpusStore::in_memory();
    let docs = [
        ("pay-01", "Ledger posts every settled charge into Vault for reconciliation."),
        ("pay-02", "Vault keeps the immutable balance history per merchant."),
        ("pay-03", "Refunds route through Ledger before any payout is released."),
        ("net-01", "Relay terminates TLS and forwards requests to Switchboard."),
        ("net-02", "Switchboard shards traffic by tenant across the pool."),
        ("net-03", "Relay health checks run every five seconds."),
        ("misc-1", "the break room coffee machine needs descaling again"),
    ];
    for (i, (id, text)) in docs.iter().enumerate() {
        store.ingest(*id, *text, "wiki", 100 + i as i64)?;
    }
    let snapshot = store.rolling_update(100, 1_000);

    // Entities are gazetteer terms: capitalized tokens from the corpus
    // plus anything the operator pins explicitly.
    let texts: Vec<&str> = store.chunks().map(|c| c.text.as_str()).collect();
    let extractor = GazetteerExtractor::from_corpus(texts, &["payout"]);
    println!("gazetteer terms: {}", extractor.term_count());

    let build = build_graph(&snapshot, &store, &extractor)?;
    let graph = build.graph;
    println!("entities:  {:?}", graph.entities);
    println!("relations: {} co-occurrence edges", graph.relations.len());
    for (a, b, label) in &graph.relations {
        println!("  {a} --{label}-- {b}");
    }
    println!("chunks without entities: {:?}", build.empty_chunks);

    // Two-level hierarchy; summaries stitch first sentences of the
    // hottest member chunks.
    let settings = GraphSettings::default();
    let communities = detect_communities(&graph, &store, &snapshot, &settings);
    for (level, l) in communities.levels.iter().enumerate() {
        println!("\nlevel {level}: {} communities", l.members.len());
        for (id, members) in &l.members {
            println!("  {id}: {:?}", members);
        }
    }
    println!("\nsummaries:");
    for (id, summary) in &communities.summaries {
        println!("  {id}: {summary}");
    }

    // "Vault" never appears in pay-03, but Ledger does, one hop away.
    let hits = graph_retrieve(&graph, &communities, "how do refunds reach Vault", 2, 5);
    println!("\ngraph retrieval for 'how do refunds reach Vault':");
    for hit in &hits {
        println!("  {:<8} score {:.3}  {}", hit.chunk_id, hit.score, store.get(&hit.chunk_id).unwrap().text);
    }

    // Edits re-extract only what changed; the result matches a rebuild.
    store.ingest("net-03", "Relay health checks run every second against Switchboard.", "wiki", 999)?;
    let snapshot = store.rolling_update(100, 2_000);
    let mut updated = graph.clone();
    let delta = incremental_update(&mut updated, &snapshot, &store, &extractor)?;
    println!("\nincremental update after editing net-03:");
    println!("  added {:?} removed {:?} refreshed {:?}", delta.added, delta.removed, delta.refreshed);
    let rebuild = build_graph(&snapshot, &store, &extractor)?.graph;
    println!("  matches full rebuild: {}", updated.canonical_json() == rebuild.canonical_json());
    Ok(())
}
