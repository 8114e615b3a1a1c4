//! The orchestrator end to end: query rewriting, routing, parallel
//! graph + hybrid fan-out with per-channel deadlines, RRF merge with
//! provenance, reranking, and a token budget. A deliberately slow
//! reranker shows graceful degradation instead of a failed request.
//!
//! Run: cargo run -p groundwire --example parallel_retrieval

use std::sync::Arc;
use std::time::Duration;

use groundwire::clients::{FaithfulEcho, HeuristicRewriter, OverlapReranker};
use groundwire::config::PipelineConfig;
use groundwire::error::Result;
use groundwire::orchestrator::{Reranker, RetrievalTrace};
use groundwire::pipeline::{Pipeline, PipelineClients};
use groundwire::reward::{PrefixPool, StaticStatusChecker};
use groundwire::store::CorpusStore;

/// Replies correctly but far too late.
struct SleepyReranker {
    delay: Duration,
}

impl Reranker for SleepyReranker {
    fn score(&self, query: &str, passages: &[String]) -> Result<Vec<f64>> {
        std::thread::sleep(self.delay);
        OverlapReranker.score(query, passages)
    }
}

fn corpus() -> Result<CorpusStore> {
    let mut store = CorpusStore::in_memory();
    let docs = [
        ("billing-1", "Invoices are generated by Biller on the first of the month."),
        ("billing-2", "Biller pushes every invoice into Archive for seven years."),
        ("billing-3", "Archive enforces retention and legal hold for invoices."),
        ("search-1", "Query latency alerts page the search on-call."),
        ("search-2", "The search cluster reindexes nightly at 02:00."),
        ("hr-1", "Expense reports need receipts above fifty euros."),
    ];
    for (i, (id, text)) in docs.iter().enumerate() {
        store.ingest(*id, *text, "handbook", 100 + i as i64)?;
    }
    store.rolling_update(100, 1_000);
    Ok(store)
}

fn clients(reranker: Option<Arc<dyn Reranker>>) -> PipelineClients {
    PipelineClients {
        generator: Arc::new(FaithfulEcho::default()),
        rewriter: Some(Arc::new(HeuristicRewriter)),
        reranker,
        checker: Arc::new(StaticStatusChecker::uniform(Some(200))),
        prefix_pool: PrefixPool::new(Vec::new()),
    }
}

fn report(query: &str, trace: &RetrievalTrace) {
    println!("query: {query:?}");
    println!("  rewrites: {:?}", trace.bundle.rewrites);
    println!("  route: run_graph={} ({})", trace.route.run_graph, trace.route.reason);
    for o in &trace.outcomes {
        println!(
            "  channel {:<7} {} hits in {:.2} ms{}",
            o.name,
            o.hits.len(),
            o.elapsed_ms,
            if o.timed_out { "  TIMED OUT" } else { "" }
        );
    }
    for m in trace.merged.iter().take(4) {
        let via: Vec<String> = m.channels.iter().map(|c| c.to_string()).collect();
        println!("  merged {:<10} rrf {:.5}  via {}", m.chunk_id, m.score, via.join("+"));
    }
    println!("  final ids: {:?}", trace.final_ids);
    for d in &trace.degradations {
        println!("  degraded [{}]: {}", d.component, d.detail);
    }
    println!(
        "  timings: rewrite {:.2} ms, channels {:.2} ms, rerank {:.2} ms, total {:.2} ms\n",
        trace.rewrite_ms, trace.channels_ms, trace.rerank_ms, trace.total_ms
    );
}

fn main() -> Result<()> {
    let store = corpus()?;
    let config = PipelineConfig::stock();

    // Entity query: "Archive" links billing-3 to billing-2 through the
    // graph while BM25 and cosine work the surface forms in parallel.
    let pipeline = Pipeline::build(&store, &config, clients(Some(Arc::new(OverlapReranker))))?;
    let (evidence, trace) = pipeline.orchestrator.retrieve("how long does Archive keep invoices");
    report("how long does Archive keep invoices", &trace);
    println!("  evidence budget used: {} tokens across {} chunks\n", evidence.token_count, evidence.items.len());

    // Thin keyword query naming no known entity: auto routing skips the
    // graph channel entirely rather than paying its latency.
    let (_, trace) = pipeline.orchestrator.retrieve("receipts fifty euros");
    report("receipts fifty euros", &trace);

    // A reranker that blows its deadline is dropped, the fused order
    // survives, and the request still completes.
    let mut tight = config.clone();
    tight.orchestrator.rerank_timeout_ms = 50;
    let slow: Arc<dyn Reranker> = Arc::new(SleepyReranker { delay: Duration::from_millis(400) });
    let pipeline = Pipeline::build(&store, &tight, clients(Some(slow)))?;
    let (_, trace) = pipeline.orchestrator.retrieve("how long does Archive keep invoices");
    report("how long does Archive keep invoices (slow reranker)", &trace);
    Ok(())
}
