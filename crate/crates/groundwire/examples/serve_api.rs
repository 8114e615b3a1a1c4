//! The HTTP surface: `GET /healthz` and `POST /v1/chat` as a server-sent
//! event stream. Spins the server up on an ephemeral port, talks to it
//! like a client would, and prints the raw SSE traffic.
//!
//! Run: cargo run -p groundwire --example serve_api

use std::sync::Arc;

use groundwire::clients::FaithfulEcho;
use groundwire::config::PipelineConfig;
use groundwire::pipeline::{Pipeline, PipelineClients};
use groundwire::reward::{PrefixPool, StaticStatusChecker};
use groundwire::serve::router;
use groundwire::store::CorpusStore;

fn pipeline() -> groundwire::error::Result<Arc<Pipeline>> {
    let mut store = CorpusStore::in_memory();
    store.ingest(
        "kms-rotate",
        "Rotate the deploy key monthly. Steps: https://kb.example/rotate",
        "handbook",
        100,
    )?;
    store.ingest(
        "kms-audit",
        "Audit logs for key usage live at https://kb.example/audit for ninety days.",
        "handbook",
        200,
    )?;
    store.rolling_update(100, 1_000);
    let clients = PipelineClients {
        generator: Arc::new(FaithfulEcho::default()),
        rewriter: None,
        reranker: None,
        checker: Arc::new(StaticStatusChecker::uniform(None)),
        prefix_pool: PrefixPool::new(Vec::new()),
    };
    Ok(Arc::new(Pipeline::build(&store, &PipelineConfig::stock(), clients)?))
}

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await?;
    let addr = listener.local_addr()?;
    let app = router(pipeline()?);
    let server = tokio::spawn(async move {
        axum::serve(listener, app).await.unwrap();
    });
    println!("serving on http://{addr}\n");

    let client = reqwest::Client::new();

    let health = client.get(format!("http://{addr}/healthz")).send().await?;
    println!("GET /healthz -> {}", health.status());
    println!("  {}\n", health.text().await?);

    // A chat request streams `delta` events, then one terminal `done`
    // event with evidence ids, guardrail events, and stage timings.
    let resp = client
        .post(format!("http://{addr}/v1/chat"))
        .json(&serde_json::json!({ "query": "how often should the deploy key rotate" }))
        .send()
        .await?;
    println!("POST /v1/chat -> {} ({})", resp.status(), resp.headers()["content-type"].to_str()?);
    let body = resp.text().await?;
    let mut answer = String::new();
    let mut event = String::new();
    for line in body.lines() {
        if let Some(rest) = line.strip_prefix("event: ") {
            event = rest.to_string();
        } else if let Some(rest) = line.strip_prefix("data: ") {
            let data: serde_json::Value = serde_json::from_str(rest)?;
            if event == "delta" {
                println!("  delta {:?}", data["text"].as_str().unwrap_or_default());
                answer.push_str(data["text"].as_str().unwrap_or_default());
            } else {
                println!("  done  evidence={} refused={} total={:.1}ms",
                    data["evidence_ids"], data["refused"], data["timings"]["total_ms"].as_f64().unwrap_or(0.0));
            }
        }
    }
    println!("\nreassembled answer: {answer}\n");

    // Malformed input gets a machine-readable 400, not a stream.
    let resp = client
        .post(format!("http://{addr}/v1/chat"))
        .json(&serde_json::json!({ "query": "" }))
        .send()
        .await?;
    println!("POST /v1/chat with empty query -> {}", resp.status());
    println!("  {}", resp.text().await?);

    server.abort();
    Ok(())
}
