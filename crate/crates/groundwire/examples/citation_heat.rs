//! Traffic-curated hot subset: record citations inside a rolling window,
//! rank chunks by heat, and snapshot the top share. Shows window expiry
//! resetting counters and recency breaking ties.
//!
//! Run: cargo run -p groundwire --example citation_heat

use groundwire::store::CorpusStore;

fn main() -> groundwire::error::Result<()> {
    // One week window, in-memory store.
    let mut store = CorpusStore::with_window(7 * 24 * 3600);
    let docs = [
        ("kms-rotate", "Rotate the deploy key monthly via the KMS console.", 100),
        ("kms-audit", "KMS audit logs are retained for ninety days.", 200),
        ("oncall-page", "Page the on-call through the escalation rota.", 300),
        ("vpn-setup", "The VPN profile is provisioned on first login.", 400),
        ("sso-reset", "SSO resets require a manager approval.", 500),
    ];
    for (id, text, at) in docs {
        store.ingest(id, text, "handbook", at)?;
    }

    // Serving traffic cites what it retrieves; heat is the per-window count.
    let day = 24 * 3600;
    for _ in 0..5 {
        store.record_citation("kms-rotate", 10 * day)?;
    }
    for _ in 0..3 {
        store.record_citation("oncall-page", 11 * day)?;
    }
    store.record_citation("kms-audit", 11 * day)?;

    println!("heat report (current window):");
    for row in store.heat_report() {
        println!("  {:<12} heat {:<3} updated_at {}", row.chunk_id, row.heat, row.updated_at);
    }

    // Top 40 percent by heat; recency, then id, break ties. The update
    // also begins a fresh counting window at `now`.
    let snapshot = store.rolling_update(40, 12 * day);
    println!("\nsnapshot at day 12, top 40%: {:?}", snapshot.chunk_ids);

    // By day 20 that window has expired, so every counter reads zero and
    // selection falls back to recency alone.
    let snapshot = store.rolling_update(40, 20 * day);
    println!("snapshot at day 20, window expired: {:?}", snapshot.chunk_ids);

    // A single citation in the new window is enough to outrank recency.
    store.record_citation("oncall-page", 20 * day)?;
    let snapshot = store.rolling_update(40, 20 * day);
    println!("snapshot after one fresh citation:  {:?}", snapshot.chunk_ids);
    Ok(())
}
