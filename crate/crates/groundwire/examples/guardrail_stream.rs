//! Streaming output guardrail: text flows through in arbitrary chunk
//! sizes, URLs are held until they can be judged whole, invalid ones are
//! replaced before a single byte of them reaches the client, and the
//! emitted text is identical however the stream was sliced.
//!
//! Run: cargo run -p groundwire --example guardrail_stream

use std::collections::BTreeSet;

use groundwire::guardrail::{Guardrail, GuardrailConfig, UrlPolicy};

fn policy() -> UrlPolicy {
    let evidence: BTreeSet<String> = ["https://kb.example/rotate".to_string()].into();
    UrlPolicy::evidence_only(evidence)
}

fn main() {
    let answer = "Rotate monthly per https://kb.example/rotate and never \
                  trust https://totally-legit.example/keys for this.";

    // Byte-by-byte streaming: the guardrail holds back anything that
    // might still become a URL and releases it once resolved.
    let mut guard = Guardrail::new(GuardrailConfig::default(), policy());
    let mut out = String::new();
    let mut max_held = 0usize;
    for ch in answer.chars() {
        out.push_str(&guard.scan_chunk(&ch.to_string()));
        max_held = max_held.max(guard.held_bytes());
    }
    out.push_str(&guard.finalize());

    println!("input:  {answer}");
    println!("output: {out}");
    println!("max bytes held while undecided: {max_held}\n");
    for e in guard.take_events() {
        println!("event {:?} at byte {}: {:?}", e.kind, e.position, e.span);
    }

    // The fabricated URL never appears in the stream, whole or partial.
    assert!(!out.contains("totally-legit"));
    assert!(out.contains("https://kb.example/rotate"));

    // Chunking invariance: 1-byte, 7-byte, and whole-string deliveries
    // all produce the identical guarded text and events.
    let mut variants = Vec::new();
    for width in [1usize, 7, answer.len()] {
        let mut guard = Guardrail::new(GuardrailConfig::default(), policy());
        let mut text = String::new();
        let bytes = answer.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let mut j = (i + width).min(bytes.len());
            while !answer.is_char_boundary(j) {
                j += 1;
            }
            text.push_str(&guard.scan_chunk(&answer[i..j]));
            i = j;
        }
        text.push_str(&guard.finalize());
        variants.push((width, text, guard.take_events()));
    }
    let (_, reference_text, reference_events) = &variants[0];
    for (width, text, events) in &variants {
        let same = text == reference_text && events == reference_events;
        println!("chunk width {width:>3}: identical output and events = {same}");
        assert!(same);
    }

    // Blocklisted terms are masked outside URLs; a span inside a valid
    // URL is left alone so links stay clickable.
    let config = GuardrailConfig::with_blocklist(vec!["rotate".to_string()]);
    let mut guard = Guardrail::new(config, policy());
    let mut masked = guard.scan_chunk("Please rotate via https://kb.example/rotate today.");
    masked.push_str(&guard.finalize());
    println!("\nblocklist 'rotate': {masked}");
}
