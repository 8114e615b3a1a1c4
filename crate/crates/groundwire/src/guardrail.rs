//! Streaming output guardrail.
//!
//! Text is emitted chunk by chunk; this scanner guarantees that no URL
//! (as the crate's extractor defines one) reaches the output unless it
//! validated, no matter how the stream is split. The undecidable tail of
//! the stream (a URL still being received, a partial "http"/"https"
//! scheme, a word that might complete into a blocklisted term) is held
//! back until more input or end of stream decides it, so output depends
//! only on the concatenated stream, never on chunk boundaries.
//!
//! Soundness sketch: every extractor match starts at a word-boundary
//! scheme and consumes only URL-class characters, so it is contained in
//! one candidate span here (spans are maximal URL-class runs from a
//! word-boundary scheme). Spans are resolved through the extractor
//! itself: valid matches pass verbatim, invalid matches become the
//! placeholder, and the placeholder and redaction glyphs introduce no
//! scheme, so re-extracting from guarded output can only find validated
//! URLs.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::reward::url::find_urls;
use crate::reward::validate::{validate_urls, PrefixPool, StatusChecker};

/// Scheme spellings that can open a URL candidate.
const SCHEMES: [&str; 2] = ["https://", "http://"];

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Characters the URL grammar can consume; a superset of what the
/// extractor matches, so a candidate span always covers a full match.
fn is_url_char(c: char) -> bool {
    c.is_ascii_alphanumeric()
        || matches!(
            c,
            '-' | '.'
                | '_'
                | '~'
                | ':'
                | '/'
                | '?'
                | '#'
                | '['
                | ']'
                | '@'
                | '!'
                | '$'
                | '&'
                | '\''
                | '('
                | ')'
                | '*'
                | '+'
                | ','
                | ';'
                | '='
                | '%'
              | '{'
                | '}'
        )
}

enum SchemeCheck {
    /// Full "http://" or "https://" present.
    Confirmed,
    /// The buffer ends inside a possible scheme; need more input.
    Partial,
    No,
}

fn scheme_check(rest: &str) -> SchemeCheck {
    for scheme in SCHEMES {
        let n = scheme.len().min(rest.len());
        if rest.as_bytes()[..n].eq_ignore_ascii_case(&scheme.as_bytes()[..n]) {
            return if n == scheme.len() { SchemeCheck::Confirmed } else { SchemeCheck::Partial };
        }
    }
    SchemeCheck::No
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GuardrailEventKind {
    UrlRedacted,
    UrlPassed,
    SafetyRedacted,
}

/// Something the guardrail did to the stream: `span` is the original
/// text acted on, `position` its byte offset in the concatenated input.
/// Events are ordered by position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuardrailEvent {
    pub kind: GuardrailEventKind,
    pub span: String,
    pub position: usize,
}

impl GuardrailEvent {
    fn new(kind: GuardrailEventKind, span: impl Into<String>, position: usize) -> Self {
        Self { kind, span: span.into(), position }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GuardrailConfig {
    /// Candidate spans are force-resolved at this many characters.
    pub max_url_length: usize,
    /// Replacement for an invalid URL.
    pub placeholder: String,
    /// One of these per character replaces a blocklisted word.
    pub redact_char: char,
    /// Lowercase single-word terms redacted wherever they appear as a
    /// whole word (outside URLs).
    pub blocklist: BTreeSet<String>,
}

impl Default for GuardrailConfig {
    fn default() -> Self {
        Self {
            max_url_length: 2048,
            placeholder: "[link removed]".into(),
            redact_char: '■',
            blocklist: BTreeSet::new(),
        }
    }
}

impl GuardrailConfig {
    pub fn with_blocklist(terms: impl IntoIterator<Item = String>) -> Self {
        Self {
            blocklist: terms.into_iter().map(|t| t.to_lowercase()).collect(),
            ..Default::default()
        }
    }

    fn max_term_chars(&self) -> usize {
        self.blocklist.iter().map(|t| t.chars().count()).max().unwrap_or(0)
    }
}

/// Decides URL validity for one stream: in evidence, or under an approved
/// prefix and answering alive.
pub struct UrlPolicy {
    pub evidence_urls: BTreeSet<String>,
    pub prefix_pool: PrefixPool,
    pub checker: Arc<dyn StatusChecker>,
}

impl UrlPolicy {
    pub fn new(
        evidence_urls: BTreeSet<String>,
        prefix_pool: PrefixPool,
        checker: Arc<dyn StatusChecker>,
    ) -> Self {
        Self { evidence_urls, prefix_pool, checker }
    }

    /// Policy that trusts evidence URLs only; nothing is probed.
    pub fn evidence_only(evidence_urls: BTreeSet<String>) -> Self {
        Self {
            evidence_urls,
            prefix_pool: PrefixPool::default(),
            checker: Arc::new(crate::reward::validate::StaticStatusChecker::uniform(None)),
        }
    }

    fn is_valid(&self, canonical: &str) -> bool {
        validate_urls(
            &[canonical.to_string()],
            &self.evidence_urls,
            &self.prefix_pool,
            self.checker.as_ref(),
        )[0]
        .valid
    }
}

pub struct Guardrail {
    config: GuardrailConfig,
    policy: UrlPolicy,
    /// Undecidable tail of the stream.
    held: String,
    /// Last original character before `held`; drives word boundaries.
    prev_char: Option<char>,
    /// Byte offset of `held[0]` in the concatenated input.
    consumed: usize,
    /// Canonical URL -> validity, resolved once per stream.
    cache: HashMap<String, bool>,
    events: Vec<GuardrailEvent>,
    max_term_chars: usize,
}

impl Guardrail {
    pub fn new(config: GuardrailConfig, policy: UrlPolicy) -> Self {
        let max_term_chars = config.max_term_chars();
        Self {
            config,
            policy,
            held: String::new(),
            prev_char: None,
            consumed: 0,
            cache: HashMap::new(),
            events: Vec::new(),
            max_term_chars,
        }
    }

    /// Feeds one chunk; returns whatever became safe to emit.
    pub fn scan_chunk(&mut self, chunk: &str) -> String {
        self.held.push_str(chunk);
        self.drain(false)
    }

    /// Ends the stream, resolving anything still held.
    pub fn finalize(&mut self) -> String {
        self.drain(true)
    }

    pub fn events(&self) -> &[GuardrailEvent] {
        &self.events
    }

    /// Current hold-back size; bounded by max_url_length plus the
    /// longest scheme prefix (or the longest blocklist term).
    pub fn held_bytes(&self) -> usize {
        self.held.len()
    }

    pub fn take_events(&mut self) -> Vec<GuardrailEvent> {
        std::mem::take(&mut self.events)
    }

    /// One-shot convenience over a complete text.
    pub fn guard(text: &str, config: GuardrailConfig, policy: UrlPolicy) -> (String, Vec<GuardrailEvent>) {
        let mut g = Guardrail::new(config, policy);
        let mut out = g.scan_chunk(text);
        out.push_str(&g.finalize());
        (out, g.take_events())
    }

    fn url_is_valid(&mut self, canonical: &str) -> bool {
        if let Some(&v) = self.cache.get(canonical) {
            return v;
        }
        let v = self.policy.is_valid(canonical);
        self.cache.insert(canonical.to_string(), v);
        v
    }

    /// Blocklist decision for a completed word.
    fn finish_word(&mut self, word: &str, abs: usize, out: &mut String) {
        let chars = word.chars().count();
        if chars <= self.max_term_chars && self.config.blocklist.contains(&word.to_lowercase()) {
            for _ in 0..chars {
                out.push(self.config.redact_char);
            }
            self.events.push(GuardrailEvent::new(GuardrailEventKind::SafetyRedacted, word, abs));
            return;
        }
        out.push_str(word);
    }

    /// Word-level emission for a complete piece of text that cannot
    /// contain a URL candidate (the gaps inside a resolved span).
    fn emit_gap(&mut self, text: &str, abs_base: usize, out: &mut String) {
        let mut word_start: Option<usize> = None;
        for (i, ch) in text.char_indices() {
            if is_word_char(ch) {
                word_start.get_or_insert(i);
            } else {
                if let Some(ws) = word_start.take() {
                    self.finish_word(&text[ws..i], abs_base + ws, out);
                }
                out.push(ch);
            }
        }
        if let Some(ws) = word_start {
            self.finish_word(&text[ws..], abs_base + ws, out);
        }
    }

    /// Resolves a complete candidate span: extractor matches become the
    /// placeholder or pass verbatim; the rest of the span is ordinary
    /// text.
    fn resolve_span(&mut self, span: &str, abs_base: usize, out: &mut String) {
        let mut cursor = 0usize;
        for m in find_urls(span) {
            if m.range.start > cursor {
                self.emit_gap(&span[cursor..m.range.start], abs_base + cursor, out);
            }
            let original = &span[m.range.clone()];
            if self.url_is_valid(&m.canonical) {
                out.push_str(original);
                self.events.push(GuardrailEvent::new(
                    GuardrailEventKind::UrlPassed,
                    original,
                    abs_base + m.range.start,
                ));
            } else {
                out.push_str(&self.config.placeholder);
                self.events.push(GuardrailEvent::new(
                    GuardrailEventKind::UrlRedacted,
                    original,
                    abs_base + m.range.start,
                ));
            }
            cursor = m.range.end;
        }
        if cursor < span.len() {
            self.emit_gap(&span[cursor..], abs_base + cursor, out);
        }
    }

    fn drain(&mut self, at_eof: bool) -> String {
        let held = std::mem::take(&mut self.held);
        let base = self.consumed;
        let mut out = String::new();

        let mut i = 0usize;
        let mut prev = self.prev_char;
        let mut word_start: Option<usize> = None;
        // True while inside a word that already proved too long to match
        // any blocklist term (its chars stream straight through).
        let mut overflow = prev.is_some_and(is_word_char);

        macro_rules! hold_from {
            ($pos:expr) => {{
                let pos: usize = $pos;
                // prev_char must describe the char just before the hold
                // point, not the last char walked past it.
                if pos > 0 {
                    self.prev_char = held[..pos].chars().next_back();
                }
                self.held = held[pos..].to_string();
                self.consumed = base + pos;
                return out;
            }};
        }

        while i < held.len() {
            let ch = held[i..].chars().next().expect("in bounds");
            let ch_len = ch.len_utf8();
            let at_boundary = !prev.is_some_and(is_word_char);

            if (ch == 'h' || ch == 'H') && at_boundary {
                match scheme_check(&held[i..]) {
                    SchemeCheck::Confirmed => {
                        // Extend the span over URL characters up to the cap.
                        let mut end = i;
                        let mut span_chars = 0usize;
                        let mut terminated = false;
                        for (off, c) in held[i..].char_indices() {
                            if span_chars == self.config.max_url_length {
                                end = i + off;
                                terminated = true;
                                break;
                            }
                            if !is_url_char(c) {
                                end = i + off;
                                terminated = true;
                                break;
                            }
                            span_chars += 1;
                            end = i + off + c.len_utf8();
                        }
                        let capped = terminated && span_chars == self.config.max_url_length;
                        if !terminated && !at_eof {
                            hold_from!(i);
                        }
                        self.resolve_span(&held[i..end], base + i, &mut out);
                        prev = held[i..end].chars().next_back();
                        i = end;
                        word_start = None;
                        // A cap split leaves the rest of the run mid-word.
                        overflow = capped;
                        continue;
                    }
                    SchemeCheck::Partial => {
                        if !at_eof {
                            hold_from!(i);
                        }
                        // At end of stream a bare scheme prefix is text.
                    }
                    SchemeCheck::No => {}
                }
            }

            if is_word_char(ch) {
                if overflow {
                    out.push(ch);
                } else {
                    let ws = *word_start.get_or_insert(i);
                    let word_chars = held[ws..i + ch_len].chars().count();
                    if word_chars > self.max_term_chars {
                        out.push_str(&held[ws..i + ch_len]);
                        word_start = None;
                        overflow = true;
                    }
                }
            } else {
                if let Some(ws) = word_start.take() {
                    self.finish_word(&held[ws..i], base + ws, &mut out);
                }
                overflow = false;
                out.push(ch);
            }
            prev = Some(ch);
            i += ch_len;
        }

        if let Some(ws) = word_start {
            if !at_eof {
                hold_from!(ws);
            }
            self.finish_word(&held[ws..], base + ws, &mut out);
        }

        self.held = String::new();
        self.prev_char = prev;
        self.consumed = base + held.len();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reward::validate::StaticStatusChecker;
    use std::sync::Mutex;

    fn evidence(urls: &[&str]) -> BTreeSet<String> {
        urls.iter().map(|u| u.to_string()).collect()
    }

    fn deny_all() -> UrlPolicy {
        UrlPolicy::evidence_only(BTreeSet::new())
    }

    fn run_whole(input: &str, config: GuardrailConfig, policy: UrlPolicy) -> (String, Vec<GuardrailEvent>) {
        Guardrail::guard(input, config, policy)
    }

    #[test]
    fn invalid_url_becomes_placeholder_and_punctuation_survives() {
        let (out, events) = run_whole("see https://fake.example/x.", GuardrailConfig::default(), deny_all());
        assert_eq!(out, "see [link removed].");
        assert_eq!(
            events,
            vec![GuardrailEvent::new(GuardrailEventKind::UrlRedacted, "https://fake.example/x", 4)]
        );
    }

    #[test]
    fn evidence_url_passes_verbatim_with_original_case() {
        let policy = UrlPolicy::evidence_only(evidence(&["https://docs.a.com/Guide"]));
        let (out, events) =
            run_whole("read https://Docs.A.com/Guide now", GuardrailConfig::default(), policy);
        assert_eq!(out, "read https://Docs.A.com/Guide now");
        // The event records the span as written, validated canonically.
        assert_eq!(
            events[0],
            GuardrailEvent::new(GuardrailEventKind::UrlPassed, "https://Docs.A.com/Guide", 5)
        );
    }

    #[test]
    fn approved_prefix_with_live_status_passes() {
        let policy = UrlPolicy::new(
            BTreeSet::new(),
            PrefixPool::new(["https://ok.example/".to_string()]),
            Arc::new(StaticStatusChecker::uniform(Some(200))),
        );
        let (out, _) = run_whole("at https://ok.example/p", GuardrailConfig::default(), policy);
        assert_eq!(out, "at https://ok.example/p");
    }

    #[test]
    fn approved_prefix_but_dead_fails_closed() {
        let policy = UrlPolicy::new(
            BTreeSet::new(),
            PrefixPool::new(["https://ok.example/".to_string()]),
            Arc::new(StaticStatusChecker::uniform(Some(404))),
        );
        let (out, _) = run_whole("at https://ok.example/p", GuardrailConfig::default(), policy);
        assert_eq!(out, "at [link removed]");
    }

    #[test]
    fn bare_scheme_words_are_plain_text() {
        let (out, events) = run_whole("the https protocol and http too", GuardrailConfig::default(), deny_all());
        assert_eq!(out, "the https protocol and http too");
        assert!(events.is_empty());
    }

    #[test]
    fn scheme_inside_a_word_is_not_a_url() {
        let (out, _) = run_whole("xhttps://e.com stays", GuardrailConfig::default(), deny_all());
        assert_eq!(out, "xhttps://e.com stays");
    }

    #[test]
    fn trailing_candidate_resolves_at_finalize() {
        let mut g = Guardrail::new(GuardrailConfig::default(), deny_all());
        let mut out = g.scan_chunk("go to https://fake.example/path");
        assert_eq!(out, "go to ");
        out.push_str(&g.finalize());
        assert_eq!(out, "go to [link removed]");
    }

    #[test]
    fn scheme_split_across_chunks_is_still_caught() {
        let mut g = Guardrail::new(GuardrailConfig::default(), deny_all());
        let mut out = String::new();
        out.push_str(&g.scan_chunk("see ht"));
        out.push_str(&g.scan_chunk("tps://fake.example/x ok"));
        out.push_str(&g.finalize());
        assert_eq!(out, "see [link removed] ok");
    }

    #[test]
    fn partial_scheme_at_eof_is_plain_text() {
        let mut g = Guardrail::new(GuardrailConfig::default(), deny_all());
        let mut out = g.scan_chunk("end with ht");
        out.push_str(&g.finalize());
        assert_eq!(out, "end with ht");
    }

    #[test]
    fn blocklisted_word_is_redacted_glyph_per_char() {
        let cfg = GuardrailConfig::with_blocklist(["codename".to_string()]);
        let (out, events) = run_whole("the Codename project", cfg, deny_all());
        assert_eq!(out, "the ■■■■■■■■ project");
        assert_eq!(
            events,
            vec![GuardrailEvent::new(GuardrailEventKind::SafetyRedacted, "Codename", 4)]
        );
    }

    #[test]
    fn blocklist_matches_whole_words_only() {
        let cfg = GuardrailConfig::with_blocklist(["codename".to_string()]);
        let (out, events) = run_whole("codenames and ecodename stay", cfg, deny_all());
        assert_eq!(out, "codenames and ecodename stay");
        assert!(events.is_empty());
    }

    #[test]
    fn adjacent_urls_resolve_independently() {
        let policy = UrlPolicy::evidence_only(evidence(&["https://good.example/a"]));
        let (out, _) = run_whole(
            "see https://good.example/a and https://bad.example/b today",
            GuardrailConfig::default(),
            policy,
        );
        assert_eq!(out, "see https://good.example/a and [link removed] today");
    }

    struct CountingChecker {
        inner: StaticStatusChecker,
        calls: Mutex<usize>,
    }

    impl StatusChecker for CountingChecker {
        fn status(&self, url: &str) -> Option<u16> {
            *self.calls.lock().unwrap() += 1;
            self.inner.status(url)
        }
    }

    #[test]
    fn validation_is_cached_per_stream() {
        let checker = Arc::new(CountingChecker {
            inner: StaticStatusChecker::uniform(Some(200)),
            calls: Mutex::new(0),
        });
        let policy = UrlPolicy::new(
            BTreeSet::new(),
            PrefixPool::new(["https://ok.example/".to_string()]),
            Arc::clone(&checker) as Arc<dyn StatusChecker>,
        );
        let (out, _) = run_whole(
            "a https://ok.example/x b https://ok.example/x c",
            GuardrailConfig::default(),
            policy,
        );
        assert_eq!(out, "a https://ok.example/x b https://ok.example/x c");
        assert_eq!(*checker.calls.lock().unwrap(), 1);
    }

    #[test]
    fn oversized_candidate_is_force_resolved() {
        let cfg = GuardrailConfig { max_url_length: 20, ..Default::default() };
        let long = format!("x https://{}.com end", "a".repeat(40));
        let (out, _) = run_whole(&long, cfg, deny_all());
        assert!(out.contains("[link removed]"));
        assert!(out.ends_with(" end"));
        // Nothing the extractor would call a URL survives.
        assert!(crate::reward::url::extract_urls(&out).is_empty());
    }

    #[test]
    fn byte_level_replay_matches_single_shot() {
        let inputs = [
            "plain text without links at all",
            "see https://fake.example/x. then https://also.bad/y!",
            "mixed Codename and https://fake.example/z words",
            "ht trailing",
            "a https://ok.example/q b",
        ];
        for input in inputs {
            let make_policy = || {
                UrlPolicy::new(
                    evidence(&["https://ok.example/q"]),
                    PrefixPool::default(),
                    Arc::new(StaticStatusChecker::uniform(None)),
                )
            };
            let cfg = GuardrailConfig::with_blocklist(["codename".to_string()]);
            let (whole, whole_events) = run_whole(input, cfg.clone(), make_policy());
            for split in 1..input.len() {
                let mut g = Guardrail::new(cfg.clone(), make_policy());
                let mut out = g.scan_chunk(&input[..split]);
                out.push_str(&g.scan_chunk(&input[split..]));
                out.push_str(&g.finalize());
                assert_eq!(out, whole, "split at {split} of {input:?}");
                assert_eq!(g.events(), whole_events.as_slice(), "events at {split}");
            }
        }
    }

    #[test]
    fn multibyte_text_passes_through() {
        let cfg = GuardrailConfig::with_blocklist(["wörld".to_string()]);
        let (out, events) = run_whole("héllo wörld ✓ done", cfg, deny_all());
        assert_eq!(out, "héllo ■■■■■ ✓ done");
        assert_eq!(events.len(), 1);
    }

    #[test]
    fn empty_chunks_are_harmless() {
        let mut g = Guardrail::new(GuardrailConfig::default(), deny_all());
        assert_eq!(g.scan_chunk(""), "");
        assert_eq!(g.finalize(), "");
        assert!(g.events().is_empty());
    }

    #[test]
    fn events_serialize_with_wire_field_names() {
        let event = GuardrailEvent::new(GuardrailEventKind::UrlRedacted, "https://x.example/a", 7);
        assert_eq!(
            serde_json::to_string(&event).unwrap(),
            r#"{"kind":"url_redacted","span":"https://x.example/a","position":7}"#
        );
        let passed = GuardrailEvent::new(GuardrailEventKind::UrlPassed, "u", 0);
        assert!(serde_json::to_string(&passed).unwrap().contains("url_passed"));
        let safety = GuardrailEvent::new(GuardrailEventKind::SafetyRedacted, "w", 1);
        assert!(serde_json::to_string(&safety).unwrap().contains("safety_redacted"));
    }

    #[test]
    fn events_stay_ordered_by_position() {
        let cfg = GuardrailConfig::with_blocklist(["codename".to_string()]);
        let (_, events) = run_whole(
            "codename first https://fake.example/a then codename https://fake.example/b",
            cfg,
            deny_all(),
        );
        assert_eq!(events.len(), 4);
        assert!(events.windows(2).all(|w| w[0].position <= w[1].position));
    }

    #[test]
    fn hold_back_is_bounded_by_the_url_cap() {
        let cfg = GuardrailConfig { max_url_length: 64, ..Default::default() };
        let bound = cfg.max_url_length + 8;
        let mut g = Guardrail::new(cfg, deny_all());
        let stream = format!("start https://{}/path more text", "long-host.example".repeat(12));
        for chunk in stream.as_bytes().chunks(7) {
            g.scan_chunk(std::str::from_utf8(chunk).unwrap());
            assert!(g.held_bytes() <= bound, "{} > {bound}", g.held_bytes());
        }
        g.finalize();
        assert_eq!(g.held_bytes(), 0);
    }
}
