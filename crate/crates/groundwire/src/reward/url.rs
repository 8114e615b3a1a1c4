//! URL detection and canonicalization. This module is the single
//! authority on "what counts as a URL" for the whole crate: the reward
//! scorer, the corpus store, and the streaming guardrail all call into it,
//! so their notions of a link can never drift apart.

use std::ops::Range;
use std::sync::OnceLock;

use regex::Regex;

/// Punctuation stripped from the tail of a raw match. Sentence-final
/// characters like `https://a.com.` are not part of the link.
const TRAILING: &[char] = &['.', ',', ';', ':', ')', ']', '}', '"'];

fn url_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r#"(?i)\bhttps?://[a-z0-9.\-]+(?::[0-9]+)?(?:[/?#][a-z0-9\-._~:/?#\[\]@!$\&'()*+,;=%{}]*)?"#,
        )
        .expect("url regex compiles")
    })
}

fn anchored_url_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r#"^(?i)https?://[a-z0-9.\-]+(?::[0-9]+)?(?:[/?#][a-z0-9\-._~:/?#\[\]@!$\&'()*+,;=%{}]*)?$"#,
        )
        .expect("anchored url regex compiles")
    })
}

/// A detected URL: the byte span it occupies in the source text (after
/// trailing punctuation is trimmed) and its canonical form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UrlMatch {
    pub range: Range<usize>,
    pub canonical: String,
}

/// Lowercases scheme and authority; path, query and fragment are preserved
/// byte for byte (they are case-sensitive on many servers).
pub fn canonicalize(url: &str) -> String {
    match url.find("://") {
        Some(pos) => {
            let scheme = url[..pos].to_ascii_lowercase();
            let rest = &url[pos + 3..];
            let authority_end = rest.find(['/', '?', '#']).unwrap_or(rest.len());
            let authority = rest[..authority_end].to_ascii_lowercase();
            format!("{scheme}://{authority}{}", &rest[authority_end..])
        }
        None => url.to_string(),
    }
}

/// Scans `text` for URLs. Matches start at a word boundary, extend over
/// the URL character class, and lose any trailing sentence punctuation.
/// A candidate whose canonical form no longer parses as a URL (for
/// example a bare scheme left over after trimming) is discarded, which
/// makes extraction idempotent: re-extracting from a canonical URL yields
/// exactly that URL.
pub fn find_urls(text: &str) -> Vec<UrlMatch> {
    let mut out = Vec::new();
    for m in url_regex().find_iter(text) {
        let mut end = m.end();
        while end > m.start() {
            let last = text[m.start()..end]
                .chars()
                .next_back()
                .expect("non-empty slice");
            if TRAILING.contains(&last) {
                end -= last.len_utf8();
            } else {
                break;
            }
        }
        if end == m.start() {
            continue;
        }
        let canonical = canonicalize(&text[m.start()..end]);
        if anchored_url_regex().is_match(&canonical) {
            out.push(UrlMatch {
                range: m.start()..end,
                canonical,
            });
        }
    }
    out
}

/// Canonical URLs in `text`, ordered by first occurrence, deduplicated.
pub fn extract_urls(text: &str) -> Vec<String> {
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::new();
    for m in find_urls(text) {
        if seen.insert(m.canonical.clone()) {
            out.push(m.canonical);
        }
    }
    out
}
