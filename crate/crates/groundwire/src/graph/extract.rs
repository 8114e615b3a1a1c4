//! Entity extraction. The built-in extractor is a gazetteer: it learns a
//! term dictionary from the corpus (capitalized tokens, double-quoted
//! phrases) plus user-supplied terms, then tags chunks by dictionary
//! match. Deterministic, fast, and easy to replace through the trait.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use regex::Regex;

use crate::error::Result;
use crate::text::tokenize;

/// Produces canonical entity names (lowercase, single-spaced tokens)
/// found in a text.
pub trait EntityExtractor: Send + Sync {
    fn extract(&self, text: &str) -> Result<Vec<String>>;
}

fn quoted_phrase_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r#""([^"]+)""#).expect("quote regex compiles"))
}

/// Splits keeping original case, so capitalization is still visible.
fn cased_tokens(text: &str) -> impl Iterator<Item = &str> {
    text.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty())
}

#[derive(Debug, Clone)]
pub struct GazetteerExtractor {
    /// Terms as lowercase token sequences.
    terms: BTreeSet<Vec<String>>,
    max_term_tokens: usize,
}

impl GazetteerExtractor {
    /// Learns the dictionary from raw chunk texts. Every token written
    /// with a leading capital becomes a term, every double-quoted phrase
    /// becomes a term, and `user_terms` are added verbatim.
    pub fn from_corpus<'a, I, S>(texts: I, user_terms: &[S]) -> Self
    where
        I: IntoIterator<Item = &'a str>,
        S: AsRef<str>,
    {
        let mut terms: BTreeSet<Vec<String>> = BTreeSet::new();
        for text in texts {
            for tok in cased_tokens(text) {
                if tok.chars().next().is_some_and(char::is_uppercase) {
                    terms.insert(vec![tok.to_lowercase()]);
                }
            }
            for cap in quoted_phrase_re().captures_iter(text) {
                let phrase = tokenize(&cap[1]);
                if !phrase.is_empty() {
                    terms.insert(phrase);
                }
            }
        }
        for term in user_terms {
            let phrase = tokenize(term.as_ref());
            if !phrase.is_empty() {
                terms.insert(phrase);
            }
        }
        let max_term_tokens = terms.iter().map(Vec::len).max().unwrap_or(0);
        Self { terms, max_term_tokens }
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// All dictionary terms found as contiguous token runs in `tokens`.
    fn match_tokens(&self, tokens: &[String]) -> BTreeSet<Vec<String>> {
        let mut found = BTreeSet::new();
        for start in 0..tokens.len() {
            for len in 1..=self.max_term_tokens.min(tokens.len() - start) {
                let window = &tokens[start..start + len];
                if self.terms.contains(window) {
                    found.insert(window.to_vec());
                }
            }
        }
        found
    }
}

impl EntityExtractor for GazetteerExtractor {
    fn extract(&self, text: &str) -> Result<Vec<String>> {
        Ok(self
            .match_tokens(&tokenize(text))
            .into_iter()
            .map(|toks| toks.join(" "))
            .collect())
    }
}

/// True when the entity's tokens occur contiguously in `tokens`.
pub fn entity_in_tokens(entity: &str, tokens: &[String]) -> bool {
    let needle = tokenize(entity);
    if needle.is_empty() || needle.len() > tokens.len() {
        return false;
    }
    tokens.windows(needle.len()).any(|w| w == needle.as_slice())
}
