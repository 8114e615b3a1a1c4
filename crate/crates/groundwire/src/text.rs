//! Tokenization shared by the lexical index, the graph extractor, the
//! router, and the evaluation metrics. One tokenizer everywhere keeps
//! recall comparisons between channels honest.

use std::collections::BTreeSet;
use std::sync::OnceLock;

/// Pluggable tokenizer. The default lowercases and splits on any
/// non-alphanumeric rune; swap in a different impl for other languages.
pub trait Tokenize: Send + Sync {
    fn tokenize(&self, text: &str) -> Vec<String>;
}

/// Lowercase, split on non-alphanumeric. "Ad Review 2.0" -> ["ad", "review", "2", "0"].
#[derive(Debug, Default, Clone, Copy)]
pub struct DefaultTokenizer;

impl Tokenize for DefaultTokenizer {
    fn tokenize(&self, text: &str) -> Vec<String> {
        tokenize(text)
    }
}

/// Free-function form of the default tokenizer.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
        .collect()
}

/// Whitespace-delimited token count used for budget accounting. This is a
/// deliberate stand-in for a model tokenizer: cheap, stable, documented.
pub fn count_tokens(text: &str) -> usize {
    text.split_whitespace().count()
}

const STOPWORDS: &[&str] = &[
    "a", "an", "and", "are", "as", "at", "be", "but", "by", "can", "did", "do", "does", "for",
    "from", "had", "has", "have", "how", "i", "if", "in", "into", "is", "it", "its", "me", "my",
    "no", "not", "of", "on", "or", "our", "s", "so", "t", "that", "the", "their", "them", "then",
    "there", "these", "they", "this", "to", "us", "was", "we", "were", "what", "when",
    "where", "which", "who", "why", "will", "with", "you", "your",
];

fn stopword_set() -> &'static BTreeSet<&'static str> {
    static SET: OnceLock<BTreeSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| STOPWORDS.iter().copied().collect())
}

pub fn is_stopword(token: &str) -> bool {
    stopword_set().contains(token)
}

/// Tokens of `text` with stopwords removed. Used by the router to decide
/// whether a query has enough signal for the graph channel.
pub fn content_terms(text: &str) -> Vec<String> {
    tokenize(text)
        .into_iter()
        .filter(|t| !is_stopword(t.as_str()))
        .collect()
}

/// First sentence of a chunk, capped at `max_chars` characters (on a char
/// boundary). Sentence end is '.', '!' or '?'.
pub fn first_sentence(text: &str, max_chars: usize) -> String {
    let trimmed = text.trim();
    let end = trimmed
        .char_indices()
        .find(|(_, c)| matches!(c, '.' | '!' | '?'))
        .map(|(i, c)| i + c.len_utf8())
        .unwrap_or(trimmed.len());
    let sentence = &trimmed[..end];
    sentence.chars().take(max_chars).collect()
}
