//! Deterministic text normalization applied before embedding.
//!
//! Four rules, each individually switchable: URL tokens are deleted, text is
//! lowercased (except Hindi — Devanagari has no case), every maximal digit
//! run becomes the literal token `number`, and whitespace runs collapse to a
//! single space. Mentions, punctuation and stop-words are kept verbatim:
//! sentence encoders need the surrounding context intact.

use crate::corpus::{Language, Post};

/// Normalized text ready for the embedding providers.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PreprocessedText {
    pub text: String,
    pub source_id: String,
    pub language: Language,
}

/// Which normalization rules to apply. All on by default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormalizeRules {
    pub remove_urls: bool,
    pub lowercase: bool,
    pub replace_digits: bool,
    pub collapse_whitespace: bool,
}

impl Default for NormalizeRules {
    fn default() -> Self {
        NormalizeRules {
            remove_urls: true,
            lowercase: true,
            replace_digits: true,
            collapse_whitespace: true,
        }
    }
}

const DIGIT_TOKEN: &str = "number";

/// ASCII 0-9 or Devanagari ०-९.
fn is_digit_char(c: char) -> bool {
    c.is_ascii_digit() || ('\u{0966}'..='\u{096F}').contains(&c)
}

/// A URL for removal purposes: any whitespace-delimited token starting with
/// `http://`, `https://` or `www.`, matched case-insensitively so the rule
/// stays idempotent under later lowercasing.
fn is_url_token(token: &str) -> bool {
    const PREFIXES: [&str; 3] = ["http://", "https://", "www."];
    PREFIXES.iter().any(|p| {
        token
            .get(..p.len())
            .is_some_and(|head| head.eq_ignore_ascii_case(p))
    })
}

fn remove_urls(text: &str) -> String {
    // Splitting on whitespace boundaries by hand keeps the original
    // separators for the tokens we retain.
    let mut out = String::with_capacity(text.len());
    let mut token = String::new();
    for c in text.chars() {
        if c.is_whitespace() {
            if !is_url_token(&token) {
                out.push_str(&token);
            }
            token.clear();
            out.push(c);
        } else {
            token.push(c);
        }
    }
    if !is_url_token(&token) {
        out.push_str(&token);
    }
    out
}

fn replace_digit_runs(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut in_run = false;
    for c in text.chars() {
        if is_digit_char(c) {
            if !in_run {
                out.push_str(DIGIT_TOKEN);
                in_run = true;
            }
        } else {
            in_run = false;
            out.push(c);
        }
    }
    out
}

fn collapse_whitespace(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut in_space = false;
    for c in text.chars() {
        if c.is_whitespace() {
            if !in_space && !out.is_empty() {
                out.push(' ');
            }
            in_space = true;
        } else {
            in_space = false;
            out.push(c);
        }
    }
    while out.ends_with(' ') {
        out.pop();
    }
    out
}

/// Normalize raw text with a specific rule set.
pub fn normalize_with(rules: NormalizeRules, text: &str, language: Language) -> String {
    let mut t = if rules.remove_urls {
        remove_urls(text)
    } else {
        text.to_string()
    };
    if rules.lowercase && language != Language::Hi {
        t = t.to_lowercase();
    }
    if rules.replace_digits {
        t = replace_digit_runs(&t);
    }
    if rules.collapse_whitespace {
        t = collapse_whitespace(&t);
    }
    t
}

/// Normalize raw text with all rules on. Total: never fails, empty input is
/// fine.
pub fn normalize(text: &str, language: Language) -> PreprocessedText {
    PreprocessedText {
        text: normalize_with(NormalizeRules::default(), text, language),
        source_id: String::new(),
        language,
    }
}

/// Normalize one post, carrying its id through.
pub fn normalize_post(post: &Post) -> PreprocessedText {
    normalize_post_with(NormalizeRules::default(), post)
}

pub fn normalize_post_with(rules: NormalizeRules, post: &Post) -> PreprocessedText {
    PreprocessedText {
        text: normalize_with(rules, &post.text, post.language),
        source_id: post.id.clone(),
        language: post.language,
    }
}

/// Element-wise [`normalize_post`], order preserved.
pub fn normalize_batch(posts: &[Post]) -> Vec<PreprocessedText> {
    posts.iter().map(normalize_post).collect()
}
