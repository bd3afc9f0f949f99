//! Classifier-ready text: URLs, media links, retweet markers and mentions are
//! removed, hashtags lose their `#`, whitespace is collapsed.

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

static RT_MARKER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s*(?:(?i:rt)\s+@\w+:?\s*)+").unwrap());
static URL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)(?:https?://|t\.co/|pic\.twitter\.com/)\S*").unwrap());
static MENTION: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(^|[^\w])@\w+").unwrap());
static HASHTAG: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(^|[^\w])#(\w)").unwrap());

/// Normalized post text tied to its source post.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizedText {
    pub source_id: String,
    pub value: String,
}

impl NormalizedText {
    pub fn new(source_id: impl Into<String>, raw: &str) -> NormalizedText {
        NormalizedText {
            source_id: source_id.into(),
            value: normalize(raw),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }
}

fn collapse_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn pass(s: &str) -> String {
    let s = RT_MARKER.replace(s, "");
    let s = URL.replace_all(&s, "");
    let s = MENTION.replace_all(&s, "$1");
    let s = HASHTAG.replace_all(&s, "$1$2");
    collapse_whitespace(&s)
}

/// Applies the cleanup rules until the text stops changing, so that a removal
/// which exposes a new match (e.g. `#http://...`) is also handled.
pub fn normalize(text: &str) -> String {
    let mut current = pass(text);
    loop {
        let next = pass(&current);
        if next == current {
            return current;
        }
        current = next;
    }
}

/// True when the text satisfies every output invariant of [`normalize`].
pub fn is_normalized(text: &str) -> bool {
    !URL.is_match(text)
        && !RT_MARKER.is_match(text)
        && text == text.trim()
        && !text.contains("  ")
        && !text.chars().any(|c| c.is_whitespace() && c != ' ')
}
