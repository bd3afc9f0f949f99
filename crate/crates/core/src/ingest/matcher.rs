use std::fs;
use std::path::Path;

use unicode_normalization::UnicodeNormalization;

use super::IngestError;

/// The ten tracking phrases used to collect the corpus.
pub const DEFAULT_KEYWORDS: [&str; 10] = [
    "solar energy",
    "solar panel",
    "solar PV",
    "solar photovoltaic",
    "solar battery",
    "solar thermal",
    "solar power",
    "solar-powered",
    "solar generation",
    "solar subsidies",
];

/// Phrases that mark a post as off-topic (astronomy, comics, games, ...).
pub const DEFAULT_STOPPHRASES: [&str; 7] = [
    "Pokemon",
    "Superman",
    "galaxy",
    "eclipse",
    "solar plexus",
    "solar-powered human",
    "I will become your sun",
];

fn is_hyphen(c: char) -> bool {
    matches!(c, '-' | '\u{2010}' | '\u{2011}')
}

/// NFC, lowercase, hyphens read as spaces, whitespace runs collapsed, trimmed.
pub fn normalize_for_match(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut pending_space = false;
    for c in s.nfc() {
        if c.is_whitespace() || is_hyphen(c) {
            pending_space = true;
            continue;
        }
        if pending_space && !out.is_empty() {
            out.push(' ');
        }
        pending_space = false;
        out.extend(c.to_lowercase());
    }
    out
}

/// Case-insensitive contiguous phrase matcher.
#[derive(Debug, Clone)]
pub struct PhraseMatcher {
    phrases: Vec<String>,
}

impl PhraseMatcher {
    /// Builds a matcher; blank phrases are ignored and an empty result is rejected.
    pub fn new<I, S>(phrases: I) -> Result<PhraseMatcher, IngestError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut normalized: Vec<String> = phrases
            .into_iter()
            .map(|p| normalize_for_match(p.as_ref()))
            .filter(|p| !p.is_empty())
            .collect();
        normalized.sort();
        normalized.dedup();
        if normalized.is_empty() {
            return Err(IngestError::EmptyPhraseList);
        }
        Ok(PhraseMatcher {
            phrases: normalized,
        })
    }

    pub fn default_keywords() -> PhraseMatcher {
        PhraseMatcher::new(DEFAULT_KEYWORDS).expect("non-empty")
    }

    pub fn default_stopphrases() -> PhraseMatcher {
        PhraseMatcher::new(DEFAULT_STOPPHRASES).expect("non-empty")
    }

    /// Reads a phrase list: one phrase per line, `#` lines are comments.
    pub fn from_file(path: impl AsRef<Path>) -> Result<PhraseMatcher, IngestError> {
        let path = path.as_ref();
        let body = fs::read_to_string(path).map_err(|source| IngestError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        PhraseMatcher::new(parse_phrase_list(&body))
            .map_err(|_| IngestError::EmptyPhraseFile(path.to_path_buf()))
    }

    /// Matches against an account handle, which cannot hold spaces:
    /// "SolarPanelPro" and "solar_panel_pro" both contain "solar panel".
    pub fn matches_handle(&self, handle: &str) -> bool {
        let squashed: String = normalize_for_match(handle)
            .chars()
            .filter(|c| !c.is_whitespace() && *c != '_')
            .collect();
        self.phrases
            .iter()
            .any(|p| squashed.contains(&p.replace(' ', "")))
    }

    pub fn phrases(&self) -> &[String] {
        &self.phrases
    }

    /// True if any phrase occurs in `text` (normalized on the fly).
    pub fn matches(&self, text: &str) -> bool {
        self.matches_normalized(&normalize_for_match(text))
    }

    /// Same as [`matches`](Self::matches) for text already passed through
    /// [`normalize_for_match`].
    pub fn matches_normalized(&self, normalized: &str) -> bool {
        self.phrases.iter().any(|p| normalized.contains(p.as_str()))
    }
}

pub fn parse_phrase_list(body: &str) -> Vec<String> {
    body.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}
