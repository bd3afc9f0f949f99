//! JSONL ingestion and the relevance filter chain.
//!
//! The chain is order-fixed: keyword match, irrelevant-phrase exclusion,
//! profile-only exclusion, then id deduplication. Every stage except
//! deduplication is a pure function of a single post.

mod matcher;

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use matcher::{
    normalize_for_match, parse_phrase_list, PhraseMatcher, DEFAULT_KEYWORDS, DEFAULT_STOPPHRASES,
};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("phrase list is empty")]
    EmptyPhraseList,
    #[error("phrase list {0} contains no phrases")]
    EmptyPhraseFile(PathBuf),
}

/// One ingested social-media record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawPost {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quoted_text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extended_text: Option<String>,
    #[serde(default)]
    pub screen_name: String,
    #[serde(default)]
    pub user_description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user_location: Option<String>,
    #[serde(rename = "lat", default, skip_serializing_if = "Option::is_none")]
    pub latitude: Option<f64>,
    #[serde(rename = "lon", default, skip_serializing_if = "Option::is_none")]
    pub longitude: Option<f64>,
    pub created_at: DateTime<Utc>,
    #[serde(default)]
    pub is_retweet: bool,
}

impl RawPost {
    pub fn text_fields(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.text.as_str())
            .chain(self.quoted_text.as_deref())
            .chain(self.extended_text.as_deref())
    }

    /// Keyword hit in the screen name (spacing-insensitive) or description.
    pub fn profile_matches(&self, keywords: &PhraseMatcher) -> bool {
        keywords.matches_handle(&self.screen_name) || keywords.matches(&self.user_description)
    }

    fn validate(&self) -> Result<(), String> {
        if self.id.trim().is_empty() {
            return Err("empty id".into());
        }
        if self.text.trim().is_empty() {
            return Err("empty text".into());
        }
        match (self.latitude, self.longitude) {
            (Some(lat), _) if !(-90.0..=90.0).contains(&lat) => {
                return Err(format!("latitude {lat} out of range"))
            }
            (_, Some(lon)) if !(-180.0..=180.0).contains(&lon) => {
                return Err(format!("longitude {lon} out of range"))
            }
            (Some(_), None) | (None, Some(_)) => {
                return Err("lat and lon must be given together".into())
            }
            _ => {}
        }
        Ok(())
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum JsonId {
    Str(String),
    Num(u64),
}

/// Parses one JSONL line. Numeric ids are accepted and stored as strings.
pub fn parse_post(line: &str) -> Result<RawPost, String> {
    let mut value: serde_json::Value =
        serde_json::from_str(line).map_err(|e| format!("invalid JSON: {e}"))?;
    if let Some(id) = value.get_mut("id") {
        let parsed: JsonId = serde_json::from_value(id.clone())
            .map_err(|_| "id must be a string or integer".to_string())?;
        *id = serde_json::Value::String(match parsed {
            JsonId::Str(s) => s,
            JsonId::Num(n) => n.to_string(),
        });
    }
    let post: RawPost = serde_json::from_value(value).map_err(|e| format!("bad record: {e}"))?;
    post.validate()?;
    Ok(post)
}

/// A line that could not be turned into a [`RawPost`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Rejected {
    pub line: usize,
    pub reason: String,
}

/// Streams records from any reader; blank lines are skipped silently and bad
/// lines come through as `Err` without stopping the stream.
pub fn read_jsonl<R: BufRead>(reader: R) -> impl Iterator<Item = Result<RawPost, Rejected>> {
    reader.lines().enumerate().filter_map(|(i, line)| {
        let line_no = i + 1;
        match line {
            Err(e) => Some(Err(Rejected {
                line: line_no,
                reason: format!("unreadable line: {e}"),
            })),
            Ok(l) if l.trim().is_empty() => None,
            Ok(l) => Some(parse_post(&l).map_err(|reason| Rejected {
                line: line_no,
                reason,
            })),
        }
    })
}

pub fn open_jsonl(
    path: impl AsRef<Path>,
) -> Result<impl Iterator<Item = Result<RawPost, Rejected>>, IngestError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(read_jsonl(BufReader::new(file)))
}

fn any_match<'a>(matcher: &PhraseMatcher, mut fields: impl Iterator<Item = &'a str>) -> bool {
    fields.any(|f| matcher.matches(f))
}

/// Keeps posts with a keyword in the text, quoted text or extended text.
pub fn keyword_filter<'a, I>(
    posts: I,
    keywords: &'a PhraseMatcher,
) -> impl Iterator<Item = RawPost> + 'a
where
    I: IntoIterator<Item = RawPost>,
    I::IntoIter: 'a,
{
    posts
        .into_iter()
        .filter(move |p| any_match(keywords, p.text_fields()))
}

/// Drops posts with a stopphrase in any text field.
pub fn exclude_irrelevant<'a, I>(
    posts: I,
    stopphrases: &'a PhraseMatcher,
) -> impl Iterator<Item = RawPost> + 'a
where
    I: IntoIterator<Item = RawPost>,
    I::IntoIter: 'a,
{
    posts
        .into_iter()
        .filter(move |p| !any_match(stopphrases, p.text_fields()))
}

/// Drops posts whose keywords appear only in the screen name or description.
pub fn exclude_profile_only<'a, I>(
    posts: I,
    keywords: &'a PhraseMatcher,
) -> impl Iterator<Item = RawPost> + 'a
where
    I: IntoIterator<Item = RawPost>,
    I::IntoIter: 'a,
{
    posts
        .into_iter()
        .filter(move |p| any_match(keywords, p.text_fields()) || !p.profile_matches(keywords))
}

/// First occurrence of each id wins. Returns the kept posts and the drop count.
pub fn dedupe<I: IntoIterator<Item = RawPost>>(posts: I) -> (Vec<RawPost>, usize) {
    let mut seen = HashSet::new();
    let mut dropped = 0;
    let kept = posts
        .into_iter()
        .filter(|p| {
            let fresh = seen.insert(p.id.clone());
            if !fresh {
                dropped += 1;
            }
            fresh
        })
        .collect();
    (kept, dropped)
}

/// Per-stage counts for one run of the filter chain.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterReport {
    pub n_malformed: usize,
    pub n_input: usize,
    pub n_keyword_matched: usize,
    pub n_excluded_irrelevant: usize,
    pub n_excluded_profile_only: usize,
    pub n_deduped: usize,
    pub n_retained: usize,
}

impl FilterReport {
    pub fn reconciles(&self) -> bool {
        self.n_keyword_matched
            .checked_sub(self.n_excluded_irrelevant + self.n_excluded_profile_only + self.n_deduped)
            == Some(self.n_retained)
            && self.n_keyword_matched <= self.n_input
    }
}

/// Which stage decided a post's fate, ignoring deduplication.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    NoKeyword,
    Irrelevant,
    ProfileOnly,
    Pass,
}

/// The full keyword -> irrelevant -> profile-only -> dedupe chain.
///
/// The first stage accepts a keyword hit in any field, including the screen
/// name and description, the way a tracking stream delivers posts. The
/// profile-only stage then removes the posts that matched only there, so the
/// retained set equals applying [`keyword_filter`] and the exclusions in turn.
#[derive(Debug, Clone)]
pub struct FilterChain {
    pub keywords: PhraseMatcher,
    pub stopphrases: PhraseMatcher,
}

impl Default for FilterChain {
    fn default() -> Self {
        FilterChain {
            keywords: PhraseMatcher::default_keywords(),
            stopphrases: PhraseMatcher::default_stopphrases(),
        }
    }
}

impl FilterChain {
    pub fn verdict(&self, post: &RawPost) -> Verdict {
        let texts: Vec<String> = post.text_fields().map(normalize_for_match).collect();
        let in_text = texts.iter().any(|t| self.keywords.matches_normalized(t));
        let in_profile = post.profile_matches(&self.keywords);
        if !in_text && !in_profile {
            Verdict::NoKeyword
        } else if texts.iter().any(|t| self.stopphrases.matches_normalized(t)) {
            Verdict::Irrelevant
        } else if !in_text {
            Verdict::ProfileOnly
        } else {
            Verdict::Pass
        }
    }

    /// Runs the chain over a record stream, logging and counting malformed lines.
    pub fn run<I>(&self, records: I) -> (Vec<RawPost>, FilterReport)
    where
        I: IntoIterator<Item = Result<RawPost, Rejected>>,
    {
        let mut report = FilterReport::default();
        let mut seen = HashSet::new();
        let mut kept = Vec::new();
        for rec in records {
            let post = match rec {
                Ok(p) => p,
                Err(rej) => {
                    log::warn!("skipping line {}: {}", rej.line, rej.reason);
                    report.n_malformed += 1;
                    continue;
                }
            };
            report.n_input += 1;
            match self.verdict(&post) {
                Verdict::NoKeyword => continue,
                Verdict::Irrelevant => report.n_excluded_irrelevant += 1,
                Verdict::ProfileOnly => report.n_excluded_profile_only += 1,
                Verdict::Pass => {
                    if seen.insert(post.id.clone()) {
                        kept.push(post);
                    } else {
                        report.n_deduped += 1;
                    }
                }
            }
            report.n_keyword_matched += 1;
        }
        report.n_retained = kept.len();
        (kept, report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn post(id: &str, text: &str) -> RawPost {
        RawPost {
            id: id.into(),
            text: text.into(),
            quoted_text: None,
            extended_text: None,
            screen_name: "jdoe".into(),
            user_description: String::new(),
            user_location: None,
            latitude: None,
            longitude: None,
            created_at: "2020-03-01T12:00:00Z".parse().unwrap(),
            is_retweet: false,
        }
    }

    fn ids(posts: &[RawPost]) -> Vec<&str> {
        posts.iter().map(|p| p.id.as_str()).collect()
    }

    #[test]
    fn keyword_examples() {
        let kw = PhraseMatcher::default_keywords();
        let posts = vec![
            post("1", "New solar panel install today"),
            post("2", "Wind turbines are great"),
            post("3", "SOLAR ENERGY rocks"),
        ];
        let kept: Vec<_> = keyword_filter(posts, &kw).collect();
        assert_eq!(ids(&kept), ["1", "3"]);
    }

    #[test]
    fn keyword_in_quoted_or_extended_text() {
        let kw = PhraseMatcher::default_keywords();
        let mut a = post("a", "look at this");
        a.quoted_text = Some("Solar PV is cheap".into());
        let mut b = post("b", "thread");
        b.extended_text = Some("... and our solar thermal loop".into());
        assert_eq!(keyword_filter(vec![a, b], &kw).count(), 2);
    }

    #[test]
    fn irrelevant_examples() {
        let stop = PhraseMatcher::default_stopphrases();
        let posts = vec![
            post("1", "my solar plexus hurts after yoga"),
            post("2", "solar power is the future"),
            post("3", "Solar eclipse glasses for sale"),
        ];
        let kept: Vec<_> = exclude_irrelevant(posts, &stop).collect();
        assert_eq!(ids(&kept), ["2"]);
    }

    #[test]
    fn profile_only_examples() {
        let kw = PhraseMatcher::default_keywords();
        let mut a = post("a", "great weather today");
        a.screen_name = "SolarPanelPro".into();
        let mut b = post("b", "our solar panel output doubled");
        b.screen_name = "SolarPanelPro".into();
        let c = post("c", "love my solar battery");
        let kept: Vec<_> = exclude_profile_only(vec![a, b, c], &kw).collect();
        assert_eq!(ids(&kept), ["b", "c"]);
    }

    #[test]
    fn dedupe_examples() {
        let (kept, n) = dedupe(vec![post("a", "x"), post("b", "y"), post("a", "z")]);
        assert_eq!(ids(&kept), ["a", "b"]);
        assert_eq!(kept[0].text, "x");
        assert_eq!(n, 1);
        let (kept, n) = dedupe(vec![post("a", "x"), post("b", "y")]);
        assert_eq!(kept.len(), 2);
        assert_eq!(n, 0);
    }

    #[test]
    fn parse_and_reject() {
        let good = r#"{"id":"1","text":"solar power","screen_name":"x","user_description":"","created_at":"2020-03-01T10:00:00Z","is_retweet":true,"lat":39.7,"lon":-105.0}"#;
        let p = parse_post(good).unwrap();
        assert!(p.is_retweet);
        assert_eq!(p.latitude, Some(39.7));
        let numeric = r#"{"id":1234567890123,"text":"t","created_at":"2020-03-01T10:00:00+02:00"}"#;
        let p = parse_post(numeric).unwrap();
        assert_eq!(p.id, "1234567890123");
        assert_eq!(p.created_at.to_rfc3339(), "2020-03-01T08:00:00+00:00");

        for bad in [
            "{not json",
            r#"{"id":"1","created_at":"2020-03-01T10:00:00Z"}"#,
            r#"{"id":"1","text":"   ","created_at":"2020-03-01T10:00:00Z"}"#,
            r#"{"id":"1","text":"t","created_at":"yesterday"}"#,
            r#"{"id":"1","text":"t","created_at":"2020-03-01T10:00:00Z","lat":95.0,"lon":0.0}"#,
            r#"{"id":"1","text":"t","created_at":"2020-03-01T10:00:00Z","lat":45.0}"#,
            r#"{"id":[1],"text":"t","created_at":"2020-03-01T10:00:00Z"}"#,
        ] {
            assert!(parse_post(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn stream_survives_bad_lines() {
        let input = "{\"id\":\"1\",\"text\":\"solar energy\",\"created_at\":\"2020-01-01T00:00:00Z\"}\n\
                     garbage\n\n\
                     {\"id\":\"2\",\"text\":\"solar energy\",\"created_at\":\"2020-01-01T00:00:00Z\"}\n";
        let recs: Vec<_> = read_jsonl(input.as_bytes()).collect();
        assert_eq!(recs.len(), 3);
        assert_eq!(recs[1].as_ref().unwrap_err().line, 2);
        let (kept, report) = FilterChain::default().run(recs);
        assert_eq!(kept.len(), 2);
        assert_eq!(report.n_malformed, 1);
        assert!(report.reconciles());
    }

    #[test]
    fn chain_attributes_each_drop_once() {
        let mut profile_only = post("p", "nice day");
        profile_only.user_description = "solar energy fan".into();
        let mut profile_and_stop = post("q", "eclipse tonight");
        profile_and_stop.user_description = "solar energy fan".into();
        let posts = vec![
            post("k", "solar energy now"),
            post("n", "nothing relevant"),
            post("i", "solar power and Pokemon"),
            profile_only,
            profile_and_stop,
            post("k", "solar energy again"),
        ];
        let (kept, r) = FilterChain::default().run(posts.into_iter().map(Ok));
        assert_eq!(ids(&kept), ["k"]);
        assert_eq!(
            r,
            FilterReport {
                n_malformed: 0,
                n_input: 6,
                n_keyword_matched: 5,
                n_excluded_irrelevant: 2,
                n_excluded_profile_only: 1,
                n_deduped: 1,
                n_retained: 1,
            }
        );
        assert!(r.reconciles());
    }
}
