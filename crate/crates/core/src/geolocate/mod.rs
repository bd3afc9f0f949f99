//! Resolution of posts to U.S. states from coordinates or free-text profile
//! locations, backed by a small CSV gazetteer.
//!
//! Coordinates are tried first. A point inside exactly one state box resolves
//! to that state; overlapping boxes are broken by the nearest state centroid.
//! Profile strings are tried in order: `City, ST` / `City, StateName`, a state
//! name or abbreviation anywhere in the string, a city-table match, and finally
//! a foreign place token.

mod gazetteer;
mod states;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

pub use gazetteer::{BoundingBox, Gazetteer, GazetteerError, StateEntry};
pub use states::{Region, StateCode};

use crate::ingest::RawPost;

/// Two-letter codes that double as common English words; they only count when
/// written as `City, ST` or uppercase next to a comma.
const AMBIGUOUS_CODES: [&str; 6] = ["IN", "OR", "ME", "OK", "HI", "DE"];

/// Trailing tokens that say "somewhere in the U.S." without naming a state.
const COUNTRY_SUFFIXES: [&str; 7] = [
    "usa",
    "us",
    "u s a",
    "united states",
    "united states of america",
    "america",
    "the united states",
];

pub(crate) const FOREIGN_TOKENS: &[&str] = &[
    "canada",
    "toronto",
    "vancouver",
    "montreal",
    "ottawa",
    "calgary",
    "edmonton",
    "ontario",
    "quebec",
    "british columbia",
    "alberta",
    "uk",
    "united kingdom",
    "england",
    "london",
    "manchester",
    "scotland",
    "edinburgh",
    "glasgow",
    "wales",
    "ireland",
    "dublin",
    "australia",
    "sydney",
    "melbourne",
    "brisbane",
    "perth",
    "new zealand",
    "auckland",
    "india",
    "mumbai",
    "delhi",
    "new delhi",
    "bangalore",
    "bengaluru",
    "chennai",
    "hyderabad",
    "kolkata",
    "pakistan",
    "karachi",
    "lahore",
    "nigeria",
    "lagos",
    "abuja",
    "ghana",
    "accra",
    "kenya",
    "nairobi",
    "south africa",
    "johannesburg",
    "cape town",
    "germany",
    "deutschland",
    "berlin",
    "munich",
    "france",
    "paris",
    "spain",
    "madrid",
    "barcelona",
    "italy",
    "rome",
    "milan",
    "netherlands",
    "amsterdam",
    "belgium",
    "brussels",
    "switzerland",
    "zurich",
    "sweden",
    "stockholm",
    "norway",
    "oslo",
    "denmark",
    "copenhagen",
    "finland",
    "poland",
    "portugal",
    "lisbon",
    "greece",
    "turkey",
    "istanbul",
    "israel",
    "uae",
    "dubai",
    "abu dhabi",
    "saudi arabia",
    "qatar",
    "egypt",
    "cairo",
    "morocco",
    "japan",
    "tokyo",
    "osaka",
    "china",
    "beijing",
    "shanghai",
    "hong kong",
    "taiwan",
    "korea",
    "seoul",
    "singapore",
    "malaysia",
    "kuala lumpur",
    "indonesia",
    "jakarta",
    "philippines",
    "manila",
    "thailand",
    "bangkok",
    "vietnam",
    "mexico",
    "mexico city",
    "brazil",
    "sao paulo",
    "rio de janeiro",
    "argentina",
    "buenos aires",
    "chile",
    "santiago",
    "colombia",
    "bogota",
    "peru",
    "lima",
    "puerto rico",
];

/// Lowercased, NFC, periods dropped, other punctuation as spaces, whitespace collapsed.
pub fn normalize_place(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut pending_space = false;
    for c in s.nfc() {
        if c == '.' || c == '\'' || c == '\u{2019}' {
            continue;
        }
        if c.is_alphanumeric() {
            if pending_space && !out.is_empty() {
                out.push(' ');
            }
            pending_space = false;
            out.extend(c.to_lowercase());
        } else {
            pending_space = true;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeoOutcome {
    State(StateCode),
    NonUs,
    Unknown,
}

impl GeoOutcome {
    pub fn state(self) -> Option<StateCode> {
        match self {
            GeoOutcome::State(s) => Some(s),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeoMethod {
    Coordinates,
    ProfileExact,
    ProfileCity,
    None,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeoResolution {
    pub post_id: String,
    pub outcome: GeoOutcome,
    pub method: GeoMethod,
}

impl Gazetteer {
    /// Resolves a location. Coordinates that land in a state box win; otherwise
    /// the profile string is consulted. Coordinates outside every U.S. envelope
    /// make the post `NonUs` unless the profile names a state.
    pub fn resolve(
        &self,
        location: Option<&str>,
        coords: Option<(f64, f64)>,
    ) -> (GeoOutcome, GeoMethod) {
        let mut coord_outcome = None;
        if let Some((lat, lon)) = coords {
            if lat.is_finite()
                && lon.is_finite()
                && (-90.0..=90.0).contains(&lat)
                && (-180.0..=180.0).contains(&lon)
            {
                if let Some(state) = self.state_at(lat, lon) {
                    return (GeoOutcome::State(state), GeoMethod::Coordinates);
                }
                coord_outcome = Some(if self.in_us_extent(lat, lon) {
                    GeoOutcome::Unknown
                } else {
                    GeoOutcome::NonUs
                });
            }
        }
        let profile = location
            .map(|l| self.resolve_profile(l))
            .unwrap_or((GeoOutcome::Unknown, GeoMethod::None));
        if profile.0.state().is_some() {
            return profile;
        }
        match coord_outcome {
            Some(GeoOutcome::NonUs) => (GeoOutcome::NonUs, GeoMethod::None),
            _ => profile,
        }
    }

    pub fn resolve_post(&self, post: &RawPost) -> GeoResolution {
        let coords = match (post.latitude, post.longitude) {
            (Some(lat), Some(lon)) => Some((lat, lon)),
            _ => None,
        };
        let (outcome, method) = self.resolve(post.user_location.as_deref(), coords);
        GeoResolution {
            post_id: post.id.clone(),
            outcome,
            method,
        }
    }

    /// Profile-string resolution only.
    pub fn resolve_profile(&self, raw: &str) -> (GeoOutcome, GeoMethod) {
        if let Some(state) = self.city_state_pattern(raw) {
            return (GeoOutcome::State(state), GeoMethod::ProfileExact);
        }
        let words: Vec<String> = normalize_place(raw)
            .split(' ')
            .filter(|w| !w.is_empty())
            .map(str::to_string)
            .collect();
        if let Some(state) = self.state_mention(raw, &words) {
            return (GeoOutcome::State(state), GeoMethod::ProfileExact);
        }
        if let Some(state) = self.city_mention(&words) {
            return (GeoOutcome::State(state), GeoMethod::ProfileCity);
        }
        let foreign = phrase_spans(&words, self.max_phrase_words, |p| self.foreign.contains(p));
        if !foreign.is_empty() {
            return (GeoOutcome::NonUs, GeoMethod::None);
        }
        (GeoOutcome::Unknown, GeoMethod::None)
    }

    /// `City, ST` or `City, State Name`, ignoring a trailing country suffix or ZIP.
    fn city_state_pattern(&self, raw: &str) -> Option<StateCode> {
        let mut parts: Vec<&str> = raw.split(',').map(str::trim).collect();
        while let Some(last) = parts.last() {
            let n = normalize_place(last);
            if n.is_empty() || COUNTRY_SUFFIXES.contains(&n.as_str()) {
                parts.pop();
            } else {
                break;
            }
        }
        if parts.len() < 2
            || parts[..parts.len() - 1]
                .iter()
                .all(|p| normalize_place(p).is_empty())
        {
            return None;
        }
        let last = parts[parts.len() - 1];
        let without_zip = last
            .trim_end_matches(|c: char| c.is_ascii_digit() || c == '-' || c.is_whitespace())
            .trim();
        let compact: String = without_zip.chars().filter(|c| *c != '.').collect();
        if compact.len() == 2 && compact.chars().all(|c| c.is_ascii_alphabetic()) {
            if let Some(code) = StateCode::from_code(&compact) {
                return Some(code);
            }
        }
        self.names.get(&normalize_place(without_zip)).copied()
    }

    /// A single state named (or abbreviated) somewhere in the string.
    fn state_mention(&self, raw: &str, words: &[String]) -> Option<StateCode> {
        let mut found = BTreeSet::new();
        let spans = phrase_spans(words, self.max_phrase_words, |p| self.names.contains_key(p));
        for (start, len) in &spans {
            found.insert(self.names[&words[*start..start + len].join(" ")]);
        }
        for token in abbreviation_tokens(raw) {
            let Some(code) = StateCode::from_code(&token.text) else {
                continue;
            };
            if AMBIGUOUS_CODES.contains(&code.code()) && !token.comma_adjacent {
                continue;
            }
            // A token already covered by a longer name match is not a second mention.
            let covered = spans.iter().any(|(s, l)| {
                words[*s..s + l]
                    .iter()
                    .any(|w| w.eq_ignore_ascii_case(&token.text))
            });
            if !covered {
                found.insert(code);
            }
        }
        if found.len() == 1 {
            found.into_iter().next()
        } else {
            None
        }
    }

    fn city_mention(&self, words: &[String]) -> Option<StateCode> {
        phrase_spans(words, self.max_phrase_words, |p| {
            self.cities.contains_key(p)
        })
        .into_iter()
        .flat_map(|(s, l)| self.cities[&words[s..s + l].join(" ")].iter().copied())
        .min_by_key(|&(code, rank)| (rank, code))
        .map(|(code, _)| code)
    }
}

/// Greedy left-to-right, longest-first phrase matching over word n-grams.
fn phrase_spans(
    words: &[String],
    max_len: usize,
    matches: impl Fn(&str) -> bool,
) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut i = 0;
    while i < words.len() {
        let longest = max_len.min(words.len() - i);
        let hit = (1..=longest)
            .rev()
            .find(|&len| matches(&words[i..i + len].join(" ")));
        match hit {
            Some(len) => {
                spans.push((i, len));
                i += len;
            }
            None => i += 1,
        }
    }
    spans
}

struct AbbrevToken {
    text: String,
    comma_adjacent: bool,
}

/// Uppercase two-letter ASCII tokens, periods removed ("N.Y." -> "NY").
fn abbreviation_tokens(raw: &str) -> Vec<AbbrevToken> {
    let chars: Vec<char> = raw.chars().filter(|c| *c != '.').collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if !chars[i].is_alphanumeric() {
            i += 1;
            continue;
        }
        let start = i;
        while i < chars.len() && chars[i].is_alphanumeric() {
            i += 1;
        }
        let token: String = chars[start..i].iter().collect();
        if token.len() == 2 && token.chars().all(|c| c.is_ascii_uppercase()) {
            let before = chars[..start].iter().rev().find(|c| !c.is_whitespace());
            let after = chars[i..].iter().find(|c| !c.is_whitespace());
            out.push(AbbrevToken {
                text: token,
                comma_adjacent: before == Some(&',') || after == Some(&','),
            });
        }
    }
    out
}
