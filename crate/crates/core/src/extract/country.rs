use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::OnceLock;

use chrono::NaiveDate;
use regex::Regex;

use crate::ingest::StartupRecord;

const DEFAULT_TABLE: &str = include_str!("../../data/dialing_codes.tsv");

/// Default search window around a phone number, in characters.
pub const DEFAULT_COUNTRY_WINDOW: usize = 200;

/// Dialing codes and country names keyed by ISO 3166 alpha-2 code.
#[derive(Debug, Clone)]
pub struct CountryTable {
    dialing: HashMap<String, String>,
    names: Vec<(String, String)>,
}

impl Default for CountryTable {
    fn default() -> Self {
        Self::parse(DEFAULT_TABLE).expect("bundled dialing-code table parses")
    }
}

fn phone_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\+\s?\(?\d[\d\s().\-]{5,}\d").expect("phone regex"))
}

impl CountryTable {
    /// Tab-separated `code<TAB>alpha2<TAB>name,name,...`, `#` comments.
    pub fn parse(source: &str) -> Result<Self, String> {
        let mut dialing = HashMap::new();
        let mut names = Vec::new();
        for (n, line) in source.lines().enumerate() {
            let line = line.trim_end();
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() < 2 {
                return Err(format!("dialing table line {}: expected code and country", n + 1));
            }
            let code = cols[0].trim();
            if code.is_empty() || !code.chars().all(|c| c.is_ascii_digit()) {
                return Err(format!("dialing table line {}: bad code {code:?}", n + 1));
            }
            let alpha2 = cols[1].trim().to_ascii_uppercase();
            dialing.insert(code.to_string(), alpha2.clone());
            if let Some(list) = cols.get(2) {
                for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                    names.push((name.to_lowercase(), alpha2.clone()));
                }
            }
        }
        Ok(Self { dialing, names })
    }

    /// Countries known to the table, sorted.
    pub fn countries(&self) -> Vec<String> {
        let set: BTreeSet<&String> = self.dialing.values().collect();
        set.into_iter().cloned().collect()
    }

    fn country_for_digits(&self, digits: &str) -> Option<&str> {
        (1..=3.min(digits.len())).rev().find_map(|len| self.dialing.get(&digits[..len]).map(String::as_str))
    }

    fn names_in(&self, window: &str) -> BTreeSet<&str> {
        let hay = window.to_lowercase();
        let mut found = BTreeSet::new();
        for (name, alpha2) in &self.names {
            let mut from = 0;
            while let Some(pos) = hay[from..].find(name.as_str()) {
                let start = from + pos;
                let end = start + name.len();
                let before_ok = !hay[..start].chars().next_back().is_some_and(char::is_alphanumeric);
                let after_ok = !hay[end..].chars().next().is_some_and(char::is_alphanumeric);
                if before_ok && after_ok {
                    found.insert(alpha2.as_str());
                    break;
                }
                from = start + name.chars().next().map_or(1, char::len_utf8);
            }
        }
        found
    }
}

/// Country of origin from an address page. Every phone number votes once for
/// each distinct country among its dialing code and the country names found
/// within `window` characters on either side. The modal country wins; ties
/// and texts without phone numbers give `None`.
pub fn infer_country(address_text: &str, window: usize, table: &CountryTable) -> Option<String> {
    assert!(window > 0, "country window must be positive");
    let char_starts: Vec<usize> = address_text.char_indices().map(|(i, _)| i).collect();
    let char_at = |byte: usize| char_starts.partition_point(|&b| b < byte);
    let byte_at = |ch: usize| char_starts.get(ch).copied().unwrap_or(address_text.len());

    let mut votes: BTreeMap<String, usize> = BTreeMap::new();
    for m in phone_regex().find_iter(address_text) {
        let digits: String = m.as_str().chars().filter(char::is_ascii_digit).collect();
        let mut candidates: BTreeSet<&str> = BTreeSet::new();
        if let Some(c) = table.country_for_digits(&digits) {
            candidates.insert(c);
        }
        let lo = byte_at(char_at(m.start()).saturating_sub(window));
        let hi = byte_at(char_at(m.end()) + window);
        candidates.extend(table.names_in(&address_text[lo..hi]));
        for c in candidates {
            *votes.entry(c.to_string()).or_default() += 1;
        }
    }
    let best = votes.values().copied().max()?;
    let mut winners = votes.into_iter().filter(|(_, v)| *v == best);
    let first = winners.next()?;
    winners.next().is_none().then_some(first.0)
}

/// The oldest known creation date across the registry and media accounts.
pub fn infer_creation_date(record: &StartupRecord) -> Option<NaiveDate> {
    record.registry_creation_date.into_iter().chain(record.media_creation_dates.iter().map(|m| m.date)).min()
}
