use std::collections::BTreeMap;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lexicon::VerbLexicon;
use super::mentions::{match_tokens, split_sentences, tokenize, StartupIndex, TokenKind};
use super::money::{parse_money, Currency, MoneyAmount};
use crate::dates::serde_date;
use crate::ingest::{Record, TextItem};

/// Linkage window for merging candidates into one funding event, in days.
pub const MERGE_WINDOW_DAYS: i64 = 92;

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateEvent {
    pub startup_id: String,
    pub amount: MoneyAmount,
    pub date: NaiveDate,
    pub source_item_id: String,
    pub verb: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "EventRow", try_from = "EventRow")]
pub struct FundingEvent {
    pub startup_id: String,
    pub amount: MoneyAmount,
    /// Date of the earliest contributing candidate.
    pub date: NaiveDate,
    pub source_item_ids: Vec<String>,
}

/// On-disk shape of one `events.jsonl` line.
#[derive(Serialize, Deserialize)]
struct EventRow {
    startup_id: String,
    currency: Currency,
    amount: f64,
    #[serde(with = "serde_date")]
    date: NaiveDate,
    sources: Vec<String>,
}

impl From<FundingEvent> for EventRow {
    fn from(e: FundingEvent) -> Self {
        EventRow {
            startup_id: e.startup_id,
            currency: e.amount.currency,
            amount: e.amount.value,
            date: e.date,
            sources: e.source_item_ids,
        }
    }
}

impl TryFrom<EventRow> for FundingEvent {
    type Error = String;

    fn try_from(r: EventRow) -> Result<Self, String> {
        if r.sources.is_empty() {
            return Err("sources must be non-empty".into());
        }
        if !(r.amount.is_finite() && r.amount > 0.0) {
            return Err(format!("amount must be positive, got {}", r.amount));
        }
        Ok(FundingEvent {
            startup_id: r.startup_id,
            amount: MoneyAmount::new(r.currency, r.amount),
            date: r.date,
            source_item_ids: r.sources,
        })
    }
}

impl Record for FundingEvent {
    const KIND: &'static str = "events";
    const FIELDS: &'static [&'static str] = &["startup_id", "currency", "amount", "date", "sources"];
    const REQUIRED: &'static [&'static str] = &["startup_id", "currency", "amount", "date", "sources"];

    fn key(&self) -> Option<String> {
        Some(format!("{}@{}", self.startup_id, self.date))
    }

    fn validate(&self) -> Result<(), String> {
        Ok(())
    }
}

/// Candidate funding events in one text item. Within a sentence, a startup
/// mention and a money amount form a candidate when a token strictly between
/// them (in either order) stems to a lexicon verb.
pub fn detect_candidates(item: &TextItem, index: &StartupIndex, lexicon: &VerbLexicon) -> Vec<CandidateEvent> {
    let mut out: Vec<CandidateEvent> = Vec::new();
    for range in split_sentences(&item.text) {
        let sentence = &item.text[range];
        let amounts = parse_money(sentence);
        if amounts.is_empty() {
            continue;
        }
        let tokens = tokenize(sentence);
        let mentions = match_tokens(&tokens, index);
        for mention in &mentions {
            for (amount, span) in &amounts {
                let gap = if mention.span.end <= span.start {
                    mention.span.end..span.start
                } else if span.end <= mention.span.start {
                    span.end..mention.span.start
                } else {
                    continue;
                };
                let verb = tokens
                    .iter()
                    .filter(|t| t.kind == TokenKind::Word && t.span.start >= gap.start && t.span.end <= gap.end)
                    .find_map(|t| lexicon.stem(&t.key));
                let Some(verb) = verb else { continue };
                let duplicate = out.iter().any(|c| c.startup_id == mention.startup_id && c.amount == *amount);
                if !duplicate {
                    out.push(CandidateEvent {
                        startup_id: mention.startup_id.clone(),
                        amount: amount.clone(),
                        date: item.published_at,
                        source_item_id: item.id.clone(),
                        verb: verb.to_string(),
                    });
                }
            }
        }
    }
    out
}

/// Merge candidates into funding events, per startup. Candidates are taken
/// in date order; an event opens at its earliest candidate and absorbs every
/// later candidate at most [`MERGE_WINDOW_DAYS`] after that opening date, so
/// no two contributors of one event are further apart than the window.
///
/// The merged amount is the largest contributing amount, sources are the
/// sorted distinct item ids, and the output is sorted by `(startup_id, date)`.
pub fn merge_candidates(candidates: &[CandidateEvent]) -> Vec<FundingEvent> {
    let mut by_startup: BTreeMap<&str, Vec<&CandidateEvent>> = BTreeMap::new();
    for c in candidates {
        by_startup.entry(c.startup_id.as_str()).or_default().push(c);
    }
    let mut events = Vec::new();
    for (startup_id, mut group) in by_startup {
        group.sort_by(|a, b| {
            a.date
                .cmp(&b.date)
                .then_with(|| a.source_item_id.cmp(&b.source_item_id))
                .then_with(|| a.amount.value.total_cmp(&b.amount.value))
        });
        let mut i = 0;
        while i < group.len() {
            let open = group[i].date;
            let mut j = i;
            while j < group.len() && (group[j].date - open).num_days() <= MERGE_WINDOW_DAYS {
                j += 1;
            }
            let members = &group[i..j];
            let amount = members
                .iter()
                .map(|c| &c.amount)
                .reduce(|best, a| if a.value > best.value { a } else { best })
                .expect("non-empty cluster")
                .clone();
            let mut sources: Vec<String> = members.iter().map(|c| c.source_item_id.clone()).collect();
            sources.sort();
            sources.dedup();
            events.push(FundingEvent {
                startup_id: startup_id.to_string(),
                amount,
                date: open,
                source_item_ids: sources,
            });
            i = j;
        }
    }
    events
}

/// Convenience: treat existing events as candidates again (one per event).
pub fn events_as_candidates(events: &[FundingEvent]) -> Vec<CandidateEvent> {
    events
        .iter()
        .map(|e| CandidateEvent {
            startup_id: e.startup_id.clone(),
            amount: e.amount.clone(),
            date: e.date,
            source_item_id: e.source_item_ids[0].clone(),
            verb: String::new(),
        })
        .collect()
}

/// Run detection over a corpus (in parallel, order-preserving) and merge.
pub fn extract_events(items: &[TextItem], index: &StartupIndex, lexicon: &VerbLexicon) -> Vec<FundingEvent> {
    let candidates: Vec<CandidateEvent> =
        items.par_iter().flat_map_iter(|item| detect_candidates(item, index, lexicon)).collect();
    merge_candidates(&candidates)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dates::parse_date;
    use crate::ingest::{StartupRecord, TextSource};

    fn d(s: &str) -> NaiveDate {
        parse_date(s).unwrap()
    }

    fn item(id: &str, date: &str, text: &str) -> TextItem {
        TextItem {
            id: id.into(),
            source: TextSource::NewsHeadline,
            published_at: d(date),
            text: text.into(),
            author_handle: None,
            language: None,
        }
    }

    fn acme_index() -> StartupIndex {
        StartupIndex::build(&[StartupRecord::new("acme", "Acme")])
    }

    fn cand(date: &str, value: f64, src: &str) -> CandidateEvent {
        CandidateEvent {
            startup_id: "acme".into(),
            amount: MoneyAmount::new(Currency::Usd, value),
            date: d(date),
            source_item_id: src.into(),
            verb: "raise".into(),
        }
    }

    #[test]
    fn raise_headline() {
        let c = detect_candidates(
            &item("t1", "2024-01-10", "Acme raises $5M in seed round"),
            &acme_index(),
            &VerbLexicon::default(),
        );
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].startup_id, "acme");
        assert_eq!(c[0].amount, MoneyAmount::new(Currency::Usd, 5e6));
        assert_eq!(c[0].verb, "raise");
        assert_eq!(c[0].date, d("2024-01-10"));
    }

    #[test]
    fn announce_grant() {
        let c = detect_candidates(
            &item("t", "2024-01-10", "Acme announced a $2M grant"),
            &acme_index(),
            &VerbLexicon::default(),
        );
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].verb, "announce");
    }

    #[test]
    fn verb_must_be_between() {
        let lex = VerbLexicon::default();
        assert!(detect_candidates(&item("t", "2024-01-10", "Acme and $5M are unrelated words"), &acme_index(), &lex)
            .is_empty());
        // verb outside the mention/amount gap
        assert!(detect_candidates(&item("t", "2024-01-10", "Acme: $5M raised"), &acme_index(), &lex).is_empty());
        // amount before mention
        assert_eq!(detect_candidates(&item("t", "2024-01-10", "$5M secured by Acme"), &acme_index(), &lex).len(), 1);
    }

    #[test]
    fn sentence_boundary_blocks_pairing() {
        let c = detect_candidates(
            &item("t", "2024-01-10", "Acme hires a CTO. Beta raises $5M."),
            &acme_index(),
            &VerbLexicon::default(),
        );
        assert!(c.is_empty());
    }

    #[test]
    fn merge_within_window() {
        let ev = merge_candidates(&[cand("2024-01-10", 5e6, "a"), cand("2024-03-01", 5.2e6, "b")]);
        assert_eq!(ev.len(), 1);
        assert_eq!(ev[0].date, d("2024-01-10"));
        assert_eq!(ev[0].amount.value, 5.2e6);
        assert_eq!(ev[0].source_item_ids, vec!["a", "b"]);
    }

    #[test]
    fn merge_splits_beyond_window() {
        assert_eq!(merge_candidates(&[cand("2024-01-10", 5e6, "a"), cand("2024-07-01", 5e6, "b")]).len(), 2);
        assert!(merge_candidates(&[]).is_empty());
    }

    #[test]
    fn merge_window_boundaries() {
        let base = d("2024-01-01");
        for (gap, expected) in [(91, 1), (92, 1), (93, 2)] {
            let later = (base + chrono::Duration::days(gap)).to_string();
            let ev = merge_candidates(&[cand("2024-01-01", 1e6, "a"), cand(&later, 1e6, "b")]);
            assert_eq!(ev.len(), expected, "gap {gap}");
        }
    }

    #[test]
    fn chained_candidates_respect_pairwise_bound() {
        let ev = merge_candidates(&[
            cand("2024-01-01", 1e6, "a"),
            cand("2024-03-01", 1e6, "b"),
            cand("2024-05-01", 1e6, "c"),
        ]);
        assert_eq!(ev.len(), 2);
        assert_eq!(ev[1].date, d("2024-05-01"));
    }

    #[test]
    fn event_row_roundtrip() {
        let ev = merge_candidates(&[cand("2024-01-10", 5e6, "a")]);
        let line = serde_json::to_string(&ev[0]).unwrap();
        assert_eq!(
            line,
            r#"{"startup_id":"acme","currency":"USD","amount":5000000.0,"date":"2024-01-10","sources":["a"]}"#
        );
        let back: FundingEvent = serde_json::from_str(&line).unwrap();
        assert_eq!(back, ev[0]);
    }
}
