//! Rule-based parsers over the ingested text: funding-event detection,
//! country of origin from address pages, and creation-date inference.

mod country;
mod events;
mod lexicon;
mod mentions;
mod money;

pub use country::{infer_country, infer_creation_date, CountryTable, DEFAULT_COUNTRY_WINDOW};
pub use events::{
    detect_candidates, events_as_candidates, extract_events, merge_candidates, CandidateEvent, FundingEvent,
    MERGE_WINDOW_DAYS,
};
pub use lexicon::VerbLexicon;
pub use mentions::{match_startups, split_sentences, tokenize, Mention, StartupIndex, Token, TokenKind};
pub use money::{parse_money, Currency, MoneyAmount};
