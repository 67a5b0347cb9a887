//! Line-delimited JSON ingestion for every external corpus.
//!
//! Each file holds one JSON object per line. Loading validates every record,
//! keeps line numbers for error messages and rejects duplicate keys. Unknown
//! fields only produce warnings so exporters can add fields without breaking
//! older readers.

mod loader;
mod normalize;
mod records;

pub use loader::{load_corpus, read_corpus, write_corpus, Corpus, IngestError, LoadWarning};
pub use normalize::normalize_name;
pub use records::{
    AuditRecord, AuditSample, MediaDate, Record, SearchResult, SearchResultPage, SocialPresence, StartupRecord,
    TextItem, TextSource, TweetStat,
};
