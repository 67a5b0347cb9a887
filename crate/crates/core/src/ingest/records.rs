use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::dates::{serde_date, serde_opt_date, YearMonth};

/// One line-delimited record kind.
///
/// `FIELDS` lists every field name accepted on input; anything else is
/// reported as a warning and dropped. `REQUIRED` fields must be present and
/// non-null.
pub trait Record: Serialize + for<'de> Deserialize<'de> + Sized {
    const KIND: &'static str;
    const FIELDS: &'static [&'static str];
    const REQUIRED: &'static [&'static str];

    /// Uniqueness key within a corpus, if the kind has one.
    fn key(&self) -> Option<String>;

    fn validate(&self) -> Result<(), String>;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MediaDate {
    pub source: String,
    #[serde(with = "serde_date")]
    pub date: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StartupRecord {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub aliases: Vec<String>,
    #[serde(default)]
    pub twitter_handle: Option<String>,
    #[serde(default)]
    pub website_domain: Option<String>,
    #[serde(default, with = "serde_opt_date")]
    pub registry_creation_date: Option<NaiveDate>,
    #[serde(default)]
    pub media_creation_dates: Vec<MediaDate>,
    #[serde(default)]
    pub employee_count: Option<u64>,
    #[serde(default)]
    pub office_count: Option<u64>,
    #[serde(default)]
    pub team_page_people: Option<u64>,
    #[serde(default)]
    pub address_page_text: Option<String>,
}

impl StartupRecord {
    pub fn new(id: impl Into<String>, name: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            name: name.into(),
            aliases: Vec::new(),
            twitter_handle: None,
            website_domain: None,
            registry_creation_date: None,
            media_creation_dates: Vec::new(),
            employee_count: None,
            office_count: None,
            team_page_people: None,
            address_page_text: None,
        }
    }
}

impl Record for StartupRecord {
    const KIND: &'static str = "startups";
    const FIELDS: &'static [&'static str] = &[
        "id",
        "name",
        "aliases",
        "twitter_handle",
        "website_domain",
        "registry_creation_date",
        "media_creation_dates",
        "employee_count",
        "office_count",
        "team_page_people",
        "address_page_text",
    ];
    const REQUIRED: &'static [&'static str] = &["id", "name"];

    fn key(&self) -> Option<String> {
        Some(self.id.clone())
    }

    fn validate(&self) -> Result<(), String> {
        if self.id.trim().is_empty() {
            return Err("id required".into());
        }
        if self.name.trim().is_empty() {
            return Err("name required".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TextSource {
    NewsHeadline,
    Tweet,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextItem {
    pub id: String,
    pub source: TextSource,
    #[serde(with = "serde_date")]
    pub published_at: NaiveDate,
    pub text: String,
    #[serde(default)]
    pub author_handle: Option<String>,
    #[serde(default)]
    pub language: Option<String>,
}

impl Record for TextItem {
    const KIND: &'static str = "texts";
    const FIELDS: &'static [&'static str] = &["id", "source", "published_at", "text", "author_handle", "language"];
    const REQUIRED: &'static [&'static str] = &["id", "source", "published_at", "text"];

    fn key(&self) -> Option<String> {
        Some(self.id.clone())
    }

    fn validate(&self) -> Result<(), String> {
        if self.text.trim().is_empty() {
            return Err("text required".into());
        }
        if let Some(lang) = &self.language {
            if lang.len() != 2 || !lang.chars().all(|c| c.is_ascii_lowercase()) {
                return Err(format!("language {lang:?} is not an ISO-639-1 code"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TweetStat {
    pub startup_id: String,
    pub month: YearMonth,
    #[serde(default)]
    pub tweets_posted: u64,
    #[serde(default)]
    pub likes_mean: f64,
    #[serde(default)]
    pub likes_max: f64,
    #[serde(default)]
    pub retweets_mean: f64,
    #[serde(default)]
    pub retweets_max: f64,
    #[serde(default)]
    pub modal_language: Option<String>,
    #[serde(default)]
    pub hashtags: BTreeMap<String, u64>,
    #[serde(default)]
    pub distinct_mentioners: u64,
}

impl Record for TweetStat {
    const KIND: &'static str = "tweet_stats";
    const FIELDS: &'static [&'static str] = &[
        "startup_id",
        "month",
        "tweets_posted",
        "likes_mean",
        "likes_max",
        "retweets_mean",
        "retweets_max",
        "modal_language",
        "hashtags",
        "distinct_mentioners",
    ];
    const REQUIRED: &'static [&'static str] = &["startup_id", "month"];

    fn key(&self) -> Option<String> {
        Some(format!("{}@{}", self.startup_id, self.month))
    }

    fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("likes_mean", self.likes_mean),
            ("likes_max", self.likes_max),
            ("retweets_mean", self.retweets_mean),
            ("retweets_max", self.retweets_max),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(format!("{name} must be a non-negative number"));
            }
        }
        if self.likes_max < self.likes_mean {
            return Err("likes_max below likes_mean".into());
        }
        if self.retweets_max < self.retweets_mean {
            return Err("retweets_max below retweets_mean".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchResult {
    pub rank: u8,
    pub domain: String,
    pub snippet: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchResultPage {
    pub startup_id: String,
    /// Inclusive `(start, end)` of the query's date restriction.
    pub query_date_range: (NaiveDate, NaiveDate),
    #[serde(default)]
    pub total_results_reported: u64,
    #[serde(default)]
    pub results: Vec<SearchResult>,
}

impl Record for SearchResultPage {
    const KIND: &'static str = "search_pages";
    const FIELDS: &'static [&'static str] = &["startup_id", "query_date_range", "total_results_reported", "results"];
    const REQUIRED: &'static [&'static str] = &["startup_id", "query_date_range"];

    fn key(&self) -> Option<String> {
        let (s, e) = self.query_date_range;
        Some(format!("{}@{}..{}", self.startup_id, s, e))
    }

    fn validate(&self) -> Result<(), String> {
        let (start, end) = self.query_date_range;
        if start > end {
            return Err(format!("query_date_range start {start} after end {end}"));
        }
        if self.results.len() > 10 {
            return Err(format!("{} results, at most 10 allowed", self.results.len()));
        }
        let mut seen = [false; 11];
        for r in &self.results {
            if !(1..=10).contains(&r.rank) {
                return Err(format!("rank {} outside 1..10", r.rank));
            }
            if std::mem::replace(&mut seen[r.rank as usize], true) {
                return Err(format!("duplicate rank {}", r.rank));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SocialPresence {
    pub startup_id: String,
    #[serde(default)]
    pub has_facebook: bool,
    #[serde(default)]
    pub has_instagram: bool,
    #[serde(default)]
    pub has_linkedin: bool,
    #[serde(default)]
    pub has_youtube: bool,
    #[serde(default)]
    pub has_twitter: bool,
    #[serde(default)]
    pub has_blog: bool,
    #[serde(default)]
    pub linkedin_refs_on_team_page: u64,
    #[serde(default)]
    pub blog_entries_last_year: u64,
}

impl Record for SocialPresence {
    const KIND: &'static str = "social";
    const FIELDS: &'static [&'static str] = &[
        "startup_id",
        "has_facebook",
        "has_instagram",
        "has_linkedin",
        "has_youtube",
        "has_twitter",
        "has_blog",
        "linkedin_refs_on_team_page",
        "blog_entries_last_year",
    ];
    const REQUIRED: &'static [&'static str] = &["startup_id"];

    fn key(&self) -> Option<String> {
        Some(self.startup_id.clone())
    }

    fn validate(&self) -> Result<(), String> {
        Ok(())
    }
}

/// Which side of the labeling an audit sample was drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditSample {
    /// A detected funding event that was checked by hand.
    LabeledPositive,
    /// A startup with no detected event in the audited period.
    Unlabeled,
}

/// One manual audit verdict: whether the sampled item truly raised money.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub id: String,
    pub sample: AuditSample,
    pub truly_funded: bool,
}

impl Record for AuditRecord {
    const KIND: &'static str = "audits";
    const FIELDS: &'static [&'static str] = &["id", "sample", "truly_funded"];
    const REQUIRED: &'static [&'static str] = &["id", "sample", "truly_funded"];

    fn key(&self) -> Option<String> {
        Some(self.id.clone())
    }

    fn validate(&self) -> Result<(), String> {
        Ok(())
    }
}
