use std::collections::HashMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::blocks::{financial_features, name_variants, twitter_features, web_features};
use super::schema::{FeatureSchema, FINANCIAL, GENERAL_NUMERIC, MONTHLY, SOCIAL_COUNTS, SOCIAL_FLAGS};
use super::FeaturizeError;
use crate::dates::days_between;
use crate::extract::{infer_country, CountryTable, FundingEvent};
use crate::ingest::{SearchResultPage, SocialPresence, StartupRecord, TweetStat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Positive,
    Unlabeled,
}

impl Label {
    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }
}

/// Feature vector of one startup at one cutoff date, with its label.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotExample {
    pub startup_id: String,
    pub cutoff: NaiveDate,
    /// Aligned with the schema; `NaN` marks a missing value.
    pub features: Vec<f64>,
    pub label: Label,
}

/// All corpora needed to assemble snapshots.
#[derive(Debug, Clone, Default)]
pub struct Corpora {
    pub startups: Vec<StartupRecord>,
    pub events: Vec<FundingEvent>,
    pub tweet_stats: Vec<TweetStat>,
    pub search_pages: Vec<SearchResultPage>,
    pub social: Vec<SocialPresence>,
}

struct StartupView<'a> {
    record: &'a StartupRecord,
    names: Vec<String>,
    country: Option<String>,
    events: Vec<&'a FundingEvent>,
    stats: Vec<TweetStat>,
    pages: Vec<SearchResultPage>,
    social: Option<&'a SocialPresence>,
}

/// Per-startup index over [`Corpora`]. Record order inside each startup is
/// canonicalized so results do not depend on input order.
pub struct SnapshotInputs<'a> {
    views: HashMap<&'a str, StartupView<'a>>,
    ids: Vec<&'a str>,
}

impl<'a> SnapshotInputs<'a> {
    pub fn new(corpora: &'a Corpora, countries: &CountryTable, country_window: usize) -> Self {
        let mut views: HashMap<&str, StartupView> = corpora
            .startups
            .iter()
            .map(|s| {
                let country = s.address_page_text.as_deref().and_then(|t| infer_country(t, country_window, countries));
                (
                    s.id.as_str(),
                    StartupView {
                        record: s,
                        names: name_variants(s),
                        country,
                        events: Vec::new(),
                        stats: Vec::new(),
                        pages: Vec::new(),
                        social: None,
                    },
                )
            })
            .collect();
        for e in &corpora.events {
            if let Some(v) = views.get_mut(e.startup_id.as_str()) {
                v.events.push(e);
            }
        }
        for s in &corpora.tweet_stats {
            if let Some(v) = views.get_mut(s.startup_id.as_str()) {
                v.stats.push(s.clone());
            }
        }
        for p in &corpora.search_pages {
            if let Some(v) = views.get_mut(p.startup_id.as_str()) {
                v.pages.push(p.clone());
            }
        }
        for s in &corpora.social {
            if let Some(v) = views.get_mut(s.startup_id.as_str()) {
                v.social = Some(s);
            }
        }
        for v in views.values_mut() {
            v.events.sort_by(|a, b| a.date.cmp(&b.date).then_with(|| a.amount.value.total_cmp(&b.amount.value)));
            v.stats.sort_by(|a, b| {
                a.month.cmp(&b.month).then_with(|| {
                    serde_json::to_string(a).unwrap_or_default().cmp(&serde_json::to_string(b).unwrap_or_default())
                })
            });
            v.pages.sort_by(|a, b| {
                a.query_date_range.cmp(&b.query_date_range).then_with(|| {
                    serde_json::to_string(a).unwrap_or_default().cmp(&serde_json::to_string(b).unwrap_or_default())
                })
            });
        }
        let mut ids: Vec<&str> = views.keys().copied().collect();
        ids.sort_unstable();
        Self { views, ids }
    }

    /// Startup ids in sorted order.
    pub fn startup_ids(&self) -> &[&'a str] {
        &self.ids
    }

    pub fn country_of(&self, startup_id: &str) -> Option<&str> {
        self.views.get(startup_id).and_then(|v| v.country.as_deref())
    }

    /// Whether a funding event falls in `(d, d + horizon_days]`.
    pub fn label_at(&self, startup_id: &str, d: NaiveDate, horizon_days: i64) -> Option<Label> {
        let view = self.views.get(startup_id)?;
        let end = d + chrono::Duration::days(horizon_days);
        let positive = view.events.iter().any(|e| e.date > d && e.date <= end);
        Some(if positive { Label::Positive } else { Label::Unlabeled })
    }
}

fn code_of(levels: &[String], value: Option<&str>) -> f64 {
    value.and_then(|v| levels.iter().position(|l| l == v)).map_or(f64::NAN, |i| i as f64)
}

fn bit(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Push a possibly-missing value and its indicator bit.
fn push_opt(out: &mut Vec<f64>, v: Option<f64>) {
    match v {
        Some(v) => {
            out.push(v);
            out.push(0.0);
        }
        None => {
            out.push(f64::NAN);
            out.push(1.0);
        }
    }
}

/// Feature vector and label for one startup at cutoff `d`. Only information
/// dated strictly before `d` enters the features; the label is positive iff
/// an event falls in `(d, d + horizon_days]`.
pub fn assemble_snapshot(
    startup_id: &str,
    d: NaiveDate,
    horizon_days: i64,
    web_window_days: i64,
    inputs: &SnapshotInputs<'_>,
    schema: &FeatureSchema,
) -> Result<SnapshotExample, FeaturizeError> {
    if horizon_days <= 0 {
        return Err(FeaturizeError::Config(format!("horizon must be positive, got {horizon_days}")));
    }
    let view = inputs.views.get(startup_id).ok_or_else(|| FeaturizeError::UnknownStartup(startup_id.to_string()))?;
    let r = view.record;
    let mut x = Vec::with_capacity(schema.len());

    // general
    let code = code_of(&schema.countries, view.country.as_deref());
    x.push(code);
    x.push(bit(code.is_nan()));
    let created = r
        .registry_creation_date
        .into_iter()
        .chain(r.media_creation_dates.iter().map(|m| m.date))
        .filter(|c| *c < d)
        .min();
    let general = [
        created.map(|c| days_between(c, d) as f64),
        r.employee_count.map(|v| v as f64),
        r.office_count.map(|v| v as f64),
        r.team_page_people.map(|v| v as f64),
    ];
    debug_assert_eq!(general.len(), GENERAL_NUMERIC.len());
    for v in general {
        push_opt(&mut x, v);
    }

    // financial
    let events: Vec<FundingEvent> = view.events.iter().map(|e| (*e).clone()).collect();
    let fin = financial_features(&events, d);
    let fin_values = fin.map(|f| [f.n_rounds, f.last_amount, f.days_since_last, f.mean_amount, f.max_amount]);
    for k in 0..FINANCIAL.len() {
        push_opt(&mut x, fin_values.map(|v| v[k]));
    }

    // social
    let social = view.social;
    let flags = social.map_or([false; 6], |s| {
        [s.has_facebook, s.has_instagram, s.has_linkedin, s.has_youtube, s.has_twitter, s.has_blog]
    });
    debug_assert_eq!(flags.len(), SOCIAL_FLAGS.len());
    x.extend(flags.map(bit));
    let counts = [social.map(|s| s.linkedin_refs_on_team_page as f64), social.map(|s| s.blog_entries_last_year as f64)];
    debug_assert_eq!(counts.len(), SOCIAL_COUNTS.len());
    for v in counts {
        push_opt(&mut x, v);
    }
    let tw = twitter_features(&view.stats, d, &schema.hashtags);
    for slot in &tw.months {
        let stats = [slot.tweets, slot.likes_mean, slot.likes_max, slot.retweets_mean, slot.retweets_max];
        debug_assert_eq!(stats.len(), MONTHLY.len());
        x.extend(stats);
        x.push(code_of(&schema.languages, slot.language.as_deref()));
    }
    x.push(tw.mentioners);
    x.extend(&tw.hashtag_counts);

    // web
    let web = web_features(&view.pages, &view.names, d, web_window_days, &schema.domains);
    x.push(web.relevant_count);
    push_opt(&mut x, web.total_results);
    x.extend(&web.domain_counts);

    if x.len() != schema.len() {
        return Err(FeaturizeError::SchemaMismatch { expected: schema.len(), got: x.len() });
    }
    let label = inputs.label_at(startup_id, d, horizon_days).expect("startup present");
    Ok(SnapshotExample { startup_id: startup_id.to_string(), cutoff: d, features: x, label })
}
