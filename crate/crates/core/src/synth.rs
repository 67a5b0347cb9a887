//! Seeded synthetic corpora with a planted funding signal, for demos and
//! end-to-end tests. A latent quality per startup drives both the chance of
//! raising money each year and the observable exhaust (team size, tweets,
//! hashtags, search results), so a working pipeline can recover it.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use chrono::{Datelike, Duration, NaiveDate};
use rand::seq::IndexedRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};

use crate::dates::YearMonth;
use crate::extract::FundingEvent;
use crate::ingest::{
    write_corpus, AuditRecord, AuditSample, MediaDate, Record, SearchResult, SearchResultPage, SocialPresence,
    StartupRecord, TextItem, TextSource, TweetStat,
};
use crate::learn::rng_for;

const SYLLABLES: [&str; 24] = [
    "ka", "lo", "vi", "ren", "tor", "mi", "za", "qu", "nel", "bra", "dex", "fi", "gor", "hal", "jun", "pel", "sor",
    "tav", "ul", "wex", "yon", "cra", "dul", "mox",
];

/// (country name, dialing prefix, annual funding log-odds shift)
const COUNTRIES: [(&str, &str, f64); 6] = [
    ("United States", "+1", 0.4),
    ("Germany", "+49", 0.0),
    ("France", "+33", 0.0),
    ("United Kingdom", "+44", 0.2),
    ("Spain", "+34", -0.3),
    ("Italy", "+39", -0.4),
];

const GOOD_TAGS: [&str; 4] = ["#ai", "#fintech", "#saas", "#growth"];
const BAD_TAGS: [&str; 4] = ["#sale", "#contest", "#giveaway", "#local"];
const GOOD_DOMAINS: [&str; 3] = ["techcrunch.com", "crunchbase.com", "venturebeat.com"];
const BAD_DOMAINS: [&str; 3] = ["yellowpages.com", "classifieds.net", "localdirectory.org"];
const NEWS_TEMPLATES: [&str; 6] = [
    "{name} raises {amount} in Series A round",
    "Startup {name} has secured {amount} from investors",
    "{name} closes {amount} seed round led by local angels",
    "{name} announced {amount} funding to expand abroad",
    "Berlin-based {name} gets {amount} to grow its team",
    "{name} completes {amount} financing round",
];
const TWEET_TEMPLATES: [&str; 4] = [
    "Thrilled that {handle} just grabbed {amount} from our partners",
    "Congrats {handle} on receiving {amount}!",
    "{handle} scored {amount} in new funding",
    "Big news: {handle} took {amount} from top VCs",
];
const FILLER_TEMPLATES: [&str; 4] = [
    "{name} launches a new product line",
    "{name} hires a new head of marketing",
    "Interview: the founders of {name} on remote work",
    "{name} opens an office in Lisbon",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_startups: usize,
    pub seed: u64,
    pub first_year: i32,
    /// Data is generated up to (excluding) this date.
    pub end: NaiveDate,
    /// Annual funding log-odds intercept.
    pub base_log_odds: f64,
    /// Log-odds per unit of latent quality.
    pub quality_effect: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_startups: 500,
            seed: 7,
            first_year: 2012,
            end: NaiveDate::from_ymd_opt(2019, 9, 15).expect("valid date"),
            base_log_odds: -1.0,
            quality_effect: 1.8,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SynthCorpus {
    pub startups: Vec<StartupRecord>,
    pub texts: Vec<TextItem>,
    pub tweet_stats: Vec<TweetStat>,
    pub search_pages: Vec<SearchResultPage>,
    pub social: Vec<SocialPresence>,
    pub audits: Vec<AuditRecord>,
    /// Rounds as planted, before any text is written about them.
    pub planted: Vec<FundingEvent>,
}

fn name_for(i: usize) -> String {
    let n = SYLLABLES.len();
    let k = i + 3 * n * n;
    let s = format!("{}{}{}", SYLLABLES[(k / (n * n)) % n], SYLLABLES[(k / n) % n], SYLLABLES[k % n]);
    let mut c = s.chars();
    let first = c.next().expect("non-empty").to_ascii_uppercase();
    format!("{first}{}", c.as_str())
}

fn format_amount(currency: &str, millions: f64, style: usize) -> String {
    let m = (millions * 10.0).round() / 10.0;
    match (currency, style % 3) {
        ("USD", 0) => format!("${m} million"),
        ("USD", 1) => format!("US${m}M"),
        ("USD", _) => format!("{m} million USD"),
        ("EUR", 0) => format!("€{m} million"),
        ("EUR", 1) => format!("€{m}M"),
        ("EUR", _) => format!("EUR {m}m"),
        (_, 0) => format!("£{m} million"),
        (_, 1) => format!("£{m}M"),
        _ => format!("GBP {m} million"),
    }
}

fn date_in_year(rng: &mut impl Rng, year: i32, end: NaiveDate) -> Option<NaiveDate> {
    let start = NaiveDate::from_ymd_opt(year, 1, 1)?;
    let d = start + Duration::days(rng.random_range(0..365));
    (d < end).then_some(d)
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Generate a corpus. Identical configs give identical corpora.
pub fn generate(cfg: &SynthConfig) -> SynthCorpus {
    let mut out = SynthCorpus::default();
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut text_id = 0usize;
    let mut next_text_id = || {
        text_id += 1;
        format!("t{text_id:06}")
    };

    for i in 0..cfg.n_startups {
        let mut rng = rng_for(cfg.seed, i as u64);
        let q: f64 = normal.sample(&mut rng);
        let id = format!("s{i:04}");
        let name = name_for(i);
        let handle = format!("@{}", name.to_lowercase());
        let (country, prefix, shift) = COUNTRIES[rng.random_range(0..COUNTRIES.len())];
        let founded = NaiveDate::from_ymd_opt(cfg.first_year - rng.random_range(-2..6), rng.random_range(1..=12), 1)
            .expect("valid date");

        let mut s = StartupRecord::new(&id, &name);
        s.twitter_handle = rng.random_bool(0.85).then(|| handle.clone());
        s.website_domain = Some(format!("{}.io", name.to_lowercase()));
        s.registry_creation_date = rng.random_bool(0.7).then_some(founded);
        s.media_creation_dates = vec![MediaDate { source: "news".into(), date: founded + Duration::days(40) }];
        let team = (8.0 * (0.6 * q + 0.4 * normal.sample(&mut rng)).exp()).round().max(1.0) as u64;
        s.employee_count = rng.random_bool(0.8).then_some(team);
        s.office_count = Some(1 + (q > 1.0) as u64 + rng.random_range(0..2));
        s.team_page_people = rng.random_bool(0.6).then_some(team.min(40));
        s.address_page_text = Some(format!(
            "Contact us at {name} HQ, {country}. Phone: {prefix} {} {}",
            rng.random_range(10..99),
            rng.random_range(100_000..999_999)
        ));

        // funding rounds
        let mut funded_before = 0.0;
        let mut year_rounds = Vec::new();
        for year in cfg.first_year.max(founded.year())..=cfg.end.year() {
            // rounds are likeliest a few years after founding
            let age = (year - founded.year()) as f64;
            let life = -0.15 * (age - 4.0).powi(2);
            let p = sigmoid(cfg.base_log_odds + cfg.quality_effect * q + shift + 0.3 * funded_before + life);
            if rng.random_bool(p) {
                if let Some(d) = date_in_year(&mut rng, year, cfg.end) {
                    year_rounds.push(d);
                    funded_before += 1.0;
                }
            }
        }
        for (r, &d) in year_rounds.iter().enumerate() {
            let currency = ["USD", "EUR", "GBP"][rng.random_range(0..3)];
            let millions = (0.5 + 2.0 * (r as f64) + rng.random_range(0.0..3.0)) * (0.5 * q).exp();
            let millions = (millions * 10.0).round().max(1.0) / 10.0;
            let amount_text = format_amount(currency, millions, rng.random_range(0..3));
            let tmpl = NEWS_TEMPLATES[rng.random_range(0..NEWS_TEMPLATES.len())];
            let hid = next_text_id();
            out.texts.push(TextItem {
                id: hid.clone(),
                source: TextSource::NewsHeadline,
                published_at: d,
                text: tmpl.replace("{name}", &name).replace("{amount}", &amount_text),
                author_handle: None,
                language: Some("en".into()),
            });
            let mut sources = vec![hid];
            if s.twitter_handle.is_some() && rng.random_bool(0.5) {
                let td = d + Duration::days(rng.random_range(0..20));
                if td < cfg.end {
                    let tmpl = TWEET_TEMPLATES[rng.random_range(0..TWEET_TEMPLATES.len())];
                    let tid = next_text_id();
                    out.texts.push(TextItem {
                        id: tid.clone(),
                        source: TextSource::Tweet,
                        published_at: td,
                        text: tmpl.replace("{handle}", &handle).replace("{amount}", &amount_text),
                        author_handle: Some("@vcnews".into()),
                        language: Some("en".into()),
                    });
                    sources.push(tid);
                }
            }
            sources.sort();
            out.planted.push(FundingEvent {
                startup_id: id.clone(),
                amount: crate::extract::MoneyAmount::new(crate::extract::Currency::from_code(currency), millions * 1e6),
                date: d,
                source_item_ids: sources,
            });
        }
        for _ in 0..rng.random_range(0..3) {
            let year = rng.random_range(cfg.first_year..=cfg.end.year());
            if let Some(d) = date_in_year(&mut rng, year, cfg.end) {
                let tmpl = FILLER_TEMPLATES[rng.random_range(0..FILLER_TEMPLATES.len())];
                out.texts.push(TextItem {
                    id: next_text_id(),
                    source: TextSource::NewsHeadline,
                    published_at: d,
                    text: tmpl.replace("{name}", &name),
                    author_handle: None,
                    language: Some("en".into()),
                });
            }
        }

        // twitter activity
        if s.twitter_handle.is_some() {
            let activity = (0.8 + 0.7 * q).exp();
            let mut m = YearMonth::of(founded.max(NaiveDate::from_ymd_opt(cfg.first_year, 1, 1).expect("valid")));
            while m.last_day() < cfg.end {
                let lam = activity * (1.0 + 0.2 * normal.sample(&mut rng)).max(0.1);
                let tweets = Poisson::new(lam).map(|p| p.sample(&mut rng) as u64).unwrap_or(0);
                let likes_mean = if tweets > 0 { lam * (1.0 + 0.5 * q.max(0.0)) } else { 0.0 };
                let rt_mean = likes_mean / 4.0;
                let mut hashtags = std::collections::BTreeMap::new();
                for _ in 0..tweets.min(6) {
                    let pool = if rng.random_bool(sigmoid(1.5 * q)) { &GOOD_TAGS } else { &BAD_TAGS };
                    *hashtags.entry(pool.choose(&mut rng).expect("non-empty").to_string()).or_insert(0) += 1;
                }
                out.tweet_stats.push(TweetStat {
                    startup_id: id.clone(),
                    month: m,
                    tweets_posted: tweets,
                    likes_mean,
                    likes_max: likes_mean * 2.0,
                    retweets_mean: rt_mean,
                    retweets_max: rt_mean * 3.0,
                    modal_language: (tweets > 0).then(|| if rng.random_bool(0.8) { "en" } else { "de" }.to_string()),
                    hashtags,
                    distinct_mentioners: Poisson::new(1.0 + lam).map(|p| p.sample(&mut rng) as u64).unwrap_or(0),
                });
                m = m.next();
            }
        }

        // yearly search result pages
        for year in cfg.first_year..=cfg.end.year() {
            let start = NaiveDate::from_ymd_opt(year, 1, 1).expect("valid");
            let end = NaiveDate::from_ymd_opt(year, 12, 31).expect("valid").min(cfg.end - Duration::days(1));
            if end < start {
                break;
            }
            let n_results = rng.random_range(3..=10u8);
            let results = (1..=n_results)
                .map(|rank| {
                    let good = rng.random_bool(sigmoid(1.2 * q));
                    let domain = if good { GOOD_DOMAINS.choose(&mut rng) } else { BAD_DOMAINS.choose(&mut rng) };
                    let relevant = rng.random_bool(0.7);
                    SearchResult {
                        rank,
                        domain: domain.expect("non-empty").to_string(),
                        snippet: if relevant { format!("{name} is a startup") } else { "Unrelated page".into() },
                    }
                })
                .collect();
            out.search_pages.push(SearchResultPage {
                startup_id: id.clone(),
                query_date_range: (start, end),
                total_results_reported: (50.0 * (1.0 + q).exp()).round() as u64,
                results,
            });
        }

        out.social.push(SocialPresence {
            startup_id: id.clone(),
            has_facebook: rng.random_bool(0.7),
            has_instagram: rng.random_bool(sigmoid(q)),
            has_linkedin: rng.random_bool(sigmoid(0.5 + q)),
            has_youtube: rng.random_bool(0.3),
            has_twitter: s.twitter_handle.is_some(),
            has_blog: rng.random_bool(sigmoid(q - 0.5)),
            linkedin_refs_on_team_page: s.team_page_people.unwrap_or(0) / 2,
            blog_entries_last_year: rng.random_range(0..12),
        });
        out.startups.push(s);
    }

    // audits: verdicts on planted rounds (about 8.5% false) and on startups
    // (about 6% hidden positives)
    let mut rng = rng_for(cfg.seed, u64::MAX);
    for k in 0..out.planted.len().min(200) {
        out.audits.push(AuditRecord {
            id: format!("ap{k:03}"),
            sample: AuditSample::LabeledPositive,
            truly_funded: !rng.random_bool(0.085),
        });
    }
    for (k, s) in out.startups.iter().take(200).enumerate() {
        out.audits.push(AuditRecord {
            id: format!("au{k:03}-{}", s.id),
            sample: AuditSample::Unlabeled,
            truly_funded: rng.random_bool(0.06),
        });
    }
    out.texts.sort_by(|a, b| a.id.cmp(&b.id));
    out
}

fn write_file<T: Record>(dir: &Path, name: &str, records: &[T]) -> std::io::Result<()> {
    write_corpus(records, BufWriter::new(File::create(dir.join(name))?))
}

impl SynthCorpus {
    /// Write `startups.jsonl`, `texts.jsonl`, `tweet_stats.jsonl`,
    /// `search_pages.jsonl`, `social.jsonl` and `audits.jsonl` into `dir`.
    pub fn write_to_dir(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        write_file(dir, "startups.jsonl", &self.startups)?;
        write_file(dir, "texts.jsonl", &self.texts)?;
        write_file(dir, "tweet_stats.jsonl", &self.tweet_stats)?;
        write_file(dir, "search_pages.jsonl", &self.search_pages)?;
        write_file(dir, "social.jsonl", &self.social)?;
        write_file(dir, "audits.jsonl", &self.audits)
    }
}
