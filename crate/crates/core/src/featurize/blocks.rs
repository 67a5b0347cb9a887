use std::collections::{BTreeMap, HashMap};

use chrono::NaiveDate;

use super::schema::TWITTER_MONTHS;
use crate::dates::{days_between, YearMonth};
use crate::extract::FundingEvent;
use crate::ingest::{normalize_name, SearchResultPage, StartupRecord, TweetStat};

/// Rank keys by descending count, ties lexicographic, keep the first `size`.
fn top_by_count(counts: HashMap<String, u64>, size: usize) -> Vec<String> {
    let mut ranked: Vec<(String, u64)> = counts.into_iter().filter(|(_, c)| *c > 0).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(size);
    ranked.into_iter().map(|(k, _)| k).collect()
}

/// Normalized name and aliases of a startup, for snippet relevance checks.
pub fn name_variants(startup: &StartupRecord) -> Vec<String> {
    let mut names: Vec<String> = std::iter::once(&startup.name)
        .chain(startup.aliases.iter())
        .map(|n| normalize_name(n))
        .filter(|n| !n.is_empty())
        .collect();
    names.sort();
    names.dedup();
    names
}

pub fn is_relevant(snippet: &str, names: &[String]) -> bool {
    let snippet = normalize_name(snippet);
    names.iter().any(|n| snippet.contains(n.as_str()))
}

/// Hashtag and domain vocabularies. Hashtags rank by total use; domains by
/// how many relevant results (snippet mentions the startup) they served.
/// Only records dated strictly before `before` are counted when given.
pub fn build_vocab(
    tweet_stats: &[TweetStat],
    search_pages: &[SearchResultPage],
    startups: &[StartupRecord],
    size: usize,
    before: Option<NaiveDate>,
) -> (Vec<String>, Vec<String>) {
    assert!(size > 0, "vocabulary size must be positive");
    let mut tags: HashMap<String, u64> = HashMap::new();
    for stat in tweet_stats {
        if before.is_some_and(|b| stat.month.last_day() >= b) {
            continue;
        }
        for (tag, n) in &stat.hashtags {
            *tags.entry(tag.to_lowercase()).or_default() += n;
        }
    }

    let names: HashMap<&str, Vec<String>> = startups.iter().map(|s| (s.id.as_str(), name_variants(s))).collect();
    let mut domains: HashMap<String, u64> = HashMap::new();
    for page in search_pages {
        if before.is_some_and(|b| page.query_date_range.1 >= b) {
            continue;
        }
        let Some(variants) = names.get(page.startup_id.as_str()) else { continue };
        for r in &page.results {
            if is_relevant(&r.snippet, variants) {
                *domains.entry(r.domain.to_lowercase()).or_default() += 1;
            }
        }
    }
    if tags.is_empty() && domains.is_empty() {
        log::warn!("vocabularies are empty: no hashtags or relevant search results before the cutoff");
    }
    (top_by_count(tags, size), top_by_count(domains, size))
}

/// Summary of funding rounds strictly before the cutoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FinancialFeatures {
    pub n_rounds: f64,
    pub last_amount: f64,
    pub days_since_last: f64,
    pub mean_amount: f64,
    pub max_amount: f64,
}

/// `None` when the startup has no event before `d`.
pub fn financial_features(events: &[FundingEvent], d: NaiveDate) -> Option<FinancialFeatures> {
    let mut prior: Vec<&FundingEvent> = events.iter().filter(|e| e.date < d).collect();
    if prior.is_empty() {
        return None;
    }
    prior.sort_by(|a, b| a.date.cmp(&b.date).then_with(|| a.amount.value.total_cmp(&b.amount.value)));
    let last = prior.last().expect("non-empty");
    let n = prior.len() as f64;
    let sum: f64 = prior.iter().map(|e| e.amount.value).sum();
    Some(FinancialFeatures {
        n_rounds: n,
        last_amount: last.amount.value,
        days_since_last: days_between(last.date, d) as f64,
        mean_amount: sum / n,
        max_amount: prior.iter().map(|e| e.amount.value).fold(f64::NEG_INFINITY, f64::max),
    })
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MonthSlot {
    pub tweets: f64,
    pub likes_mean: f64,
    pub likes_max: f64,
    pub retweets_mean: f64,
    pub retweets_max: f64,
    pub language: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwitterBlock {
    /// Most recent complete month first.
    pub months: Vec<MonthSlot>,
    pub mentioners: f64,
    pub hashtag_counts: Vec<f64>,
}

/// Monthly Twitter statistics for the twelve whole calendar months ending
/// before `d`, plus mention and hashtag totals over the same window.
pub fn twitter_features(stats: &[TweetStat], d: NaiveDate, hashtag_vocab: &[String]) -> TwitterBlock {
    let newest = YearMonth::last_complete_before(d);
    let mut slots = Vec::with_capacity(TWITTER_MONTHS);
    let mut month = newest;
    for _ in 0..TWITTER_MONTHS {
        slots.push(month);
        month = month.prev();
    }
    let oldest = *slots.last().expect("twelve slots");
    let vocab_index: HashMap<&str, usize> = hashtag_vocab.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();

    let mut block = TwitterBlock {
        months: vec![MonthSlot::default(); TWITTER_MONTHS],
        mentioners: 0.0,
        hashtag_counts: vec![0.0; hashtag_vocab.len()],
    };
    // merge duplicate month rows deterministically by taking them in order
    let mut by_month: BTreeMap<YearMonth, &TweetStat> = BTreeMap::new();
    for s in stats {
        if s.month >= oldest && s.month <= newest {
            by_month.entry(s.month).or_insert(s);
        }
    }
    for (month, s) in by_month {
        let slot = slots.iter().position(|m| *m == month).expect("month in window");
        block.months[slot] = MonthSlot {
            tweets: s.tweets_posted as f64,
            likes_mean: s.likes_mean,
            likes_max: s.likes_max,
            retweets_mean: s.retweets_mean,
            retweets_max: s.retweets_max,
            language: s.modal_language.clone(),
        };
        block.mentioners += s.distinct_mentioners as f64;
        for (tag, n) in &s.hashtags {
            if let Some(&i) = vocab_index.get(tag.to_lowercase().as_str()) {
                block.hashtag_counts[i] += *n as f64;
            }
        }
    }
    block
}

#[derive(Debug, Clone, PartialEq)]
pub struct WebBlock {
    pub relevant_count: f64,
    /// Reported total of the most recent page in the window.
    pub total_results: Option<f64>,
    pub domain_counts: Vec<f64>,
}

/// Search-result features from pages whose query range ends before `d` and
/// starts no more than `window_days` before it.
pub fn web_features(
    pages: &[SearchResultPage],
    names: &[String],
    d: NaiveDate,
    window_days: i64,
    domain_vocab: &[String],
) -> WebBlock {
    let earliest = d - chrono::Duration::days(window_days);
    let vocab_index: HashMap<&str, usize> = domain_vocab.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();
    let mut block = WebBlock { relevant_count: 0.0, total_results: None, domain_counts: vec![0.0; domain_vocab.len()] };
    let mut latest: Option<(NaiveDate, NaiveDate, u64)> = None;
    for page in pages {
        let (start, end) = page.query_date_range;
        if end >= d || start < earliest {
            continue;
        }
        let stamp = (end, start, page.total_results_reported);
        if latest.is_none_or(|l| stamp > l) {
            latest = Some(stamp);
        }
        for r in &page.results {
            if is_relevant(&r.snippet, names) {
                block.relevant_count += 1.0;
                if let Some(&i) = vocab_index.get(r.domain.to_lowercase().as_str()) {
                    block.domain_counts[i] += 1.0;
                }
            }
        }
    }
    block.total_results = latest.map(|l| l.2 as f64);
    block
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dates::parse_date;
    use crate::extract::{Currency, MoneyAmount};
    use crate::ingest::SearchResult;

    fn d(s: &str) -> NaiveDate {
        parse_date(s).unwrap()
    }

    fn stat(month: &str, tags: &[(&str, u64)]) -> TweetStat {
        TweetStat {
            startup_id: "s".into(),
            month: month.parse().unwrap(),
            tweets_posted: 0,
            likes_mean: 0.0,
            likes_max: 0.0,
            retweets_mean: 0.0,
            retweets_max: 0.0,
            modal_language: None,
            hashtags: tags.iter().map(|(t, n)| (t.to_string(), *n)).collect(),
            distinct_mentioners: 0,
        }
    }

    fn event(date: &str, value: f64) -> FundingEvent {
        FundingEvent {
            startup_id: "s".into(),
            amount: MoneyAmount::new(Currency::Usd, value),
            date: d(date),
            source_item_ids: vec!["x".into()],
        }
    }

    fn page(start: &str, end: &str, results: &[(&str, &str)]) -> SearchResultPage {
        SearchResultPage {
            startup_id: "s".into(),
            query_date_range: (d(start), d(end)),
            total_results_reported: 1234,
            results: results
                .iter()
                .enumerate()
                .map(|(i, (dom, snip))| SearchResult {
                    rank: i as u8 + 1,
                    domain: dom.to_string(),
                    snippet: snip.to_string(),
                })
                .collect(),
        }
    }

    #[test]
    fn hashtag_ranking_and_truncation() {
        let stats = vec![stat("2016-01", &[("#ai", 6), ("#fintech", 3)]), stat("2016-02", &[("#ai", 4)])];
        let (tags, _) = build_vocab(&stats, &[], &[], 500, None);
        assert_eq!(tags, vec!["#ai", "#fintech"]);
        let (tags, _) = build_vocab(&stats, &[], &[], 1, None);
        assert_eq!(tags, vec!["#ai"]);
    }

    #[test]
    fn domain_ties_are_lexicographic() {
        let s = StartupRecord::new("s", "Acme");
        let results: Vec<(&str, &str)> =
            vec![("zeta.com", "Acme news"), ("alpha.com", "about acme"), ("other.com", "nothing")];
        let pages: Vec<SearchResultPage> = (0..5).map(|_| page("2016-01-01", "2016-12-31", &results)).collect();
        let (_, domains) = build_vocab(&[], &pages, &[s], 500, None);
        assert_eq!(domains, vec!["alpha.com", "zeta.com"]);
    }

    #[test]
    fn vocab_respects_period() {
        let stats = vec![stat("2016-01", &[("#old", 1)]), stat("2017-09", &[("#new", 9)])];
        let (tags, _) = build_vocab(&stats, &[], &[], 10, Some(d("2017-09-01")));
        assert_eq!(tags, vec!["#old"]);
    }

    #[test]
    fn financial_with_leap_year() {
        let f = financial_features(&[event("2015-01-01", 1e6), event("2016-01-01", 3e6)], d("2017-01-01")).unwrap();
        assert_eq!(
            f,
            FinancialFeatures {
                n_rounds: 2.0,
                last_amount: 3e6,
                days_since_last: 366.0,
                mean_amount: 2e6,
                max_amount: 3e6
            }
        );
    }

    #[test]
    fn financial_missing_cases() {
        assert_eq!(financial_features(&[], d("2017-01-01")), None);
        assert_eq!(financial_features(&[event("2017-06-01", 1e6)], d("2017-01-01")), None);
        assert_eq!(financial_features(&[event("2017-01-01", 1e6)], d("2017-01-01")), None);
    }

    #[test]
    fn twitter_month_slots() {
        let mut s = stat("2017-08", &[("#ai", 7)]);
        s.tweets_posted = 3;
        s.likes_mean = 2.0;
        s.likes_max = 4.0;
        s.modal_language = Some("en".into());
        let older = stat("2016-08", &[("#ai", 100)]);
        let block = twitter_features(&[s, older], d("2017-09-01"), &["#ai".into()]);
        assert_eq!(block.months[0].tweets, 3.0);
        assert_eq!(block.months[0].likes_mean, 2.0);
        assert_eq!(block.months[0].likes_max, 4.0);
        assert_eq!(block.months[0].language.as_deref(), Some("en"));
        // 2016-08 is the 13th month back: outside the window
        assert_eq!(block.hashtag_counts, vec![7.0]);
    }

    #[test]
    fn twitter_excludes_current_month() {
        let block = twitter_features(&[stat("2017-09", &[("#ai", 5)])], d("2017-09-20"), &["#ai".into()]);
        assert_eq!(block.hashtag_counts, vec![0.0]);
        assert!(block.months.iter().all(|m| *m == MonthSlot::default()));
    }

    #[test]
    fn web_relevance_and_domains() {
        let names = vec!["acme".to_string()];
        let results = [
            ("linkedin.com", "Acme on LinkedIn"),
            ("linkedin.com", "ACME team"),
            ("news.com", "Acme raises"),
            ("news.com", "Acme again"),
            ("x.com", "unrelated"),
            ("y.com", "nothing"),
            ("y.com", "nope"),
            ("y.com", "no"),
            ("y.com", "n"),
            ("y.com", "z"),
        ];
        let p = page("2016-10-01", "2017-08-31", &results);
        let block = web_features(&[p], &names, d("2017-09-01"), 365, &["linkedin.com".into()]);
        assert_eq!(block.relevant_count, 4.0);
        assert_eq!(block.domain_counts, vec![2.0]);
        assert_eq!(block.total_results, Some(1234.0));
    }

    #[test]
    fn web_empty_window() {
        let p = page("2017-01-01", "2017-09-01", &[("a.com", "acme")]);
        let block = web_features(&[p], &["acme".into()], d("2017-09-01"), 365, &[]);
        assert_eq!(block.relevant_count, 0.0);
        assert_eq!(block.total_results, None);
    }
}
