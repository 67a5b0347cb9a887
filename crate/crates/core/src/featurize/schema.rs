use serde::{Deserialize, Serialize};

use crate::hashing::sha256_hex;

/// Number of monthly Twitter slots preceding the cutoff.
pub const TWITTER_MONTHS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureGroup {
    General,
    Financial,
    Social,
    Web,
}

impl FeatureGroup {
    pub const ALL: [FeatureGroup; 4] =
        [FeatureGroup::General, FeatureGroup::Financial, FeatureGroup::Social, FeatureGroup::Web];

    pub fn name(self) -> &'static str {
        match self {
            FeatureGroup::General => "general",
            FeatureGroup::Financial => "financial",
            FeatureGroup::Social => "social",
            FeatureGroup::Web => "web",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|g| g.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Numeric,
    /// Integer code into the level list named by the entry.
    Categorical,
    Binary,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureEntry {
    pub name: String,
    pub group: FeatureGroup,
    pub kind: FeatureKind,
    pub sparse: bool,
}

/// Ordered feature layout plus the frozen vocabularies and category levels
/// it was built with. Missing values are `NaN` in feature vectors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub entries: Vec<FeatureEntry>,
    pub hashtags: Vec<String>,
    pub domains: Vec<String>,
    pub countries: Vec<String>,
    pub languages: Vec<String>,
}

struct Builder {
    entries: Vec<FeatureEntry>,
}

impl Builder {
    fn push(&mut self, name: impl Into<String>, group: FeatureGroup, kind: FeatureKind, sparse: bool) {
        self.entries.push(FeatureEntry { name: name.into(), group, kind, sparse });
    }

    fn numeric(&mut self, name: &str, group: FeatureGroup) {
        self.push(name, group, FeatureKind::Numeric, false);
    }

    /// A numeric feature that may be missing, followed by its indicator bit.
    fn with_missing(&mut self, name: &str, group: FeatureGroup, kind: FeatureKind) {
        self.push(name, group, kind, false);
        self.push(format!("{name}_missing"), group, FeatureKind::Binary, false);
    }
}

pub(crate) const GENERAL_NUMERIC: [&str; 4] = ["age_days", "employees", "offices", "team_page_people"];
pub(crate) const FINANCIAL: [&str; 5] = ["n_rounds", "last_amount", "days_since_last", "mean_amount", "max_amount"];
pub(crate) const SOCIAL_FLAGS: [&str; 6] =
    ["has_facebook", "has_instagram", "has_linkedin", "has_youtube", "has_twitter", "has_blog"];
pub(crate) const SOCIAL_COUNTS: [&str; 2] = ["linkedin_refs_on_team_page", "blog_entries_last_year"];
pub(crate) const MONTHLY: [&str; 5] = ["tweets", "likes_mean", "likes_max", "retweets_mean", "retweets_max"];

impl FeatureSchema {
    pub fn new(hashtags: Vec<String>, domains: Vec<String>, countries: Vec<String>, languages: Vec<String>) -> Self {
        use FeatureGroup::*;
        use FeatureKind::*;
        let mut b = Builder { entries: Vec::new() };

        b.with_missing("country", General, Categorical);
        for name in GENERAL_NUMERIC {
            b.with_missing(name, General, Numeric);
        }

        for name in FINANCIAL {
            b.with_missing(name, Financial, Numeric);
        }

        for name in SOCIAL_FLAGS {
            b.push(name, Social, Binary, false);
        }
        for name in SOCIAL_COUNTS {
            b.with_missing(name, Social, Numeric);
        }
        for m in 1..=TWITTER_MONTHS {
            for stat in MONTHLY {
                b.numeric(&format!("tw_m{m:02}_{stat}"), Social);
            }
            b.push(format!("tw_m{m:02}_language"), Social, Categorical, false);
        }
        b.numeric("tw_mentioners_last_year", Social);
        for tag in &hashtags {
            b.push(format!("hashtag:{tag}"), Social, Numeric, true);
        }

        b.numeric("web_relevant_results", Web);
        b.with_missing("web_total_results", Web, Numeric);
        for domain in &domains {
            b.push(format!("domain:{domain}"), Web, Numeric, true);
        }

        Self { entries: b.entries, hashtags, domains, countries, languages }
    }

    /// `width` plain numeric columns `x0, x1, ...` in one group, for models
    /// trained on arbitrary matrices.
    pub fn numeric(width: usize, group: FeatureGroup) -> Self {
        let mut b = Builder { entries: Vec::new() };
        for i in 0..width {
            b.numeric(&format!("x{i}"), group);
        }
        Self { entries: b.entries, hashtags: vec![], domains: vec![], countries: vec![], languages: vec![] }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.name == name)
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.name.as_str()).collect()
    }

    /// Column indices of one group, in schema order.
    pub fn group_columns(&self, group: FeatureGroup) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.entries[i].group == group).collect()
    }

    pub fn categorical_columns(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.entries[i].kind == FeatureKind::Categorical).collect()
    }

    /// Keep only `columns` (in the given order). Vocabularies are retained
    /// so the projected schema still describes where values came from.
    pub fn project(&self, columns: &[usize]) -> FeatureSchema {
        FeatureSchema {
            entries: columns.iter().map(|&i| self.entries[i].clone()).collect(),
            hashtags: self.hashtags.clone(),
            domains: self.domains.clone(),
            countries: self.countries.clone(),
            languages: self.languages.clone(),
        }
    }

    /// Columns remaining after dropping whole groups.
    pub fn columns_without(&self, dropped: &[FeatureGroup]) -> Vec<usize> {
        (0..self.len()).filter(|&i| !dropped.contains(&self.entries[i].group)).collect()
    }

    /// SHA-256 over the canonical JSON form of the schema.
    pub fn hash(&self) -> String {
        sha256_hex(serde_json::to_string(self).expect("schema serializes").as_bytes())
    }
}
