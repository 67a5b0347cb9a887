use std::fmt;
use std::ops::Range;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

const CURRENCY_TABLE: &str = include_str!("../../data/currencies.tsv");

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Currency {
    Usd,
    Eur,
    Gbp,
    Other(String),
}

impl Currency {
    pub fn from_code(code: &str) -> Self {
        match code.to_ascii_uppercase().as_str() {
            "USD" => Currency::Usd,
            "EUR" => Currency::Eur,
            "GBP" => Currency::Gbp,
            other => Currency::Other(other.to_string()),
        }
    }

    pub fn code(&self) -> &str {
        match self {
            Currency::Usd => "USD",
            Currency::Eur => "EUR",
            Currency::Gbp => "GBP",
            Currency::Other(c) => c,
        }
    }
}

impl fmt::Display for Currency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl Serialize for Currency {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.code())
    }
}

impl<'de> Deserialize<'de> for Currency {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let code = String::deserialize(d)?;
        Ok(Currency::from_code(&code))
    }
}

/// An amount in base currency units with every scale suffix expanded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoneyAmount {
    pub currency: Currency,
    pub value: f64,
}

impl MoneyAmount {
    pub fn new(currency: Currency, value: f64) -> Self {
        Self { currency, value }
    }
}

impl fmt::Display for MoneyAmount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.currency, self.value)
    }
}

struct MoneyPattern {
    regex: Regex,
    markers: Vec<(String, String)>,
}

fn pattern() -> &'static MoneyPattern {
    static PATTERN: OnceLock<MoneyPattern> = OnceLock::new();
    PATTERN.get_or_init(|| {
        let mut markers: Vec<(String, String)> = CURRENCY_TABLE
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .filter_map(|l| {
                let mut parts = l.split('\t');
                Some((parts.next()?.trim().to_string(), parts.next()?.trim().to_string()))
            })
            .collect();
        markers.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(&b.0)));
        let alt = markers.iter().map(|(m, _)| regex::escape(m)).collect::<Vec<_>>().join("|");
        let number = r"\d{1,3}(?:,\d{3})+(?:\.\d+)?|\d+(?:\.\d+)?";
        let scale = r"(?:\s?(?i:thousand|million|billion|mln|mn|bn)\b|[kKmMbB]\b)";
        let source = format!(
            r"(?P<pre>{alt})\s?(?P<num>{number})(?P<scale>{scale})?|\b(?P<num2>{number})(?P<scale2>{scale})?\s?(?P<post>{alt})"
        );
        MoneyPattern { regex: Regex::new(&source).expect("money regex"), markers }
    })
}

fn scale_factor(raw: &str) -> f64 {
    match raw.trim().to_ascii_lowercase().as_str() {
        "k" | "thousand" => 1e3,
        "m" | "mn" | "mln" | "million" => 1e6,
        "b" | "bn" | "billion" => 1e9,
        _ => 1.0,
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Find money amounts written with a currency marker, e.g. `$5M`,
/// `€2.5 million`, `£300K` or `10 million EUR`. Matches are returned left to
/// right and never overlap. Numbers without a currency marker are ignored.
pub fn parse_money(text: &str) -> Vec<(MoneyAmount, Range<usize>)> {
    let pat = pattern();
    let mut found = Vec::new();
    for caps in pat.regex.captures_iter(text) {
        let whole = caps.get(0).expect("group 0");
        let (marker, num, scale) = match caps.name("pre") {
            Some(m) => (m, caps.name("num").unwrap(), caps.name("scale")),
            None => (caps.name("post").unwrap(), caps.name("num2").unwrap(), caps.name("scale2")),
        };
        let marker_text = marker.as_str();
        // alphabetic codes must stand alone: "XUSD5" is not a currency
        if marker_text.chars().all(|c| c.is_ascii_alphabetic()) {
            let before = text[..marker.start()].chars().next_back();
            let after = text[marker.end()..].chars().next();
            if before.is_some_and(is_word_char) || (marker.start() > num.start() && after.is_some_and(is_word_char)) {
                continue;
            }
        }
        let Some(code) = pat.markers.iter().find(|(m, _)| m == marker_text).map(|(_, c)| c) else {
            continue;
        };
        let Ok(base) = num.as_str().replace(',', "").parse::<f64>() else {
            continue;
        };
        let value = base * scale.map_or(1.0, |s| scale_factor(s.as_str()));
        if value > 0.0 && value.is_finite() {
            found.push((MoneyAmount::new(Currency::from_code(code), value), whole.range()));
        }
    }
    found
}
