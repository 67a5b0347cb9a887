use std::collections::{BTreeSet, HashMap};

const DEFAULT_LEXICON: &str = include_str!("../../data/fundraising_verbs.txt");

/// The fundraising verb lexicon with a small suffix-stripping stemmer.
#[derive(Debug, Clone)]
pub struct VerbLexicon {
    lemmas: BTreeSet<String>,
    irregular: HashMap<String, String>,
}

impl Default for VerbLexicon {
    fn default() -> Self {
        Self::parse(DEFAULT_LEXICON).expect("bundled lexicon parses")
    }
}

impl VerbLexicon {
    /// Parse the lexicon file format: one lemma per line, `form = lemma` for
    /// irregular inflections, `#` comments.
    pub fn parse(source: &str) -> Result<Self, String> {
        let mut lemmas = BTreeSet::new();
        let mut irregular = HashMap::new();
        for (n, line) in source.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            match line.split_once('=') {
                Some((form, lemma)) => {
                    let (form, lemma) = (form.trim().to_lowercase(), lemma.trim().to_lowercase());
                    if form.is_empty() || lemma.is_empty() {
                        return Err(format!("lexicon line {}: malformed mapping", n + 1));
                    }
                    irregular.insert(form, lemma);
                }
                None => {
                    lemmas.insert(line.to_lowercase());
                }
            }
        }
        if let Some((form, lemma)) = irregular.iter().find(|(_, l)| !lemmas.contains(*l)) {
            return Err(format!("irregular form {form:?} maps to unknown lemma {lemma:?}"));
        }
        Ok(Self { lemmas, irregular })
    }

    pub fn lemmas(&self) -> impl Iterator<Item = &str> {
        self.lemmas.iter().map(String::as_str)
    }

    /// The lexicon lemma for an inflected word, if any.
    pub fn stem(&self, word: &str) -> Option<&str> {
        let w = word.to_lowercase();
        if let Some(l) = self.lemmas.get(&w) {
            return Some(l);
        }
        if let Some(l) = self.irregular.get(&w) {
            return self.lemmas.get(l).map(String::as_str);
        }
        let mut candidates: Vec<String> = Vec::new();
        let mut strip = |suffix: &str, extra: bool| {
            if let Some(base) = w.strip_suffix(suffix) {
                if base.is_empty() {
                    return;
                }
                candidates.push(base.to_string());
                if extra {
                    candidates.push(format!("{base}e"));
                    let mut chars = base.chars().rev();
                    if let (Some(a), Some(b)) = (chars.next(), chars.next()) {
                        if a == b {
                            candidates.push(base[..base.len() - a.len_utf8()].to_string());
                        }
                    }
                }
            }
        };
        strip("ing", true);
        strip("ed", true);
        strip("es", false);
        strip("s", false);
        candidates.iter().find_map(|c| self.lemmas.get(c).map(String::as_str))
    }
}
