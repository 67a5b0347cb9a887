use unicode_normalization::UnicodeNormalization;

/// Canonical form used for every name lookup: NFKC, lowercase, trimmed, with
/// runs of whitespace collapsed to one space.
pub fn normalize_name(raw: &str) -> String {
    let folded: String = raw.nfkc().collect::<String>().to_lowercase();
    folded.split_whitespace().collect::<Vec<_>>().join(" ")
}
