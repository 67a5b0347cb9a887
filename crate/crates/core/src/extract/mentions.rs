use std::collections::HashMap;
use std::ops::Range;

use crate::ingest::{normalize_name, StartupRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Word,
    Handle,
}

/// A word or `@handle` with its byte span in the source text. `key` is the
/// normalized form used for lookups (handles without the `@`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub key: String,
    pub span: Range<usize>,
}

fn is_handle_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// Split text into alphanumeric words and `@handles`.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut iter = text.char_indices().peekable();
    let mut prev: Option<char> = None;
    while let Some((start, c)) = iter.next() {
        if c == '@' && !prev.is_some_and(char::is_alphanumeric) {
            let mut end = start + 1;
            while let Some(&(i, nc)) = iter.peek() {
                if !is_handle_char(nc) {
                    break;
                }
                end = i + nc.len_utf8();
                iter.next();
            }
            if end > start + 1 {
                tokens.push(Token {
                    kind: TokenKind::Handle,
                    key: text[start + 1..end].to_ascii_lowercase(),
                    span: start..end,
                });
            }
            prev = text[..end].chars().next_back();
            continue;
        }
        if c.is_alphanumeric() {
            let mut end = start + c.len_utf8();
            while let Some(&(i, nc)) = iter.peek() {
                if !nc.is_alphanumeric() {
                    break;
                }
                end = i + nc.len_utf8();
                iter.next();
            }
            tokens.push(Token { kind: TokenKind::Word, key: normalize_name(&text[start..end]), span: start..end });
            prev = text[..end].chars().next_back();
            continue;
        }
        prev = Some(c);
    }
    tokens
}

/// Byte ranges of sentences. Terminators are `.`, `!`, `?` and newlines; a
/// `.` directly followed by a non-space character (as in `2.5` or
/// `acme.io`) does not end a sentence.
pub fn split_sentences(text: &str) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    for (k, &(i, c)) in chars.iter().enumerate() {
        let terminal = match c {
            '\n' | '!' | '?' => true,
            '.' => chars.get(k + 1).is_none_or(|&(_, next)| next.is_whitespace()),
            _ => false,
        };
        if terminal {
            let end = i + c.len_utf8();
            if !text[start..end].trim().is_empty() {
                out.push(start..end);
            }
            start = end;
        }
    }
    if !text[start..].trim().is_empty() {
        out.push(start..text.len());
    }
    out
}

/// Lookup of startups by name, alias (as normalized word sequences) and
/// Twitter handle.
#[derive(Debug, Clone, Default)]
pub struct StartupIndex {
    names: HashMap<Vec<String>, Vec<String>>,
    handles: HashMap<String, Vec<String>>,
    longest: usize,
}

fn name_key(raw: &str) -> Vec<String> {
    tokenize(&normalize_name(raw)).into_iter().filter(|t| t.kind == TokenKind::Word).map(|t| t.key).collect()
}

fn push_unique(list: &mut Vec<String>, id: &str) {
    if !list.iter().any(|x| x == id) {
        list.push(id.to_string());
    }
}

impl StartupIndex {
    pub fn build(startups: &[StartupRecord]) -> Self {
        let mut index = StartupIndex::default();
        for s in startups {
            for raw in std::iter::once(&s.name).chain(s.aliases.iter()) {
                let key = name_key(raw);
                if key.is_empty() {
                    continue;
                }
                index.longest = index.longest.max(key.len());
                push_unique(index.names.entry(key).or_default(), &s.id);
            }
            if let Some(handle) = &s.twitter_handle {
                let h = handle.trim().trim_start_matches('@').to_ascii_lowercase();
                if !h.is_empty() {
                    push_unique(index.handles.entry(h).or_default(), &s.id);
                }
            }
        }
        index
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty() && self.handles.is_empty()
    }
}

/// A startup mention found in text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mention {
    pub startup_id: String,
    pub span: Range<usize>,
}

/// Whole-token startup mentions, scanning left to right. At each position
/// the longest matching name wins; ambiguous names yield one mention per
/// startup sharing that name.
pub fn match_startups(text: &str, index: &StartupIndex) -> Vec<Mention> {
    let tokens = tokenize(text);
    match_tokens(&tokens, index)
}

pub(crate) fn match_tokens(tokens: &[Token], index: &StartupIndex) -> Vec<Mention> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        if tokens[i].kind == TokenKind::Handle {
            if let Some(ids) = index.handles.get(&tokens[i].key) {
                out.extend(ids.iter().map(|id| Mention { startup_id: id.clone(), span: tokens[i].span.clone() }));
            }
            i += 1;
            continue;
        }
        let run = tokens[i..].iter().take_while(|t| t.kind == TokenKind::Word).count();
        let mut matched = 0;
        for len in (1..=run.min(index.longest)).rev() {
            let key: Vec<String> = tokens[i..i + len].iter().map(|t| t.key.clone()).collect();
            if let Some(ids) = index.names.get(&key) {
                let span = tokens[i].span.start..tokens[i + len - 1].span.end;
                out.extend(ids.iter().map(|id| Mention { startup_id: id.clone(), span: span.clone() }));
                matched = len;
                break;
            }
        }
        i += matched.max(1);
    }
    out
}
