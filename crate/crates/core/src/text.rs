//! Tokenization and n-gram utilities shared by indexing, scoring, length
//! budgeting and the overlap filter.
//!
//! Segmentation rules:
//! - a maximal run of alphanumeric characters (plus any combining marks that
//!   follow them) is one word token;
//! - every other non-whitespace character is a token on its own;
//! - whitespace separates tokens and is never part of one.
//!
//! Tokens are lowercased character by character. There is no stemming and no
//! stopword list.

use std::collections::HashSet;
use std::fmt;
use std::ops::Range;

use crate::error::{ReinaError, Result};

/// A single normalized token. Never empty, never contains whitespace.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Token(String);

impl Token {
    pub fn new(surface: impl Into<String>) -> Result<Self> {
        let surface = surface.into();
        if surface.is_empty() {
            return Err(ReinaError::InvalidParameter("empty token".into()));
        }
        if surface.chars().any(char::is_whitespace) {
            return Err(ReinaError::InvalidParameter(format!(
                "token `{surface}` contains whitespace"
            )));
        }
        Ok(Token(surface))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for Token {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenStream {
    tokens: Vec<Token>,
    source_len_chars: usize,
}

impl TokenStream {
    pub fn from_tokens(tokens: Vec<Token>) -> Self {
        let source_len_chars = tokens.iter().map(|t| t.0.chars().count()).sum();
        TokenStream {
            tokens,
            source_len_chars,
        }
    }

    /// Builds a stream from already-normalized words, validating each one.
    pub fn from_words<I, S>(words: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tokens = words
            .into_iter()
            .map(Token::new)
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_tokens(tokens))
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Character length of the text this stream was produced from.
    pub fn source_len_chars(&self) -> usize {
        self.source_len_chars
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Token> {
        self.tokens.iter()
    }

    pub fn into_tokens(self) -> Vec<Token> {
        self.tokens
    }

    /// Appends `other`, as if the two sources had been joined by whitespace.
    pub fn concat(mut self, other: &TokenStream) -> TokenStream {
        self.tokens.extend_from_slice(&other.tokens);
        self.source_len_chars += other.source_len_chars;
        self
    }
}

impl<'a> IntoIterator for &'a TokenStream {
    type Item = &'a Token;
    type IntoIter = std::slice::Iter<'a, Token>;

    fn into_iter(self) -> Self::IntoIter {
        self.tokens.iter()
    }
}

fn is_combining_mark(c: char) -> bool {
    matches!(c as u32,
        0x0300..=0x036F | 0x0483..=0x0489 | 0x0591..=0x05BD | 0x0610..=0x061A
        | 0x064B..=0x065F | 0x0900..=0x0903 | 0x093A..=0x094F | 0x1AB0..=0x1AFF
        | 0x1DC0..=0x1DFF | 0x20D0..=0x20FF | 0xFE20..=0xFE2F)
}

/// Byte ranges of every token in `text`, in source order.
pub fn token_spans(text: &str) -> Vec<Range<usize>> {
    let mut spans = Vec::new();
    let mut word_start: Option<usize> = None;
    for (pos, c) in text.char_indices() {
        if c.is_alphanumeric() || (word_start.is_some() && is_combining_mark(c)) {
            if word_start.is_none() {
                word_start = Some(pos);
            }
            continue;
        }
        if let Some(start) = word_start.take() {
            spans.push(start..pos);
        }
        if !c.is_whitespace() {
            spans.push(pos..pos + c.len_utf8());
        }
    }
    if let Some(start) = word_start {
        spans.push(start..text.len());
    }
    spans
}

fn normalize(surface: &str) -> Token {
    let lowered: String = surface.chars().flat_map(char::to_lowercase).collect();
    Token(lowered)
}

pub fn tokenize(text: &str) -> TokenStream {
    let tokens = token_spans(text)
        .into_iter()
        .map(|span| normalize(&text[span]))
        .collect();
    TokenStream {
        tokens,
        source_len_chars: text.chars().count(),
    }
}

/// Number of tokens `tokenize(text)` would produce.
pub fn token_count(text: &str) -> usize {
    token_spans(text).len()
}

/// The original text covering tokens `start..end`, trimmed to token
/// boundaries. `tokenize` of the result yields exactly those tokens.
pub fn slice_tokens<'a>(text: &'a str, spans: &[Range<usize>], start: usize, end: usize) -> &'a str {
    let end = end.min(spans.len());
    if start >= end {
        return "";
    }
    &text[spans[start].start..spans[end - 1].end]
}

/// The original text of the first `budget` tokens of `text`.
pub fn prefix_text(text: &str, budget: usize) -> &str {
    slice_tokens(text, &token_spans(text), 0, budget)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NGramSet {
    n: usize,
    grams: HashSet<Vec<Token>>,
}

impl NGramSet {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.grams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grams.is_empty()
    }

    pub fn contains(&self, gram: &[Token]) -> bool {
        self.grams.contains(gram)
    }

    pub fn grams(&self) -> &HashSet<Vec<Token>> {
        &self.grams
    }

    pub fn intersection_len(&self, other: &NGramSet) -> usize {
        let (small, large) = if self.len() <= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        small.grams.iter().filter(|g| large.grams.contains(*g)).count()
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(ReinaError::InvalidParameter("n-gram size must be >= 1".into()));
    }
    Ok(())
}

pub fn ngrams(ts: &TokenStream, n: usize) -> Result<NGramSet> {
    check_n(n)?;
    let grams = ts.tokens.windows(n).map(<[Token]>::to_vec).collect();
    Ok(NGramSet { n, grams })
}

/// Number of distinct n-grams shared by `a` and `b`.
pub fn ngram_overlap_count(a: &TokenStream, b: &TokenStream, n: usize) -> Result<usize> {
    check_n(n)?;
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let small_grams: HashSet<&[Token]> = small.tokens.windows(n).collect();
    if small_grams.is_empty() {
        return Ok(0);
    }
    let shared: HashSet<&[Token]> = large
        .tokens
        .windows(n)
        .filter(|w| small_grams.contains(w))
        .collect();
    Ok(shared.len())
}

pub fn truncate_tokens(ts: &TokenStream, budget: usize) -> TokenStream {
    let keep = budget.min(ts.len());
    TokenStream::from_tokens(ts.tokens[..keep].to_vec())
}
