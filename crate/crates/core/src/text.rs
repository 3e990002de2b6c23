//! Tokenizer and lexicon/suffix part-of-speech tagger.
//!
//! The tokenizer keeps three kinds of tokens: words, runs of `!`/`?`, and
//! ellipses. Everything else (whitespace, commas, single periods, quotes,
//! symbols) only separates tokens. Spans are byte offsets into the source.

use serde::{Deserialize, Serialize};

use crate::lexicon::{LexiconKind, Lexicons};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TokenKind {
    Word,
    /// Maximal run of `!` and `?`, possibly mixed.
    PunctRun,
    /// Three or more periods, or a single `…`.
    Ellipsis,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub kind: TokenKind,
    pub start: usize,
    pub end: usize,
}

impl Token {
    pub fn span(&self) -> (usize, usize) {
        (self.start, self.end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PosTag {
    /// Interjection.
    UH,
    /// Personal pronoun.
    PRP,
    /// Possessive pronoun.
    PRPS,
    JJ,
    RB,
    VB,
    NN,
    DT,
    IN,
    CC,
    OTHER,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedToken {
    pub token: Token,
    pub tag: PosTag,
}

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || is_apostrophe(c)
}

/// Splits `text` into words, `!`/`?` runs and ellipses, in source order.
///
/// Apostrophes at either edge of a word run are treated as quotes and left
/// out of the token; interior apostrophes stay (`Aren't` is one word).
pub fn tokenize(text: &str) -> Vec<Token> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let byte_at = |i: usize| chars.get(i).map_or(text.len(), |&(b, _)| b);
    let mut tokens = Vec::new();
    let mut push = |kind: TokenKind, start: usize, end: usize| {
        tokens.push(Token {
            surface: text[start..end].to_owned(),
            kind,
            start,
            end,
        })
    };

    let mut i = 0;
    while i < chars.len() {
        let c = chars[i].1;
        if is_word_char(c) {
            let mut j = i;
            while j < chars.len() && is_word_char(chars[j].1) {
                j += 1;
            }
            let (mut a, mut b) = (i, j);
            while a < b && is_apostrophe(chars[a].1) {
                a += 1;
            }
            while b > a && is_apostrophe(chars[b - 1].1) {
                b -= 1;
            }
            if chars[a..b].iter().any(|&(_, c)| c.is_alphabetic()) {
                push(TokenKind::Word, byte_at(a), byte_at(b));
            }
            i = j;
        } else if c == '!' || c == '?' {
            let mut j = i;
            while j < chars.len() && matches!(chars[j].1, '!' | '?') {
                j += 1;
            }
            push(TokenKind::PunctRun, byte_at(i), byte_at(j));
            i = j;
        } else if c == '.' {
            let mut j = i;
            while j < chars.len() && chars[j].1 == '.' {
                j += 1;
            }
            if j - i >= 3 {
                push(TokenKind::Ellipsis, byte_at(i), byte_at(j));
            }
            i = j;
        } else if c == '\u{2026}' {
            push(TokenKind::Ellipsis, byte_at(i), byte_at(i + 1));
            i += 1;
        } else {
            i += 1;
        }
    }
    tokens
}

/// `haha`, `hahaha`, `hahah`, ... (at least two "ha" syllables).
fn is_laughter(lower: &str) -> bool {
    let body = lower.strip_suffix('h').unwrap_or(lower);
    body.len() >= 4 && body.len().is_multiple_of(2) && body.as_bytes().chunks(2).all(|c| c == b"ha")
}

const SUFFIX_RULES: &[(&str, PosTag)] = &[
    ("ly", PosTag::RB),
    ("ing", PosTag::VB),
    ("ed", PosTag::VB),
    ("ous", PosTag::JJ),
    ("ful", PosTag::JJ),
    ("ive", PosTag::JJ),
    ("less", PosTag::JJ),
];

const CLOSED_CLASSES: &[(LexiconKind, PosTag)] = &[
    (LexiconKind::PersonalPronouns, PosTag::PRP),
    (LexiconKind::PossessivePronouns, PosTag::PRPS),
    (LexiconKind::Determiners, PosTag::DT),
    (LexiconKind::Prepositions, PosTag::IN),
    (LexiconKind::Conjunctions, PosTag::CC),
];

/// Tag for one word surface. Pure in (lowercased surface, lexicons).
pub fn tag_word(surface: &str, lexicons: &Lexicons) -> PosTag {
    let lower = surface.to_lowercase().replace('\u{2019}', "'");
    if is_laughter(&lower) || lexicons.get(LexiconKind::Interjections).contains(&lower) {
        return PosTag::UH;
    }
    for &(kind, tag) in CLOSED_CLASSES {
        if lexicons.get(kind).contains(&lower) {
            return tag;
        }
    }
    let len = lower.chars().count();
    for &(suffix, tag) in SUFFIX_RULES {
        // Require a stem of at least two characters so "red" or "fly" stay nouns.
        if lower.ends_with(suffix) && len >= suffix.len() + 2 {
            return tag;
        }
    }
    PosTag::NN
}

pub fn pos_tag(tokens: Vec<Token>, lexicons: &Lexicons) -> Vec<TaggedToken> {
    tokens
        .into_iter()
        .map(|token| {
            let tag = match token.kind {
                TokenKind::Word => tag_word(&token.surface, lexicons),
                TokenKind::PunctRun | TokenKind::Ellipsis => PosTag::OTHER,
            };
            TaggedToken { token, tag }
        })
        .collect()
}

/// `pos_tag(tokenize(text))`.
pub fn analyze(text: &str, lexicons: &Lexicons) -> Vec<TaggedToken> {
    pos_tag(tokenize(text), lexicons)
}
