//! The 15-dimensional sarcasm feature vector.
//!
//! Raw counts are gathered from one review's tagged tokens, then normalized
//! into `[0, 1]`: rate features are divided by the number of words and
//! clipped at 1, flag features pass through unchanged.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::lexicon::{LexiconKind, Lexicons};
use crate::provenance::Provenance;
use crate::text::{analyze, PosTag, TaggedToken, TokenKind};

pub const NUM_FEATURES: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureCategory {
    Keyword,
    Punctuation,
    Orthographic,
    PersonReference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureKind {
    /// Count divided by the review's word count.
    Rate,
    /// 0 or 1, never scaled.
    Flag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FeatureDescriptor {
    pub id: &'static str,
    pub name: &'static str,
    pub category: FeatureCategory,
    pub kind: FeatureKind,
    pub definition: &'static str,
}

const fn desc(
    id: &'static str,
    name: &'static str,
    category: FeatureCategory,
    kind: FeatureKind,
    definition: &'static str,
) -> FeatureDescriptor {
    FeatureDescriptor {
        id,
        name,
        category,
        kind,
        definition,
    }
}

use FeatureCategory::*;
use FeatureKind::*;

static CATALOG: [FeatureDescriptor; NUM_FEATURES] = [
    desc("f1", "interjection_rate", Keyword, Rate, "words tagged UH"),
    desc("f2", "invocation_rate", Keyword, Rate, "words in the invocation lexicon (god, gosh, geez, jeez, lord)"),
    desc("f3", "intensifier_rate", Keyword, Rate, "words in the intensifier lexicon (so, really, totally, absolutely, literally, definitely, super)"),
    desc("f4", "positive_rate", Keyword, Rate, "words in the positive sentiment lexicon"),
    desc("f5", "negative_rate", Keyword, Rate, "words in the negative sentiment lexicon"),
    desc("f6", "sentiment_contrast", Keyword, Flag, "1 when both positive and negative words occur"),
    desc("f7", "multi_exclamation_rate", Punctuation, Rate, "runs of two or more '!' with no '?'"),
    desc("f8", "multi_question_rate", Punctuation, Rate, "runs of two or more '?' with no '!'"),
    desc("f9", "mixed_punct_rate", Punctuation, Rate, "runs containing both '!' and '?'"),
    desc("f10", "ellipsis_rate", Punctuation, Rate, "ellipsis tokens"),
    desc("f11", "single_exclamation_rate", Punctuation, Rate, "runs that are exactly one '!'"),
    desc("f12", "all_caps_rate", Orthographic, Rate, "words with at least two letters, all uppercase"),
    desc("f13", "elongated_rate", Orthographic, Rate, "words with a letter repeated three or more times in a row"),
    desc("f14", "second_person_rate", PersonReference, Rate, "words in the second-person lexicon (you, your, yours, u)"),
    desc("f15", "first_plural_rate", PersonReference, Rate, "words in the first-person plural lexicon (we, us, our, ours)"),
];

/// The fixed, ordered feature catalog. Vector components follow this order.
pub fn catalog() -> &'static [FeatureDescriptor; NUM_FEATURES] {
    &CATALOG
}

// Zero-based positions into the catalog.
const INTERJECTION: usize = 0;
const INVOCATION: usize = 1;
const INTENSIFIER: usize = 2;
const POSITIVE: usize = 3;
const NEGATIVE: usize = 4;
const CONTRAST: usize = 5;
const MULTI_EXCLAMATION: usize = 6;
const MULTI_QUESTION: usize = 7;
const MIXED_PUNCT: usize = 8;
const ELLIPSIS: usize = 9;
const SINGLE_EXCLAMATION: usize = 10;
const ALL_CAPS: usize = 11;
const ELONGATED: usize = 12;
const SECOND_PERSON: usize = 13;
const FIRST_PLURAL: usize = 14;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureCounts {
    /// Raw values in catalog order.
    pub raw: [u32; NUM_FEATURES],
    pub word_count: u32,
}

impl FeatureCounts {
    /// Raw value by one-based feature number (`get(1)` is f1).
    pub fn get(&self, number: usize) -> u32 {
        self.raw[number - 1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub [f64; NUM_FEATURES]);

impl FeatureVector {
    pub fn zeros() -> Self {
        FeatureVector([0.0; NUM_FEATURES])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

fn is_all_caps(surface: &str) -> bool {
    let mut letters = 0;
    for c in surface.chars().filter(|c| c.is_alphabetic()) {
        if !c.is_uppercase() {
            return false;
        }
        letters += 1;
    }
    letters >= 2
}

fn is_elongated(surface: &str) -> bool {
    let mut prev = None;
    let mut run = 0;
    for c in surface.chars().flat_map(char::to_lowercase) {
        if c.is_alphabetic() && Some(c) == prev {
            run += 1;
            if run >= 3 {
                return true;
            }
        } else {
            run = 1;
        }
        prev = Some(c);
    }
    false
}

pub fn extract_counts(tagged: &[TaggedToken], lexicons: &Lexicons) -> FeatureCounts {
    let mut counts = FeatureCounts::default();
    let raw = &mut counts.raw;
    let word_lists = [
        (LexiconKind::Invocations, INVOCATION),
        (LexiconKind::Intensifiers, INTENSIFIER),
        (LexiconKind::Positive, POSITIVE),
        (LexiconKind::Negative, NEGATIVE),
        (LexiconKind::SecondPerson, SECOND_PERSON),
        (LexiconKind::FirstPersonPlural, FIRST_PLURAL),
    ];

    for t in tagged {
        let surface = t.token.surface.as_str();
        match t.token.kind {
            TokenKind::Word => {
                counts.word_count += 1;
                if t.tag == PosTag::UH {
                    raw[INTERJECTION] += 1;
                }
                let lower = surface.to_lowercase().replace('\u{2019}', "'");
                for (kind, slot) in word_lists {
                    if lexicons.get(kind).contains(&lower) {
                        raw[slot] += 1;
                    }
                }
                if is_all_caps(surface) {
                    raw[ALL_CAPS] += 1;
                }
                if is_elongated(surface) {
                    raw[ELONGATED] += 1;
                }
            }
            TokenKind::PunctRun => {
                let bangs = surface.chars().filter(|&c| c == '!').count();
                let questions = surface.len() - bangs;
                match (bangs, questions) {
                    (1, 0) => raw[SINGLE_EXCLAMATION] += 1,
                    (b, 0) if b >= 2 => raw[MULTI_EXCLAMATION] += 1,
                    (0, q) if q >= 2 => raw[MULTI_QUESTION] += 1,
                    (b, q) if b > 0 && q > 0 => raw[MIXED_PUNCT] += 1,
                    _ => {}
                }
            }
            TokenKind::Ellipsis => raw[ELLIPSIS] += 1,
        }
    }
    raw[CONTRAST] = u32::from(raw[POSITIVE] > 0 && raw[NEGATIVE] > 0);
    counts
}

pub fn normalize(counts: &FeatureCounts) -> FeatureVector {
    if counts.word_count == 0 {
        return FeatureVector::zeros();
    }
    let words = f64::from(counts.word_count);
    let mut out = [0.0; NUM_FEATURES];
    for (i, d) in CATALOG.iter().enumerate() {
        let value = f64::from(counts.raw[i]);
        out[i] = match d.kind {
            Rate => (value / words).min(1.0),
            Flag => value.min(1.0),
        };
    }
    FeatureVector(out)
}

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("feature extraction rejected the text: {0}")]
    Rejected(String),
}

/// Maps review text to a network input.
pub trait FeaturePipeline {
    fn features(&self, text: &str) -> Result<FeatureVector, FeatureError>;
}

/// Tokenize, tag, count and normalize with one set of lexicons.
#[derive(Debug, Clone, Default)]
pub struct FeatureExtractor {
    lexicons: Lexicons,
}

impl FeatureExtractor {
    pub fn new(lexicons: Lexicons) -> Self {
        FeatureExtractor { lexicons }
    }

    pub fn lexicons(&self) -> &Lexicons {
        &self.lexicons
    }

    pub fn counts(&self, text: &str) -> FeatureCounts {
        extract_counts(&analyze(text, &self.lexicons), &self.lexicons)
    }

    pub fn vector(&self, text: &str) -> FeatureVector {
        normalize(&self.counts(text))
    }
}

impl FeaturePipeline for FeatureExtractor {
    fn features(&self, text: &str) -> Result<FeatureVector, FeatureError> {
        Ok(self.vector(text))
    }
}

/// One row of a feature dump.
#[derive(Debug, Clone)]
pub struct DumpRow<'a> {
    pub review_id: &'a str,
    pub label: Option<bool>,
    pub counts: FeatureCounts,
}

/// Writes a CSV feature dump and returns the hex SHA-256 of the bytes written.
///
/// The first line is a `#` comment carrying the crate version and the lexicon
/// digest; the header row follows with `review_id,word_count,label` and the
/// fifteen catalog names. Values are written in scientific notation with ten
/// significant digits; an unlabeled review has an empty label cell.
pub fn write_feature_dump<W: Write>(
    mut out: W,
    rows: &[DumpRow<'_>],
    lexicons: &Lexicons,
    provenance: &Provenance,
) -> io::Result<String> {
    let mut buf = Vec::new();
    writeln!(
        buf,
        "# sarcasm-features version={} seed={} config={} lexicons={}",
        provenance.version,
        provenance.seed,
        provenance.config_digest,
        lexicons.digest()
    )?;
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        let mut header = vec!["review_id", "word_count", "label"];
        header.extend(CATALOG.iter().map(|d| d.name));
        w.write_record(&header)?;
        for row in rows {
            let vector = normalize(&row.counts);
            let mut record = vec![
                row.review_id.to_owned(),
                row.counts.word_count.to_string(),
                row.label.map_or(String::new(), |l| u8::from(l).to_string()),
            ];
            record.extend(vector.0.iter().map(|v| format!("{v:.9e}")));
            w.write_record(&record)?;
        }
        w.flush()?;
    }
    let digest = hex::encode(Sha256::digest(&buf));
    out.write_all(&buf)?;
    out.flush()?;
    Ok(digest)
}
