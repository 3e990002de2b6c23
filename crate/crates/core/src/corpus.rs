//! Review ingestion, label resolution, star buckets and seeded splits.
//!
//! Review and label files are line-delimited JSON. A review line needs
//! `review_id`, `stars` and `text` (the Yelp Dataset Challenge review schema
//! satisfies this; other fields are ignored). A label line carries
//! `review_id`, `sarcastic` and `annotator`.

pub mod synthetic;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::rng;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Review {
    pub review_id: String,
    pub stars: u8,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SarcasmLabel {
    pub review_id: String,
    pub sarcastic: bool,
    pub annotator: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledReview {
    pub review: Review,
    pub sarcastic: bool,
}

impl LabeledReview {
    pub fn id(&self) -> &str {
        &self.review.review_id
    }
}

/// Something that belongs to one star bucket.
pub trait Starred {
    fn stars(&self) -> u8;
}

impl Starred for Review {
    fn stars(&self) -> u8 {
        self.stars
    }
}

impl Starred for LabeledReview {
    fn stars(&self) -> u8 {
        self.review.stars
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetSplit {
    pub stars: u8,
    pub train: Vec<LabeledReview>,
    pub test: Vec<LabeledReview>,
    pub seed: u64,
}

/// A rejected input line. Line numbers are one-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParseError {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("insufficient pool: need {need}, have {have}")]
    InsufficientPool { need: usize, have: usize },
    #[error("insufficient {label} reviews: requested {requested}, available {available}")]
    InsufficientLabel {
        label: &'static str,
        requested: usize,
        available: usize,
    },
    #[error("pool mixes star ratings {0} and {1}")]
    MixedStars(u8, u8),
    #[error("manifest references unknown review {0}")]
    UnknownReview(String),
}

fn read_lines<R: BufRead>(
    mut input: R,
    mut each: impl FnMut(usize, Result<&str, String>),
) -> io::Result<()> {
    let mut buf = Vec::new();
    let mut line_no = 0;
    loop {
        buf.clear();
        if input.read_until(b'\n', &mut buf)? == 0 {
            return Ok(());
        }
        line_no += 1;
        match std::str::from_utf8(&buf) {
            Ok(s) if s.trim().is_empty() => {}
            Ok(s) => each(line_no, Ok(s.trim_end_matches(['\n', '\r']))),
            Err(_) => each(line_no, Err("invalid UTF-8".to_owned())),
        }
    }
}

fn parse_review_line(line: &str) -> Result<Review, String> {
    let value: Value = serde_json::from_str(line).map_err(|e| format!("malformed record: {e}"))?;
    let obj = value.as_object().ok_or("record is not an object")?;
    let review_id = match obj.get("review_id") {
        Some(Value::String(s)) if !s.is_empty() => s.clone(),
        Some(Value::String(_)) => return Err("empty review_id".into()),
        Some(_) => return Err("review_id is not a string".into()),
        None => return Err("missing field review_id".into()),
    };
    let stars = match obj.get("stars") {
        Some(Value::Number(n)) => n
            .as_u64()
            .map(|v| v as f64)
            .or_else(|| n.as_f64())
            .ok_or("stars is not a number")?,
        Some(_) => return Err("stars is not a number".into()),
        None => return Err("missing field stars".into()),
    };
    // Some dataset releases store stars as 4.0; fractional ratings are rejected.
    if stars.fract() != 0.0 || !(1.0..=5.0).contains(&stars) {
        return Err(format!("stars out of range: {stars}"));
    }
    let text = match obj.get("text") {
        Some(Value::String(s)) if !s.trim().is_empty() => s.clone(),
        Some(Value::String(_)) => return Err("empty text".into()),
        Some(_) => return Err("text is not a string".into()),
        None => return Err("missing field text".into()),
    };
    Ok(Review {
        review_id,
        stars: stars as u8,
        text,
    })
}

/// Parses a review stream. Bad lines are collected with their line number;
/// only a failing reader aborts. Blank lines are skipped.
pub fn parse_review_stream<R: BufRead>(input: R) -> io::Result<(Vec<Review>, Vec<ParseError>)> {
    let mut reviews = Vec::new();
    let mut errors = Vec::new();
    let mut seen = HashSet::new();
    read_lines(input, |line, text| match text.and_then(parse_review_line) {
        Ok(r) if !seen.insert(r.review_id.clone()) => errors.push(ParseError {
            line,
            reason: format!("duplicate review_id {}", r.review_id),
        }),
        Ok(r) => reviews.push(r),
        Err(reason) => errors.push(ParseError { line, reason }),
    })?;
    Ok((reviews, errors))
}

pub fn parse_label_stream<R: BufRead>(
    input: R,
) -> io::Result<(Vec<SarcasmLabel>, Vec<ParseError>)> {
    let mut labels = Vec::new();
    let mut errors = Vec::new();
    read_lines(input, |line, text| {
        let parsed = text.and_then(|t| {
            let label: SarcasmLabel =
                serde_json::from_str(t).map_err(|e| format!("malformed label: {e}"))?;
            if label.review_id.is_empty() || label.annotator.is_empty() {
                return Err("empty review_id or annotator".to_owned());
            }
            Ok(label)
        });
        match parsed {
            Ok(l) => labels.push(l),
            Err(reason) => errors.push(ParseError { line, reason }),
        }
    })?;
    Ok((labels, errors))
}

pub fn write_jsonl<W: Write, T: Serialize>(mut out: W, records: &[T]) -> io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// Majority vote over annotators; an even split resolves to not sarcastic.
/// When one annotator labels the same review more than once, the later
/// record wins.
pub fn majority_vote<'a>(votes: impl IntoIterator<Item = &'a SarcasmLabel>) -> bool {
    let mut by_annotator: HashMap<&str, bool> = HashMap::new();
    for v in votes {
        by_annotator.insert(&v.annotator, v.sarcastic);
    }
    let yes = by_annotator.values().filter(|&&s| s).count();
    yes * 2 > by_annotator.len()
}

/// Attaches resolved labels to reviews, in review order. Reviews nobody
/// labeled are left out; labels for unknown reviews are ignored.
pub fn resolve_labels(reviews: &[Review], labels: &[SarcasmLabel]) -> Vec<LabeledReview> {
    let mut grouped: HashMap<&str, Vec<&SarcasmLabel>> = HashMap::new();
    for l in labels {
        grouped.entry(&l.review_id).or_default().push(l);
    }
    reviews
        .iter()
        .filter_map(|r| {
            grouped
                .get(r.review_id.as_str())
                .map(|votes| LabeledReview {
                    review: r.clone(),
                    sarcastic: majority_vote(votes.iter().copied()),
                })
        })
        .collect()
}

/// Buckets by star rating. The map always has the keys 1 through 5 and each
/// bucket keeps input order.
pub fn segregate_by_stars<T: Starred + Clone>(items: &[T]) -> BTreeMap<u8, Vec<T>> {
    let mut buckets: BTreeMap<u8, Vec<T>> = (1..=5).map(|s| (s, Vec::new())).collect();
    for item in items {
        buckets.entry(item.stars()).or_default().push(item.clone());
    }
    buckets
}

/// In-place Fisher–Yates shuffle driven by `seed`.
pub fn seeded_shuffle<T>(items: &mut [T], seed: u64) {
    use rand::Rng as _;
    let mut rng = rng::seeded(seed);
    for i in (1..items.len()).rev() {
        let j = rng.gen_range(0..=i);
        items.swap(i, j);
    }
}

fn single_star(pool: &[LabeledReview]) -> Result<Option<u8>, CorpusError> {
    let mut stars = None;
    for r in pool {
        match stars {
            None => stars = Some(r.stars()),
            Some(s) if s != r.stars() => return Err(CorpusError::MixedStars(s, r.stars())),
            Some(_) => {}
        }
    }
    Ok(stars)
}

/// Shuffles a single-star pool and takes the first `train_n` for training
/// and the next `test_n` for testing.
pub fn make_split(
    pool: &[LabeledReview],
    train_n: usize,
    test_n: usize,
    seed: u64,
) -> Result<DatasetSplit, CorpusError> {
    let need = train_n + test_n;
    if pool.len() < need || pool.is_empty() {
        return Err(CorpusError::InsufficientPool {
            need,
            have: pool.len(),
        });
    }
    let stars = single_star(pool)?.expect("pool is non-empty");
    let mut shuffled = pool.to_vec();
    seeded_shuffle(&mut shuffled, seed);
    shuffled.truncate(need);
    let test = shuffled.split_off(train_n);
    Ok(DatasetSplit {
        stars,
        train: shuffled,
        test,
        seed,
    })
}

/// Picks `n` reviews carrying the requested label via a seeded permutation.
pub fn curriculum_subset(
    pool: &[LabeledReview],
    want_sarcastic: bool,
    n: usize,
    seed: u64,
) -> Result<Vec<LabeledReview>, CorpusError> {
    let mut matching: Vec<LabeledReview> = pool
        .iter()
        .filter(|r| r.sarcastic == want_sarcastic)
        .cloned()
        .collect();
    if matching.len() < n {
        return Err(CorpusError::InsufficientLabel {
            label: if want_sarcastic {
                "sarcastic"
            } else {
                "non-sarcastic"
            },
            requested: n,
            available: matching.len(),
        });
    }
    seeded_shuffle(&mut matching, seed);
    matching.truncate(n);
    Ok(matching)
}

/// Auditable record of a split: enough to rebuild it from the corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub stars: u8,
    pub seed: u64,
    pub train_n: usize,
    pub test_n: usize,
    pub train: Vec<String>,
    pub test: Vec<String>,
}

impl SplitManifest {
    pub fn from_split(split: &DatasetSplit) -> Self {
        SplitManifest {
            stars: split.stars,
            seed: split.seed,
            train_n: split.train.len(),
            test_n: split.test.len(),
            train: split.train.iter().map(|r| r.id().to_owned()).collect(),
            test: split.test.iter().map(|r| r.id().to_owned()).collect(),
        }
    }

    pub fn resolve(&self, corpus: &[LabeledReview]) -> Result<DatasetSplit, CorpusError> {
        let index: HashMap<&str, &LabeledReview> = corpus.iter().map(|r| (r.id(), r)).collect();
        let lookup = |ids: &[String]| {
            ids.iter()
                .map(|id| {
                    index
                        .get(id.as_str())
                        .map(|r| (*r).clone())
                        .ok_or_else(|| CorpusError::UnknownReview(id.clone()))
                })
                .collect::<Result<Vec<_>, _>>()
        };
        Ok(DatasetSplit {
            stars: self.stars,
            train: lookup(&self.train)?,
            test: lookup(&self.test)?,
            seed: self.seed,
        })
    }
}
