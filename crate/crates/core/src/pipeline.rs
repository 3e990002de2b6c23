//! End-to-end orchestration over files: load a corpus, build the per-star
//! splits, train one model per star, and evaluate them into a report.
//!
//! Stars are independent, so training fans out one thread per star. Each
//! star's split seed is derived from the run seed and the star value; the
//! model seed is the run seed itself.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufReader};
use std::path::{Path, PathBuf};
use std::thread;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{
    self, make_split, parse_label_stream, parse_review_stream, resolve_labels, segregate_by_stars,
    CorpusError, DatasetSplit, LabeledReview, ParseError, Review, SarcasmLabel, SplitManifest,
};
use crate::features::FeatureExtractor;
use crate::network::{MlpModel, NetworkError};
use crate::provenance::{digest_bytes, Provenance};
use crate::report::{CorpusDigest, EvalReport, StarResult};
use crate::rng;
use crate::train::{self, History, TrainConfig, TrainError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {reason}")]
    BadFile { path: PathBuf, reason: String },
    #[error("star {stars}: {source}")]
    Corpus {
        stars: u8,
        #[source]
        source: CorpusError,
    },
    #[error("star {stars}: {source}")]
    Train {
        stars: u8,
        #[source]
        source: TrainError,
    },
    #[error(transparent)]
    Network(#[from] NetworkError),
}

impl PipelineError {
    /// True when the failure comes from the input data rather than from the
    /// computation itself.
    pub fn is_data_error(&self) -> bool {
        match self {
            PipelineError::Read { .. }
            | PipelineError::BadFile { .. }
            | PipelineError::Corpus { .. } => true,
            PipelineError::Train { source, .. } => matches!(
                source,
                TrainError::Corpus(_) | TrainError::Feature { .. } | TrainError::InvalidConfig(_)
            ),
            PipelineError::Write { .. } | PipelineError::Network(_) => false,
        }
    }
}

pub fn read_file(path: &Path) -> Result<Vec<u8>, PipelineError> {
    fs::read(path).map_err(|source| PipelineError::Read {
        path: path.to_owned(),
        source,
    })
}

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), PipelineError> {
    let wrap = |source| PipelineError::Write {
        path: path.to_owned(),
        source,
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(wrap)?;
    }
    fs::write(path, contents).map_err(wrap)
}

/// Parsed review and label files plus their digests.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub reviews: Vec<Review>,
    pub labels: Vec<SarcasmLabel>,
    pub review_errors: Vec<ParseError>,
    pub label_errors: Vec<ParseError>,
    pub labeled: Vec<LabeledReview>,
    pub reviews_sha256: String,
    pub labels_sha256: String,
}

impl Corpus {
    pub fn load(reviews: &Path, labels: Option<&Path>) -> Result<Self, PipelineError> {
        let review_bytes = read_file(reviews)?;
        let (reviews_parsed, review_errors) =
            parse_review_stream(BufReader::new(&review_bytes[..])).map_err(|source| {
                PipelineError::Read {
                    path: reviews.to_owned(),
                    source,
                }
            })?;
        let label_bytes = match labels {
            Some(p) => read_file(p)?,
            None => Vec::new(),
        };
        let (labels_parsed, label_errors) = parse_label_stream(BufReader::new(&label_bytes[..]))
            .map_err(|source| PipelineError::Read {
                path: labels.unwrap_or(Path::new("-")).to_owned(),
                source,
            })?;
        let labeled = resolve_labels(&reviews_parsed, &labels_parsed);
        Ok(Corpus {
            reviews: reviews_parsed,
            labels: labels_parsed,
            review_errors,
            label_errors,
            labeled,
            reviews_sha256: digest_bytes(&review_bytes),
            labels_sha256: digest_bytes(&label_bytes),
        })
    }

    pub fn digest(&self, extractor: &FeatureExtractor) -> CorpusDigest {
        CorpusDigest {
            reviews_sha256: self.reviews_sha256.clone(),
            labels_sha256: self.labels_sha256.clone(),
            lexicons_sha256: extractor.lexicons().digest().to_owned(),
        }
    }

    pub fn labeled_by_star(&self) -> BTreeMap<u8, Vec<LabeledReview>> {
        segregate_by_stars(&self.labeled)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub train_n: usize,
    pub test_n: usize,
    pub seed: u64,
}

impl Default for SplitPlan {
    fn default() -> Self {
        SplitPlan {
            train_n: 700,
            test_n: 300,
            seed: 0,
        }
    }
}

impl SplitPlan {
    pub fn star_seed(&self, stars: u8) -> u64 {
        rng::derive_seed(self.seed, u64::from(stars))
    }

    pub fn split(&self, corpus: &Corpus, stars: u8) -> Result<DatasetSplit, PipelineError> {
        let buckets = corpus.labeled_by_star();
        let pool = buckets.get(&stars).map(Vec::as_slice).unwrap_or_default();
        make_split(pool, self.train_n, self.test_n, self.star_seed(stars))
            .map_err(|source| PipelineError::Corpus { stars, source })
    }
}

/// Split manifest as written to disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestFile {
    pub provenance: Provenance,
    #[serde(flatten)]
    pub manifest: SplitManifest,
}

/// Training history as written to disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryFile {
    pub provenance: Provenance,
    pub stars: u8,
    pub records: Vec<train::EpochRecord>,
}

/// Settings of a training run, stored next to the models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub train: TrainConfig,
    pub split: SplitPlan,
}

impl RunConfig {
    pub fn provenance(&self) -> Provenance {
        Provenance::new(self.train.seed, self)
    }
}

/// `run.json`: the run settings under a provenance stanza.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFile {
    pub provenance: Provenance,
    #[serde(flatten)]
    pub run: RunConfig,
}

pub fn save_run_config(dir: &Path, run: &RunConfig) -> Result<(), PipelineError> {
    let file = RunFile {
        provenance: run.provenance(),
        run: run.clone(),
    };
    write_file(&run_config_path(dir), to_pretty_json(&file))
}

pub fn model_path(dir: &Path, stars: u8) -> PathBuf {
    dir.join(format!("star{stars}.model.json"))
}

pub fn history_path(dir: &Path, stars: u8) -> PathBuf {
    dir.join(format!("star{stars}.history.json"))
}

pub fn manifest_path(dir: &Path, stars: u8) -> PathBuf {
    dir.join(format!("star{stars}.split.json"))
}

pub fn run_config_path(dir: &Path) -> PathBuf {
    dir.join("run.json")
}

pub struct StarRun {
    pub stars: u8,
    pub split: DatasetSplit,
    pub model: MlpModel,
    pub history: History,
}

pub fn train_star(
    corpus: &Corpus,
    stars: u8,
    run: &RunConfig,
    extractor: &FeatureExtractor,
) -> Result<StarRun, PipelineError> {
    let split = run.split.split(corpus, stars)?;
    let (model, history) = train::train(&split, &corpus.labeled, &run.train, extractor)
        .map_err(|source| PipelineError::Train { stars, source })?;
    Ok(StarRun {
        stars,
        split,
        model,
        history,
    })
}

/// Trains every requested star on its own thread; results come back in the
/// order of `stars`.
pub fn train_stars(
    corpus: &Corpus,
    stars: &[u8],
    run: &RunConfig,
    extractor: &FeatureExtractor,
) -> Vec<Result<StarRun, PipelineError>> {
    thread::scope(|scope| {
        let handles: Vec<_> = stars
            .iter()
            .map(|&s| scope.spawn(move || train_star(corpus, s, run, extractor)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("training thread panicked"))
            .collect()
    })
}

/// Writes model, history and split manifest for one star into `dir`.
pub fn save_star_run(dir: &Path, run: &StarRun, config: &RunConfig) -> Result<(), PipelineError> {
    let provenance = config.provenance();
    write_file(
        &model_path(dir, run.stars),
        run.model.to_json(Some(&provenance)),
    )?;
    let history = HistoryFile {
        provenance: provenance.clone(),
        stars: run.stars,
        records: run.history.records.clone(),
    };
    write_file(&history_path(dir, run.stars), to_pretty_json(&history))?;
    let manifest = ManifestFile {
        provenance,
        manifest: SplitManifest::from_split(&run.split),
    };
    write_file(&manifest_path(dir, run.stars), to_pretty_json(&manifest))?;
    Ok(())
}

pub fn to_pretty_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn parse_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, PipelineError> {
    let bytes = read_file(path)?;
    serde_json::from_slice(&bytes).map_err(|e| PipelineError::BadFile {
        path: path.to_owned(),
        reason: e.to_string(),
    })
}

pub fn load_model(path: &Path) -> Result<MlpModel, PipelineError> {
    let bytes = read_file(path)?;
    let text = String::from_utf8(bytes).map_err(|_| PipelineError::BadFile {
        path: path.to_owned(),
        reason: "not UTF-8".into(),
    })?;
    MlpModel::from_json(&text)
        .map(|(m, _)| m)
        .map_err(|e| PipelineError::BadFile {
            path: path.to_owned(),
            reason: e.to_string(),
        })
}

/// Evaluates the models saved in `dir` for the given stars on the test sets
/// recorded in their split manifests.
pub fn evaluate_dir(
    corpus: &Corpus,
    dir: &Path,
    stars: &[u8],
    extractor: &FeatureExtractor,
) -> Result<EvalReport, PipelineError> {
    let run_config: Option<RunConfig> = {
        let p = run_config_path(dir);
        if p.exists() {
            Some(parse_json::<RunFile>(&p)?.run)
        } else {
            None
        }
    };
    let mut results = BTreeMap::new();
    let mut histories = BTreeMap::new();
    for &s in stars {
        let model = load_model(&model_path(dir, s))?;
        let manifest: ManifestFile = parse_json(&manifest_path(dir, s))?;
        let split = manifest
            .manifest
            .resolve(&corpus.labeled)
            .map_err(|source| PipelineError::Corpus { stars: s, source })?;
        let eval = train::evaluate(&model, &split.test, extractor)?;
        results.insert(s, StarResult::from_evaluation(split.test.len(), eval));
        let hp = history_path(dir, s);
        if hp.exists() {
            let h: HistoryFile = parse_json(&hp)?;
            histories.insert(s, History { records: h.records });
        }
    }
    let provenance = match &run_config {
        Some(rc) => rc.provenance(),
        None => Provenance::new(0, &Option::<RunConfig>::None),
    };
    Ok(EvalReport::new(
        provenance,
        run_config.map(|rc| rc.train),
        corpus.digest(extractor),
        results,
        histories,
    ))
}

/// Writes the bundled mini-corpus files into `dir`.
pub fn write_mini_corpus(dir: &Path, per_star: usize, seed: u64) -> Result<(), PipelineError> {
    let (reviews, labels) = corpus::synthetic::generate(per_star, seed);
    let mut buf = Vec::new();
    corpus::write_jsonl(&mut buf, &reviews).expect("in-memory write");
    write_file(&dir.join("reviews.jsonl"), &buf)?;
    buf.clear();
    corpus::write_jsonl(&mut buf, &labels).expect("in-memory write");
    write_file(&dir.join("labels.jsonl"), &buf)
}
