//! Curriculum-staged minibatch training, evaluation and learning-rate sweeps.
//!
//! Training runs a list of stages in order. Each stage has its own example
//! set (a sarcastic-only subset, a non-sarcastic-dominated subset, or the
//! main training split), shuffles it once with a stage-specific seed,
//! partitions it into fixed batches and runs `epochs` passes of Adam over
//! the mean batch cross-entropy.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{self, CorpusError, DatasetSplit, LabeledReview};
use crate::features::{FeaturePipeline, FeatureVector};
use crate::metrics::{prf1, ConfusionMatrix};
use crate::network::{
    adam_step, cross_entropy, init_model, AdamState, Gradients, MlpConfig, MlpModel, Mode,
    NetworkError,
};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stage {
    /// `n` reviews, all sarcastic.
    SarcasticOnly { n: usize },
    /// `n` reviews with `ratio` non-sarcastic for every sarcastic one.
    NonSarcasticDominated { ratio: u32, n: usize },
    /// The split's training set.
    Main,
}

impl Stage {
    pub fn name(&self) -> &'static str {
        match self {
            Stage::SarcasticOnly { .. } => "sarcastic",
            Stage::NonSarcasticDominated { .. } => "nonsarcastic",
            Stage::Main => "main",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stage::SarcasticOnly { n } => write!(f, "sarcastic:{n}"),
            Stage::NonSarcasticDominated { ratio, n } => write!(f, "nonsarcastic:{ratio}:{n}"),
            Stage::Main => f.write_str("main"),
        }
    }
}

impl FromStr for Stage {
    type Err = String;

    /// `sarcastic:N`, `nonsarcastic:RATIO:N` or `main`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |p: &str| {
            p.parse::<usize>()
                .map_err(|_| format!("invalid count {p:?} in stage {s:?}"))
        };
        match parts.as_slice() {
            ["main"] => Ok(Stage::Main),
            ["sarcastic", n] => Ok(Stage::SarcasticOnly { n: num(n)? }),
            ["nonsarcastic", ratio, n] => Ok(Stage::NonSarcasticDominated {
                ratio: ratio
                    .parse()
                    .map_err(|_| format!("invalid ratio {ratio:?} in stage {s:?}"))?,
                n: num(n)?,
            }),
            _ => Err(format!(
                "unknown stage {s:?} (expected sarcastic:N, nonsarcastic:RATIO:N or main)"
            )),
        }
    }
}

pub fn default_stages() -> Vec<Stage> {
    vec![
        Stage::SarcasticOnly { n: 500 },
        Stage::NonSarcasticDominated { ratio: 3, n: 500 },
        Stage::Main,
    ]
}

/// Ascending grid `start · factor^k` for every k keeping the value ≥ `floor`.
pub fn decay_grid(start: f64, factor: f64, floor: f64) -> Vec<f64> {
    assert!(factor > 0.0 && factor < 1.0 && start > 0.0 && floor > 0.0);
    let mut grid = Vec::new();
    let mut lr = start;
    while lr >= floor {
        grid.push(lr);
        lr *= factor;
    }
    grid.reverse();
    grid
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub hidden: Vec<usize>,
    pub keep_prob: f64,
    pub stages: Vec<Stage>,
    pub lr_grid: Vec<f64>,
    pub seed: u64,
    /// Start every stage with fresh Adam moments.
    pub reset_adam_per_stage: bool,
    /// Reshuffle and re-batch every epoch instead of once per stage.
    pub reshuffle_each_epoch: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 0.01,
            epochs: 10,
            batch_size: 100,
            hidden: vec![15, 15],
            keep_prob: 0.75,
            stages: default_stages(),
            lr_grid: vec![1e-4, 1e-3, 1e-2],
            seed: 0,
            reset_adam_per_stage: true,
            reshuffle_each_epoch: false,
        }
    }
}

impl TrainConfig {
    pub fn network_config(&self) -> MlpConfig {
        MlpConfig::new(self.hidden.clone(), self.keep_prob, self.seed)
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: String| Err(TrainError::InvalidConfig(m));
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad(format!("lr must be positive, got {}", self.lr));
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1".into());
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1".into());
        }
        if self.stages.is_empty() {
            return bad("at least one stage is required".into());
        }
        if self.lr_grid.is_empty() {
            return bad("lr_grid must not be empty".into());
        }
        if self.lr_grid.windows(2).any(|w| w[0] >= w[1]) || self.lr_grid.iter().any(|&v| v <= 0.0) {
            return bad("lr_grid must be positive and strictly ascending".into());
        }
        self.network_config()
            .validate()
            .map_err(|e| TrainError::InvalidConfig(e.to_string()))
    }
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("feature extraction failed for review {id}: {reason}")]
    Feature { id: String, reason: String },
    #[error("training diverged in stage {stage} ({name}), epoch {epoch}, batch {batch}: {reason}")]
    Diverged {
        stage: usize,
        name: &'static str,
        epoch: usize,
        batch: usize,
        reason: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Example {
    pub x: FeatureVector,
    pub sarcastic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub stage: usize,
    pub stage_name: String,
    /// One-based.
    pub epoch: usize,
    pub mean_loss: f64,
    pub train_accuracy: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub records: Vec<EpochRecord>,
}

impl History {
    pub fn stage(&self, stage: usize) -> impl Iterator<Item = &EpochRecord> {
        self.records.iter().filter(move |r| r.stage == stage)
    }
}

// Stream tags for seeds derived from TrainConfig::seed.
const DROPOUT_STREAM: u64 = 1;
const STAGE_SHUFFLE_STREAM: u64 = 100;
const CURRICULUM_STREAM: u64 = 200;

fn infer_accuracy(model: &MlpModel, examples: &[Example]) -> Result<f64, NetworkError> {
    if examples.is_empty() {
        return Ok(0.0);
    }
    let mut correct = 0usize;
    for e in examples {
        if model.predict(e.x.as_slice())?.sarcastic == e.sarcastic {
            correct += 1;
        }
    }
    Ok(correct as f64 / examples.len() as f64)
}

/// Runs the given stages on an existing model. Stage example sets are
/// already feature vectors; this is the part of [`train`] that needs no text.
pub fn fit(
    model: &mut MlpModel,
    stages: &[(&'static str, Vec<Example>)],
    config: &TrainConfig,
) -> Result<History, TrainError> {
    let mut history = History::default();
    let mut dropout_rng = rng::seeded(rng::derive_seed(config.seed, DROPOUT_STREAM));
    let mut adam = AdamState::new(model);

    for (s, (name, examples)) in stages.iter().enumerate() {
        if config.reset_adam_per_stage {
            adam = AdamState::new(model);
        }
        let stage_seed = rng::derive_seed(config.seed, STAGE_SHUFFLE_STREAM + s as u64);
        let mut order: Vec<usize> = (0..examples.len()).collect();
        corpus::seeded_shuffle(&mut order, stage_seed);

        for epoch in 1..=config.epochs {
            if config.reshuffle_each_epoch && epoch > 1 {
                corpus::seeded_shuffle(&mut order, rng::derive_seed(stage_seed, epoch as u64));
            }
            let mut loss_sum = 0.0;
            for (b, batch) in order.chunks(config.batch_size).enumerate() {
                let diverged = |reason: String| TrainError::Diverged {
                    stage: s,
                    name,
                    epoch,
                    batch: b + 1,
                    reason,
                };
                let mut grads = Gradients::zeros_like(model);
                for &i in batch {
                    let e = &examples[i];
                    let class = usize::from(e.sarcastic);
                    let trace = model.forward(e.x.as_slice(), Mode::Train(&mut dropout_rng))?;
                    if trace.probs.iter().any(|p| !p.is_finite()) {
                        return Err(diverged("non-finite output probabilities".into()));
                    }
                    let loss = cross_entropy(&trace.probs, class);
                    if !loss.is_finite() {
                        return Err(diverged(format!("loss {loss}")));
                    }
                    loss_sum += loss;
                    grads.accumulate(&model.backward(&trace, class)?);
                }
                grads.scale(1.0 / batch.len() as f64);
                adam_step(model, &grads, &mut adam, config.lr).map_err(|e| match e {
                    NetworkError::NonFiniteGradient(_) => diverged(e.to_string()),
                    other => TrainError::Network(other),
                })?;
            }
            history.records.push(EpochRecord {
                stage: s,
                stage_name: (*name).to_owned(),
                epoch,
                mean_loss: if examples.is_empty() {
                    0.0
                } else {
                    loss_sum / examples.len() as f64
                },
                train_accuracy: infer_accuracy(model, examples)?,
            });
        }
    }
    Ok(history)
}

fn to_examples<P: FeaturePipeline + ?Sized>(
    reviews: &[LabeledReview],
    pipeline: &P,
) -> Result<Vec<Example>, TrainError> {
    reviews
        .iter()
        .map(|r| {
            pipeline
                .features(&r.review.text)
                .map(|x| Example {
                    x,
                    sarcastic: r.sarcastic,
                })
                .map_err(|e| TrainError::Feature {
                    id: r.id().to_owned(),
                    reason: e.to_string(),
                })
        })
        .collect()
}

/// Reviews for one stage. Curriculum stages draw from `pool`.
pub fn stage_reviews(
    stage: &Stage,
    index: usize,
    split: &DatasetSplit,
    pool: &[LabeledReview],
    seed: u64,
) -> Result<Vec<LabeledReview>, CorpusError> {
    let seed = rng::derive_seed(seed, CURRICULUM_STREAM + index as u64);
    match *stage {
        Stage::SarcasticOnly { n } => corpus::curriculum_subset(pool, true, n, seed),
        Stage::NonSarcasticDominated { ratio, n } => {
            let sarcastic = n / (ratio as usize + 1);
            let mut picked = corpus::curriculum_subset(pool, false, n - sarcastic, seed)?;
            picked.extend(corpus::curriculum_subset(
                pool,
                true,
                sarcastic,
                rng::derive_seed(seed, 1),
            )?);
            Ok(picked)
        }
        Stage::Main => Ok(split.train.clone()),
    }
}

/// Initializes a model from the config seed and trains it through every stage.
///
/// Reviews in `split.test` are removed from `pool` before any curriculum
/// subset is drawn.
pub fn train<P: FeaturePipeline + ?Sized>(
    split: &DatasetSplit,
    pool: &[LabeledReview],
    config: &TrainConfig,
    pipeline: &P,
) -> Result<(MlpModel, History), TrainError> {
    config.validate()?;
    if config.batch_size > split.train.len() {
        return Err(TrainError::InvalidConfig(format!(
            "batch_size {} exceeds training set size {}",
            config.batch_size,
            split.train.len()
        )));
    }
    let held_out: HashSet<&str> = split.test.iter().map(|r| r.id()).collect();
    let pool: Vec<LabeledReview> = pool
        .iter()
        .filter(|r| !held_out.contains(r.id()))
        .cloned()
        .collect();

    let mut stages = Vec::with_capacity(config.stages.len());
    for (i, stage) in config.stages.iter().enumerate() {
        let reviews = stage_reviews(stage, i, split, &pool, config.seed)?;
        stages.push((stage.name(), to_examples(&reviews, pipeline)?));
    }
    let mut model = init_model(&config.network_config())?;
    let history = fit(&mut model, &stages, config)?;
    Ok((model, history))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub confusion: ConfusionMatrix,
    /// Reviews the pipeline could not featurize, with the reason.
    pub excluded: Vec<(String, String)>,
}

/// Tallies predictions on `test` against the resolved labels. The model is
/// only read.
pub fn evaluate<P: FeaturePipeline + ?Sized>(
    model: &MlpModel,
    test: &[LabeledReview],
    pipeline: &P,
) -> Result<Evaluation, NetworkError> {
    let mut out = Evaluation::default();
    for r in test {
        match pipeline.features(&r.review.text) {
            Ok(x) => {
                let p = model.predict(x.as_slice())?;
                out.confusion.record(p.sarcastic, r.sarcastic);
            }
            Err(e) => out.excluded.push((r.id().to_owned(), e.to_string())),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub lr: f64,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Trains and evaluates once per grid point with the same seeds, ranked by
/// test accuracy (ties go to the lower learning rate).
pub fn lr_sweep<P: FeaturePipeline + ?Sized>(
    split: &DatasetSplit,
    pool: &[LabeledReview],
    config: &TrainConfig,
    pipeline: &P,
) -> Result<Vec<SweepRow>, TrainError> {
    config.validate()?;
    let mut rows = Vec::with_capacity(config.lr_grid.len());
    for &lr in &config.lr_grid {
        let cfg = TrainConfig {
            lr,
            ..config.clone()
        };
        let (model, _) = train(split, pool, &cfg, pipeline)?;
        let m = prf1(&evaluate(&model, &split.test, pipeline)?.confusion);
        rows.push(SweepRow {
            lr,
            accuracy: m.accuracy,
            precision: m.precision,
            recall: m.recall,
            f1: m.f1,
        });
    }
    rows.sort_by(|a, b| {
        b.accuracy
            .total_cmp(&a.accuracy)
            .then(a.lr.total_cmp(&b.lr))
    });
    Ok(rows)
}
