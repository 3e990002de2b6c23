//! Evaluation reports: a machine-readable JSON document with full-precision
//! values, and a plain-text table laid out as metric rows by star columns.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::metrics::{macro_average, prf1, round2, ClassMetrics, ConfusionMatrix, MacroAverage};
use crate::provenance::Provenance;
use crate::train::{Evaluation, History, TrainConfig};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusDigest {
    pub reviews_sha256: String,
    pub labels_sha256: String,
    pub lexicons_sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StarResult {
    pub test_size: usize,
    pub confusion: ConfusionMatrix,
    pub metrics: ClassMetrics,
    pub excluded: Vec<(String, String)>,
}

impl StarResult {
    pub fn from_evaluation(test_size: usize, eval: Evaluation) -> Self {
        StarResult {
            test_size,
            metrics: prf1(&eval.confusion),
            confusion: eval.confusion,
            excluded: eval.excluded,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub provenance: Provenance,
    pub config: Option<TrainConfig>,
    pub corpus: CorpusDigest,
    pub stars: BTreeMap<u8, StarResult>,
    /// Present only when all five stars were evaluated.
    pub macro_average: Option<MacroAverage>,
    pub history: BTreeMap<u8, History>,
}

impl EvalReport {
    pub fn new(
        provenance: Provenance,
        config: Option<TrainConfig>,
        corpus: CorpusDigest,
        stars: BTreeMap<u8, StarResult>,
        history: BTreeMap<u8, History>,
    ) -> Self {
        let per_star: Vec<ClassMetrics> = stars.values().map(|r| r.metrics).collect();
        let macro_average = if stars.len() == 5 {
            macro_average(&per_star).ok()
        } else {
            None
        };
        EvalReport {
            provenance,
            config,
            corpus,
            stars,
            macro_average,
            history,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Precision/Recall/F1 rows over 1–5 star columns, then accuracy per star
    /// and the macro averages. Values are rounded to two decimals.
    pub fn render_table(&self) -> String {
        let cell = |star: u8, f: fn(&ClassMetrics) -> f64| {
            self.stars.get(&star).map_or_else(
                || "-".to_owned(),
                |r| format!("{:.2}", round2(f(&r.metrics))),
            )
        };
        let mut out = String::new();
        let _ = write!(out, "{:<10}", "Metric");
        for star in 1..=5 {
            let _ = write!(out, "{:>8}", format!("{star} star"));
        }
        out.push('\n');
        type Row = (&'static str, fn(&ClassMetrics) -> f64);
        let rows: [Row; 4] = [
            ("Precision", |m| m.precision),
            ("Recall", |m| m.recall),
            ("F1", |m| m.f1),
            ("Accuracy", |m| m.accuracy),
        ];
        for (name, f) in rows {
            let _ = write!(out, "{name:<10}");
            for star in 1..=5 {
                let _ = write!(out, "{:>8}", cell(star, f));
            }
            out.push('\n');
        }
        if let Some(m) = &self.macro_average {
            let _ = writeln!(
                out,
                "Macro average: precision {:.2}, recall {:.2}, F1 {:.2}",
                round2(m.precision),
                round2(m.recall),
                round2(m.f1)
            );
        }
        let excluded: usize = self.stars.values().map(|r| r.excluded.len()).sum();
        if excluded > 0 {
            let _ = writeln!(out, "Excluded reviews: {excluded}");
        }
        out
    }
}
