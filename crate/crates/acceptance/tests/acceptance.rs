//! Acceptance suite. Each criterion prints one PASS/FAIL line; the process
//! exits non-zero if any criterion fails.

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sarcasm::corpus::{make_split, LabeledReview, Review};
use sarcasm::features::{write_feature_dump, DumpRow, FeatureExtractor, FeatureVector};
use sarcasm::lexicon::{LexiconKind, Lexicons};
use sarcasm::metrics::{f1_score, macro_average, prf1, round2, ClassMetrics};
use sarcasm::network::{
    adam_step, cross_entropy, init_model, softmax, AdamState, Gradients, MlpConfig, Mode,
};
use sarcasm::provenance::Provenance;
use sarcasm::train::{fit, Example, Stage, TrainConfig};
use sarcasm_acceptance::{
    brute_force_confusion, certifies, finite_difference_gradient, reference_adam, reference_loss,
    reference_metrics, relative_error, separable_set, separating_hyperplane,
};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(elapsed: Duration, limit: Duration, detail: String) -> Outcome {
    check(
        elapsed < limit,
        format!(
            "{detail}; {:.2}s of {:.0}s budget",
            elapsed.as_secs_f64(),
            limit.as_secs_f64()
        ),
    )
}

/// Reference precision, recall and F1 per star, 1 to 5, each given to two decimals.
const TABLE: [(f64, f64, f64); 5] = [
    (0.67, 0.77, 0.71),
    (0.78, 0.61, 0.68),
    (0.74, 0.77, 0.75),
    (0.66, 0.72, 0.69),
    (0.54, 0.68, 0.61),
];

fn table_arithmetic() -> Outcome {
    let start = Instant::now();
    let mut mismatches = Vec::new();
    let per_star: Vec<ClassMetrics> = TABLE
        .iter()
        .enumerate()
        .map(|(i, &(p, r, reported))| {
            let f1 = f1_score(p, r);
            if round2(f1) != reported {
                mismatches.push(format!(
                    "{} star: F1({p}, {r}) = {f1:.4} rounds to {:.2}, reported {reported:.2}",
                    i + 1,
                    round2(f1)
                ));
            }
            ClassMetrics {
                precision: p,
                recall: r,
                f1,
                accuracy: 0.0,
            }
        })
        .collect();
    let avg = macro_average(&per_star).map_err(|e| e.to_string())?;
    let p_bar = (avg.precision * 1000.0).round() / 1000.0;
    if p_bar != 0.678 {
        mismatches.push(format!("mean precision {p_bar}, expected 0.678"));
    }
    if round2(avg.recall) != 0.71 {
        mismatches.push(format!("mean recall {}, expected 0.71", avg.recall));
    }
    let summary = format!(
        "mean P {:.3}, mean R {:.2}, mean F1 {:.4}",
        avg.precision, avg.recall, avg.f1
    );
    if !mismatches.is_empty() {
        return Err(format!("{}; {summary}", mismatches.join("; ")));
    }
    within(start.elapsed(), Duration::from_secs(1), summary)
}

fn gradient_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    let mut instances = 0;
    let mut depths = [0usize; 2];
    for i in 0..24u64 {
        let layers = 1 + (i % 2) as usize;
        let hidden: Vec<usize> = (0..layers).map(|_| rng.gen_range(7..=15)).collect();
        let model =
            init_model(&MlpConfig::new(hidden, 0.75, 1000 + i)).map_err(|e| e.to_string())?;
        let x: Vec<f64> = (0..15).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let class = rng.gen_range(0..2);
        let trace = model.forward(&x, Mode::Infer).map_err(|e| e.to_string())?;
        let grads = model.backward(&trace, class).map_err(|e| e.to_string())?;
        let analytic: Vec<f64> = grads
            .layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias).copied())
            .collect();
        let loss_gap =
            (cross_entropy(&trace.probs, class) - reference_loss(&model, &x, class)).abs();
        if loss_gap > 1e-12 {
            return Err(format!(
                "instance {i}: forward loss differs from reference by {loss_gap:e}"
            ));
        }
        let numeric = finite_difference_gradient(&model, &x, class, 1e-5);
        let err = relative_error(&analytic, &numeric);
        worst = worst.max(err);
        instances += 1;
        depths[layers - 1] += 1;
        if err >= 1e-4 {
            return Err(format!(
                "instance {i} ({layers} hidden): relative error {err:e}"
            ));
        }
    }
    within(
        start.elapsed(),
        Duration::from_secs(10),
        format!(
            "{instances} instances ({} one-layer, {} two-layer), worst relative error {worst:.2e}",
            depths[0], depths[1]
        ),
    )
}

fn adam_oracle() -> Outcome {
    let mut model = init_model(&MlpConfig::new(vec![7], 1.0, 3)).map_err(|e| e.to_string())?;
    let mut zeros = Gradients::zeros_like(&model);
    model.layers = zeros.layers.clone();
    let mut ones = zeros.clone();
    for l in &mut ones.layers {
        l.weights.iter_mut().for_each(|v| *v = 1.0);
        l.bias.iter_mut().for_each(|v| *v = 1.0);
    }
    let mut state = AdamState::new(&model);
    adam_step(&mut model, &ones, &mut state, 0.01).map_err(|e| e.to_string())?;
    let expected = reference_adam(0.0, &[1.0], 0.01)[0];
    let worst = model
        .layers
        .iter()
        .flat_map(|l| l.weights.iter().chain(&l.bias))
        .map(|w| (w + 0.01).abs().max((w - expected).abs()))
        .fold(0.0, f64::max);
    if worst >= 1e-9 {
        return Err(format!("first step off by {worst:e}"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let seq: Vec<f64> = (0..25).map(|_| rng.gen_range(-3.0..3.0)).collect();
    let mut model = init_model(&MlpConfig::new(vec![7], 1.0, 3)).map_err(|e| e.to_string())?;
    let w0 = model.layers[0].weights[0];
    let mut state = AdamState::new(&model);
    let mut g = Gradients::zeros_like(&model);
    for (step, &gv) in seq.iter().enumerate() {
        g.layers[0].weights[0] = gv;
        adam_step(&mut model, &g, &mut state, 0.003).map_err(|e| e.to_string())?;
        let want = reference_adam(w0, &seq[..=step], 0.003)[step];
        if (model.layers[0].weights[0] - want).abs() > 1e-12 {
            return Err(format!("step {} diverges from scalar reference", step + 1));
        }
    }

    let mut model =
        init_model(&MlpConfig::new(vec![15, 15], 0.75, 9)).map_err(|e| e.to_string())?;
    let before = model.clone();
    let mut state = AdamState::new(&model);
    zeros = Gradients::zeros_like(&model);
    for _ in 0..5 {
        adam_step(&mut model, &zeros, &mut state, 0.01).map_err(|e| e.to_string())?;
    }
    let identical = model.layers.iter().zip(&before.layers).all(|(a, b)| {
        a.weights
            .iter()
            .zip(&b.weights)
            .all(|(x, y)| x.to_bits() == y.to_bits())
            && a.bias
                .iter()
                .zip(&b.bias)
                .all(|(x, y)| x.to_bits() == y.to_bits())
    });
    check(
        identical,
        format!("first step {expected:.12} (|err| {worst:.1e}); 25-step scalar trace matches; zero-gradient steps bit-identical: {identical}"),
    )
}

fn softmax_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    let mut cases: Vec<[f64; 2]> = vec![
        [1e6, -1e6],
        [-1e6, 1e6],
        [1e6, 1e6],
        [-1e6, -1e6],
        [0.0, 0.0],
    ];
    for _ in 0..10_000 {
        let scale = 10f64.powf(rng.gen_range(-3.0..6.0));
        cases.push([
            rng.gen_range(-1.0..1.0) * scale,
            rng.gen_range(-1.0..1.0) * scale,
        ]);
    }
    for c in &cases {
        let p = softmax(c);
        if p.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(format!("softmax({c:?}) = {p:?}"));
        }
        worst = worst.max((p.iter().sum::<f64>() - 1.0).abs());
    }
    let ln2 = std::f64::consts::LN_2;
    let ce_gap = (0..2)
        .map(|y| (cross_entropy(&[0.5, 0.5], y) - ln2).abs())
        .fold(0.0, f64::max);
    check(
        worst <= 1e-12 && ce_gap <= 1e-12,
        format!(
            "{} logit pairs up to 1e6, max |sum - 1| {worst:.1e}; |CE - ln 2| {ce_gap:.1e}",
            cases.len()
        ),
    )
}

fn dropout_properties() -> Outcome {
    let model = init_model(&MlpConfig::new(vec![15, 15], 0.75, 8)).map_err(|e| e.to_string())?;
    let mut rng = sarcasm::rng::seeded(77);
    let x = vec![0.5; 15];
    let scaled = 1.0 / 0.75;
    let (mut kept, mut total) = (0usize, 0usize);
    while total < 100_000 {
        let trace = model
            .forward(&x, Mode::Train(&mut rng))
            .map_err(|e| e.to_string())?;
        for mask in trace.masks.unwrap_or_default() {
            for m in mask {
                if m != 0.0 && m != scaled {
                    return Err(format!("mask entry {m}"));
                }
                kept += usize::from(m != 0.0);
                total += 1;
            }
        }
    }
    let rate = kept as f64 / total as f64;

    let full = init_model(&MlpConfig::new(vec![11, 9], 1.0, 8)).map_err(|e| e.to_string())?;
    let mut probe = ChaCha8Rng::seed_from_u64(2);
    let mut same = true;
    for _ in 0..100 {
        let x: Vec<f64> = (0..15).map(|_| probe.gen_range(0.0..1.0)).collect();
        let t = full
            .forward(&x, Mode::Train(&mut rng))
            .map_err(|e| e.to_string())?;
        let i = full.forward(&x, Mode::Infer).map_err(|e| e.to_string())?;
        same &= t.probs == i.probs && t.hidden == i.hidden;
    }
    check(
        (rate - 0.75).abs() <= 0.01 && same,
        format!(
            "keep rate {rate:.4} over {total} mask entries; keep_prob 1 train == infer: {same}"
        ),
    )
}

fn overfit_sanity() -> Outcome {
    let start = Instant::now();
    let (xs, ys) = separable_set(40, 40);
    let (w, b) = separating_hyperplane(&xs, &ys, 100_000)
        .ok_or_else(|| "oracle found no separating hyperplane".to_owned())?;
    if !certifies(&xs, &ys, &w, b) {
        return Err("separability certificate rejected".into());
    }
    let examples: Vec<Example> = xs
        .iter()
        .zip(&ys)
        .map(|(x, &sarcastic)| {
            let mut v = FeatureVector::zeros();
            v.0.copy_from_slice(x);
            Example { x: v, sarcastic }
        })
        .collect();
    let config = TrainConfig {
        lr: 0.01,
        hidden: vec![15, 15],
        epochs: 200,
        batch_size: 10,
        stages: vec![Stage::Main],
        seed: 6,
        ..TrainConfig::default()
    };
    let mut model = init_model(&config.network_config()).map_err(|e| e.to_string())?;
    let history = fit(&mut model, &[("main", examples)], &config).map_err(|e| e.to_string())?;
    let first = history.records.iter().find(|r| r.train_accuracy == 1.0);
    let detail = match first {
        Some(r) => format!(
            "separable set certified; train accuracy 1.0 at epoch {}",
            r.epoch
        ),
        None => format!(
            "separable set certified; best train accuracy {:.3} after 200 epochs",
            history
                .records
                .iter()
                .map(|r| r.train_accuracy)
                .fold(0.0, f64::max)
        ),
    };
    if first.is_none() {
        return Err(detail);
    }
    within(start.elapsed(), Duration::from_secs(30), detail)
}

fn dump_digest(extractor: &FeatureExtractor, texts: &[&str]) -> std::io::Result<String> {
    let rows: Vec<DumpRow<'_>> = texts
        .iter()
        .enumerate()
        .map(|(i, t)| DumpRow {
            review_id: ["m1", "m2"][i],
            label: Some(true),
            counts: extractor.counts(t),
        })
        .collect();
    write_feature_dump(
        std::io::sink(),
        &rows,
        extractor.lexicons(),
        &Provenance::new(0, &"fixtures"),
    )
}

fn pipeline_fixtures() -> Outcome {
    let extractor = FeatureExtractor::new(Lexicons::bundled());
    let fixtures: [(&str, &[usize], u32); 2] = [
        (
            "Haha! I'm trying to imagine you with a personality!!",
            &[1, 7, 11, 14],
            9,
        ),
        ("God! Aren't we clever??", &[2, 4, 8, 11, 15], 4),
    ];
    for (text, ones, words) in fixtures {
        let c = extractor.counts(text);
        let expected: Vec<u32> = (1..=15).map(|f| u32::from(ones.contains(&f))).collect();
        let got: Vec<u32> = (1..=15).map(|f| c.get(f)).collect();
        if got != expected || c.word_count != words {
            return Err(format!("{text:?}: counts {got:?}, words {}", c.word_count));
        }
    }
    let texts = [fixtures[0].0, fixtures[1].0];
    let base = dump_digest(&extractor, &texts).map_err(|e| e.to_string())?;
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    Lexicons::write_bundled(tmp.path()).map_err(|e| e.to_string())?;
    let mut changed = 0;
    for kind in LexiconKind::ALL {
        let dir = tmp.path().join(kind.file_name());
        let edited = tempfile::tempdir().map_err(|e| e.to_string())?;
        copy_dir(tmp.path(), edited.path())?;
        let target = edited.path().join(kind.file_name());
        let mut contents = fs::read_to_string(&dir).map_err(|e| e.to_string())?;
        contents.push_str("zyzzyvaword\n");
        fs::write(&target, contents).map_err(|e| e.to_string())?;
        let lex = Lexicons::from_dir(edited.path()).map_err(|e| e.to_string())?;
        let digest = dump_digest(&FeatureExtractor::new(lex), &texts).map_err(|e| e.to_string())?;
        if digest == base {
            return Err(format!(
                "editing {} left the dump digest unchanged",
                kind.file_name()
            ));
        }
        changed += 1;
    }
    Ok(format!(
        "both fixtures match; {changed}/12 lexicon edits change the dump digest"
    ))
}

fn copy_dir(from: &Path, to: &Path) -> Result<(), String> {
    for entry in fs::read_dir(from).map_err(|e| e.to_string())? {
        let entry = entry.map_err(|e| e.to_string())?;
        fs::copy(entry.path(), to.join(entry.file_name())).map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn run_cli(args: &[&str]) -> Result<String, String> {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = sarcasm::cli::dispatch(
        std::iter::once("sarcasm").chain(args.iter().copied()),
        &mut std::io::empty(),
        &mut out,
        &mut err,
    );
    if code != 0 {
        return Err(format!(
            "{args:?} exited {code}: {}",
            String::from_utf8_lossy(&err)
        ));
    }
    Ok(String::from_utf8_lossy(&out).into_owned())
}

fn end_to_end_determinism() -> Outcome {
    let start = Instant::now();
    let mini = Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../core/data/mini"));
    let reviews = mini.join("reviews.jsonl");
    let labels = mini.join("labels.jsonl");
    let (reviews, labels) = (reviews.to_str().unwrap(), labels.to_str().unwrap());
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut tables = Vec::new();
    for run in ["a", "b"] {
        let dir = tmp.path().join(run);
        let models = dir.join("models");
        let report = dir.join("report.json");
        run_cli(&[
            "train",
            "--reviews",
            reviews,
            "--labels",
            labels,
            "--train-size",
            "70",
            "--test-size",
            "30",
            "--batch-size",
            "10",
            "--stages",
            "sarcastic:10,nonsarcastic:3:40,main",
            "--seed",
            "2018",
            "--out",
            models.to_str().unwrap(),
        ])?;
        tables.push(run_cli(&[
            "eval",
            "--reviews",
            reviews,
            "--labels",
            labels,
            "--model",
            models.to_str().unwrap(),
            "--out",
            report.to_str().unwrap(),
        ])?);
    }
    let elapsed = start.elapsed();
    let mut compared = 0;
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let mut files: Vec<String> = vec!["report.json".into(), "models/run.json".into()];
    for s in 1..=5 {
        for kind in ["model", "history", "split"] {
            files.push(format!("models/star{s}.{kind}.json"));
        }
    }
    for f in &files {
        let x = fs::read(a.join(f)).map_err(|e| format!("{f}: {e}"))?;
        let y = fs::read(b.join(f)).map_err(|e| format!("{f}: {e}"))?;
        if x != y {
            return Err(format!("{f} differs between runs"));
        }
        compared += 1;
    }
    if tables[0] != tables[1] {
        return Err("printed tables differ".into());
    }
    within(
        elapsed,
        Duration::from_secs(60),
        format!("{compared} artifacts byte-identical across two train+eval runs"),
    )
}

fn metrics_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for case in 0..1000 {
        let n = rng.gen_range(0..=50);
        let predicted: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
        let actual: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
        let oracle = brute_force_confusion(&predicted, &actual);
        let cm = sarcasm::metrics::ConfusionMatrix::from_pairs(
            predicted.iter().copied().zip(actual.iter().copied()),
        );
        let m = prf1(&cm);
        let (p, r, f, acc) = reference_metrics(&oracle);
        let exact = cm == oracle
            && m.precision.to_bits() == p.to_bits()
            && m.recall.to_bits() == r.to_bits()
            && m.f1.to_bits() == f.to_bits()
            && m.accuracy.to_bits() == acc.to_bits();
        if !exact {
            return Err(format!(
                "case {case}: {cm:?} {m:?} vs {oracle:?} ({p}, {r}, {f}, {acc})"
            ));
        }
    }
    Ok("1000 random sets of size <= 50 agree bit-for-bit".into())
}

fn split_contract() -> Outcome {
    let pool: Vec<LabeledReview> = (0..1000)
        .map(|i| LabeledReview {
            review: Review {
                review_id: format!("r{i}"),
                stars: 3,
                text: String::new(),
            },
            sarcastic: i % 3 == 0,
        })
        .collect();
    let split = make_split(&pool, 700, 300, 0).map_err(|e| e.to_string())?;
    let train: std::collections::HashSet<&str> = split.train.iter().map(|r| r.id()).collect();
    let test: std::collections::HashSet<&str> = split.test.iter().map(|r| r.id()).collect();
    let disjoint = train.is_disjoint(&test);
    check(
        split.train.len() == 700
            && split.test.len() == 300
            && train.len() == 700
            && test.len() == 300
            && disjoint,
        format!(
            "|train| = {}, |test| = {}, disjoint: {disjoint}",
            split.train.len(),
            split.test.len()
        ),
    )
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 10] = [
        ("reference table arithmetic", table_arithmetic),
        ("gradient vs finite differences", gradient_oracle),
        ("Adam closed form", adam_oracle),
        ("softmax and loss", softmax_properties),
        ("inverted dropout", dropout_properties),
        ("overfit a separable set", overfit_sanity),
        ("feature fixtures and lexicon provenance", pipeline_fixtures),
        ("end-to-end determinism", end_to_end_determinism),
        ("metrics vs brute force", metrics_oracle),
        ("700/300 split", split_contract),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome =
            catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".to_owned()));
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {:>2} {tag}: {name}: {detail}", i + 1);
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
