//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 bad or missing input data,
//! 3 runtime failure (training divergence, unwritable output).

use std::collections::HashSet;
use std::ffi::OsString;
use std::fs::OpenOptions;
use std::io::{self, BufRead, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::corpus::{self, Review, SarcasmLabel};
use crate::features::{write_feature_dump, DumpRow, FeatureExtractor};
use crate::lexicon::Lexicons;
use crate::network::{MAX_HIDDEN, MIN_HIDDEN};
use crate::pipeline::{
    self, manifest_path, to_pretty_json, write_file, Corpus, ManifestFile, PipelineError,
    RunConfig, SplitPlan,
};
use crate::provenance::Provenance;
use crate::train::{self, decay_grid, Stage, TrainConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "sarcasm",
    version,
    about = "Non-contextual sarcasm classifier for review text"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse reviews and labels, write per-star split manifests.
    Ingest(IngestArgs),
    /// Label reviews interactively, appending to the labels file.
    Label(LabelArgs),
    /// Write the per-review feature dump.
    Extract(ExtractArgs),
    /// Train one model per star category.
    Train(TrainArgs),
    /// Evaluate trained models on their held-out test sets.
    Eval(EvalArgs),
    /// Classify one text read from a file or standard input.
    Predict(PredictArgs),
    /// Train and evaluate across a learning-rate grid.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
struct CorpusArgs {
    #[arg(long)]
    reviews: PathBuf,
    #[arg(long)]
    labels: PathBuf,
}

#[derive(Debug, Args, Clone)]
struct SplitArgs {
    #[arg(long, default_value_t = 700)]
    train_size: usize,
    #[arg(long, default_value_t = 300)]
    test_size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SplitArgs {
    fn plan(&self) -> SplitPlan {
        SplitPlan {
            train_n: self.train_size,
            test_n: self.test_size,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Args)]
struct IngestArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    split: SplitArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct LabelArgs {
    #[arg(long)]
    reviews: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    #[arg(long, default_value = "annotator")]
    annotator: String,
    #[arg(long, value_parser = parse_star)]
    stars: Option<u8>,
}

#[derive(Debug, Args)]
struct ExtractArgs {
    #[arg(long)]
    reviews: PathBuf,
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Clone)]
struct ModelArgs {
    #[arg(long, default_value_t = 0.01, value_parser = parse_lr)]
    lr: f64,
    /// Hidden layer widths, e.g. 15,15.
    #[arg(long, default_value = "15,15", value_parser = parse_hidden)]
    hidden: HiddenLayers,
    #[arg(long, default_value_t = 10)]
    epochs: usize,
    #[arg(long, default_value_t = 100)]
    batch_size: usize,
    #[arg(long, default_value_t = 0.75, value_parser = parse_keep_prob)]
    keep_prob: f64,
    /// Comma list of sarcastic:N, nonsarcastic:RATIO:N and main.
    #[arg(long, default_value = "sarcastic:500,nonsarcastic:3:500,main", value_parser = parse_stages)]
    stages: StageList,
    /// Keep Adam moments across stages instead of resetting them.
    #[arg(long)]
    carry_adam: bool,
    /// Reshuffle batches every epoch.
    #[arg(long)]
    reshuffle: bool,
}

#[derive(Debug, Clone)]
struct HiddenLayers(Vec<usize>);

#[derive(Debug, Clone)]
struct StageList(Vec<Stage>);

#[derive(Debug, Clone)]
struct LrGrid(Vec<f64>);

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Train only this star category (default: all five).
    #[arg(long, value_parser = parse_star)]
    stars: Option<u8>,
    #[command(flatten)]
    split: SplitArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Directory written by `train`.
    #[arg(long)]
    model: PathBuf,
    #[arg(long, value_parser = parse_star)]
    stars: Option<u8>,
    /// Report file (JSON); the table goes to standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PredictArgs {
    /// A model file, e.g. star1.model.json.
    #[arg(long)]
    model: PathBuf,
    /// Text file to classify; standard input when absent.
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long, value_parser = parse_star)]
    stars: u8,
    #[command(flatten)]
    split: SplitArgs,
    #[command(flatten)]
    model: ModelArgs,
    /// Comma list of learning rates, or decay:FACTOR for 0.01·FACTOR^k down to 1e-4.
    #[arg(long, default_value = "0.0001,0.001,0.01", value_parser = parse_lr_grid)]
    lr_grid: LrGrid,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_star(s: &str) -> Result<u8, String> {
    match s.parse::<u8>() {
        Ok(v @ 1..=5) => Ok(v),
        _ => Err(format!("stars must be an integer in 1..=5, got {s:?}")),
    }
}

fn parse_lr(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!(
            "learning rate must be a positive number, got {s:?}"
        )),
    }
}

fn parse_keep_prob(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v <= 1.0 => Ok(v),
        _ => Err(format!("keep probability must be in (0, 1], got {s:?}")),
    }
}

fn parse_hidden(s: &str) -> Result<HiddenLayers, String> {
    let widths = s
        .split(',')
        .map(|w| w.trim().parse::<usize>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| format!("hidden must be a comma list of widths, got {s:?}"))?;
    if widths.is_empty() || widths.len() > 2 {
        return Err(format!(
            "expected 1 or 2 hidden layers, got {}",
            widths.len()
        ));
    }
    if let Some(w) = widths
        .iter()
        .find(|w| !(MIN_HIDDEN..=MAX_HIDDEN).contains(*w))
    {
        return Err(format!(
            "hidden width {w} outside {MIN_HIDDEN}..={MAX_HIDDEN}"
        ));
    }
    Ok(HiddenLayers(widths))
}

fn parse_stages(s: &str) -> Result<StageList, String> {
    s.split(',')
        .map(str::parse::<Stage>)
        .collect::<Result<Vec<_>, _>>()
        .map(StageList)
}

fn parse_lr_grid(s: &str) -> Result<LrGrid, String> {
    if let Some(factor) = s.strip_prefix("decay:") {
        return match factor.parse::<f64>() {
            Ok(f) if f > 0.0 && f < 1.0 => Ok(LrGrid(decay_grid(0.01, f, 1e-4))),
            _ => Err(format!("decay factor must be in (0, 1), got {factor:?}")),
        };
    }
    let mut grid = s
        .split(',')
        .map(|v| parse_lr(v.trim()))
        .collect::<Result<Vec<_>, _>>()?;
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    Ok(LrGrid(grid))
}

impl ModelArgs {
    fn config(&self, seed: u64, lr_grid: Option<Vec<f64>>) -> TrainConfig {
        let defaults = TrainConfig::default();
        TrainConfig {
            lr: self.lr,
            epochs: self.epochs,
            batch_size: self.batch_size,
            hidden: self.hidden.0.clone(),
            keep_prob: self.keep_prob,
            stages: self.stages.0.clone(),
            lr_grid: lr_grid.unwrap_or(defaults.lr_grid),
            seed,
            reset_adam_per_stage: !self.carry_adam,
            reshuffle_each_epoch: self.reshuffle,
        }
    }
}

#[derive(Debug)]
enum CliError {
    Data(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Data(_) => EXIT_DATA,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        if e.is_data_error() {
            CliError::Data(e.to_string())
        } else {
            CliError::Runtime(e.to_string())
        }
    }
}

struct Io<'a> {
    stdin: &'a mut dyn BufRead,
    stdout: &'a mut dyn Write,
    stderr: &'a mut dyn Write,
}

/// Runs the CLI with the given arguments (including the program name) and
/// standard streams; returns the process exit code.
pub fn dispatch<I, T>(
    argv: I,
    stdin: &mut dyn BufRead,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{rendered}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{rendered}");
                    EXIT_USAGE
                }
            };
        }
    };
    let mut io = Io {
        stdin,
        stdout,
        stderr,
    };
    let result = match cli.command {
        Command::Ingest(a) => ingest(a, &mut io),
        Command::Label(a) => label(a, &mut io),
        Command::Extract(a) => extract(a, &mut io),
        Command::Train(a) => train_cmd(a, &mut io),
        Command::Eval(a) => eval(a, &mut io),
        Command::Predict(a) => predict(a, &mut io),
        Command::Sweep(a) => sweep(a, &mut io),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let msg = match &e {
                CliError::Data(m) | CliError::Runtime(m) => m,
            };
            let _ = writeln!(io.stderr, "error: {msg}");
            e.code()
        }
    }
}

fn extractor() -> Result<FeatureExtractor, CliError> {
    Lexicons::from_env()
        .map(FeatureExtractor::new)
        .map_err(|e| CliError::Data(e.to_string()))
}

fn out_err(e: io::Error) -> CliError {
    CliError::Runtime(e.to_string())
}

fn report_parse_errors(corpus: &Corpus, io: &mut Io<'_>) {
    for (what, errors) in [
        ("reviews", &corpus.review_errors),
        ("labels", &corpus.label_errors),
    ] {
        if errors.is_empty() {
            continue;
        }
        let _ = writeln!(
            io.stderr,
            "warning: skipped {} bad {what} line(s)",
            errors.len()
        );
        for e in errors.iter().take(5) {
            let _ = writeln!(io.stderr, "  line {}: {}", e.line, e.reason);
        }
    }
}

fn ingest(args: IngestArgs, io: &mut Io<'_>) -> Result<(), CliError> {
    let corpus = Corpus::load(&args.corpus.reviews, Some(&args.corpus.labels))?;
    report_parse_errors(&corpus, io);
    let plan = args.split.plan();
    let provenance = Provenance::new(plan.seed, &plan);
    let buckets = corpus.labeled_by_star();
    let mut written = 0;
    for (&stars, pool) in &buckets {
        match corpus::make_split(pool, plan.train_n, plan.test_n, plan.star_seed(stars)) {
            Ok(split) => {
                let file = ManifestFile {
                    provenance: provenance.clone(),
                    manifest: corpus::SplitManifest::from_split(&split),
                };
                write_file(&manifest_path(&args.out, stars), to_pretty_json(&file))?;
                written += 1;
                let _ = writeln!(
                    io.stdout,
                    "star {stars}: {} labeled, split {}/{}",
                    pool.len(),
                    split.train.len(),
                    split.test.len()
                );
            }
            Err(e) => {
                let _ = writeln!(io.stderr, "warning: star {stars}: {e}");
            }
        }
    }
    let summary = serde_json::json!({
        "provenance": provenance,
        "reviews": corpus.reviews.len(),
        "labels": corpus.labels.len(),
        "labeled_reviews": corpus.labeled.len(),
        "per_star": buckets.iter().map(|(s, b)| (s.to_string(), b.len())).collect::<std::collections::BTreeMap<_, _>>(),
        "review_errors": corpus.review_errors,
        "label_errors": corpus.label_errors,
    });
    write_file(&args.out.join("ingest.json"), to_pretty_json(&summary))?;
    if written == 0 {
        return Err(CliError::Data(
            "no star category has enough labeled reviews for the requested split".into(),
        ));
    }
    Ok(())
}

/// Prompts for a label for every review this annotator has not labeled yet,
/// appending each answer to `labels` as soon as it is given.
pub fn label_session(
    reviews: &[Review],
    existing: &[SarcasmLabel],
    annotator: &str,
    input: &mut dyn BufRead,
    prompt: &mut dyn Write,
    labels: &mut dyn Write,
) -> io::Result<usize> {
    let done: HashSet<&str> = existing
        .iter()
        .filter(|l| l.annotator == annotator)
        .map(|l| l.review_id.as_str())
        .collect();
    let mut added = 0;
    let mut line = String::new();
    'reviews: for r in reviews
        .iter()
        .filter(|r| !done.contains(r.review_id.as_str()))
    {
        writeln!(
            prompt,
            "\n[{}] {} star(s)\n{}",
            r.review_id, r.stars, r.text
        )?;
        loop {
            write!(prompt, "sarcastic? [y]es/[n]o/[s]kip/[q]uit: ")?;
            prompt.flush()?;
            line.clear();
            if input.read_line(&mut line)? == 0 {
                break 'reviews;
            }
            let sarcastic = match line.trim().to_lowercase().as_str() {
                "y" | "yes" => true,
                "n" | "no" => false,
                "s" | "skip" => continue 'reviews,
                "q" | "quit" => break 'reviews,
                _ => continue,
            };
            let record = SarcasmLabel {
                review_id: r.review_id.clone(),
                sarcastic,
                annotator: annotator.to_owned(),
            };
            serde_json::to_writer(&mut *labels, &record)?;
            labels.write_all(b"\n")?;
            labels.flush()?;
            added += 1;
            continue 'reviews;
        }
    }
    writeln!(prompt, "\n{added} label(s) recorded")?;
    Ok(added)
}

fn label(args: LabelArgs, io: &mut Io<'_>) -> Result<(), CliError> {
    let labels_path = args.labels.exists().then_some(args.labels.as_path());
    let corpus = Corpus::load(&args.reviews, labels_path)?;
    report_parse_errors(&corpus, io);
    let reviews: Vec<Review> = corpus
        .reviews
        .iter()
        .filter(|r| args.stars.is_none_or(|s| r.stars == s))
        .cloned()
        .collect();
    let mut file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&args.labels)
        .map_err(|e| CliError::Data(format!("cannot open {}: {e}", args.labels.display())))?;
    label_session(
        &reviews,
        &corpus.labels,
        &args.annotator,
        io.stdin,
        io.stdout,
        &mut file,
    )
    .map_err(out_err)?;
    Ok(())
}

fn extract(args: ExtractArgs, io: &mut Io<'_>) -> Result<(), CliError> {
    let extractor = extractor()?;
    let corpus = Corpus::load(&args.reviews, args.labels.as_deref())?;
    report_parse_errors(&corpus, io);
    let resolved: std::collections::HashMap<&str, bool> = corpus
        .labeled
        .iter()
        .map(|r| (r.id(), r.sarcastic))
        .collect();
    let rows: Vec<DumpRow<'_>> = corpus
        .reviews
        .iter()
        .map(|r| DumpRow {
            review_id: &r.review_id,
            label: resolved.get(r.review_id.as_str()).copied(),
            counts: extractor.counts(&r.text),
        })
        .collect();
    let provenance = Provenance::new(0, &extractor.lexicons().digest());
    let mut buf = Vec::new();
    let digest =
        write_feature_dump(&mut buf, &rows, extractor.lexicons(), &provenance).map_err(out_err)?;
    write_file(&args.out, &buf)?;
    let _ = writeln!(io.stdout, "{} rows, sha256 {digest}", rows.len());
    Ok(())
}

fn selected_stars(stars: Option<u8>) -> Vec<u8> {
    stars.map_or_else(|| (1..=5).collect(), |s| vec![s])
}

fn train_cmd(args: TrainArgs, io: &mut Io<'_>) -> Result<(), CliError> {
    let extractor = extractor()?;
    let corpus = Corpus::load(&args.corpus.reviews, Some(&args.corpus.labels))?;
    report_parse_errors(&corpus, io);
    let run = RunConfig {
        train: args.model.config(args.split.seed, None),
        split: args.split.plan(),
    };
    pipeline::save_run_config(&args.out, &run)?;
    let stars = selected_stars(args.stars);
    let mut first_error = None;
    for result in pipeline::train_stars(&corpus, &stars, &run, &extractor) {
        match result {
            Ok(star_run) => {
                pipeline::save_star_run(&args.out, &star_run, &run)?;
                let last = star_run.history.records.last();
                let _ = writeln!(
                    io.stdout,
                    "star {}: trained on {} reviews, final loss {:.4}, train accuracy {:.3}",
                    star_run.stars,
                    star_run.split.train.len(),
                    last.map_or(f64::NAN, |r| r.mean_loss),
                    last.map_or(f64::NAN, |r| r.train_accuracy),
                );
            }
            Err(e) => {
                let _ = writeln!(io.stderr, "error: {e}");
                first_error.get_or_insert(e);
            }
        }
    }
    match first_error {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

fn eval(args: EvalArgs, io: &mut Io<'_>) -> Result<(), CliError> {
    let extractor = extractor()?;
    let corpus = Corpus::load(&args.corpus.reviews, Some(&args.corpus.labels))?;
    report_parse_errors(&corpus, io);
    let report = pipeline::evaluate_dir(
        &corpus,
        &args.model,
        &selected_stars(args.stars),
        &extractor,
    )?;
    if let Some(out) = &args.out {
        write_file(out, report.to_json())?;
    }
    let _ = write!(io.stdout, "{}", report.render_table());
    Ok(())
}

fn predict(args: PredictArgs, io: &mut Io<'_>) -> Result<(), CliError> {
    let extractor = extractor()?;
    let model = pipeline::load_model(&args.model)?;
    let text = match &args.input {
        Some(p) => String::from_utf8(pipeline::read_file(p)?)
            .map_err(|_| CliError::Data(format!("{} is not UTF-8", p.display())))?,
        None => {
            let mut s = String::new();
            io::Read::read_to_string(&mut io.stdin, &mut s)
                .map_err(|e| CliError::Data(format!("cannot read standard input: {e}")))?;
            s
        }
    };
    let p = model
        .predict(extractor.vector(&text).as_slice())
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let label = if p.sarcastic {
        "sarcastic"
    } else {
        "not-sarcastic"
    };
    let _ = writeln!(io.stdout, "{label}\t{:.6}", p.confidence);
    Ok(())
}

fn sweep(args: SweepArgs, io: &mut Io<'_>) -> Result<(), CliError> {
    let extractor = extractor()?;
    let corpus = Corpus::load(&args.corpus.reviews, Some(&args.corpus.labels))?;
    report_parse_errors(&corpus, io);
    let plan = args.split.plan();
    let split = plan.split(&corpus, args.stars)?;
    let config = args
        .model
        .config(args.split.seed, Some(args.lr_grid.0.clone()));
    let rows = train::lr_sweep(&split, &corpus.labeled, &config, &extractor).map_err(|source| {
        CliError::from(PipelineError::Train {
            stars: args.stars,
            source,
        })
    })?;
    let _ = writeln!(
        io.stdout,
        "{:>4}  {:>10}  {:>8}  {:>9}  {:>6}  {:>6}",
        "rank", "lr", "accuracy", "precision", "recall", "f1"
    );
    for (i, r) in rows.iter().enumerate() {
        let _ = writeln!(
            io.stdout,
            "{:>4}  {:>10.6}  {:>8.4}  {:>9.4}  {:>6.4}  {:>6.4}",
            i + 1,
            r.lr,
            r.accuracy,
            r.precision,
            r.recall,
            r.f1
        );
    }
    if let Some(out) = &args.out {
        let run = RunConfig {
            train: config,
            split: plan,
        };
        let doc = serde_json::json!({
            "provenance": run.provenance(),
            "stars": args.stars,
            "rows": rows,
        });
        write_file(out, to_pretty_json(&doc))?;
    }
    Ok(())
}

/// Entry point used by the binary.
pub fn main_with_env() -> i32 {
    let stdin = io::stdin();
    let mut stdin = stdin.lock();
    let mut stdout = io::stdout();
    let mut stderr = io::stderr();
    dispatch(std::env::args_os(), &mut stdin, &mut stdout, &mut stderr)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hidden_widths() {
        assert_eq!(parse_hidden("15,15").unwrap().0, vec![15, 15]);
        assert_eq!(parse_hidden("7").unwrap().0, vec![7]);
        assert!(parse_hidden("99").unwrap_err().contains("7..=15"));
        assert!(parse_hidden("8,8,8").is_err());
        assert!(parse_hidden("").is_err());
    }

    #[test]
    fn lr_grids() {
        assert_eq!(
            parse_lr_grid("0.01,0.0001,0.001").unwrap().0,
            vec![1e-4, 1e-3, 1e-2]
        );
        let decay = parse_lr_grid("decay:0.9").unwrap().0;
        assert_eq!(decay.len(), 44);
        assert!(parse_lr_grid("decay:1.5").is_err());
        assert!(parse_lr_grid("0.01,-1").is_err());
    }

    #[test]
    fn label_session_skips_done_and_stops_on_eof() {
        let review = |id: &str| Review {
            review_id: id.into(),
            stars: 2,
            text: "fine".into(),
        };
        let reviews = [review("a"), review("b"), review("c")];
        let done = [SarcasmLabel {
            review_id: "a".into(),
            sarcastic: false,
            annotator: "me".into(),
        }];
        let mut prompt = Vec::new();
        let mut out = Vec::new();
        let added = label_session(
            &reviews,
            &done,
            "me",
            &mut &b"Y\n"[..],
            &mut prompt,
            &mut out,
        )
        .unwrap();
        assert_eq!(added, 1);
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "{\"review_id\":\"b\",\"sarcastic\":true,\"annotator\":\"me\"}\n"
        );
        let prompt = String::from_utf8(prompt).unwrap();
        assert!(prompt.contains("[c]") && !prompt.contains("[a]"));
    }
}
