//! `spe` command line: generate data, train, predict, evaluate, benchmark.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use spe_core::bench::{run_suite, BenchOptions, Suite};
use spe_core::config::expand_config_args;
use spe_core::data::{load_csv, read_features, save_csv, CheckerboardSpec, CsvOptions, LabelColumn};
use spe_core::ensemble::{fit_method, Method, MethodConfig};
use spe_core::metrics::{evaluate, stratified_split, DEFAULT_THRESHOLD};
use spe_core::sampling::DEFAULT_ALPHA_CAP;
use spe_core::{
    predict_dataset, AdaBoostParams, BaseLearner, BaseModel, Dataset, DecisionTreeParams, EnsembleModel,
    HardnessFunction, ProbabilisticClassifier, RandomSource, SpeError,
};

type Result<T> = std::result::Result<T, SpeError>;

#[derive(Parser)]
#[command(
    name = "spe",
    version,
    about = "Self-paced ensemble learning for imbalanced binary classification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a checkerboard dataset as CSV.
    #[command(args_override_self = true)]
    Generate(GenerateArgs),
    /// Train an ensemble and write it as JSON.
    #[command(args_override_self = true)]
    Train(TrainArgs),
    /// Score rows of a CSV file with a trained model.
    #[command(args_override_self = true)]
    Predict(PredictArgs),
    /// Evaluate a trained model on one split of a dataset.
    #[command(args_override_self = true)]
    Eval(EvalArgs),
    /// Compute metrics from a label,score CSV.
    #[command(args_override_self = true)]
    Metrics(MetricsArgs),
    /// Run a benchmark suite.
    #[command(args_override_self = true)]
    Bench(BenchArgs),
}

#[derive(Args)]
struct Common {
    /// Seed for every random choice.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// key=value file of flags; flags typed on the command line win.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SpecArgs {
    /// Covariance scale of every Gaussian component.
    #[arg(long, default_value_t = 0.1)]
    cov: f64,
    #[arg(long, default_value_t = 1000)]
    n_minority: usize,
    #[arg(long, default_value_t = 10_000)]
    n_majority: usize,
}

impl SpecArgs {
    fn spec(&self, seed: u64) -> CheckerboardSpec {
        CheckerboardSpec {
            cov_scale: self.cov,
            n_minority: self.n_minority,
            n_majority: self.n_majority,
            seed,
        }
    }
}

#[derive(Args)]
struct DataArgs {
    /// Labelled CSV; without it a checkerboard is generated.
    #[arg(long, value_name = "PATH")]
    data: Option<PathBuf>,
    /// Label column name or index (negative counts from the end).
    #[arg(long, default_value = "-1")]
    label_column: String,
    #[arg(long, default_value = "1")]
    positive_label: String,
    /// Cell text treated as missing and imputed as 0.
    #[arg(long, default_value = "")]
    missing_token: String,
    #[command(flatten)]
    spec: SpecArgs,
    /// Seed of the generated checkerboard (defaults to --seed).
    #[arg(long)]
    data_seed: Option<u64>,
    /// Train, validation and test fractions.
    #[arg(long, default_value = "0.6,0.2,0.2", value_parser = parse_split)]
    split: [f64; 3],
}

impl DataArgs {
    fn csv_options(&self) -> CsvOptions {
        CsvOptions {
            label_column: self.label_column.parse::<LabelColumn>().unwrap_or_default(),
            positive_label: self.positive_label.clone(),
            missing_token: self.missing_token.clone(),
        }
    }

    fn load(&self, seed: u64) -> Result<(Dataset, Value)> {
        match &self.data {
            Some(path) => {
                let loaded = load_csv(path, &self.csv_options())?;
                let source = json!({
                    "csv": path.display().to_string(),
                    "label_column": loaded.label_column,
                    "missing_cells": loaded.missing_cells,
                });
                Ok((loaded.dataset, source))
            }
            None => {
                let spec = self.spec.spec(self.data_seed.unwrap_or(seed));
                Ok((spec.generate()?, json!({ "checkerboard": spec })))
            }
        }
    }

    /// The rows of `part` under the split derived from `seed`.
    fn split(&self, data: &Dataset, seed: u64, part: Part) -> Result<(Dataset, Value)> {
        let split = stratified_split(data, self.split, &mut RandomSource::new(seed).derive("split", 0))?;
        let sizes = json!({
            "fractions": self.split,
            "train": split.train.len(),
            "validation": split.validation.len(),
            "test": split.test.len(),
        });
        let rows = match part {
            Part::Train => split.train,
            Part::Validation => split.validation,
            Part::Test => split.test,
            Part::All => (0..data.n_rows()).collect(),
        };
        Ok((data.subset(&rows), sizes))
    }
}

fn parse_split(s: &str) -> std::result::Result<[f64; 3], String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| format!("`{p}` is not a number")))
        .collect::<std::result::Result<_, _>>()?;
    <[f64; 3]>::try_from(parts).map_err(|_| "expected three comma-separated fractions".to_string())
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Part {
    Train,
    Validation,
    Test,
    All,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LearnerKind {
    Tree,
    Adaboost,
    External,
}

#[derive(Args)]
struct LearnerArgs {
    #[arg(long, value_enum, default_value_t = LearnerKind::Tree)]
    learner: LearnerKind,
    #[arg(long, default_value_t = 10)]
    max_depth: usize,
    #[arg(long, default_value_t = 2)]
    min_samples_split: usize,
    #[arg(long, default_value_t = 0.0)]
    min_impurity_decrease: f64,
    /// Boosting rounds of the adaboost learner.
    #[arg(long, default_value_t = 10)]
    ada_estimators: usize,
    /// Depth of each boosted tree.
    #[arg(long, default_value_t = 1)]
    weak_depth: usize,
    #[arg(long, default_value_t = 1.0)]
    learning_rate: f64,
}

impl LearnerArgs {
    fn learner(&self) -> Result<BaseLearner> {
        let learner = match self.learner {
            LearnerKind::Tree => BaseLearner::Tree(DecisionTreeParams {
                max_depth: self.max_depth,
                min_samples_split: self.min_samples_split,
                min_impurity_decrease: self.min_impurity_decrease,
            }),
            LearnerKind::Adaboost => BaseLearner::AdaBoost(AdaBoostParams {
                n_estimators: self.ada_estimators,
                weak_learner_depth: self.weak_depth,
                learning_rate: self.learning_rate,
            }),
            LearnerKind::External => {
                return Err(param(
                    "learner",
                    "external classifiers plug in through the Rust `Learner` trait or the C interface",
                ))
            }
        };
        learner.validate()?;
        Ok(learner)
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    spec: SpecArgs,
    /// Output CSV; metadata goes next to it with a `.meta.json` extension.
    #[arg(long, short)]
    output: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    learner: LearnerArgs,
    #[arg(long, default_value = "spe", value_parser = parse_method)]
    method: Method,
    #[arg(long, default_value_t = 10)]
    n_estimators: usize,
    #[arg(long, default_value_t = 20)]
    k_bins: usize,
    #[arg(long, default_value = "absolute", value_parser = parse_hardness)]
    hardness: HardnessFunction,
    #[arg(long, default_value_t = DEFAULT_ALPHA_CAP)]
    alpha_cap: f64,
    /// Cascade pool keep rate; defaults to (|P|/|N|)^(1/(n-1)).
    #[arg(long)]
    keep_fp_rate: Option<f64>,
    /// Model JSON output.
    #[arg(long, short)]
    output: PathBuf,
    /// Training report JSON; printed to stdout when absent.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    model: PathBuf,
    /// CSV of feature columns, optionally with a label column.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "-1")]
    label_column: String,
    #[arg(long, default_value = "1")]
    positive_label: String,
    #[arg(long, default_value = "")]
    missing_token: String,
    /// Scores CSV; printed to stdout when absent.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    /// Split to evaluate; uses the same split seed as `train`.
    #[arg(long = "on", value_enum, default_value_t = Part::Test)]
    part: Part,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct MetricsArgs {
    #[command(flatten)]
    common: Common,
    /// CSV with columns label,score.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_parser = parse_suite)]
    suite: Suite,
    #[arg(long, default_value_t = 10)]
    repeats: usize,
    /// Members per ensemble; 50 for overlap-sweep, 10 otherwise.
    #[arg(long)]
    n_estimators: Option<usize>,
    #[arg(long, default_value_t = 20)]
    k_bins: usize,
    #[arg(long, default_value_t = 1000)]
    n_minority: usize,
    #[arg(long, default_value_t = 10_000)]
    n_majority: usize,
    /// Directory receiving `<suite>.csv` and `<suite>.json`.
    #[arg(long, short)]
    output: PathBuf,
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse().map_err(|e: SpeError| e.to_string())
}

fn parse_hardness(s: &str) -> std::result::Result<HardnessFunction, String> {
    s.parse().map_err(|e: SpeError| e.to_string())
}

fn parse_suite(s: &str) -> std::result::Result<Suite, String> {
    s.parse().map_err(|e: SpeError| e.to_string())
}

fn param(name: &str, reason: &str) -> SpeError {
    SpeError::Parameter {
        name: name.into(),
        reason: reason.into(),
    }
}

fn io_err(path: &Path, source: io::Error) -> SpeError {
    SpeError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| io_err(path, e))
}

/// Writes to stdout; a closed pipe downstream is not an error.
fn stdout(text: &str) -> Result<()> {
    let mut out = io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(io_err(Path::new("<stdout>"), e)),
        _ => Ok(()),
    }
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => write_text(p, text),
        None => stdout(&format!("{text}\n")),
    }
}

fn pretty(value: &Value) -> String {
    serde_json::to_string_pretty(value).expect("JSON values always serialize")
}

fn generate(args: GenerateArgs) -> Result<()> {
    let spec = args.spec.spec(args.common.seed);
    let data = spec.generate()?;
    save_csv(&data, &args.output)?;
    let generated_at = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let meta = json!({
        "spec": spec,
        "rows": data.n_rows(),
        "generated_at_unix": generated_at,
    });
    write_text(&args.output.with_extension("meta.json"), &pretty(&meta))?;
    let summary = json!({
        "path": args.output.display().to_string(),
        "n_minority": data.n_minority(),
        "n_majority": data.n_majority(),
        "imbalance_ratio": data.imbalance_ratio(),
    });
    stdout(&format!("{summary}\n"))
}

fn train(args: TrainArgs) -> Result<()> {
    let learner = args.learner.learner()?;
    let config = MethodConfig {
        method: args.method,
        n_estimators: args.n_estimators,
        k_bins: args.k_bins,
        hardness: args.hardness,
        alpha_cap: args.alpha_cap,
        keep_fp_rate: args.keep_fp_rate,
        seed: args.common.seed,
    };
    if config.n_estimators == 0 {
        return Err(param("n_estimators", "must be at least 1"));
    }
    if config.k_bins == 0 {
        return Err(param("k_bins", "must be at least 1"));
    }
    let (data, source) = args.data.load(config.seed)?;
    let (train_set, split) = args.data.split(&data, config.seed, Part::Train)?;
    let trained = fit_method(&train_set, &config, &learner)?;
    write_text(&args.output, &trained.model.to_json()?)?;

    let alphas: Vec<f64> = trained.iterations.iter().filter_map(|r| r.alpha).collect();
    let report = json!({
        "model": args.output.display().to_string(),
        "method": config.method,
        "config": config,
        "learner": learner,
        "data": source,
        "split": split,
        "train_minority": train_set.n_minority(),
        "train_majority": train_set.n_majority(),
        "members": trained.model.len(),
        "alphas": alphas,
        "iterations": trained.iterations,
    });
    emit(args.report.as_deref(), &pretty(&report))
}

fn read_model(path: &Path) -> Result<EnsembleModel<BaseModel>> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let model = EnsembleModel::<BaseModel>::from_json(&text)?;
    for m in model.members() {
        m.validate()?;
    }
    Ok(model)
}

fn predict(args: PredictArgs) -> Result<()> {
    let model = read_model(&args.model)?;
    let arity = model.n_features();
    let text = fs::read_to_string(&args.data).map_err(|e| io_err(&args.data, e))?;
    let table = read_features(text.as_bytes(), &args.missing_token)?;
    let (scores, labels): (Vec<f64>, Option<Vec<u8>>) = if table.n_features() == arity {
        let scores = (0..table.n_rows())
            .map(|i| model.predict_proba(table.row(i)))
            .collect::<Result<_>>()?;
        (scores, None)
    } else {
        let options = CsvOptions {
            label_column: args.label_column.parse::<LabelColumn>().unwrap_or_default(),
            positive_label: args.positive_label.clone(),
            missing_token: args.missing_token.clone(),
        };
        let data = spe_core::data::read_csv(text.as_bytes(), &options)?.dataset;
        (predict_dataset(&model, &data)?, Some(data.labels().to_vec()))
    };

    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        let write = |w: &mut csv::Writer<&mut Vec<u8>>, rec: &[String]| w.write_record(rec);
        match &labels {
            Some(labels) => {
                write(&mut w, &["label".into(), "score".into()])?;
                for (y, s) in labels.iter().zip(&scores) {
                    write(&mut w, &[y.to_string(), s.to_string()])?;
                }
            }
            None => {
                write(&mut w, &["score".into()])?;
                for s in &scores {
                    write(&mut w, &[s.to_string()])?;
                }
            }
        }
        w.flush().map_err(|e| io_err(Path::new("<csv>"), e))?;
    }
    let text = String::from_utf8(buf).expect("CSV output is UTF-8");
    match &args.output {
        Some(p) => write_text(p, &text),
        None => stdout(&text),
    }
}

fn eval(args: EvalArgs) -> Result<()> {
    let model = read_model(&args.model)?;
    let (data, _) = args.data.load(args.common.seed)?;
    let (part, _) = args.data.split(&data, args.common.seed, args.part)?;
    let scores = predict_dataset(&model, &part)?;
    let report = evaluate(part.labels(), &scores, args.threshold)?;
    emit(args.output.as_deref(), &serde_json::to_string(&report)?)
}

fn metrics(args: MetricsArgs) -> Result<()> {
    let file = File::open(&args.input).map_err(|e| io_err(&args.input, e))?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let col = |name: &str, fallback: usize| header.iter().position(|h| h == name).unwrap_or(fallback);
    let (li, si) = (col("label", 0), col("score", 1));
    if header.len() < 2 {
        return Err(SpeError::InvalidInput("expected columns label,score".into()));
    }
    let mut labels = Vec::new();
    let mut scores = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let cell = |c: usize| rec.get(c).unwrap_or("").trim().to_string();
        let parse_err = |c: usize, reason: String| SpeError::Parse {
            row: r + 2,
            column: header[c].clone(),
            reason,
        };
        let label = cell(li);
        labels.push(match label.parse::<f64>() {
            Ok(0.0) => 0,
            Ok(1.0) => 1,
            _ => return Err(parse_err(li, format!("label `{label}` is not 0 or 1"))),
        });
        let score = cell(si);
        scores.push(
            score
                .parse::<f64>()
                .map_err(|_| parse_err(si, format!("`{score}` is not a number")))?,
        );
    }
    let report = evaluate(&labels, &scores, args.threshold)?;
    emit(args.output.as_deref(), &serde_json::to_string(&report)?)
}

fn bench(args: BenchArgs) -> Result<()> {
    let defaults = BenchOptions::new(args.suite);
    let options = BenchOptions {
        suite: args.suite,
        repeats: args.repeats,
        seed: args.common.seed,
        n_estimators: args.n_estimators.unwrap_or(defaults.n_estimators),
        k_bins: args.k_bins,
        n_minority: args.n_minority,
        n_majority: args.n_majority,
    };
    let results = run_suite(&options)?;
    fs::create_dir_all(&args.output).map_err(|e| io_err(&args.output, e))?;
    let csv_path = args.output.join(format!("{}.csv", args.suite));
    let json_path = args.output.join(format!("{}.json", args.suite));
    let file = File::create(&csv_path).map_err(|e| io_err(&csv_path, e))?;
    let mut w = BufWriter::new(file);
    results.write_csv(&mut w)?;
    w.flush().map_err(|e| io_err(&csv_path, e))?;
    write_text(&json_path, &results.to_json()?)?;
    let failed = results.rows.iter().filter(|r| !r.errors.is_empty()).count();
    let summary = json!({
        "suite": args.suite,
        "csv": csv_path.display().to_string(),
        "json": json_path.display().to_string(),
        "rows": results.rows.len(),
        "rows_with_failures": failed,
    });
    stdout(&format!("{summary}\n"))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(a) => generate(a),
        Command::Train(a) => train(a),
        Command::Predict(a) => predict(a),
        Command::Eval(a) => eval(a),
        Command::Metrics(a) => metrics(a),
        Command::Bench(a) => bench(a),
    }
}

fn fail(kind: &str, message: &str, code: u8) -> ExitCode {
    eprintln!("{}", json!({ "error": { "kind": kind, "message": message } }));
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let args = match expand_config_args(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => return fail(e.kind(), &e.to_string(), 2),
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("usage", e.render().to_string().trim(), 2),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e.kind(), &e.to_string(), 1),
    }
}
