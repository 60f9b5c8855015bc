mod config;
mod manifest;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use adscreen_core::corpus::{
    load_feature_table, load_labels, load_transcripts, split_indices, AlignMode, TranscriptOptions,
    EGEMAPS_WIDTH, EMBEDDING_WIDTH,
};
use adscreen_core::evaluation::{
    cross_validate, table2_csv, table2_text, table3_csv, table3_text, train_test_evaluate, CvReport,
};
use adscreen_core::learners::{label_for, Classifier};
use adscreen_core::lexical::LinguisticConfig;
use adscreen_core::pipeline::{
    acoustic_input, bert_tfidf_input, fuse_bert_tfidf, linguistic_input, FittedPipeline, LabeledInput,
    ModelId, PipelineConfig, PipelineInput, RfeMode,
};
use adscreen_core::selection::{rfe, FeatureMask, RfeConfig};
use adscreen_core::text::PosLexicon;
use adscreen_core::vectorize::{fit_tfidf, tfidf_table, MeanImputer, Standardizer};
use adscreen_core::{Dataset, ErrorClass, Exec};

use manifest::Manifest;

/// Alzheimer's dementia screening pipelines: features, selection, training and evaluation.
#[derive(Debug, Parser)]
#[command(name = "adscreen", version)]
struct Cli {
    /// Flat key=value file of subcommand flags; command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Worker threads (1 runs everything serially).
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    /// Log more (repeat for debug output).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute and write the feature table of one model.
    Features(FeaturesArgs),
    /// Feature selection.
    #[command(subcommand)]
    Select(SelectCommand),
    /// Stratified k-fold cross-validation, one row per classifier.
    Cv(CvArgs),
    /// Fit a pipeline on all labelled rows and save it.
    Train(TrainArgs),
    /// Score rows with a saved pipeline.
    Predict(PredictArgs),
    /// Held-out evaluation with per-class (non-AD / AD) metrics.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Subcommand)]
enum SelectCommand {
    /// Recursive feature elimination on the standardized feature table.
    Rfe(RfeArgs),
}

#[derive(Debug, Clone, Args)]
struct InputArgs {
    /// Directory of `<id>.txt` transcripts (models 2 and 3).
    #[arg(long, value_name = "DIR")]
    transcripts: Option<PathBuf>,
    /// eGeMAPS table with 88 feature columns (model 1).
    #[arg(long, value_name = "CSV")]
    egemaps: Option<PathBuf>,
    /// Sentence embeddings `id,e0..e767` (model 3).
    #[arg(long, value_name = "CSV")]
    embeddings: Option<PathBuf>,
    /// Part-of-speech lexicon TSV replacing the built-in one.
    #[arg(long, value_name = "TSV")]
    lexicon: Option<PathBuf>,
    /// Accept empty transcripts (their features become NA).
    #[arg(long)]
    allow_empty: bool,
}

#[derive(Debug, Clone, Args)]
struct LabelArgs {
    /// `id,label` file with labels ad / cn.
    #[arg(long, value_name = "CSV")]
    labels: PathBuf,
    /// Drop feature rows without a label instead of failing.
    #[arg(long)]
    lenient: bool,
}

#[derive(Debug, Clone, Args)]
struct PipelineArgs {
    /// RFE target width (default 51 for the acoustic model, none otherwise).
    #[arg(long, value_name = "N")]
    rfe: Option<usize>,
    /// Disable RFE for the acoustic model.
    #[arg(long, conflicts_with = "rfe")]
    no_rfe: bool,
    /// Fit RFE inside each training fold (nested) or once on all rows (global).
    #[arg(long, default_value = "nested")]
    rfe_mode: RfeMode,
    /// `feature,rank` mask from `select rfe`, used instead of running RFE.
    #[arg(long, value_name = "CSV", conflicts_with_all = ["rfe", "no_rfe"])]
    mask: Option<PathBuf>,
    /// TF-IDF minimum document frequency.
    #[arg(long, default_value_t = 1)]
    min_df: usize,
    /// Master seed for splits and learners.
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Debug, Args)]
struct FeaturesArgs {
    /// Which model's features (model1_acoustic, model2_linguistic, model3_bert_tfidf).
    #[arg(long)]
    features: ModelId,
    #[command(flatten)]
    input: InputArgs,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct RfeArgs {
    /// Feature set to select from.
    #[arg(long, default_value = "model1_acoustic")]
    features: ModelId,
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    labels: LabelArgs,
    /// Number of columns to keep.
    #[arg(long, default_value_t = 51)]
    target: usize,
    /// Columns dropped per round.
    #[arg(long, default_value_t = 1)]
    step: usize,
    /// TF-IDF minimum document frequency (model 3).
    #[arg(long, default_value_t = 1)]
    min_df: usize,
    /// Output directory for `mask.csv`.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct CvArgs {
    /// Classifiers: logreg, rf, svm, a comma list, or `all`.
    #[arg(long, default_value = "all")]
    model: String,
    /// Feature sets (model ids or short names), comma separated.
    #[arg(long)]
    features: String,
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    labels: LabelArgs,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Number of folds.
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// Output directory for reports, Table 2 and the manifest.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Classifier: logreg, rf or svm.
    #[arg(long, default_value = "logreg")]
    model: Classifier,
    /// Feature set (model id or short name).
    #[arg(long)]
    features: ModelId,
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    labels: LabelArgs,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Model file to write.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct PredictArgs {
    /// Model file written by `train`.
    #[arg(long, value_name = "FILE")]
    model_file: PathBuf,
    #[command(flatten)]
    input: InputArgs,
    /// Output CSV `id,predicted_label,score`.
    #[arg(long, value_name = "CSV")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// Classifier: logreg, rf or svm.
    #[arg(long, default_value = "logreg")]
    model: Classifier,
    /// Feature sets, comma separated; one two-row block each.
    #[arg(long)]
    features: String,
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    labels: LabelArgs,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Fraction of each class used for training.
    #[arg(long, default_value_t = 0.7)]
    train_fraction: f64,
    /// Output directory for Table 3 and the manifest.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let raw: Vec<OsString> = std::env::args_os().collect();
    let args = match config::merge_config(raw) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    let echo: Vec<String> = args[1..].iter().map(|a| a.to_string_lossy().into_owned()).collect();
    match run(cli, &echo) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(core) = cause.downcast_ref::<adscreen_core::Error>() {
            return match core.class() {
                ErrorClass::Usage => 1,
                ErrorClass::Data => 2,
                ErrorClass::Numerical => 3,
            };
        }
        if cause.is::<UsageError>() {
            return 1;
        }
    }
    2
}

#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn exec_for(jobs: Option<usize>) -> Result<Exec> {
    match jobs {
        Some(0) => Err(usage("--jobs must be at least 1")),
        Some(1) => Ok(Exec::Serial),
        Some(n) => {
            #[cfg(feature = "parallel")]
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .context("configuring the worker pool")?;
            #[cfg(not(feature = "parallel"))]
            log::warn!("built without parallel support; ignoring --jobs {n}");
            Ok(Exec::Parallel)
        }
        None => Ok(Exec::Parallel),
    }
}

fn run(cli: Cli, echo: &[String]) -> Result<()> {
    let exec = exec_for(cli.jobs)?;
    match cli.command {
        Command::Features(a) => cmd_features(a, exec, echo),
        Command::Select(SelectCommand::Rfe(a)) => cmd_rfe(a, exec, echo),
        Command::Cv(a) => cmd_cv(a, exec, echo),
        Command::Train(a) => cmd_train(a, exec, echo),
        Command::Predict(a) => cmd_predict(a, exec, echo),
        Command::Evaluate(a) => cmd_evaluate(a, exec, echo),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    std::fs::write(path, body).with_context(|| format!("writing {}", path.display()))
}

fn need<'a>(p: &'a Option<PathBuf>, flag: &str, model: ModelId) -> Result<&'a Path> {
    p.as_deref()
        .ok_or_else(|| usage(format!("{model} needs --{flag}")))
}

fn lexicon(input: &InputArgs, m: &mut Manifest) -> Result<PosLexicon> {
    match &input.lexicon {
        Some(p) => {
            m.input(p)?;
            let body = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Ok(PosLexicon::from_tsv(&body)?)
        }
        None => Ok(PosLexicon::builtin()),
    }
}

/// Load the raw inputs of one model, recording hashes in the manifest.
fn load_input(model: ModelId, input: &InputArgs, exec: Exec, m: &mut Manifest) -> Result<PipelineInput> {
    let opts = TranscriptOptions { allow_empty: input.allow_empty };
    Ok(match model {
        ModelId::Acoustic => {
            let p = need(&input.egemaps, "egemaps", model)?;
            m.input(p)?;
            acoustic_input(load_feature_table(p, Some(EGEMAPS_WIDTH))?)?
        }
        ModelId::Linguistic => {
            let dir = need(&input.transcripts, "transcripts", model)?;
            m.input(dir)?;
            let docs = load_transcripts(dir, opts)?;
            linguistic_input(&docs, &lexicon(input, m)?, &LinguisticConfig::default(), exec)?
        }
        ModelId::BertTfidf => {
            let dir = need(&input.transcripts, "transcripts", model)?;
            let emb = need(&input.embeddings, "embeddings", model)?;
            m.input(dir)?;
            m.input(emb)?;
            let docs = load_transcripts(dir, opts)?;
            bert_tfidf_input(&docs, &load_feature_table(emb, Some(EMBEDDING_WIDTH))?)?
        }
    })
}

fn load_labeled(model: ModelId, input: &InputArgs, labels: &LabelArgs, exec: Exec, m: &mut Manifest) -> Result<LabeledInput> {
    let x = load_input(model, input, exec, m)?;
    m.input(&labels.labels)?;
    let map = load_labels(&labels.labels)?;
    let mode = if labels.lenient { AlignMode::Lenient } else { AlignMode::Strict };
    Ok(LabeledInput::align(x, &map, mode)?)
}

fn pipeline_config(model_id: ModelId, c: Classifier, p: &PipelineArgs, exec: Exec) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig::new(model_id, c, p.seed);
    if p.no_rfe {
        cfg.rfe = None;
    } else if let Some(t) = p.rfe {
        cfg.rfe = Some(RfeConfig::new(t));
    }
    if let Some(path) = &p.mask {
        cfg.mask = Some(FeatureMask::load_csv(path)?);
    }
    cfg.rfe_mode = p.rfe_mode;
    cfg.min_df = p.min_df;
    cfg.exec = exec;
    Ok(cfg)
}

fn echo_pipeline(m: &mut Manifest, p: &PipelineArgs) -> Result<()> {
    m.seed = Some(p.seed);
    m.set("min_df", p.min_df);
    m.set("rfe", p.rfe.map_or(serde_json::Value::Null, Into::into));
    m.set("no_rfe", p.no_rfe);
    m.set(
        "rfe_mode",
        match p.rfe_mode {
            RfeMode::Nested => "nested",
            RfeMode::Global => "global",
        },
    );
    if let Some(path) = &p.mask {
        m.input(path)?;
    }
    Ok(())
}

fn parse_list<T: std::str::FromStr<Err = adscreen_core::Error>>(s: &str) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        out.push(part.parse::<T>()?);
    }
    if out.is_empty() {
        return Err(usage(format!("empty list {s:?}")));
    }
    Ok(out)
}

fn parse_classifiers(s: &str) -> Result<Vec<Classifier>> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(Classifier::ALL.to_vec());
    }
    let mut v = parse_list::<Classifier>(s)?;
    v.sort();
    v.dedup();
    Ok(v)
}

fn cmd_features(a: FeaturesArgs, exec: Exec, echo: &[String]) -> Result<()> {
    let mut m = Manifest::new("features", echo);
    m.set("features", a.features.as_str());
    let input = load_input(a.features, &a.input, exec, &mut m)?;
    create_dir(&a.out)?;
    let (name, table) = match a.features {
        ModelId::Acoustic => ("acoustic.csv", input.dense),
        ModelId::Linguistic => ("linguistic.csv", input.dense),
        ModelId::BertTfidf => {
            // vocabulary over every transcript given; cv/train refit it per training split
            let tokens = input.tokens.as_deref().unwrap_or_default();
            let vocab = fit_tfidf(tokens, 1)?;
            let t = tfidf_table(&vocab, input.ids(), tokens, exec)?;
            write_file(&a.out.join("tfidf_vocabulary.json"), &(vocab.manifest_json() + "\n"))?;
            m.outputs.push("tfidf_vocabulary.json".into());
            let fused = fuse_bert_tfidf(&input.dense, &t)?;
            ("fused.csv", fused)
        }
    };
    table.save_csv(&a.out.join(name))?;
    m.outputs.push(name.into());
    m.write(&a.out)?;
    println!("{} rows x {} columns -> {}", table.n_rows(), table.n_cols(), a.out.join(name).display());
    Ok(())
}

fn cmd_rfe(a: RfeArgs, exec: Exec, echo: &[String]) -> Result<()> {
    let mut m = Manifest::new("select rfe", echo);
    m.set("features", a.features.as_str());
    m.set("target", a.target);
    m.set("step", a.step);
    let data = load_labeled(a.features, &a.input, &a.labels, exec, &mut m)?;
    let mut dense = MeanImputer::fit(&data.input.dense).apply(&data.input.dense)?;
    if let Some(tokens) = &data.input.tokens {
        let vocab = fit_tfidf(tokens, a.min_df)?;
        let t = tfidf_table(&vocab, data.ids(), tokens, exec)?;
        dense = fuse_bert_tfidf(&dense, &t)?;
    }
    let z = Standardizer::fit(&dense)?.apply(&dense)?;
    let cfg = RfeConfig { step: a.step, ..RfeConfig::new(a.target) };
    let mask = rfe(&Dataset::new(z, data.labels.clone())?, &cfg)?;
    create_dir(&a.out)?;
    mask.save_csv(&a.out.join("mask.csv"))?;
    m.outputs.push("mask.csv".into());
    m.write(&a.out)?;
    println!("kept {} of {} columns after {} refits", mask.kept.len(), mask.ranking.len(), mask.refits);
    Ok(())
}

fn cmd_cv(a: CvArgs, exec: Exec, echo: &[String]) -> Result<()> {
    let classifiers = parse_classifiers(&a.model)?;
    let models = parse_list::<ModelId>(&a.features)?;
    let mut m = Manifest::new("cv", echo);
    echo_pipeline(&mut m, &a.pipeline)?;
    m.set("k", a.k);
    m.set("classifiers", classifiers.iter().map(|c| c.as_str()).collect::<Vec<_>>());
    m.set("features", models.iter().map(|c| c.as_str()).collect::<Vec<_>>());
    create_dir(&a.out)?;
    let mut all: Vec<(ModelId, Vec<CvReport>)> = Vec::new();
    for &model in &models {
        let data = load_labeled(model, &a.input, &a.labels, exec, &mut m)?;
        let mut reports = Vec::new();
        for &c in &classifiers {
            let cfg = pipeline_config(model, c, &a.pipeline, exec)?;
            log::info!("cross-validating {}", cfg.describe());
            let r = cross_validate(&cfg, &data, a.k, a.pipeline.seed)
                .with_context(|| format!("cross-validating {}", cfg.describe()))?;
            let stem = format!("cv_{}_{}", model.as_str(), c.as_str());
            write_file(&a.out.join(format!("{stem}.txt")), &r.to_text())?;
            write_file(&a.out.join(format!("{stem}.csv")), &r.to_csv())?;
            m.outputs.push(format!("{stem}.txt"));
            m.outputs.push(format!("{stem}.csv"));
            reports.push(r);
        }
        all.push((model, reports));
    }
    let groups: Vec<(ModelId, Vec<&CvReport>)> = all.iter().map(|(mi, rs)| (*mi, rs.iter().collect())).collect();
    let text = table2_text(&groups);
    write_file(&a.out.join("table2.txt"), &text)?;
    write_file(&a.out.join("table2.csv"), &table2_csv(&groups))?;
    m.outputs.extend(["table2.txt".to_string(), "table2.csv".to_string()]);
    m.write(&a.out)?;
    print!("{text}");
    Ok(())
}

fn cmd_train(a: TrainArgs, exec: Exec, echo: &[String]) -> Result<()> {
    let mut m = Manifest::new("train", echo);
    echo_pipeline(&mut m, &a.pipeline)?;
    m.set("model", a.model.as_str());
    m.set("features", a.features.as_str());
    let data = load_labeled(a.features, &a.input, &a.labels, exec, &mut m)?;
    let cfg = pipeline_config(a.features, a.model, &a.pipeline, exec)?;
    let fitted = FittedPipeline::fit(&cfg, &data)?;
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    fitted.save(&a.out)?;
    let name = a.out.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    m.outputs.push(name.clone());
    let dir = a.out.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mpath = dir.join(format!("{name}.manifest.json"));
    write_file(&mpath, &m.to_json())?;
    println!("trained {} on {} rows -> {}", cfg.describe(), data.len(), a.out.display());
    Ok(())
}

fn cmd_predict(a: PredictArgs, exec: Exec, echo: &[String]) -> Result<()> {
    let mut m = Manifest::new("predict", echo);
    m.input(&a.model_file)?;
    let fitted = FittedPipeline::load(&a.model_file)?;
    let model_id = fitted.preprocess.model_id;
    m.set("features", model_id.as_str());
    let input = load_input(model_id, &a.input, exec, &mut m)?;
    let scores = fitted.predict_scores(&input, exec)?;
    let t = fitted.model.threshold();
    let mut out = String::from("id,predicted_label,score\n");
    for (id, s) in input.ids().iter().zip(&scores) {
        out.push_str(&format!("{id},{},{}\n", label_for(*s, t), adscreen_core::corpus::format_value(*s)));
    }
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    write_file(&a.out, &out)?;
    let name = a.out.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    m.outputs.push(name.clone());
    let dir = a.out.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    write_file(&dir.join(format!("{name}.manifest.json")), &m.to_json())?;
    println!("{} predictions -> {}", scores.len(), a.out.display());
    Ok(())
}

fn cmd_evaluate(a: EvaluateArgs, exec: Exec, echo: &[String]) -> Result<()> {
    let models = parse_list::<ModelId>(&a.features)?;
    let mut m = Manifest::new("evaluate", echo);
    echo_pipeline(&mut m, &a.pipeline)?;
    m.set("model", a.model.as_str());
    m.set("train_fraction", a.train_fraction);
    create_dir(&a.out)?;
    let mut reports = Vec::new();
    for &model in &models {
        let data = load_labeled(model, &a.input, &a.labels, exec, &mut m)?;
        let (tr, te) = split_indices(&data.labels, a.train_fraction, a.pipeline.seed, true)?;
        let cfg = pipeline_config(model, a.model, &a.pipeline, exec)?;
        let r = train_test_evaluate(&cfg, &data.subset(&tr), &data.subset(&te))
            .with_context(|| format!("evaluating {}", cfg.describe()))?;
        reports.push((model, r));
    }
    let rows: Vec<_> = reports.iter().map(|(mi, r)| (*mi, r)).collect();
    let text = table3_text(&rows);
    write_file(&a.out.join("table3.txt"), &text)?;
    write_file(&a.out.join("table3.csv"), &table3_csv(&rows))?;
    m.outputs.extend(["table3.txt".to_string(), "table3.csv".to_string()]);
    m.write(&a.out)?;
    print!("{text}");
    Ok(())
}
