//! Command-line front end for the `xel` pipeline.
//!
//! Every subcommand reads its inputs from files and writes either files or a
//! JSON summary on stdout. A `--config` JSON object supplies flag values by
//! flag name; flags given on the command line take precedence.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use xel_core::burn::{BurnModel, BurnParams, InferenceConfig};
use xel_core::candgen::{self, CalibrationConfig, MentionEntityMap};
use xel_core::corpus::{self, Document, MentionKey, Predictions};
use xel_core::eval::{self, InKbPolicy};
use xel_core::features::EmbeddingStore;
use xel_core::gradcheck::{self, GradcheckConfig};
use xel_core::kb::{self, BilingualMap, KbStatistics};
use xel_core::linear::{LinearModel, LinearParams};
use xel_core::model_file::{InferenceKind, LoadedModel, ModelFile, TrainManifest};
use xel_core::train::{self, TrainConfig};
use xel_core::{DocFeatures, FeatureSet, Model, Parallelism};

const USAGE_EXIT: i32 = 2;
const FAILURE_EXIT: i32 = 1;

#[derive(Debug, Parser)]
#[command(name = "xel", version, about = "Cross-lingual entity linking", args_override_self = true)]
struct Cli {
    /// JSON object of flag values; explicit flags win
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Worker threads for document-level work; 1 is the reference mode
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Count entities, co-occurring pairs and outlinks from anchor pages
    BuildStats(BuildStatsArgs),
    /// Build the surface-to-entity dictionary from source-language anchors
    BuildDictionary(BuildDictionaryArgs),
    /// Fill candidate lists from the dictionary and external score files
    Candidates(CandidatesArgs),
    /// Predict one entity per mention
    Link(LinkArgs),
    /// Fit a disambiguator on a labeled corpus
    Train(TrainArgs),
    /// Gold candidate recall and in-KB accuracy
    Eval(EvalArgs),
    /// Compare analytic gradients with finite differences
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Args)]
struct BuildStatsArgs {
    /// Anchor pages, JSONL
    #[arg(long)]
    pages: PathBuf,
    /// Output store directory
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct BuildDictionaryArgs {
    #[arg(long)]
    pages: PathBuf,
    /// source<TAB>english entity map; identity when omitted
    #[arg(long)]
    bilingual: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct CandidatesArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    dictionary: Option<PathBuf>,
    /// External candidate scores, JSONL; repeatable
    #[arg(long)]
    external: Vec<PathBuf>,
    #[arg(long, default_value_t = candgen::DEFAULT_K)]
    k: usize,
    #[arg(long, default_value_t = candgen::DEFAULT_GAMMA)]
    gamma: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FeatureSetArg {
    #[value(name = "FEAT", alias = "feat")]
    Feat,
    #[value(name = "BASE", alias = "base")]
    Base,
}

impl From<FeatureSetArg> for FeatureSet {
    fn from(v: FeatureSetArg) -> Self {
        match v {
            FeatureSetArg::Feat => FeatureSet::Feat,
            FeatureSetArg::Base => FeatureSet::Base,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum InferenceArg {
    Greedy,
    Burn,
}

impl From<InferenceArg> for InferenceKind {
    fn from(v: InferenceArg) -> Self {
        match v {
            InferenceArg::Greedy => InferenceKind::Greedy,
            InferenceArg::Burn => InferenceKind::Burn,
        }
    }
}

#[derive(Debug, Args)]
struct FeatureInputs {
    /// Corpus with candidate lists, JSONL
    #[arg(long)]
    corpus: PathBuf,
    /// Statistics store directory
    #[arg(long)]
    stats: PathBuf,
    /// Entity embeddings, text format
    #[arg(long)]
    embeddings: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct LinkArgs {
    #[command(flatten)]
    inputs: FeatureInputs,
    /// Trained model file; greedy linking with unit weights when omitted
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, value_enum)]
    inference: Option<InferenceArg>,
    #[arg(long, value_enum)]
    feature_set: Option<FeatureSetArg>,
    /// Override the model's iteration limit
    #[arg(long)]
    t: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    inputs: FeatureInputs,
    #[arg(long, value_enum, default_value = "burn")]
    inference: InferenceArg,
    #[arg(long, value_enum, default_value = "FEAT")]
    feature_set: FeatureSetArg,
    #[arg(long, default_value_t = xel_core::burn::DEFAULT_MAX_ITERATIONS)]
    t: usize,
    #[arg(long, default_value_t = xel_core::burn::DEFAULT_CONVERGENCE_TOL)]
    tol: f64,
    #[arg(long, default_value_t = xel_core::burn::DEFAULT_CONTEXT_WINDOW)]
    window: usize,
    #[arg(long, default_value_t = xel_core::burn::DEFAULT_HIDDEN)]
    hidden: usize,
    #[arg(long, default_value_t = train::DEFAULT_DROPOUT)]
    dropout: f64,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = 10)]
    epochs: usize,
    /// Documents per update; whole corpus when omitted
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output model file
    #[arg(long)]
    out: PathBuf,
    /// Per-epoch training log, JSON
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum InKbArg {
    /// Every labeled mention
    All,
    /// Gold entity seen in the statistics or dictionary
    Known,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Predictions JSONL; recall only when omitted
    #[arg(long)]
    predictions: Option<PathBuf>,
    #[arg(long)]
    stats: Option<PathBuf>,
    #[arg(long)]
    dictionary: Option<PathBuf>,
    /// Defaults to `known` when statistics or a dictionary are given
    #[arg(long, value_enum)]
    in_kb: Option<InKbArg>,
    /// Report file; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GradcheckArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 50)]
    instances: usize,
    /// Largest iteration count drawn per instance
    #[arg(long, default_value_t = 3)]
    t: usize,
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
enum CliError {
    Usage(String),
    Failed(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Failed(e)
    }
}

impl From<xel_core::Error> for CliError {
    fn from(e: xel_core::Error) -> Self {
        CliError::Failed(e.into())
    }
}

type CliResult<T> = Result<T, CliError>;

fn require_input(path: &Path) -> CliResult<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("input not found: {}", path.display())))
    }
}

fn config_tokens(path: &Path) -> CliResult<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
    let value: Value =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
    let Value::Object(map) = value else {
        return Err(CliError::Usage(format!("config {} must hold a JSON object", path.display())));
    };
    let mut tokens = Vec::new();
    for (key, value) in map {
        let flag = format!("--{}", key.replace('_', "-"));
        if flag == "--config" {
            return Err(CliError::Usage("config files cannot nest --config".into()));
        }
        let mut push = |v: &Value| -> CliResult<()> {
            match v {
                Value::Null | Value::Bool(false) => {}
                Value::Bool(true) => tokens.push(flag.clone()),
                Value::String(s) => tokens.push(format!("{flag}={s}")),
                Value::Number(n) => tokens.push(format!("{flag}={n}")),
                _ => return Err(CliError::Usage(format!("config key {key}: unsupported value {v}"))),
            }
            Ok(())
        };
        match &value {
            Value::Array(items) => items.iter().try_for_each(&mut push)?,
            other => push(other)?,
        }
    }
    Ok(tokens)
}

const SUBCOMMANDS: [&str; 7] = [
    "build-stats",
    "build-dictionary",
    "candidates",
    "link",
    "train",
    "eval",
    "gradcheck",
];

/// Inserts config-file flags right after the subcommand name so that
/// anything given on the command line overrides them.
fn expand_config(argv: Vec<String>) -> CliResult<Vec<String>> {
    let mut config = None;
    for (i, arg) in argv.iter().enumerate() {
        if arg == "--config" {
            config = argv.get(i + 1).cloned();
        } else if let Some(v) = arg.strip_prefix("--config=") {
            config = Some(v.to_string());
        }
    }
    let Some(config) = config else {
        return Ok(argv);
    };
    let Some(sub) = argv.iter().skip(1).position(|a| SUBCOMMANDS.contains(&a.as_str())) else {
        return Ok(argv);
    };
    let tokens = config_tokens(Path::new(&config))?;
    let at = sub + 2;
    let mut out = argv[..at].to_vec();
    out.extend(tokens);
    out.extend_from_slice(&argv[at..]);
    Ok(out)
}

/// Runs the CLI with the process's standard streams.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// Runs the CLI, writing summaries to `out` and diagnostics to `err`.
/// Returns the process exit code.
pub fn run_with<I, S>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
    let result = expand_config(argv).and_then(|argv| {
        let cli = match Cli::try_parse_from(argv) {
            Ok(cli) => cli,
            Err(e) => {
                use clap::error::ErrorKind;
                let rendered = e.render().to_string();
                if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                    let _ = write!(out, "{rendered}");
                    return Ok(());
                }
                return Err(CliError::Usage(rendered.trim_end().to_string()));
            }
        };
        dispatch(cli, out)
    });
    match result {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            let _ = writeln!(err, "{msg}");
            USAGE_EXIT
        }
        Err(CliError::Failed(e)) => {
            let _ = writeln!(err, "error: {e:#}");
            FAILURE_EXIT
        }
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> CliResult<()> {
    let par = Parallelism::new(cli.jobs).map_err(|e| CliError::Usage(e.to_string()))?;
    match cli.command {
        Command::BuildStats(a) => build_stats(a, &par, out),
        Command::BuildDictionary(a) => build_dictionary(a, out),
        Command::Candidates(a) => candidates(a, out),
        Command::Link(a) => link(a, &par, out),
        Command::Train(a) => train_cmd(a, &par, out),
        Command::Eval(a) => eval_cmd(a, &par, out),
        Command::Gradcheck(a) => gradcheck_cmd(a, out),
    }
}

fn print_json(out: &mut dyn Write, value: &impl Serialize) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).context("serializing output")?;
    writeln!(out, "{text}").context("writing output")?;
    Ok(())
}

fn build_stats(a: BuildStatsArgs, par: &Parallelism, out: &mut dyn Write) -> CliResult<()> {
    require_input(&a.pages)?;
    let pages = kb::read_anchor_pages(&a.pages)?;
    let stats = KbStatistics::ingest_sharded(&pages, par);
    stats.save(&a.out)?;
    print_json(
        out,
        &json!({
            "pages": pages.len(),
            "entities": stats.entity_counts().len(),
            "pairs": stats.pair_counts().len(),
            "anchors": stats.total_anchor_count(),
        }),
    )
}

fn build_dictionary(a: BuildDictionaryArgs, out: &mut dyn Write) -> CliResult<()> {
    require_input(&a.pages)?;
    let pages = kb::read_anchor_pages(&a.pages)?;
    let bimap = match &a.bilingual {
        Some(path) => {
            require_input(path)?;
            BilingualMap::read_tsv(path)?
        }
        None => {
            let mut identity = BilingualMap::new();
            for link in pages.iter().flat_map(|p| &p.links) {
                identity.insert(link.entity.clone(), link.entity.clone())?;
            }
            identity
        }
    };
    let (dict, report) = MentionEntityMap::build(&pages, &bimap);
    dict.write_tsv(&a.out)?;
    print_json(
        out,
        &json!({ "surfaces": dict.len(), "kept": report.kept, "dropped": report.dropped }),
    )
}

fn candidates(a: CandidatesArgs, out: &mut dyn Write) -> CliResult<()> {
    require_input(&a.corpus)?;
    if a.dictionary.is_none() && a.external.is_empty() {
        return Err(CliError::Usage("candidates needs --dictionary or --external".into()));
    }
    let cfg = CalibrationConfig::new(a.gamma, a.k).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut docs = corpus::read_corpus(&a.corpus)?;
    let dict = match &a.dictionary {
        Some(path) => {
            require_input(path)?;
            Some(MentionEntityMap::read_tsv(path)?)
        }
        None => None,
    };
    let mut external = Vec::with_capacity(a.external.len());
    for path in &a.external {
        require_input(path)?;
        external.push(candgen::read_external_scores(path)?);
    }
    candgen::generate_candidates(&mut docs, dict.as_ref(), &external, &cfg)?;
    corpus::write_corpus(&docs, &a.out)?;
    let mentions: usize = docs.iter().map(|d| d.mentions.len()).sum();
    let empty = docs
        .iter()
        .flat_map(|d| &d.mentions)
        .filter(|m| m.candidates.is_empty())
        .count();
    print_json(
        out,
        &json!({ "documents": docs.len(), "mentions": mentions, "without_candidates": empty }),
    )
}

struct Featurized {
    docs: Vec<Document>,
    features: Vec<DocFeatures>,
}

fn featurize(inputs: &FeatureInputs, fs: FeatureSet, par: &Parallelism) -> CliResult<Featurized> {
    require_input(&inputs.corpus)?;
    require_input(&inputs.stats)?;
    let docs = corpus::read_corpus(&inputs.corpus)?;
    let stats = KbStatistics::load(&inputs.stats)?;
    let embeddings = match &inputs.embeddings {
        Some(path) => {
            require_input(path)?;
            Some(EmbeddingStore::read_text(path)?)
        }
        None => None,
    };
    let features = par.map(&docs, |_, d| DocFeatures::build(d, &stats, embeddings.as_ref(), fs));
    Ok(Featurized { docs, features })
}

fn predictions_of<M: Model>(model: &M, data: &Featurized, par: &Parallelism) -> Predictions {
    let chosen = par.map(&data.features, |_, f| model.predict(f));
    let mut preds = Predictions::new();
    for (doc, picks) in data.docs.iter().zip(chosen) {
        for (m, pick) in doc.mentions.iter().zip(picks) {
            if let Some(j) = pick {
                preds.insert(MentionKey::new(&doc.doc_id, &m.id), m.candidates[j].entity.clone());
            }
        }
    }
    preds
}

fn link(a: LinkArgs, par: &Parallelism, out: &mut dyn Write) -> CliResult<()> {
    let loaded = match &a.model {
        Some(path) => {
            require_input(path)?;
            let file = ModelFile::load(path)?;
            if let Some(fs) = a.feature_set {
                if FeatureSet::from(fs) != file.feature_set {
                    return Err(CliError::Usage(format!(
                        "model was trained with feature set {}",
                        file.feature_set.name()
                    )));
                }
            }
            if let Some(inf) = a.inference {
                if InferenceKind::from(inf) != file.inference {
                    return Err(CliError::Usage(format!("model file holds a {} model", file.inference)));
                }
            }
            Some((file.feature_set, file.into_model()?))
        }
        None => None,
    };
    let (fs, model) = match loaded {
        Some(found) => found,
        None => {
            if matches!(a.inference, Some(InferenceArg::Burn)) {
                return Err(CliError::Usage("burn inference needs --model".into()));
            }
            let fs = a.feature_set.map_or(FeatureSet::Feat, FeatureSet::from);
            (fs, LoadedModel::Linear(LinearModel::new(LinearParams::ones(fs))))
        }
    };
    let data = featurize(&a.inputs, fs, par)?;
    let preds = match model {
        LoadedModel::Linear(m) => predictions_of(&m, &data, par),
        LoadedModel::Burn(mut m) => {
            if let Some(t) = a.t {
                m.inference = InferenceConfig::new(t, m.inference.convergence_tol, m.inference.context_window)
                    .map_err(|e| CliError::Usage(e.to_string()))?;
            }
            predictions_of(&m, &data, par)
        }
    };
    corpus::write_linked(&data.docs, &preds, &a.out)?;
    let mentions: usize = data.docs.iter().map(|d| d.mentions.len()).sum();
    print_json(out, &json!({ "mentions": mentions, "linked": preds.len() }))
}

fn train_cmd(a: TrainArgs, par: &Parallelism, out: &mut dyn Write) -> CliResult<()> {
    let fs = FeatureSet::from(a.feature_set);
    let inference =
        InferenceConfig::new(a.t, a.tol, a.window).map_err(|e| CliError::Usage(e.to_string()))?;
    if a.hidden == 0 {
        return Err(CliError::Usage("--hidden must be at least 1".into()));
    }
    let cfg = TrainConfig {
        epochs: a.epochs,
        lr: a.lr,
        dropout: a.dropout,
        batch_size: a.batch_size,
        seed: a.seed,
        ..TrainConfig::default()
    };
    let data = featurize(&a.inputs, fs, par)?;
    let manifest = TrainManifest::new(cfg, inference);
    let (file, log) = match InferenceKind::from(a.inference) {
        InferenceKind::Greedy => {
            let mut model = LinearModel::new(LinearParams::zeros(fs));
            let log = train::train(&mut model, &data.features, &cfg, par)?;
            (ModelFile::from_linear(&model, fs, Some(manifest)), log)
        }
        InferenceKind::Burn => {
            let params = BurnParams::init(fs.unary_dim(), fs.binary_dim(), a.hidden, a.seed);
            let mut model = BurnModel::new(params, inference);
            let log = train::train(&mut model, &data.features, &cfg, par)?;
            (ModelFile::from_burn(&model, fs, Some(manifest)), log)
        }
    };
    file.save(&a.out)?;
    if let Some(path) = &a.log {
        let text = serde_json::to_string_pretty(&log).context("serializing log")?;
        fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
    }
    let last = log.epochs.last().expect("initial record");
    print_json(
        out,
        &json!({
            "epochs": a.epochs,
            "counted": log.counted,
            "excluded": log.excluded,
            "initial_loss": log.epochs[0].loss,
            "final_loss": last.loss,
            "final_accuracy": last.accuracy,
        }),
    )
}

#[derive(Serialize)]
struct RunMetadata {
    tool: &'static str,
    version: &'static str,
    inputs: BTreeMap<String, String>,
}

fn eval_cmd(a: EvalArgs, par: &Parallelism, out: &mut dyn Write) -> CliResult<()> {
    require_input(&a.corpus)?;
    let docs = corpus::read_corpus(&a.corpus)?;
    let mut inputs = BTreeMap::new();
    inputs.insert("corpus".to_string(), eval::file_sha256(&a.corpus)?);
    let predictions = match &a.predictions {
        Some(path) => {
            require_input(path)?;
            inputs.insert("predictions".to_string(), eval::file_sha256(path)?);
            Some(corpus::read_predictions(path)?)
        }
        None => None,
    };
    let stats = match &a.stats {
        Some(path) => {
            require_input(path)?;
            Some(KbStatistics::load(path)?)
        }
        None => None,
    };
    let dict = match &a.dictionary {
        Some(path) => {
            require_input(path)?;
            inputs.insert("dictionary".to_string(), eval::file_sha256(path)?);
            Some(MentionEntityMap::read_tsv(path)?)
        }
        None => None,
    };
    let have_kb = stats.is_some() || dict.is_some();
    let policy = match a.in_kb {
        Some(InKbArg::All) => InKbPolicy::AllLabeled,
        Some(InKbArg::Known) if !have_kb => {
            return Err(CliError::Usage("--in-kb known needs --stats or --dictionary".into()));
        }
        None if !have_kb => InKbPolicy::AllLabeled,
        _ => InKbPolicy::from_sources(stats.as_ref(), dict.as_ref()),
    };
    let report = eval::evaluate(&docs, predictions.as_ref(), &policy, par)?;
    let body = json!({
        "report": report,
        "config": { "in_kb": policy.name() },
        "run": RunMetadata {
            tool: "xel",
            version: env!("CARGO_PKG_VERSION"),
            inputs,
        },
    });
    match &a.out {
        Some(path) => {
            let text = serde_json::to_string_pretty(&body).context("serializing report")?;
            fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
            print_json(
                out,
                &json!({ "gold_recall": report.gold_recall, "accuracy": report.accuracy }),
            )
        }
        None => print_json(out, &body),
    }
}

fn gradcheck_cmd(a: GradcheckArgs, out: &mut dyn Write) -> CliResult<()> {
    if a.t == 0 || a.instances == 0 {
        return Err(CliError::Usage("--t and --instances must be at least 1".into()));
    }
    let cfg = GradcheckConfig {
        instances: a.instances,
        max_iterations: a.t,
        seed: a.seed,
        ..GradcheckConfig::default()
    };
    let report = gradcheck::gradcheck(&cfg)?;
    print_json(out, &report)?;
    if report.passed {
        Ok(())
    } else {
        Err(anyhow::anyhow!(
            "max relative error {:.3e} exceeds {:.0e}",
            report.max_relative_error,
            report.tolerance
        )
        .into())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_quiet(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run_with(args.iter().copied(), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn unknown_flag_is_usage_error() {
        let (code, _, err) = run_quiet(&["xel", "eval", "--bogus"]);
        assert_eq!(code, USAGE_EXIT);
        assert!(!err.is_empty());
    }

    #[test]
    fn missing_input_is_usage_error() {
        let (code, _, err) = run_quiet(&["xel", "eval", "--corpus", "/nonexistent/corpus.jsonl"]);
        assert_eq!(code, USAGE_EXIT);
        assert!(err.contains("not found"));
    }

    #[test]
    fn help_exits_zero() {
        let (code, out, _) = run_quiet(&["xel", "--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("gradcheck"));
    }

    #[test]
    fn config_values_yield_to_flags() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.json");
        fs::write(&cfg, r#"{"seed": 5, "instances": 2, "t": 1}"#).unwrap();
        let argv: Vec<String> = ["xel", "gradcheck", "--config", cfg.to_str().unwrap(), "--seed", "9"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let expanded = expand_config(argv).unwrap();
        let cli = Cli::try_parse_from(expanded).unwrap();
        let Command::Gradcheck(g) = cli.command else {
            panic!("wrong subcommand");
        };
        assert_eq!((g.seed, g.instances, g.t), (9, 2, 1));
    }

    #[test]
    fn gradcheck_reports_and_passes() {
        let (code, out, _) = run_quiet(&["xel", "gradcheck", "--seed", "7", "--instances", "3"]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert!(v["max_relative_error"].as_f64().unwrap() <= 1e-4);
    }
}
