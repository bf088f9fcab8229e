//! The `glosser` command line.
//!
//! Exit codes: 0 on success, 2 for data errors (unparsable corpora,
//! misaligned files, corrupt checkpoints), 3 for configuration errors (bad
//! flags or config files, missing input paths, track mismatches).

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::eval::{evaluate, BleuSmoothing, EvalOptions, GramInventory};
use crate::igt::{corpus_stats, parse_igt_bytes, serialize_igt, validate_entry, IgtEntry};
use crate::model::{
    annotate, load_checkpoint, save_checkpoint, train_with, CheckpointError, EpochControl, ModelConfig, ModelCheckpoint,
    ModelError, TrainConfig,
};
use crate::synthetic::{self, Profile};
use crate::Track;

pub const EXIT_DATA: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Config(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Data(_) => EXIT_DATA,
            CliError::Config(_) => EXIT_CONFIG,
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::InvalidConfig(_) | ModelError::TrackMismatch { .. } => CliError::Config(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "glosser", version, about = "Gloss-line prediction for interlinear glossed text")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model and write a checkpoint plus a per-epoch loss log.
    Train(TrainArgs),
    /// Fill in the gloss lines of an IGT file from a checkpoint.
    Predict(PredictArgs),
    /// Score predicted gloss lines against gold ones.
    Evaluate(EvaluateArgs),
    /// Print corpus statistics.
    Stats(StatsArgs),
    /// Write a corpus drawn from the built-in toy language.
    GenSynthetic(GenArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Desk,
    Paper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Table,
    Json,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long, value_parser = parse_track)]
    pub track: Option<Track>,
    /// JSON run configuration; flags take precedence over its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

fn parse_track(s: &str) -> std::result::Result<Track, String> {
    s.parse().map_err(|e: crate::ParseTrackError| e.to_string())
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub train: Option<PathBuf>,
    /// Optional development file, scored after training.
    #[arg(long)]
    pub dev: Option<PathBuf>,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Defaults to `<checkpoint>.loss.tsv`.
    #[arg(long)]
    pub loss_log: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub heads: Option<usize>,
    #[arg(long)]
    pub ffn_dim: Option<usize>,
    #[arg(long)]
    pub max_len: Option<usize>,
    /// Fail on entries with alignment problems instead of skipping them.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Defaults to standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub pred: Option<PathBuf>,
    #[arg(long)]
    pub gold: Option<PathBuf>,
    /// Write the JSON report here.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// One gram per line; replaces the capitalization rule.
    #[arg(long)]
    pub gram_inventory: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub bleu_smoothing: Option<SmoothingArg>,
    /// What to print on standard output.
    #[arg(long, value_enum, default_value_t = ReportFormat::Table)]
    pub format: ReportFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SmoothingArg {
    None,
    AddOne,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub size: usize,
    #[arg(long, value_enum, default_value_t = Profile::Agglutinative)]
    pub profile: Profile,
    /// Defaults to standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Values of a `--config` file. Every field is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub track: Option<Track>,
    pub train: Option<PathBuf>,
    pub dev: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub preset: Option<Preset>,
    #[serde(default)]
    pub model: ModelOverrides,
    #[serde(default)]
    pub training: TrainOverrides,
    pub gram_inventory: Option<PathBuf>,
    pub bleu_smoothing: Option<BleuSmoothing>,
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelOverrides {
    pub layers: Option<usize>,
    pub hidden: Option<usize>,
    pub heads: Option<usize>,
    pub ffn_dim: Option<usize>,
    pub max_len: Option<usize>,
    pub lowercase_translation: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainOverrides {
    pub lr: Option<f64>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub weight_decay: Option<f64>,
    pub beta1: Option<f64>,
    pub beta2: Option<f64>,
    pub eps: Option<f64>,
    pub shuffle_seed: Option<u64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))
    }

    fn for_args(common: &CommonArgs) -> Result<Self> {
        common.config.as_deref().map(Self::load).transpose().map(Option::unwrap_or_default)
    }
}

/// Parses `args` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: Command) -> Result<()> {
    match command {
        Command::Train(a) => cmd_train(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Stats(a) => cmd_stats(a),
        Command::GenSynthetic(a) => cmd_gen_synthetic(a),
    }
}

fn require(path: Option<PathBuf>, flag: &str) -> Result<PathBuf> {
    path.ok_or_else(|| CliError::Config(format!("missing --{flag} (not given on the command line or in --config)")))
}

fn read_input(path: &Path) -> Result<Vec<u8>> {
    if !path.exists() {
        return Err(CliError::Config(format!("input file {} does not exist", path.display())));
    }
    fs::read(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))
}

fn read_corpus(path: &Path) -> Result<Vec<IgtEntry>> {
    let bytes = read_input(path)?;
    parse_igt_bytes(&bytes).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn write_output(path: Option<&Path>, content: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, content).map_err(|e| CliError::Data(format!("cannot write {}: {e}", p.display()))),
        None => io::stdout()
            .write_all(content.as_bytes())
            .map_err(|e| CliError::Data(format!("cannot write to standard output: {e}"))),
    }
}

/// Model and training configuration after layering preset, config file and
/// flags, in that order.
pub fn resolve_configs(args: &TrainArgs, file: &RunConfig) -> (ModelConfig, TrainConfig) {
    let preset = args.preset.or(file.preset).unwrap_or(Preset::Desk);
    let (mut model, mut training) = match preset {
        Preset::Desk => (ModelConfig::desk(), TrainConfig::desk()),
        Preset::Paper => (ModelConfig::paper(), TrainConfig::paper()),
    };
    let m = &file.model;
    let t = &file.training;
    model.layers = args.layers.or(m.layers).unwrap_or(model.layers);
    model.hidden = args.hidden.or(m.hidden).unwrap_or(model.hidden);
    model.heads = args.heads.or(m.heads).unwrap_or(model.heads);
    model.ffn_dim = args.ffn_dim.or(m.ffn_dim).unwrap_or(model.ffn_dim);
    model.max_len = args.max_len.or(m.max_len).unwrap_or(model.max_len);
    model.lowercase_translation = m.lowercase_translation.unwrap_or(model.lowercase_translation);

    let seed = args.common.seed.or(file.seed).unwrap_or(0);
    model.seed = seed;
    training.shuffle_seed = t.shuffle_seed.unwrap_or(seed);
    training.lr = args.lr.or(t.lr).unwrap_or(training.lr);
    training.epochs = args.epochs.or(t.epochs).unwrap_or(training.epochs);
    training.batch_size = args.batch_size.or(t.batch_size).unwrap_or(training.batch_size);
    training.weight_decay = args.weight_decay.or(t.weight_decay).unwrap_or(training.weight_decay);
    training.beta1 = t.beta1.unwrap_or(training.beta1);
    training.beta2 = t.beta2.unwrap_or(training.beta2);
    training.eps = t.eps.unwrap_or(training.eps);
    (model, training)
}

fn default_loss_log(checkpoint: &Path) -> PathBuf {
    let mut name = checkpoint.as_os_str().to_owned();
    name.push(".loss.tsv");
    PathBuf::from(name)
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let file = RunConfig::for_args(&args.common)?;
    let track = args.common.track.or(file.track).unwrap_or(Track::Open);
    let train_path = require(args.train.clone().or(file.train.clone()), "train")?;
    let checkpoint_path = require(args.checkpoint.clone().or(file.checkpoint.clone()), "checkpoint")?;
    let dev_path = args.dev.clone().or(file.dev.clone());
    let (model_config, train_config) = resolve_configs(&args, &file);
    model_config.validate()?;
    train_config.validate()?;
    if let Some(dev) = &dev_path {
        read_input(dev)?;
    }

    let corpus = read_corpus(&train_path)?;
    if !corpus.iter().any(|e| e.gloss.is_some()) {
        return Err(CliError::Data(format!("{} has no glossed entries", train_path.display())));
    }
    if args.strict {
        for (i, e) in corpus.iter().enumerate() {
            if let Some(issue) = validate_entry(e, track).into_iter().find(|i| i.blocks_training()) {
                return Err(CliError::Data(format!("{} entry {}: {issue}", train_path.display(), i + 1)));
            }
        }
    }

    let mut log = String::new();
    let outcome = train_with(&corpus, track, &model_config, &train_config, |epoch, loss| {
        log.push_str(&format!("{epoch}\t{loss}\n"));
        EpochControl::Continue
    })?;
    save_checkpoint(&outcome.checkpoint, &checkpoint_path)
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", checkpoint_path.display())))?;
    let log_path = args.loss_log.clone().unwrap_or_else(|| default_loss_log(&checkpoint_path));
    write_output(Some(&log_path), &log)?;
    eprintln!(
        "trained {} epochs on {} entries ({} skipped), final loss {:.6}",
        outcome.losses.len(),
        corpus.len() - outcome.skipped,
        outcome.skipped,
        outcome.losses.last().copied().unwrap_or(f64::NAN)
    );

    if let Some(dev) = dev_path {
        let gold = read_corpus(&dev)?;
        let predicted = annotate(&outcome.checkpoint, &gold, track)?;
        let report = evaluate(&predicted, &gold, &EvalOptions::new()).map_err(|e| CliError::Data(e.to_string()))?;
        eprint!("{}", report.to_table(track));
    }
    Ok(())
}

fn load_model(path: &Path) -> Result<ModelCheckpoint> {
    if !path.exists() {
        return Err(CliError::Config(format!("checkpoint {} does not exist", path.display())));
    }
    load_checkpoint(path).map_err(|e| match e {
        CheckpointError::Io(err) => CliError::Config(format!("cannot read {}: {err}", path.display())),
        other => CliError::Data(format!("{}: {other}", path.display())),
    })
}

fn cmd_predict(args: PredictArgs) -> Result<()> {
    let file = RunConfig::for_args(&args.common)?;
    let checkpoint_path = require(args.checkpoint.or(file.checkpoint), "checkpoint")?;
    let input = require(args.input.or(file.test), "input")?;
    let ckpt = load_model(&checkpoint_path)?;
    let track = args.common.track.or(file.track).unwrap_or(ckpt.track);
    let entries = read_corpus(&input)?;
    let predicted = annotate(&ckpt, &entries, track)?;
    write_output(args.output.as_deref(), &serialize_igt(&predicted))
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<()> {
    let file = RunConfig::for_args(&args.common)?;
    let pred_path = require(args.pred, "pred")?;
    let gold_path = require(args.gold.or(file.test), "gold")?;
    let track = args.common.track.or(file.track).unwrap_or(Track::Open);
    let inventory = match args.gram_inventory.or(file.gram_inventory) {
        Some(p) => {
            let bytes = read_input(&p)?;
            let text = String::from_utf8(bytes)
                .map_err(|_| CliError::Config(format!("{} is not valid UTF-8", p.display())))?;
            Some(GramInventory::parse(&text))
        }
        None => None,
    };
    let smoothing = match args.bleu_smoothing {
        Some(SmoothingArg::None) => BleuSmoothing::None,
        Some(SmoothingArg::AddOne) => BleuSmoothing::AddOne,
        None => file.bleu_smoothing.unwrap_or_default(),
    };
    let opts = EvalOptions {
        inventory,
        bleu_smoothing: smoothing,
        ..EvalOptions::new()
    };

    let pred = read_corpus(&pred_path)?;
    let gold = read_corpus(&gold_path)?;
    let report = evaluate(&pred, &gold, &opts).map_err(|e| CliError::Data(e.to_string()))?;
    for w in &report.warnings {
        log::warn!("{w}");
    }
    if let Some(path) = args.report.or(file.report) {
        write_output(Some(&path), &(report.to_json() + "\n"))?;
    }
    match args.format {
        ReportFormat::Table => write_output(None, &report.to_table(track)),
        ReportFormat::Json => write_output(None, &(report.to_json() + "\n")),
    }
}

fn cmd_stats(args: StatsArgs) -> Result<()> {
    let file = RunConfig::for_args(&args.common)?;
    let track = args.common.track.or(file.track).unwrap_or(Track::Open);
    let entries = read_corpus(&args.input)?;
    let stats = corpus_stats(&entries, track);
    let text = if args.json {
        serde_json::to_string_pretty(&stats).expect("stats serialize") + "\n"
    } else {
        format!("{stats}\n")
    };
    write_output(None, &text)
}

fn cmd_gen_synthetic(args: GenArgs) -> Result<()> {
    if args.size == 0 {
        return Err(CliError::Config("--size must be at least 1".into()));
    }
    let entries = synthetic::generate(args.seed.unwrap_or(0), args.size, args.profile);
    write_output(args.output.as_deref(), &serialize_igt(&entries))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn train_args(extra: &[&str]) -> TrainArgs {
        let mut argv = vec!["glosser", "train"];
        argv.extend_from_slice(extra);
        match Cli::try_parse_from(argv).unwrap().command {
            Command::Train(a) => a,
            _ => unreachable!(),
        }
    }

    #[test]
    fn flags_override_config_file() {
        let file: RunConfig =
            serde_json::from_str(r#"{"seed": 4, "model": {"hidden": 32, "heads": 2}, "training": {"epochs": 7, "lr": 0.1}}"#)
                .unwrap();
        let (m, t) = resolve_configs(&train_args(&["--epochs", "3", "--heads", "8"]), &file);
        assert_eq!(m.hidden, 32);
        assert_eq!(m.heads, 8);
        assert_eq!(m.seed, 4);
        assert_eq!(t.epochs, 3);
        assert_eq!(t.lr, 0.1);
        assert_eq!(t.shuffle_seed, 4);
    }

    #[test]
    fn defaults_are_desk() {
        let (m, t) = resolve_configs(&train_args(&[]), &RunConfig::default());
        assert_eq!(m, ModelConfig::desk());
        assert_eq!(t, TrainConfig::desk());
        let (m, _) = resolve_configs(&train_args(&["--preset", "paper"]), &RunConfig::default());
        assert_eq!(m.hidden, 768);
    }

    #[test]
    fn unknown_config_keys_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"epochs": 3}"#).is_err());
    }

    #[test]
    fn exit_codes_for_bad_arguments() {
        assert_eq!(run(["glosser", "bogus"]), EXIT_CONFIG);
        assert_eq!(run(["glosser", "train", "--track", "semi"]), EXIT_CONFIG);
        assert_eq!(run(["glosser", "gen-synthetic", "--size", "0"]), EXIT_CONFIG);
        assert_eq!(run(["glosser", "--version"]), 0);
    }

    #[test]
    fn loss_log_path() {
        assert_eq!(default_loss_log(Path::new("out/model.ckpt")), PathBuf::from("out/model.ckpt.loss.tsv"));
    }
}
