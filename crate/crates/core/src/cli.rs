//! Command-line pipeline: train, eval, syndrome, compare.
//!
//! Experiments are described by a TOML config file plus flag overrides;
//! flags win. Every referenced path is validated before any long
//! computation starts, and all randomness flows from the single top-level
//! seed through named substreams, so one number reproduces a whole run.

use crate::decoder::{read_weights, write_weights, WeightFileMeta, WeightSet};
use crate::linear_code::Code;
use crate::losses::{soft_syndrome, syndrome_loss};
use crate::montecarlo::{
    self, compare, evaluate, read_results_csv, write_compare_csv, write_results_csv, EvalConfig,
    EvalPoint,
};
use crate::training::{self, train, CodewordMode, TrainConfig, TrainOutcome};
use crate::Parametrization;
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("output directory {0} does not exist")]
    MissingOutputDir(PathBuf),
    #[error("no code file specified (use --code or a config file)")]
    NoCodeFile,
    #[error("no output path specified for {0}")]
    NoOutputPath(&'static str),
    #[error("no SNR points specified (use --snrs or eval_snrs in the config)")]
    NoSnrPoints,
    #[error("config file {path}: {message}")]
    BadConfig { path: PathBuf, message: String },
    #[error("{0}")]
    BadFlag(String),
    #[error(
        "weight file (code `{weight_code}`, n={weight_n}, k={weight_k}, {weight_edges} edges x \
         {weight_iterations} iterations) does not match code `{code_name}` (n={n}, k={k}, \
         {edges} edges)"
    )]
    WeightCodeMismatch {
        weight_code: String,
        weight_n: usize,
        weight_k: usize,
        weight_edges: usize,
        weight_iterations: usize,
        code_name: String,
        n: usize,
        k: usize,
        edges: usize,
    },
    #[error(transparent)]
    Code(#[from] crate::linear_code::CodeError),
    #[error(transparent)]
    WeightFile(#[from] crate::decoder::WeightFileError),
    #[error(transparent)]
    Train(#[from] training::TrainError),
    #[error(transparent)]
    Eval(#[from] montecarlo::EvalError),
    #[error(transparent)]
    Loss(#[from] crate::losses::LossError),
    #[error("thread pool: {0}")]
    ThreadPool(#[from] rayon::ThreadPoolBuildError),
}

fn default_workers() -> usize {
    0
}

/// One experiment: code, seed, optional training section, evaluation grid
/// and stopping rules, and output paths. Serializes to the TOML config
/// format; the effective config dumped by a run reparses to an equal value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub code_file: PathBuf,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train: Option<TrainConfig>,
    pub eval_snrs: Vec<f64>,
    pub eval: EvalConfig,
    /// Evaluation worker threads; 0 means the library default.
    #[serde(default = "default_workers")]
    pub workers: usize,
    /// Decoder iterations for the weights-all-one baseline when no weight
    /// file is given to `eval`.
    pub baseline_iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights_in: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights_out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_csv: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            code_file: PathBuf::new(),
            seed: 0,
            train: None,
            eval_snrs: Vec::new(),
            eval: EvalConfig::default(),
            workers: 0,
            baseline_iterations: 5,
            weights_in: None,
            weights_out: None,
            log_out: None,
            output_csv: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_file(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        toml::from_str(&text).map_err(|e| CliError::BadConfig {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "nnms",
    version,
    about = "Train and evaluate neural normalized min-sum decoders with a syndrome loss"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train decoder weights and write a weight file plus a training log.
    Train(TrainArgs),
    /// Estimate FER/BER over a list of SNR points and write a results CSV.
    Eval(EvalArgs),
    /// Print the hard syndrome, soft syndrome and syndrome loss of a vector.
    Syndrome(SyndromeArgs),
    /// Compare two results CSVs point by point.
    Compare(CompareArgs),
}

#[derive(Debug, Args, Default)]
pub struct TrainArgs {
    /// Experiment config file (TOML); explicit flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Parity-check matrix in alist format.
    #[arg(long)]
    pub code: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Loss blend: 0 = purely syndrome (unsupervised), 1 = purely cross-entropy.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub minibatch_size: Option<usize>,
    #[arg(long)]
    pub num_minibatches: Option<usize>,
    #[arg(long)]
    pub snr_low: Option<f64>,
    #[arg(long)]
    pub snr_high: Option<f64>,
    /// Training codewords: all_zeros or random.
    #[arg(long, value_parser = CodewordMode::from_str)]
    pub codewords: Option<CodewordMode>,
    /// Weight parametrization: identity or softplus.
    #[arg(long, value_parser = Parametrization::from_str)]
    pub parametrization: Option<Parametrization>,
    /// Decoder iterations to unroll.
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Where to write the trained weights.
    #[arg(long)]
    pub weights_out: Option<PathBuf>,
    /// Where to write the per-minibatch loss log (CSV).
    #[arg(long)]
    pub log_out: Option<PathBuf>,
    /// Write the effective config (TOML) here before running.
    #[arg(long)]
    pub dump_config: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
pub struct EvalArgs {
    /// Experiment config file (TOML); explicit flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Parity-check matrix in alist format.
    #[arg(long)]
    pub code: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Weight file to evaluate; omitted = weights-all-one baseline.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// Comma-separated Eb/N0 points in dB, e.g. "1,2,3,4".
    #[arg(long)]
    pub snrs: Option<String>,
    /// Results CSV path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub min_frames: Option<u64>,
    #[arg(long)]
    pub min_errors: Option<u64>,
    #[arg(long)]
    pub frame_cap: Option<u64>,
    /// Stop a frame's decode at the first iteration whose hard decision is a
    /// codeword (off by default; does not change decisions when off).
    #[arg(long)]
    pub early_exit: bool,
    /// Worker threads for the frame loop (0 = library default). Results are
    /// identical for any value.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Decoder iterations for the baseline when --weights is omitted.
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Write the effective config (TOML) here before running.
    #[arg(long)]
    pub dump_config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SyndromeArgs {
    /// Parity-check matrix in alist format.
    #[arg(long)]
    pub code: PathBuf,
    /// Comma- or space-separated soft values, length n.
    #[arg(long)]
    pub vector: String,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Results CSV produced by `eval` (numerator).
    pub csv_a: PathBuf,
    /// Results CSV produced by `eval` (denominator).
    pub csv_b: PathBuf,
    /// Optional path for the ratio table CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Train(args) => {
            let config = effective_train_config(&args)?;
            maybe_dump(&config, args.dump_config.as_deref())?;
            cmd_train(&config).map(|_| ())
        }
        Command::Eval(args) => {
            let config = effective_eval_config(&args)?;
            maybe_dump(&config, args.dump_config.as_deref())?;
            cmd_eval(&config).map(|_| ())
        }
        Command::Syndrome(args) => cmd_syndrome(&args.code, &args.vector),
        Command::Compare(args) => {
            cmd_compare(&args.csv_a, &args.csv_b, args.out.as_deref()).map(|_| ())
        }
    }
}

fn maybe_dump(config: &ExperimentConfig, path: Option<&Path>) -> Result<(), CliError> {
    if let Some(path) = path {
        fs::write(path, config.to_toml()).map_err(|source| CliError::Write {
            path: path.to_path_buf(),
            source,
        })?;
    }
    Ok(())
}

fn load_base(config_path: Option<&Path>) -> Result<ExperimentConfig, CliError> {
    match config_path {
        Some(path) => ExperimentConfig::from_toml_file(path),
        None => Ok(ExperimentConfig::default()),
    }
}

/// Merges config file and flags for `train`; flags win. The training
/// section's seed is always the top-level experiment seed.
pub fn effective_train_config(args: &TrainArgs) -> Result<ExperimentConfig, CliError> {
    let mut config = load_base(args.config.as_deref())?;
    if let Some(code) = &args.code {
        config.code_file = code.clone();
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let mut tc = config.train.take().unwrap_or_default();
    if let Some(v) = args.lambda {
        tc.lambda = v;
    }
    if let Some(v) = args.learning_rate {
        tc.learning_rate = v;
    }
    if let Some(v) = args.minibatch_size {
        tc.minibatch_size = v;
    }
    if let Some(v) = args.num_minibatches {
        tc.num_minibatches = v;
    }
    if let Some(v) = args.snr_low {
        tc.snr_range_db[0] = v;
    }
    if let Some(v) = args.snr_high {
        tc.snr_range_db[1] = v;
    }
    if let Some(v) = args.codewords {
        tc.codeword_mode = v;
    }
    if let Some(v) = args.parametrization {
        tc.parametrization = v;
    }
    if let Some(v) = args.iterations {
        tc.iterations = v;
    }
    tc.seed = config.seed;
    config.train = Some(tc);
    if let Some(v) = &args.weights_out {
        config.weights_out = Some(v.clone());
    }
    if let Some(v) = &args.log_out {
        config.log_out = Some(v.clone());
    }
    Ok(config)
}

/// Merges config file and flags for `eval`; flags win.
pub fn effective_eval_config(args: &EvalArgs) -> Result<ExperimentConfig, CliError> {
    let mut config = load_base(args.config.as_deref())?;
    if let Some(code) = &args.code {
        config.code_file = code.clone();
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(weights) = &args.weights {
        config.weights_in = Some(weights.clone());
    }
    if let Some(snrs) = &args.snrs {
        config.eval_snrs = parse_snr_list(snrs)?;
    }
    if let Some(out) = &args.out {
        config.output_csv = Some(out.clone());
    }
    if let Some(v) = args.min_frames {
        config.eval.min_frames = v;
    }
    if let Some(v) = args.min_errors {
        config.eval.min_frame_errors = v;
    }
    if let Some(v) = args.frame_cap {
        config.eval.frame_cap = v;
    }
    if args.early_exit {
        config.eval.early_exit = true;
    }
    if let Some(v) = args.workers {
        config.workers = v;
    }
    if let Some(v) = args.iterations {
        config.baseline_iterations = v;
    }
    Ok(config)
}

fn parse_snr_list(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|tok| !tok.is_empty())
        .map(|tok| {
            tok.parse::<f64>()
                .map_err(|_| CliError::BadFlag(format!("cannot parse `{tok}` as an SNR in dB")))
        })
        .collect()
}

fn load_code(path: &Path) -> Result<Code, CliError> {
    if path.as_os_str().is_empty() {
        return Err(CliError::NoCodeFile);
    }
    let text = fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "code".to_string());
    Ok(Code::from_alist(name, &text)?)
}

fn ensure_parent_exists(path: &Path) -> Result<(), CliError> {
    let parent = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(parent) = parent {
        if !parent.is_dir() {
            return Err(CliError::MissingOutputDir(parent.to_path_buf()));
        }
    }
    Ok(())
}

fn write_file<F>(path: &Path, write: F) -> Result<(), CliError>
where
    F: FnOnce(&mut BufWriter<fs::File>) -> std::io::Result<()>,
{
    let map_err = |source| CliError::Write {
        path: path.to_path_buf(),
        source,
    };
    let file = fs::File::create(path).map_err(map_err)?;
    let mut out = BufWriter::new(file);
    write(&mut out).map_err(map_err)?;
    out.flush().map_err(map_err)
}

/// Trains per the config and writes the weight file and training log.
/// Inputs and output directories are validated before training starts.
pub fn cmd_train(config: &ExperimentConfig) -> Result<TrainOutcome, CliError> {
    let code = load_code(&config.code_file)?;
    let weights_out = config
        .weights_out
        .as_deref()
        .ok_or(CliError::NoOutputPath("--weights-out"))?;
    ensure_parent_exists(weights_out)?;
    if let Some(log_out) = &config.log_out {
        ensure_parent_exists(log_out)?;
    }
    let mut tc = config.train.clone().unwrap_or_default();
    tc.seed = config.seed;

    let outcome = train(&code, &tc)?;
    if outcome.degenerate {
        eprintln!(
            "warning: degenerate run (noiseless probe FER {:.3} > 0.5): \
             the decoder maps clean inputs to wrong codewords",
            outcome.probe_fer
        );
    }

    let meta = WeightFileMeta {
        code_name: code.name().to_string(),
        n: code.n(),
        k: code.k(),
    };
    write_file(weights_out, |out| {
        write_weights(&outcome.weights, &meta, out)
    })?;
    if let Some(log_out) = &config.log_out {
        write_file(log_out, |out| {
            training::write_training_log(&outcome.log, out)
        })?;
    }
    let final_loss = outcome.log.last().map_or(f64::NAN, |row| row.total_loss);
    println!(
        "trained {} minibatches on {}: final loss {}, probe FER {}{}",
        outcome.log.len(),
        code.name(),
        final_loss,
        outcome.probe_fer,
        if outcome.degenerate {
            " (DEGENERATE)"
        } else {
            ""
        }
    );
    println!("weights written to {}", weights_out.display());
    Ok(outcome)
}

/// Evaluates FER/BER per the config and writes the results CSV. With no
/// weight file the weights-all-one baseline ("no learning") is evaluated.
pub fn cmd_eval(config: &ExperimentConfig) -> Result<Vec<EvalPoint>, CliError> {
    let code = load_code(&config.code_file)?;
    if config.eval_snrs.is_empty() {
        return Err(CliError::NoSnrPoints);
    }
    let output_csv = config
        .output_csv
        .as_deref()
        .ok_or(CliError::NoOutputPath("--out"))?;
    ensure_parent_exists(output_csv)?;

    let weights = match &config.weights_in {
        Some(path) => {
            let file = fs::File::open(path).map_err(|source| CliError::Read {
                path: path.to_path_buf(),
                source,
            })?;
            let (weights, meta) = read_weights(std::io::BufReader::new(file))?;
            if meta.n != code.n()
                || meta.k != code.k()
                || weights.edge_count() != code.graph().edge_count()
            {
                return Err(CliError::WeightCodeMismatch {
                    weight_code: meta.code_name,
                    weight_n: meta.n,
                    weight_k: meta.k,
                    weight_edges: weights.edge_count(),
                    weight_iterations: weights.iterations(),
                    code_name: code.name().to_string(),
                    n: code.n(),
                    k: code.k(),
                    edges: code.graph().edge_count(),
                });
            }
            weights
        }
        None => WeightSet::ones(
            config.baseline_iterations,
            code.graph().edge_count(),
            Parametrization::Identity,
        )
        .map_err(montecarlo::EvalError::Decoder)?,
    };

    let points = if config.workers > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()?;
        pool.install(|| {
            evaluate(
                &code,
                &weights,
                &config.eval_snrs,
                config.seed,
                &config.eval,
            )
        })?
    } else {
        evaluate(
            &code,
            &weights,
            &config.eval_snrs,
            config.seed,
            &config.eval,
        )?
    };

    write_file(output_csv, |out| write_results_csv(&points, out))?;
    println!("ebn0_db  frames  frame_errors  fer  ber  capped");
    for p in &points {
        println!(
            "{}  {}  {}  {}  {}  {}",
            p.ebn0_db, p.frames, p.frame_errors, p.fer, p.ber, p.capped
        );
    }
    println!("results written to {}", output_csv.display());
    Ok(points)
}

/// Prints the hard syndrome, the soft syndrome and the syndrome loss of a
/// soft vector under the given code.
pub fn cmd_syndrome(code_file: &Path, vector_text: &str) -> Result<(), CliError> {
    let code = load_code(code_file)?;
    let s: Vec<f64> = vector_text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|tok| !tok.is_empty())
        .map(|tok| {
            tok.parse::<f64>()
                .map_err(|_| CliError::BadFlag(format!("cannot parse `{tok}` as a number")))
        })
        .collect::<Result<_, _>>()?;
    let hard = code.parity().hard_syndrome(&s)?;
    let soft = soft_syndrome(&s, code.graph())?;
    let loss = syndrome_loss(&s, code.graph())?;
    println!(
        "hard syndrome: {}",
        hard.iter()
            .map(|v| format!("{v:+}"))
            .collect::<Vec<_>>()
            .join(" ")
    );
    println!(
        "soft syndrome: {}",
        soft.iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    );
    println!("syndrome loss: {loss}");
    Ok(())
}

/// Reads two results CSVs, prints the per-SNR FER ratio table and optionally
/// writes it as CSV.
pub fn cmd_compare(
    csv_a: &Path,
    csv_b: &Path,
    out: Option<&Path>,
) -> Result<Vec<montecarlo::CompareRow>, CliError> {
    let read = |path: &Path| -> Result<Vec<EvalPoint>, CliError> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(read_results_csv(&text)?)
    };
    let a = read(csv_a)?;
    let b = read(csv_b)?;
    let rows = compare(&a, &b)?;
    println!("ebn0_db  fer_a  fer_b  ratio  a_below_b");
    for r in &rows {
        println!(
            "{}  {}  {}  {}  {}",
            r.ebn0_db, r.fer_a, r.fer_b, r.ratio, r.a_below_b
        );
    }
    if let Some(path) = out {
        ensure_parent_exists(path)?;
        write_file(path, |out| write_compare_csv(&rows, out))?;
        println!("ratios written to {}", path.display());
    }
    Ok(rows)
}
