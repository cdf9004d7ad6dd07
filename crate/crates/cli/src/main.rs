use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use wimotion::fusion::{
    evaluate, extract_features, learning_curve, load_model, save_model, train, write_report,
    TrainConfig, TrainSize,
};
use wimotion::ingest::{read_dat, read_jsonl, write_jsonl, DatOptions};
use wimotion::synth::{generate_dataset_with, DatasetConfig};
use wimotion::{ActivityLabel, CsiTrace, ErrorClass};

mod config;

use config::{FileConfig, HyperParams};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(wimotion::Error),
}

impl From<wimotion::Error> for CliError {
    fn from(e: wimotion::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(e) => match e.class() {
                ErrorClass::Usage => 1,
                ErrorClass::Data => 2,
                ErrorClass::Training => 3,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

#[derive(Parser)]
#[command(name = "wimotion", version, about = "Activity recognition from WiFi CSI")]
struct Cli {
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// TOML file whose keys mirror the long flag names
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labelled synthetic dataset as JSONL traces
    Synth(SynthArgs),
    /// Convert an Intel 5300 .dat log to JSONL
    Convert(ConvertArgs),
    /// Train a dual-stream model
    Train(TrainArgs),
    /// Classify one trace
    Predict(PredictArgs),
    /// Evaluate a model on a labelled dataset
    Eval(EvalArgs),
    /// Accuracy against training-set size
    Curve(CurveArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    per_class: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    subjects: Option<usize>,
}

#[derive(Args)]
struct ConvertArgs {
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    label: Option<String>,
    #[arg(long)]
    subject: Option<String>,
    /// Nominal packet rate in Hz
    #[arg(long)]
    rate: Option<f64>,
    /// Apply RSSI/noise scaling to the CSI values
    #[arg(long)]
    scaled: bool,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    hyper: HyperParams,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: Option<PathBuf>,
    /// Trace as .jsonl or .dat
    #[arg(long = "in")]
    input: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    /// Directory for confusion.csv and metrics.json
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct CurveArgs {
    #[arg(long)]
    data: Option<PathBuf>,
    /// Training sizes, per class unless --total is given
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    /// Interpret sizes as total training samples
    #[arg(long)]
    total: bool,
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[command(flatten)]
    hyper: HyperParams,
}

fn required<T>(flag: Option<T>, file: Option<T>, name: &str) -> Result<T, CliError> {
    flag.or(file)
        .ok_or_else(|| CliError::Usage(format!("missing required option --{name}")))
}

fn echo(resolved: &impl Serialize) {
    if let Ok(s) = serde_json::to_string(resolved) {
        eprintln!("config: {s}");
    }
}

fn print_json(value: &impl Serialize) -> Result<(), CliError> {
    let s = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Usage(format!("output serialisation failed: {e}")))?;
    println!("{s}");
    Ok(())
}

/// All `*.jsonl` files of `dir`, in file-name order.
fn read_dataset(dir: &Path) -> Result<Vec<CsiTrace>, CliError> {
    let entries = fs::read_dir(dir).map_err(wimotion::Error::from)?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(wimotion::Error::InsufficientData {
            what: "dataset traces",
            needed: 1,
            got: 0,
        }
        .into());
    }
    paths
        .iter()
        .map(|p| {
            read_jsonl(p).map_err(|e| {
                eprintln!("while reading {}", p.display());
                e.into()
            })
        })
        .collect()
}

fn read_trace(path: &Path) -> Result<CsiTrace, CliError> {
    if path.extension().is_some_and(|x| x == "dat") {
        Ok(CsiTrace::new(read_dat(path, DatOptions::default())?, CsiTrace::NOMINAL_RATE)?)
    } else {
        Ok(read_jsonl(path)?)
    }
}

fn run_synth(args: SynthArgs, file: &FileConfig) -> Result<(), CliError> {
    let per_class = required(args.per_class, file.per_class, "per-class")?;
    let seed = args.seed.or(file.seed).unwrap_or(0);
    let out = required(args.out, file.out.clone(), "out")?;
    let subjects = args.subjects.or(file.subjects).unwrap_or(1);
    echo(&json!({"command": "synth", "per-class": per_class, "seed": seed, "out": out, "subjects": subjects}));
    let config = DatasetConfig {
        subjects,
        ..DatasetConfig::default()
    };
    let data = generate_dataset_with(per_class, seed, &config)?;
    fs::create_dir_all(&out).map_err(wimotion::Error::from)?;
    for (i, trace) in data.iter().enumerate() {
        let label = trace.label.expect("synthetic traces are labelled");
        let path = out.join(format!("{}_{:03}.jsonl", label.name(), i % per_class));
        write_jsonl(trace, path)?;
    }
    eprintln!("wrote {} traces to {}", data.len(), out.display());
    Ok(())
}

fn run_convert(args: ConvertArgs, file: &FileConfig) -> Result<(), CliError> {
    let input = required(args.input, file.input.clone(), "in")?;
    let out = required(args.out, file.out.clone(), "out")?;
    let rate = args.rate.or(file.rate).unwrap_or(CsiTrace::NOMINAL_RATE);
    let scaled = args.scaled || file.scaled.unwrap_or(false);
    let label = args.label.or(file.label.clone());
    let subject = args.subject.or(file.subject.clone());
    echo(&json!({"command": "convert", "in": input, "out": out, "rate": rate, "scaled": scaled,
        "label": label, "subject": subject}));
    let label = label
        .map(|l| l.parse::<ActivityLabel>())
        .transpose()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let frames = read_dat(&input, DatOptions { scaled })?;
    let n = frames.len();
    let mut trace = CsiTrace::new(frames, rate)?;
    trace.label = label;
    trace.subject_id = subject;
    write_jsonl(&trace, &out)?;
    eprintln!("converted {n} frames");
    Ok(())
}

fn run_train(args: TrainArgs, file: &FileConfig) -> Result<(), CliError> {
    let data = required(args.data, file.data.clone(), "data")?;
    let out = required(args.out, file.out.clone(), "out")?;
    let config = args.hyper.or(&file.hyper).train_config()?;
    echo(&json!({"command": "train", "data": data, "out": out, "train": config}));
    let traces = read_dataset(&data)?;
    let model = train(&traces, &config)?;
    save_model(&model, &out)?;
    let worst = model
        .amplitude_ensemble
        .members
        .iter()
        .chain(&model.phase_ensemble.members)
        .map(|m| m.kkt_residual)
        .fold(0.0, f64::max);
    print_json(&json!({
        "model": out,
        "samples": traces.len(),
        "sigma_amp": model.amplitude_ensemble.kernel.sigma,
        "sigma_phase": model.phase_ensemble.kernel.sigma,
        "max_kkt_residual": worst,
    }))
}

fn run_predict(args: PredictArgs, file: &FileConfig) -> Result<(), CliError> {
    let model_path = required(args.model, file.model.clone(), "model")?;
    let input = required(args.input, file.input.clone(), "in")?;
    echo(&json!({"command": "predict", "model": model_path, "in": input}));
    let model = load_model(&model_path)?;
    let p = model.predict(&read_trace(&input)?)?;
    print_json(&json!({
        "amplitude": p.amplitude.scores,
        "phase": p.phase.scores,
        "fused": p.fused.scores,
        "label": p.label.name(),
    }))
}

fn run_eval(args: EvalArgs, file: &FileConfig) -> Result<(), CliError> {
    let model_path = required(args.model, file.model.clone(), "model")?;
    let data = required(args.data, file.data.clone(), "data")?;
    let report_dir = required(args.report, file.report.clone(), "report")?;
    echo(&json!({"command": "eval", "model": model_path, "data": data, "report": report_dir}));
    let model = load_model(&model_path)?;
    let report = evaluate(&model, &read_dataset(&data)?)?;
    write_report(&report, &report_dir)?;
    print_json(&json!({
        "accuracy": report.accuracy,
        "amplitude_accuracy": report.amplitude_accuracy,
        "phase_accuracy": report.phase_accuracy,
        "tp_rate": report.tp_rate,
        "fp_rate": report.fp_rate,
    }))
}

fn run_curve(args: CurveArgs, file: &FileConfig) -> Result<(), CliError> {
    let data = required(args.data, file.data.clone(), "data")?;
    let sizes = required(args.sizes, file.sizes.clone(), "sizes")?;
    let total = args.total || file.total.unwrap_or(false);
    let seeds = args
        .seeds
        .or(file.seeds.clone())
        .unwrap_or_else(|| vec![file.seed.unwrap_or(0)]);
    let config: TrainConfig = args.hyper.or(&file.hyper).train_config()?;
    echo(&json!({"command": "curve", "data": data, "sizes": sizes, "total": total, "seeds": seeds,
        "train": config}));
    let sizes: Vec<TrainSize> = sizes
        .into_iter()
        .map(|n| if total { TrainSize::Total(n) } else { TrainSize::PerClass(n) })
        .collect();
    let traces = read_dataset(&data)?;
    let features = extract_features(&traces, &config.features)?;
    let curve = learning_curve(&features, &sizes, &seeds, &config)?;
    if !curve.monotone {
        eprintln!("note: mean fused accuracy is not monotone in training size");
    }
    print_json(&curve)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    if let Some(n) = cli.threads.or(file.threads) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot configure {n} threads: {e}")))?;
    }
    match cli.command {
        Command::Synth(a) => run_synth(a, &file),
        Command::Convert(a) => run_convert(a, &file),
        Command::Train(a) => run_train(a, &file),
        Command::Predict(a) => run_predict(a, &file),
        Command::Eval(a) => run_eval(a, &file),
        Command::Curve(a) => run_curve(a, &file),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
