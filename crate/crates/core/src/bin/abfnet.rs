use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use abfnet::abfnn::checkpoint;
use abfnet::pipeline::{self, RunConfig, TrainSplit};
use abfnet::timeseries::{load_csv, MonthlySeries, SynthConfig};
use abfnet::trainer::{TrainConfig, TrainMode};
use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "abfnet", version, about = "Adaptive basis function network rainfall forecasting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic monthly rainfall series as CSV
    Synth(SynthArgs),
    /// Train on the training years and write checkpoint, sidecar and RMSE trace
    Train(TrainArgs),
    /// Write one-step-ahead predictions for the whole series
    Predict(PredictArgs),
    /// Write difference series, spectra, residual spectra and metrics
    Analyze(AnalyzeArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 87)]
    years: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 0.1)]
    noise: f64,
    /// Relative growth of the monsoon peaks over the record
    #[arg(long)]
    drift: Option<f64>,
    #[arg(long, default_value_t = 1893)]
    start_year: i32,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Layer sizes, e.g. 12,7,1
    #[arg(long, default_value = "12,7,1")]
    topology: Topology,
    #[arg(long, default_value_t = 0.25)]
    beta: f64,
    #[arg(long, default_value_t = 5000)]
    max_epochs: usize,
    #[arg(long, default_value_t = 0.085)]
    target_rmse: f64,
    #[arg(long, default_value_t = 200)]
    patience: usize,
    /// batch or online
    #[arg(long, default_value = "batch")]
    mode: TrainMode,
    /// First N years (`40`) or an inclusive year range (`1893-1932`)
    #[arg(long, default_value = "40")]
    train_years: TrainSplit,
    #[arg(long)]
    freeze_biases: bool,
    /// Also write a checkpoint every N epochs
    #[arg(long)]
    checkpoint_every: Option<usize>,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    data: PathBuf,
    /// Directory holding the trained model; predictions are written here
    #[arg(long)]
    out_dir: PathBuf,
    /// Read the model from here instead of --out-dir
    #[arg(long)]
    model_dir: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long)]
    model_dir: Option<PathBuf>,
    /// Compute spectra on normalized values instead of millimeters
    #[arg(long)]
    normalized_spectra: bool,
}

#[derive(Clone)]
struct Topology(Vec<usize>);

impl std::str::FromStr for Topology {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        s.split(',')
            .map(|t| t.trim().parse::<usize>().map_err(|e| format!("`{t}`: {e}")))
            .collect::<std::result::Result<_, _>>()
            .map(Topology)
    }
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn load_series(path: &Path) -> Result<MonthlySeries> {
    load_csv(path).with_context(|| format!("reading data file {}", path.display()))
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    let mut cfg = SynthConfig::new(args.years, args.seed, args.noise);
    cfg.start_year = args.start_year;
    if let Some(d) = args.drift {
        cfg.drift = d;
    }
    let series = cfg.generate()?;
    series
        .write_csv(&args.out)
        .with_context(|| format!("writing {}", args.out.display()))?;
    let v = series.values();
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let (lo, hi) = v
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    println!("{}", args.out.display());
    println!(
        "months = {}  min = {lo:.2} mm  max = {hi:.2} mm  mean = {mean:.2} mm",
        v.len()
    );
    Ok(())
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let series = load_series(&args.data)?;
    let cfg = RunConfig {
        topology: args.topology.0,
        train: TrainConfig {
            beta: args.beta,
            max_epochs: args.max_epochs,
            target_rmse: args.target_rmse,
            patience: args.patience,
            mode: args.mode,
            seed: args.seed,
            freeze_biases: args.freeze_biases,
        },
        split: args.train_years,
        ..RunConfig::default()
    };
    fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;

    let every = args.checkpoint_every.filter(|&n| n > 0);
    let out_dir = args.out_dir.clone();
    let model = pipeline::fit_with_callback(&series, &cfg, |epoch, net, _| {
        if every.is_some_and(|n| epoch % n == 0) {
            checkpoint::save(net, out_dir.join(format!("checkpoint-epoch{epoch}.abf")))?;
        }
        Ok(())
    })
    .context("training failed")?;

    let (ckpt, _) = model.save(&args.out_dir)?;
    model.report.write_csv(args.out_dir.join("rmse.csv"))?;
    let summary = model.report.summary();
    write(&args.out_dir.join("summary.txt"), &summary)?;
    print!("{summary}");
    println!("checkpoint = {}", ckpt.display());
    Ok(())
}

fn cmd_predict(args: PredictArgs) -> Result<()> {
    let model_dir = args.model_dir.as_ref().unwrap_or(&args.out_dir);
    let (net, meta) = pipeline::load_model(model_dir)
        .with_context(|| format!("loading model from {}", model_dir.display()))?;
    let series = load_series(&args.data)?;
    meta.train_range(&series)?;
    let predicted = abfnet::predict_series(&net, &series, &meta.params)?;
    fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;
    let out = args.out_dir.join("predicted.csv");
    write(&out, predicted.to_csv())?;
    println!("{}", out.display());
    Ok(())
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<()> {
    let model_dir = args.model_dir.as_ref().unwrap_or(&args.out_dir);
    let (net, meta) = pipeline::load_model(model_dir)
        .with_context(|| format!("loading model from {}", model_dir.display()))?;
    let series = load_series(&args.data)?;
    let analysis = pipeline::analyze(&series, &net, &meta, args.normalized_spectra)
        .context("checkpoint and series do not match")?;

    let dir = &args.out_dir;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    write(&dir.join("predicted.csv"), analysis.predicted.to_csv())?;
    write(&dir.join("difference.csv"), analysis.difference.to_csv())?;
    write(&dir.join("spectrum_actual.csv"), analysis.actual_spectrum.to_csv())?;
    write(
        &dir.join("spectrum_predicted.csv"),
        analysis.predicted_spectrum.to_csv(),
    )?;
    if let Some(c) = &analysis.comparison {
        write(&dir.join("residual_test.csv"), c.model.to_csv())?;
        write(&dir.join("residual_drift.csv"), c.drift.to_csv())?;
    }
    let metrics = analysis.metrics_text();
    write(&dir.join("metrics.txt"), &metrics)?;
    print!("{metrics}");
    Ok(())
}

fn run() -> Result<()> {
    match Cli::parse().command {
        Command::Synth(a) => cmd_synth(a),
        Command::Train(a) => cmd_train(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Analyze(a) => cmd_analyze(a),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
