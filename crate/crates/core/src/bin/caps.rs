use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use caps::commands;
use caps::complexity::AnalyzerConfig;
use caps::harness::{EncoderBackend, MockEncoder};
use caps::orchestrator::{RunConfig, RunMode};
use caps::timing::Hyperparams;
use caps::video::RawFormat;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "caps",
    version,
    about = "Content-adaptive encoder preset selection for live streaming"
)]
struct Cli {
    /// Worker threads for feature extraction and training (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Run configuration file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Replace the configured backend with the deterministic mock encoder.
    #[arg(long, global = true)]
    mock: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract E, h and L for every segment of a video.
    Analyze(AnalyzeArgs),
    /// Fit one time model per (width, preset) from a training CSV.
    Train(TrainArgs),
    /// Print the preset decision for every segment and rung.
    Predict(OutArgs),
    /// Encode the ladder with per-rung preset selection.
    EncodeLadder,
    /// Encode the ladder with the fastest preset everywhere.
    EncodeBaseline,
    /// Compare a baseline run with a CAPS run.
    Evaluate(EvaluateArgs),
    /// Encode every (segment, rung, preset) and record the times.
    Dataset(DatasetArgs),
}

#[derive(Args)]
struct AnalyzeArgs {
    input: PathBuf,
    /// Geometry of a headerless 4:2:0 file, e.g. 1920x1080.
    #[arg(long, value_parser = parse_geometry)]
    raw: Option<(usize, usize)>,
    #[arg(long, default_value_t = 8)]
    bit_depth: u8,
    #[arg(long, default_value_t = 120)]
    segment_frames: usize,
    #[arg(long, default_value_t = 32)]
    block_size: usize,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    data: PathBuf,
    #[arg(short, long, default_value = "models.json")]
    output: PathBuf,
    #[arg(long, default_value_t = 200)]
    trees: usize,
    #[arg(long, default_value_t = 4)]
    depth: usize,
    #[arg(long, default_value_t = 0.1)]
    learning_rate: f64,
    #[arg(long, default_value_t = 5)]
    min_samples_leaf: usize,
    #[arg(long, default_value_t = 1.0)]
    subsample: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct OutArgs {
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    baseline: PathBuf,
    caps: PathBuf,
    #[arg(long)]
    vmaf_baseline: Option<PathBuf>,
    #[arg(long)]
    vmaf_caps: Option<PathBuf>,
    #[arg(short, long, default_value = "evaluation")]
    output: PathBuf,
}

#[derive(Args)]
struct DatasetArgs {
    #[arg(short, long, default_value = "training.csv")]
    output: PathBuf,
    /// Concurrent encodes.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Encodes per job; the median time is kept.
    #[arg(long, default_value_t = 1)]
    repetitions: usize,
}

fn parse_geometry(s: &str) -> Result<(usize, usize), String> {
    let (w, h) = s.split_once('x').ok_or("expected WIDTHxHEIGHT")?;
    Ok((
        w.parse().map_err(|e| format!("{e}"))?,
        h.parse().map_err(|e| format!("{e}"))?,
    ))
}

fn sink(path: Option<&PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn run_config(cli: &Cli) -> caps::Result<RunConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| caps::Error::Config("--config is required".into()))?;
    let mut cfg = RunConfig::load(path)?;
    if cli.mock && !cfg.backend.is_mock() {
        cfg.backend = EncoderBackend::Mock(MockEncoder::default());
    }
    Ok(cfg)
}

fn run(cli: Cli) -> caps::Result<()> {
    match &cli.command {
        Command::Analyze(a) => {
            let raw = a.raw.map(|(width, height)| RawFormat {
                width,
                height,
                bit_depth: a.bit_depth,
                fps: (24, 1),
            });
            let cfg = AnalyzerConfig {
                block_size: a.block_size,
                bit_depth: a.bit_depth,
            };
            let mut out = sink(a.output.as_ref())?;
            let n = commands::analyze(&a.input, raw, a.segment_frames, cfg, &mut out)?;
            out.flush()?;
            log::info!("analysed {n} segments");
        }
        Command::Train(t) => {
            let hp = Hyperparams {
                n_trees: t.trees,
                max_depth: t.depth,
                learning_rate: t.learning_rate,
                min_samples_leaf: t.min_samples_leaf,
                subsample: t.subsample,
                seed: t.seed,
            };
            let outcome = commands::train(&t.data, &t.output, &hp)?;
            println!("width,preset,train_mae,train_r2");
            for (w, p, mae, r2) in outcome.fit {
                println!("{w},{p},{mae:.4},{r2:.4}");
            }
            eprintln!("wrote {} models to {}", outcome.models.len(), t.output.display());
        }
        Command::Predict(o) => {
            let cfg = run_config(&cli)?;
            let mut out = sink(o.output.as_ref())?;
            commands::predict(&cfg, &mut out)?;
            out.flush()?;
        }
        Command::EncodeLadder | Command::EncodeBaseline => {
            let cfg = run_config(&cli)?;
            let mode = if matches!(cli.command, Command::EncodeLadder) {
                RunMode::Caps
            } else {
                RunMode::Baseline
            };
            let summary = commands::encode(&cfg, mode)?;
            print!("{summary}");
            eprintln!("reports in {}", cfg.output_dir.display());
        }
        Command::Evaluate(e) => {
            let report = commands::evaluate(
                &e.baseline,
                &e.caps,
                e.vmaf_baseline.as_deref(),
                e.vmaf_caps.as_deref(),
                &e.output,
            )?;
            print!("{report}");
        }
        Command::Dataset(d) => {
            let cfg = run_config(&cli)?;
            let report = commands::dataset(&cfg, &d.output, d.jobs, d.repetitions)?;
            eprintln!(
                "{} rows ({} resumed), {} attempted, {} failures",
                report.rows.len(),
                report.resumed,
                report.attempted,
                report.failures.len()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
