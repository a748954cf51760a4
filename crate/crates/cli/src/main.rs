//! `l1sc`: fit, apply and evaluate L1-SC and its L2 reference methods.
//!
//! Settings come from defaults, then `--config <file>`, then `--set
//! key=value` and the dedicated flags, later sources winning. Exit status is
//! 0 on success, 2 for usage or configuration errors and 1 for runtime or
//! data errors.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use config::ExperimentConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] l1sc_core::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn code(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "E_USAGE",
            CliError::Core(e) => e.code(),
            CliError::Io(_) => "E_IO",
        }
    }

    fn exit_status(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) if e.is_usage() => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "l1sc", version, about = "L1-norm scaling cut dimensionality reduction experiments")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Plain-text `key = value` settings file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for every artifact a command writes.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Input dataset (`.csv` or rawf64); synthetic data when omitted.
    #[arg(long, global = true)]
    dataset: Option<PathBuf>,
    /// `csv` or `rawf64`; inferred from the extension by default.
    #[arg(long, global = true)]
    format: Option<String>,
    /// Worker threads for repetitions and sweep cells.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Any config key, e.g. `--set gamma=0.05`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Debug, Args, Default)]
struct ProtocolArgs {
    /// Comma-separated methods: l1sc, l2sc, lda, none.
    #[arg(long, alias = "methods")]
    method: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    d: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    train_per_class: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    repetitions: Option<String>,
    /// svm or knn.
    #[arg(long)]
    classifier: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    k: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a projection on the whole dataset.
    Fit {
        #[command(flatten)]
        protocol: ProtocolArgs,
    },
    /// Apply a saved projection to a dataset.
    Transform {
        #[arg(long)]
        projection: PathBuf,
        /// Output dataset; defaults to `<out>/transformed.csv`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Repeated train/test evaluation at one dimension.
    Eval {
        #[command(flatten)]
        protocol: ProtocolArgs,
        /// Noise level in percent of each band's variance; 0 by default.
        #[arg(long, allow_hyphen_values = true)]
        noise: Option<String>,
    },
    /// Accuracy against the number of training samples per class.
    SweepSamples {
        #[command(flatten)]
        protocol: ProtocolArgs,
        /// Comma-separated training sizes per class.
        #[arg(long, allow_hyphen_values = true)]
        sizes: Option<String>,
    },
    /// Accuracy against the injected noise level.
    SweepNoise {
        #[command(flatten)]
        protocol: ProtocolArgs,
        /// Comma-separated noise percentages.
        #[arg(long, allow_hyphen_values = true)]
        percents: Option<String>,
    },
    /// Best accuracy and dimension per method over a dimension grid.
    Table1 {
        #[command(flatten)]
        protocol: ProtocolArgs,
        /// Comma-separated dimension grid.
        #[arg(long, allow_hyphen_values = true)]
        dims: Option<String>,
    },
    /// Write a synthetic Gaussian-mixture dataset.
    Synth {
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Write a noisy copy of the dataset.
    Noise {
        #[arg(long, allow_hyphen_values = true)]
        percent: String,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn apply_protocol(cfg: &mut ExperimentConfig, p: &ProtocolArgs) -> Result<(), CliError> {
    let pairs = [
        ("methods", &p.method),
        ("d", &p.d),
        ("train_per_class", &p.train_per_class),
        ("repetitions", &p.repetitions),
        ("classifier", &p.classifier),
        ("k", &p.k),
    ];
    for (key, value) in pairs {
        if let Some(v) = value {
            cfg.set(key, v)?;
        }
    }
    Ok(())
}

fn build_config(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::default();
    let g = &cli.global;
    if let Some(path) = &g.config {
        cfg.apply_text(&std::fs::read_to_string(path)?)?;
    }
    for kv in &g.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(seed) = g.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &g.out {
        cfg.out = out.clone();
    }
    if let Some(ds) = &g.dataset {
        cfg.dataset = Some(ds.clone());
    }
    if let Some(f) = &g.format {
        cfg.set("format", f)?;
    }
    match &cli.command {
        Command::Fit { protocol }
        | Command::SweepSamples { protocol, .. }
        | Command::SweepNoise { protocol, .. }
        | Command::Table1 { protocol, .. }
        | Command::Eval { protocol, .. } => apply_protocol(&mut cfg, protocol)?,
        _ => {}
    }
    match &cli.command {
        Command::SweepSamples { sizes: Some(s), .. } => cfg.set("sizes", s)?,
        Command::SweepNoise { percents: Some(p), .. } => cfg.set("noise_percents", p)?,
        Command::Table1 { dims: Some(d), .. } => cfg.set("dims", d)?,
        Command::Noise { percent, .. } => cfg.set("noise_percents", percent)?,
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = build_config(&cli)?;
    let threads = match cli.global.threads {
        Some(0) => return Err(CliError::Usage("threads must be at least 1".into())),
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()).min(8),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    std::fs::create_dir_all(&cfg.out)?;
    pool.install(|| match cli.command {
        Command::Fit { .. } => commands::fit(&cfg),
        Command::Transform { projection, output } => commands::transform(&cfg, &projection, output),
        Command::Eval { noise, .. } => {
            let noise = match noise {
                None => 0.0,
                Some(n) => n
                    .trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|p| (0.0..=100.0).contains(p))
                    .ok_or_else(|| CliError::Usage(format!("--noise must be a percentage in [0, 100], got {n:?}")))?,
            };
            commands::eval(&cfg, noise)
        }
        Command::SweepSamples { .. } => commands::sweep_samples(&cfg),
        Command::SweepNoise { .. } => commands::sweep_noise(&cfg),
        Command::Table1 { .. } => commands::table1(&cfg),
        Command::Synth { output } => commands::synth(&cfg, output),
        Command::Noise { output, .. } => commands::noise(&cfg, output),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::from(e.exit_status())
        }
    }
}
