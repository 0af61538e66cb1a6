use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use edlat::experiments::{
    bounds_table, load_config, run_figure, run_simulation, write_table, ExperimentConfig, FigureId, OutputFormat,
};
use edlat::{Error, Result};

#[derive(Parser, Debug)]
#[command(
    name = "edlat",
    version,
    about = "Early-detection latency datasets and detector campaigns"
)]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    command: Command,
}

/// Flags mirror the configuration keys and take precedence over the file.
#[derive(Args, Debug)]
struct Overrides {
    /// Configuration file (`key = value`, `#` comments).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// SNR list in dB.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    snr_db: Option<Vec<f64>>,
    /// Target block error rates.
    #[arg(long, global = true, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    /// Blocklength grid, ascending.
    #[arg(long, global = true, value_delimiter = ',')]
    n_grid: Option<Vec<u64>>,
    #[arg(long, global = true)]
    hops: Option<u64>,
    /// Mean transmission phase E[phi] in [0, 1].
    #[arg(long, global = true)]
    mean_phi: Option<f64>,
    #[arg(long, global = true)]
    trials: Option<u64>,
    /// Observation steps per symbol in detector campaigns.
    #[arg(long, global = true)]
    steps: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output path; `-` for standard output.
    #[arg(long, global = true)]
    out: Option<String>,
    #[arg(long, global = true)]
    format: Option<OutputFormat>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// One-hop rate and latency versus blocklength.
    Fig1,
    /// Multi-hop latencies versus information size.
    Fig3,
    /// Latency reduction per BLER target.
    Fig4,
    /// Latency reduction per SNR.
    Fig5,
    /// Sequential detector campaign on a Hadamard codebook.
    Simulate {
        /// Number of messages M.
        #[arg(long)]
        messages: usize,
        /// Codeword length n, a power of two.
        #[arg(long)]
        blocklength: usize,
        /// Linear SNR; overrides --snr-db.
        #[arg(long)]
        gamma: Option<f64>,
        /// Stop-time histogram path. Defaults to `<out>.hist` beside a file
        /// output and is skipped for standard output.
        #[arg(long)]
        histogram: Option<String>,
    },
    /// Capacity, dispersion, achievable rate and minimum blocklength.
    Bounds {
        #[arg(long)]
        n: u64,
        /// Information bits for the minimum-blocklength search.
        #[arg(long)]
        k_bits: Option<f64>,
    },
}

fn resolve_config(o: &Overrides) -> Result<ExperimentConfig> {
    let mut cfg = match &o.config {
        Some(path) => load_config(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(v) = &o.snr_db {
        cfg.snr_db_list = v.clone();
    }
    if let Some(v) = &o.eps {
        cfg.eps_list = v.clone();
    }
    if let Some(v) = &o.n_grid {
        cfg.n_grid = v.clone();
    }
    cfg.hops = o.hops.unwrap_or(cfg.hops);
    cfg.mean_phase = o.mean_phi.unwrap_or(cfg.mean_phase);
    cfg.trials = o.trials.unwrap_or(cfg.trials);
    cfg.steps = o.steps.unwrap_or(cfg.steps);
    cfg.seed = o.seed.unwrap_or(cfg.seed);
    if let Some(out) = &o.out {
        cfg.output_path = out.clone();
    }
    cfg.format = o.format.unwrap_or(cfg.format);
    cfg.validate()?;
    Ok(cfg)
}

fn histogram_path(out: &str, explicit: Option<String>) -> Option<String> {
    explicit.or_else(|| (out != "-").then(|| format!("{out}.hist")))
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = resolve_config(&cli.overrides)?;
    let table = match cli.command {
        Command::Fig1 => run_figure(FigureId::Fig1, &cfg)?,
        Command::Fig3 => run_figure(FigureId::Fig3, &cfg)?,
        Command::Fig4 => run_figure(FigureId::Fig4, &cfg)?,
        Command::Fig5 => run_figure(FigureId::Fig5, &cfg)?,
        Command::Simulate {
            messages,
            blocklength,
            gamma,
            histogram,
        } => {
            if let Some(g) = gamma {
                if !(g.is_finite() && g > 0.0) {
                    return Err(Error::Configuration(format!("gamma {g} must be positive")));
                }
                cfg.snr_db_list = vec![10.0 * g.log10()];
            }
            let out = run_simulation(&cfg, messages, blocklength)?;
            if let Some(path) = histogram_path(&cfg.output_path, histogram) {
                write_table(&out.histogram, Path::new(&path), cfg.format)?;
                info!("histogram written to {path}");
            }
            out.summary
        }
        Command::Bounds { n, k_bits } => bounds_table(&cfg, n, k_bits)?,
    };
    write_table(&table, Path::new(&cfg.output_path), cfg.format)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("edlat: {e}");
            ExitCode::from(if e.is_configuration() { 2 } else { 3 })
        }
    }
}
