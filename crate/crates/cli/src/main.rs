// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use p2m_cli::commands::{cmd_bin, cmd_fit, cmd_run, cmd_sweep, cmd_trace};
use p2m_cli::config::{parse_variants, InputFormat};
use p2m_cli::ExperimentConfig;

#[derive(Parser)]
#[command(name = "p2m", version, about = "In-pixel analog MAC co-simulator for DVS event streams")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (flat key=value).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides output.dir.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Nmnist,
    Evt1,
}

#[derive(Subcommand)]
enum Command {
    /// Voltage traces of one MAC unit, without and with events.
    Trace {
        /// Kernel file; overrides kernels.path.
        #[arg(long)]
        kernels: Option<PathBuf>,
        /// Comma-separated variants (ideal,a,b,c).
        #[arg(long, default_value = "ideal,a,b,c")]
        variants: String,
        /// Window length; overrides trace.t_intg_ms.
        #[arg(long)]
        t_intg_ms: Option<f64>,
    },
    /// Bandwidth and energy at every configured integration time.
    Sweep,
    /// Fit the analog transfer curve.
    Fit,
    /// Bin an event file into per-window counts.
    Bin {
        /// Event file to read.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        format: Format,
        /// Window length in milliseconds.
        #[arg(long)]
        t_intg_ms: f64,
    },
    /// End-to-end inference with a metrics report.
    Run {
        /// P2MW weight bundle; seeded random weights when omitted.
        #[arg(long)]
        weights: Option<PathBuf>,
        /// Also write the weights used to this file.
        #[arg(long)]
        save_weights: Option<PathBuf>,
    },
}

fn write(dir: &Path, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn thread_pool() -> Result<Option<rayon::ThreadPool>> {
    let Ok(v) = std::env::var("P2M_THREADS") else {
        return Ok(None);
    };
    let n: usize = v.trim().parse().with_context(|| format!("P2M_THREADS={v:?} is not a count"))?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build()?;
    Ok(Some(pool))
}

fn execute(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = cli.common.out {
        cfg.output_dir = out;
    }
    let dir = cfg.output_dir.clone();
    match cli.command {
        Command::Trace {
            kernels,
            variants,
            t_intg_ms,
        } => {
            if kernels.is_some() {
                cfg.kernels_path = kernels;
            }
            if let Some(t) = t_intg_ms {
                cfg.trace.t_intg_ms = t;
            }
            cfg.validate()?;
            let variants = parse_variants(&variants)?;
            write(&dir, "trace.csv", cmd_trace(&cfg, &variants).context("trace")?)
        }
        Command::Sweep => write(&dir, "sweep.csv", cmd_sweep(&cfg).context("sweep")?),
        Command::Fit => write(&dir, "fit.txt", cmd_fit(&cfg).context("fit")?),
        Command::Bin {
            input,
            format,
            t_intg_ms,
        } => {
            let format = match format {
                Format::Nmnist => InputFormat::Nmnist,
                Format::Evt1 => InputFormat::Evt1,
            };
            write(&dir, "bins.csv", cmd_bin(&input, format, t_intg_ms).context("bin")?)
        }
        Command::Run { weights, save_weights } => {
            let out = cmd_run(&cfg, weights.as_deref()).context("run")?;
            write(&dir, "report.txt", &out.report)?;
            write(&dir, "stats.csv", &out.stats_csv)?;
            if let Some(path) = save_weights {
                std::fs::write(&path, &out.weights).with_context(|| format!("writing {}", path.display()))?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = thread_pool().and_then(|pool| match pool {
        Some(pool) => pool.install(|| execute(cli)),
        None => execute(cli),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
