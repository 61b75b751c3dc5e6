//! `amc`: simulate bit-loaded OFDM captures, train the two classifiers, and
//! report accuracy and inference-cost metrics.

mod commands;
mod config;

use amc_core::error::Error;
use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "amc", version, about = "OFDM modulation-classification toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelKind {
    Lwnn,
    Rnnbc,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EvalMode {
    LwnnOnly,
    Combined,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset split.
    Generate {
        /// Which archive to produce.
        #[arg(long)]
        split: String,
        /// Number of captures (or sequences for rnnbc splits).
        #[arg(long)]
        count: u64,
        /// Generation seed (falls back to AMC_SEED, then 0).
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Symbols per subcarrier per capture.
        #[arg(long, default_value_t = 1024)]
        symbols: usize,
        /// JSON config file with flat dotted keys.
        #[arg(long)]
        config: Option<PathBuf>,
        /// key=value overrides applied after the config file.
        #[arg(long = "set")]
        overrides: Vec<String>,
        /// Regenerate and byte-compare the archive after writing.
        #[arg(long)]
        verify: bool,
        /// Worker threads (output bytes do not depend on this).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Train a model on a generated dataset.
    Train {
        #[arg(long, value_enum)]
        model: ModelKind,
        /// Directory holding the dataset archives.
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 10)]
        epochs: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Learning rate override (defaults: lwnn 1e-3, rnnbc 1e-5).
        #[arg(long)]
        lr: Option<f64>,
        /// Batch size override (defaults: lwnn 64, rnnbc 32).
        #[arg(long)]
        batch: Option<usize>,
        /// Training samples drawn per capture (lwnn only).
        #[arg(long, default_value_t = 4)]
        subcarriers_per_capture: usize,
        /// Fraction of the training archive held out for validation.
        #[arg(long, default_value_t = 0.05)]
        val_fraction: f64,
        /// Early-stop patience in epochs.
        #[arg(long)]
        patience: Option<usize>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "set")]
        overrides: Vec<String>,
    },
    /// Evaluate checkpoints on a test split.
    Eval {
        /// Per-subcarrier classifier checkpoint.
        #[arg(long)]
        lwnn: PathBuf,
        /// Sequence classifier checkpoint (combined mode).
        #[arg(long)]
        rnnbc: Option<PathBuf>,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value = "lwnn-only")]
        mode: EvalMode,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Cap on evaluated captures (0 = all).
        #[arg(long, default_value_t = 0)]
        limit: u64,
    },
    /// Inference-cost reports.
    Flops {
        /// Print one model's per-layer table.
        #[arg(long, value_enum)]
        model: Option<ModelKind>,
        /// Reproduce the reference parameter-count comparison.
        #[arg(long)]
        table: bool,
        /// Classifier input length for the cost model.
        #[arg(long, default_value_t = 1024)]
        input_len: usize,
        /// Write CSV outputs here in addition to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::Shape(_) | Error::Domain(_) | Error::Format(_) | Error::Json(_) => 2,
        Error::Io(_) => 3,
        Error::NonFiniteLoss { .. } | Error::SingularChannel { .. } | Error::SnrRedrawExhausted { .. } => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate { split, count, seed, out, symbols, config, overrides, verify, threads } => {
            commands::generate::run(commands::generate::Args {
                split,
                count,
                seed: config::resolve_seed(seed),
                out: out.unwrap_or_else(config::default_out_dir),
                symbols,
                config,
                overrides,
                verify,
                threads: threads.unwrap_or_else(|| {
                    std::thread::available_parallelism().map_or(1, |n| n.get())
                }),
            })
        }
        Command::Train {
            model,
            data,
            epochs,
            seed,
            out,
            lr,
            batch,
            subcarriers_per_capture,
            val_fraction,
            patience,
            config,
            overrides,
        } => commands::train::run(commands::train::Args {
            lwnn: model == ModelKind::Lwnn,
            data,
            epochs,
            seed: config::resolve_seed(seed),
            out: out.unwrap_or_else(config::default_out_dir),
            lr,
            batch,
            subcarriers_per_capture,
            val_fraction,
            patience,
            config,
            overrides,
        }),
        Command::Eval { lwnn, rnnbc, data, mode, out, limit } => {
            commands::eval::run(commands::eval::Args {
                lwnn,
                rnnbc,
                data,
                combined: mode == EvalMode::Combined,
                out: out.unwrap_or_else(config::default_out_dir),
                limit,
            })
        }
        Command::Flops { model, table, input_len, out } => commands::flops::run(
            model.map(|m| m == ModelKind::Lwnn),
            table,
            input_len,
            out,
        ),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
