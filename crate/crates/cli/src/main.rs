//! Command-line front end for the tabsynth pipeline.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 data error,
//! 4 training divergence.

use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use tabsynth::config::PipelineConfig;
use tabsynth::pipeline::{self, EvaluateArgs};
use tabsynth::{Error, Result};

/// Environment variable naming the default output root for artifacts.
const OUT_ENV: &str = "TABSYNTH_OUT";

#[derive(Parser)]
#[command(
    name = "tabsynth",
    version,
    about = "Synthetic tabular and relational data from small autoregressive transformers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a single-table model and write an experiment artifact.
    Fit {
        /// Delimited input table (.csv or .tsv).
        #[arg(long)]
        data: PathBuf,
        /// TOML configuration file; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Root seed; drawn from entropy (and recorded) when omitted.
        #[arg(long)]
        seed: Option<u64>,
        /// Output root for the artifact directory (default: $TABSYNTH_OUT or the working directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit a child-table model conditioned on a fitted parent artifact.
    FitChild {
        /// Delimited child table.
        #[arg(long)]
        data: PathBuf,
        /// Delimited parent table carrying the key column.
        #[arg(long)]
        parent_data: PathBuf,
        /// Parent experiment artifact directory.
        #[arg(long)]
        artifact: PathBuf,
        /// Key column shared by both tables.
        #[arg(long)]
        join_on: String,
        /// TOML configuration file; the parent artifact's config applies when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample rows from a fitted single-table artifact.
    Sample {
        /// Experiment artifact directory.
        #[arg(long)]
        artifact: PathBuf,
        /// Number of rows to generate.
        #[arg(long)]
        n: usize,
        /// Sampling seed; the artifact's root seed applies when omitted.
        #[arg(long)]
        seed: Option<u64>,
        /// Output file (default: samples.csv inside the artifact).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample child rows conditioned on the parents in a delimited file.
    SampleRelational {
        /// Child experiment artifact directory.
        #[arg(long)]
        artifact: PathBuf,
        /// Parent rows to condition on; keys are reused when the key column
        /// is present, otherwise fresh keys are assigned and a keyed parent
        /// file is written next to the output.
        #[arg(long)]
        parent_data: PathBuf,
        /// Use only the first N parents.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output file (default: child_samples.csv inside the artifact).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score synthetic data against real data.
    Evaluate {
        /// Real table.
        #[arg(long)]
        data: PathBuf,
        /// Synthetic table with the same columns.
        #[arg(long)]
        synthetic: PathBuf,
        /// Real parent table (relational scoring; needs --synthetic-parent and --join-on).
        #[arg(long)]
        parent_data: Option<PathBuf>,
        /// Synthetic parent table.
        #[arg(long)]
        synthetic_parent: Option<PathBuf>,
        /// Key column linking child rows to parents.
        #[arg(long)]
        join_on: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Cross-validation folds for the detection scores.
        #[arg(long, default_value_t = 5)]
        folds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the report to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dump the token grid a table encodes to (debugging aid).
    Encode {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Only the first N rows.
        #[arg(long)]
        n: Option<usize>,
        /// Also write the dump to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Audit the closest-record distance split of a table.
    AuditDcr {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the audit to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig> {
    match path {
        Some(p) => PipelineConfig::load(p),
        None => Ok(PipelineConfig::default()),
    }
}

fn out_root(out: Option<PathBuf>) -> PathBuf {
    out.or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    print!("{text}");
    if let Some(path) = out {
        std::fs::write(path, text).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Fit { data, config, seed, out } => {
            let cfg = load_config(config.as_deref())?;
            let seed = pipeline::resolve_seed(seed);
            let outcome = pipeline::fit(&data, &cfg, seed, &out_root(out))?;
            print!("{}", outcome.render());
        }
        Command::FitChild {
            data,
            parent_data,
            artifact,
            join_on,
            config,
            seed,
            out,
        } => {
            let cfg = match config.as_deref() {
                Some(p) => Some(PipelineConfig::load(p)?),
                None => None,
            };
            let seed = pipeline::resolve_seed(seed);
            let outcome = pipeline::fit_child(
                &data,
                &parent_data,
                &artifact,
                &join_on,
                cfg.as_ref(),
                seed,
                &out_root(out),
            )?;
            print!("{}", outcome.render());
        }
        Command::Sample { artifact, n, seed, out } => {
            let outcome = pipeline::sample(&artifact, n, seed, out.as_deref())?;
            print!("{}", outcome.render());
        }
        Command::SampleRelational {
            artifact,
            parent_data,
            n,
            seed,
            out,
        } => {
            let outcome =
                pipeline::sample_relational(&artifact, &parent_data, n, seed, out.as_deref())?;
            print!("{}", outcome.render());
        }
        Command::Evaluate {
            data,
            synthetic,
            parent_data,
            synthetic_parent,
            join_on,
            config,
            folds,
            seed,
            out,
        } => {
            let cfg = load_config(config.as_deref())?;
            let report = pipeline::evaluate(
                &EvaluateArgs {
                    real: &data,
                    synthetic: &synthetic,
                    parent_real: parent_data.as_deref(),
                    parent_synthetic: synthetic_parent.as_deref(),
                    join_on: join_on.as_deref(),
                    folds,
                },
                &cfg,
                seed,
            )?;
            emit(&report, out.as_deref())?;
        }
        Command::Encode { data, config, n, out } => {
            let cfg = load_config(config.as_deref())?;
            let dump = pipeline::encode_dump(&data, &cfg, n)?;
            emit(&dump, out.as_deref())?;
        }
        Command::AuditDcr { data, config, seed, out } => {
            let cfg = load_config(config.as_deref())?;
            let audit = pipeline::audit_dcr(&data, &cfg, seed)?;
            emit(&audit, out.as_deref())?;
        }
    }
    Ok(())
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) => 2,
        Error::Divergence(_) => 4,
        Error::Io { .. }
        | Error::Data(_)
        | Error::Schema(_)
        | Error::Model(_)
        | Error::Sampling(_) => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
