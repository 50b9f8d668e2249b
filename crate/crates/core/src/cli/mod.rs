//! Batch front end: `synth`, `run` and `sweep` driven by a TOML
//! experiment config. Every result printed is also in a written file.
//!
//! Artifacts of `run` (all under the output directory):
//!
//! | file            | content                                              |
//! |-----------------|------------------------------------------------------|
//! | `report.json`   | `faultlab-report` v1: config echo, seeds, dataset summary, evaluation |
//! | `confusion.csv` | summed confusion matrix, rows are true classes       |
//! | `history.csv`   | `fold,epoch,loss,accuracy` for iterative models      |
//! | `importance.csv`| `feature,importance`, descending (random forest only) |
//!
//! `sweep` writes `sweep.csv` (`snr_db,mean_accuracy,std`) and
//! `sweep_report.json` with the full per-SNR evaluations.

mod commands;
mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::error::{Error, Result};

pub use commands::{
    cmd_run, cmd_sweep, cmd_synth, load_dataset, DatasetSummary, RunReport, SweepReport, REPORT_FORMAT, REPORT_VERSION,
};
pub use config::{DatasetConfig, EvaluationConfig, ExperimentConfig, SeedPlan, CONFIG_VERSION};

/// Writes `bytes` to a temporary file beside `path` and renames it into
/// place, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

#[derive(Debug, Parser)]
#[command(name = "faultlab", version, about = "Bearing fault classification experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct Common {
    /// Experiment config (TOML). Defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed; overrides `evaluation.seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write synthetic signal CSVs and a manifest.
    Synth(Common),
    /// Cross-validate the configured pipeline.
    Run(Common),
    /// Cross-validate at every SNR of `evaluation.noise`.
    Sweep(Common),
}

const DEFAULT_OUT: &str = "faultlab-out";

fn resolve(common: &Common) -> Result<(ExperimentConfig, PathBuf, PathBuf)> {
    let (mut cfg, base) = match &common.config {
        Some(p) => (
            ExperimentConfig::load(p)?,
            p.parent().map(Path::to_path_buf).unwrap_or_default(),
        ),
        None => (ExperimentConfig::default(), PathBuf::new()),
    };
    if let Some(seed) = common.seed {
        cfg.evaluation.seed = seed;
    }
    let out = common
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    Ok((cfg, base, out))
}

fn execute(command: Command) -> Result<String> {
    match command {
        Command::Synth(c) => {
            let (cfg, _, out) = resolve(&c)?;
            let manifest = cmd_synth(&cfg, &out)?;
            Ok(format!("manifest={}", manifest.display()))
        }
        Command::Run(c) => {
            let (cfg, base, out) = resolve(&c)?;
            let report = cmd_run(&cfg, &base, &out)?;
            Ok(format!(
                "mean_accuracy={:?} std={:?} report={}",
                report.evaluation.mean_accuracy,
                report.evaluation.std_accuracy,
                out.join("report.json").display()
            ))
        }
        Command::Sweep(c) => {
            let (cfg, base, out) = resolve(&c)?;
            let report = cmd_sweep(&cfg, &base, &out)?;
            Ok(format!(
                "rows={} table={}",
                report.rows.len(),
                out.join("sweep.csv").display()
            ))
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code: 0 success, 1 failure, 2 bad usage. Failures print a
/// single `error: kind=<Kind> message=<text>` line on stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(line) => {
            println!("{line}");
            0
        }
        Err(e) => {
            let message = e.to_string().replace(['\n', '\r'], " ");
            eprintln!("error: kind={} message={message}", e.kind());
            1
        }
    }
}
