//! `scq`: reconstruct, analyze, and simulate multimode photon-number
//! correlation measurements.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use scq_core::error::ErrorKind;
use scq_core::formats::emit_matrix_csv;
use scq_core::pipeline::{run_analyze, run_reconstruct, run_simulate};
use scq_core::plot::emit_plots;
use scq_core::report::rows_to_matrix;
use scq_core::verify;

#[derive(Parser)]
#[command(name = "scq", version, about = "Spectral quantum-correlation analysis pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, Default, ValueEnum)]
enum Format {
    #[default]
    Json,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Reconstruct the covariance matrix from a window scan and shot-noise
    /// levels.
    Reconstruct {
        /// Window-scan CSV (`k,l,variance[,sigma]`).
        #[arg(long)]
        scan: PathBuf,
        /// Shot-noise CSV (`bin,level`).
        #[arg(long)]
        shot: PathBuf,
        /// Output path; `.json` writes the full document, `.csv` just the
        /// normalized covariance matrix.
        #[arg(long)]
        out: PathBuf,
        /// Clip negative eigenvalues of the normalized covariance at zero.
        #[arg(long)]
        psd_project: bool,
    },
    /// Diagonalize a covariance matrix and emit the analysis report.
    Analyze {
        /// Covariance input: matrix CSV or a `reconstruct` JSON document.
        #[arg(long)]
        cov: PathBuf,
        /// Shot-noise CSV (`bin,level`).
        #[arg(long)]
        shot: PathBuf,
        /// Report output path.
        #[arg(long)]
        out: PathBuf,
        /// Directory for SVG plots and their data CSVs.
        #[arg(long)]
        plots: Option<PathBuf>,
        /// Report format.
        #[arg(long, value_enum, default_value_t)]
        format: Format,
        #[arg(long)]
        psd_project: bool,
        /// Seed to record in the report when analyzing synthetic data.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the fiber forward model and emit a synthetic window scan.
    Simulate {
        /// Simulation config (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Output scan CSV.
        #[arg(long)]
        out: PathBuf,
        /// Output path for the ground-truth covariance CSV.
        #[arg(long)]
        truth: Option<PathBuf>,
        /// RNG seed; beats the config seed. SCQ_SEED beats both.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the bundled-fixture acceptance checks.
    VerifyFixtures,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind as ClapKind;
            let ok = matches!(e.kind(), ClapKind::DisplayHelp | ClapKind::DisplayVersion);
            let _ = e.print();
            return if ok { ExitCode::SUCCESS } else { ExitCode::from(1) };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e.kind() {
                ErrorKind::Input => ExitCode::from(1),
                ErrorKind::Numerical => ExitCode::from(2),
            }
        }
    }
}

fn require_file(flag: &str, path: &Path) -> scq_core::Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(scq_core::Error::File {
            path: path.display().to_string(),
            message: format!("--{flag}: file not found"),
        })
    }
}

fn write_output(path: &Path, contents: &str) -> scq_core::Result<()> {
    std::fs::write(path, contents).map_err(|source| scq_core::Error::Io {
        action: "write",
        path: path.to_path_buf(),
        source,
    })
}

fn env_seed() -> Option<u64> {
    std::env::var("SCQ_SEED").ok().and_then(|s| s.parse().ok())
}

fn run(cli: Cli) -> scq_core::Result<ExitCode> {
    match cli.command {
        Command::Reconstruct {
            scan,
            shot,
            out,
            psd_project,
        } => {
            require_file("scan", &scan)?;
            require_file("shot", &shot)?;
            let doc = run_reconstruct(&scan, &shot, psd_project)?;
            let is_csv = out
                .extension()
                .map(|e| e.eq_ignore_ascii_case("csv"))
                .unwrap_or(false);
            if is_csv {
                write_output(&out, &emit_matrix_csv(&rows_to_matrix(&doc.covariance)))?;
            } else {
                write_output(&out, &doc.to_json())?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Analyze {
            cov,
            shot,
            out,
            plots,
            format,
            psd_project,
            seed,
        } => {
            require_file("cov", &cov)?;
            require_file("shot", &shot)?;
            let report = run_analyze(&cov, &shot, psd_project, seed)?;
            let contents = match format {
                Format::Json => report.to_json(),
                Format::Text => report.to_text(),
            };
            write_output(&out, &contents)?;
            if let Some(dir) = plots {
                emit_plots(&report, &dir)?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Simulate {
            config,
            out,
            truth,
            seed,
        } => {
            require_file("config", &config)?;
            let effective_seed = env_seed().or(seed);
            let sim = run_simulate(&config, effective_seed)?;
            write_output(&out, &sim.scan_csv)?;
            if let Some(truth_path) = truth {
                write_output(&truth_path, &sim.truth_csv)?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::VerifyFixtures => {
            let results = verify::run_all();
            let mut all_passed = true;
            for r in &results {
                let status = if r.passed { "PASS" } else { "FAIL" };
                println!("[{status}] criterion {}: {} :: {}", r.id, r.name, r.detail);
                all_passed &= r.passed;
            }
            if all_passed {
                println!("all {} criteria passed", results.len());
                Ok(ExitCode::SUCCESS)
            } else {
                Err(scq_core::Error::Numerical(
                    "one or more acceptance criteria failed".to_string(),
                ))
            }
        }
    }
}
