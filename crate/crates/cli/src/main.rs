//! Command-line front end: score one matrix, generate family draws,
//! run the Monte-Carlo comparison, or cross-check the closed forms
//! against the sequence oracle.
//!
//! Exit codes: 0 success, 1 validation or I/O error, 2 oracle mismatch.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mpc_metrics::enhanced::RhoParameter;
use mpc_metrics::experiment::{
    emit_histograms, emit_panel, run_experiment, score_matrix, EmitFormat, ExperimentConfig,
};
use mpc_metrics::generator::{generate, Family, FamilySpec, SeededRng, ALL_FAMILIES};
use mpc_metrics::matrix::ConfusionMatrix;
use mpc_metrics::oracle::cross_check;

#[derive(Parser)]
#[command(name = "mpc-metrics", version, about = "Correlation-style metrics for confusion matrices")]
struct Cli {
    /// Worker threads for parallel subcommands (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score a matrix file and print every applicable metric.
    Score {
        /// Matrix in the canonical text format.
        file: PathBuf,
        /// Reduction parameter for the rho-family metrics (must be < 1).
        #[arg(long, default_value_t = 0.9)]
        rho: f64,
        /// Swap the actual and predicted roles before scoring.
        #[arg(long)]
        transpose: bool,
        /// Output encoding: json or csv.
        #[arg(long, default_value = "json")]
        format: String,
    },
    /// Emit seeded random matrices in the canonical text format.
    Generate {
        /// Family name, e.g. diagonal or imbalanced-14.
        #[arg(long)]
        family: String,
        /// Class count.
        #[arg(long, default_value_t = 5)]
        k: usize,
        /// Cases per matrix.
        #[arg(long, default_value_t = 1000)]
        n: u64,
        /// Master seed.
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Number of replicates to emit.
        #[arg(long, default_value_t = 1)]
        reps: u64,
    },
    /// Run the Monte-Carlo family comparison and emit histograms.
    Simulate {
        /// Comma-separated family names, or "all".
        #[arg(long, default_value = "all")]
        families: String,
        /// Class count.
        #[arg(long, default_value_t = 5)]
        k: usize,
        /// Cases per matrix.
        #[arg(long, default_value_t = 1000)]
        n: u64,
        /// Replicates per family.
        #[arg(long, default_value_t = 1000)]
        reps: u64,
        /// Master seed.
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Reduction parameter for the rho-family metrics (must be < 1).
        #[arg(long, default_value_t = 0.9)]
        rho: f64,
        /// Histogram bins over [-1, 1].
        #[arg(long, default_value_t = 40)]
        bins: usize,
        /// Output encoding: csv or json.
        #[arg(long, default_value = "csv")]
        format: String,
        /// Destination file (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cross-check the closed forms against the sequence oracle.
    Oracle {
        /// Random matrices to check, spread over all families.
        #[arg(long, default_value_t = 200)]
        trials: u64,
        /// Master seed.
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Largest tolerated deviation between the two routes.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests are not errors.
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    if let Some(threads) = cli.threads {
        if let Err(err) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: {err}");
            return ExitCode::from(1);
        }
    }
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}

fn parse_rho(rho: f64) -> Result<RhoParameter, String> {
    RhoParameter::new(rho).map_err(|e| e.to_string())
}

fn parse_format(format: &str) -> Result<EmitFormat, String> {
    format.parse()
}

fn parse_families(list: &str, k: usize, n: u64) -> Result<Vec<FamilySpec>, String> {
    let names: Vec<&str> = if list == "all" {
        ALL_FAMILIES.iter().map(|f| f.name()).collect()
    } else {
        list.split(',').map(str::trim).collect()
    };
    names
        .into_iter()
        .map(|name| {
            let family: Family = name.parse().map_err(|e: _| format!("{e}"))?;
            FamilySpec::new(family, k, n).map_err(|e| e.to_string())
        })
        .collect()
}

fn run(command: Command) -> Result<u8, String> {
    match command {
        Command::Score {
            file,
            rho,
            transpose,
            format,
        } => {
            let rho = parse_rho(rho)?;
            let format = parse_format(&format)?;
            let text = std::fs::read_to_string(&file)
                .map_err(|e| format!("{}: {e}", file.display()))?;
            let mut cm = ConfusionMatrix::parse(&text)
                .map_err(|e| format!("{}: {e}", file.display()))?;
            if transpose {
                cm = cm.transpose();
            }
            let panel = score_matrix(&cm, rho, None);
            let stdout = io::stdout();
            emit_panel(&panel, format, &mut stdout.lock()).map_err(|e| e.to_string())?;
            Ok(0)
        }
        Command::Generate {
            family,
            k,
            n,
            seed,
            reps,
        } => {
            let family: Family = family.parse().map_err(|e: _| format!("{e}"))?;
            let spec = FamilySpec::new(family, k, n).map_err(|e| e.to_string())?;
            let seed = SeededRng::new(seed);
            let stdout = io::stdout();
            let mut out = stdout.lock();
            for rep in 0..reps {
                let cm = generate(&spec, rep, &seed);
                writeln!(out, "# {} replicate {rep}", spec.family())
                    .and_then(|_| out.write_all(cm.render().as_bytes()))
                    .and_then(|_| writeln!(out))
                    .map_err(|e| e.to_string())?;
            }
            Ok(0)
        }
        Command::Simulate {
            families,
            k,
            n,
            reps,
            seed,
            rho,
            bins,
            format,
            out,
        } => {
            let rho = parse_rho(rho)?;
            let format = parse_format(&format)?;
            let families = parse_families(&families, k, n)?;
            let config = ExperimentConfig::new(
                families,
                reps,
                ExperimentConfig::default_metrics(),
                rho,
                seed,
                bins,
            )
            .map_err(|e| e.to_string())?;
            let histograms = run_experiment(&config);
            match out {
                Some(path) => {
                    let file = File::create(&path)
                        .map_err(|e| format!("{}: {e}", path.display()))?;
                    let mut writer = BufWriter::new(file);
                    emit_histograms(&histograms, format, &mut writer)
                        .and_then(|_| writer.flush())
                        .map_err(|e| format!("{}: {e}", path.display()))?;
                }
                None => {
                    let stdout = io::stdout();
                    emit_histograms(&histograms, format, &mut stdout.lock())
                        .map_err(|e| e.to_string())?;
                }
            }
            Ok(0)
        }
        Command::Oracle { trials, seed, tol } => {
            if !(tol > 0.0) {
                return Err(format!("tolerance must be positive, got {tol}"));
            }
            let seeded = SeededRng::new(seed);
            let mut worst: Option<(String, f64)> = None;
            let mut checked = 0u64;
            for trial in 0..trials {
                let family = ALL_FAMILIES[(trial % 7) as usize];
                let k = if family == Family::Imbalanced32 {
                    3 + (trial % 3) as usize
                } else {
                    2 + (trial % 4) as usize
                };
                let n = 50 + (trial * 131) % 1951;
                let spec =
                    FamilySpec::new(family, k, n).map_err(|e| e.to_string())?;
                let cm = generate(&spec, trial, &seeded);
                let deviations = cross_check(&cm).map_err(|e| e.to_string())?;
                checked += 1;
                for dev in deviations {
                    let gap = dev.abs_diff();
                    if worst.as_ref().map_or(true, |(_, w)| gap > *w) {
                        worst = Some((dev.quantity.to_string(), gap));
                    }
                }
            }
            let (quantity, gap) = worst.unwrap_or(("none".to_string(), 0.0));
            println!("trials: {checked}");
            println!("worst deviation: {gap:e} ({quantity})");
            if gap > tol {
                println!("result: MISMATCH (tolerance {tol:e})");
                Ok(2)
            } else {
                println!("result: ok (tolerance {tol:e})");
                Ok(0)
            }
        }
    }
}
