//! `tqm verify|density|clock|sweep|nogo [--config PATH] [flags]`
//!
//! `TQM_THREADS` caps the worker pool.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use tqm::experiments::{run, Command, SweepMetric, SweepParam};

#[derive(Parser)]
#[command(name = "tqm", version, about = "Unsharp quantum-time measurement experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(clap::Args)]
struct Common {
    /// Flat key=value config file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for CSV files and report.json.
    #[arg(long, default_value = "tqm-out")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Param {
    Lambda,
    #[value(name = "E")]
    E,
    Hbar,
}

#[derive(Clone, Copy, ValueEnum)]
enum Metric {
    Fwhm,
    Tv,
    Peak,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the full invariant suite.
    Verify {
        #[command(flatten)]
        common: Common,
    },
    /// Ideal time density `tau,p_ideal`.
    Density {
        #[command(flatten)]
        common: Common,
    },
    /// Clock model: density comparison plus a posterior or samples.
    Clock {
        #[command(flatten)]
        common: Common,
        #[arg(long, conflicts_with = "samples")]
        tau: Option<f64>,
        #[arg(long)]
        samples: Option<usize>,
        /// Overrides `seed` from the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Pointer metric or TV distance against a clock parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        param: Param,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long, value_enum)]
        metric: Metric,
    },
    /// TV distance between realized and ideal densities over clock widths.
    Nogo {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        lambdas: Option<Vec<f64>>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Ok(t) = std::env::var("TQM_THREADS") {
        match t.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("tqm: TQM_THREADS must be a positive integer, got {t:?}");
                return ExitCode::from(2);
            }
        }
    }
    let (cmd, common) = match cli.cmd {
        Cmd::Verify { common } => (Command::Verify, common),
        Cmd::Density { common } => (Command::Density, common),
        Cmd::Clock { common, tau, samples, seed } => (Command::Clock { tau, samples, seed }, common),
        Cmd::Sweep { common, param, values, metric } => {
            let param = match param {
                Param::Lambda => SweepParam::Lambda,
                Param::E => SweepParam::E,
                Param::Hbar => SweepParam::Hbar,
            };
            let metric = match metric {
                Metric::Fwhm => SweepMetric::Fwhm,
                Metric::Tv => SweepMetric::Tv,
                Metric::Peak => SweepMetric::Peak,
            };
            (Command::Sweep { param, values, metric }, common)
        }
        Cmd::Nogo { common, lambdas } => (Command::Nogo { lambdas }, common),
    };
    let (report, code) = run(&cmd, common.config.as_deref(), &common.out);
    for c in &report.checks {
        println!("{} {} value={:e} tol={:e}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value, c.tol);
    }
    if let Some(e) = &report.error {
        eprintln!("tqm: {e}");
    }
    println!("report: {}", common.out.join("report.json").display());
    ExitCode::from(code as u8)
}
