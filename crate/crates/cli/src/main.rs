use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use rectiplan_cli::analyze::{run_analyze, AnalyzeRequest};
use rectiplan_cli::config::OUT_ENV;
use rectiplan_cli::design::{run_design, Status};
use rectiplan_cli::oracle::run_oracle;
use rectiplan_cli::preset::{preset, NAMES};
use rectiplan_cli::LoadedConfig;
use rectiplan_core::FilterConfig;

/// Optimal switching schemes for controlled rectifiers.
#[derive(Parser)]
#[command(name = "rectiplan", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a design and write scheme, waveform, spectrum, filtered output and report.
    Design { config: PathBuf },
    /// Spectrum and THD of a one-period waveform CSV.
    Analyze {
        wave: PathBuf,
        /// Harmonic bins counted as wanted signal.
        #[arg(long, value_delimiter = ',', default_value = "1")]
        desired: Vec<usize>,
        /// Also run the RL filter and write filtered.csv.
        #[arg(long)]
        filter: bool,
        #[arg(long, default_value_t = 1.0)]
        r_ohms: f64,
        #[arg(long, default_value_t = 0.02)]
        l_henries: f64,
        #[arg(long, default_value_t = 50.0)]
        f0_hz: f64,
        #[arg(long, default_value_t = 10)]
        settle_periods: usize,
        /// Output directory; defaults to $RECTIPLAN_OUT, then the current directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Enumerate every quantised scheme on a small grid and compare with the LP.
    Oracle {
        config: PathBuf,
        #[arg(long, default_value_t = 0.02)]
        tol: f64,
    },
    /// Print a ready-made config (single-fw, single-nofw, three-nofw, three-fw).
    Preset { name: String },
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Design { config } => {
            let cfg = LoadedConfig::load(&config)?;
            let run = run_design(&cfg)?;
            let r = &run.report;
            match r.status {
                Status::Optimal => println!(
                    "optimal: objective {:.6}, output in {}",
                    r.objective.unwrap_or(f64::NAN),
                    run.output_dir.display()
                ),
                Status::Infeasible => {
                    println!("infeasible: {}", r.diagnosis.as_ref().map(|d| d.message.as_str()).unwrap_or(""))
                }
            }
            for w in &r.warnings {
                eprintln!("warning: {w}");
            }
            Ok(run.exit_code())
        }
        Command::Analyze { wave, desired, filter, r_ohms, l_henries, f0_hz, settle_periods, out } => {
            let output_dir = out
                .or_else(|| std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("."));
            let filter = filter.then_some(FilterConfig { r_ohms, l_henries, f0_hz, settle_periods });
            let report = run_analyze(&AnalyzeRequest { input: wave, desired, filter, output_dir })?;
            println!("N = {}, energy ratio {:.6e}", report.n, report.thd.energy_ratio);
            Ok(0)
        }
        Command::Oracle { config, tol } => {
            let cfg = LoadedConfig::load(&config)?;
            let run = run_oracle(&cfg, tol)?;
            let r = &run.report;
            println!(
                "{} of {} schemes feasible, best cost {:?}, LP optimum {:?}, dominance {}",
                r.num_feasible, r.num_enumerated, r.best_cost, r.lp_optimum, r.dominance
            );
            Ok(0)
        }
        Command::Preset { name } => {
            let cfg = preset(&name)
                .with_context(|| format!("unknown preset `{name}`; expected one of {}", NAMES.join(", ")))?;
            println!("{}", serde_json::to_string_pretty(&cfg)?);
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
