use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use vmpic::harness::{load_config, run_simulation, CaseId};
use vmpic::stability::{empirical_stability_scan, maxwell_alpha_max, CurlStepper};

#[derive(Parser)]
#[command(name = "vmpic", version, about = "1d2v Vlasov-Maxwell particle-in-cell runs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a case described by a TOML configuration file.
    Run {
        config: PathBuf,
        /// Override the sampling seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Force single-threaded, bitwise-reproducible execution.
        #[arg(long)]
        deterministic: bool,
        /// Diagnostics CSV path (overrides `output` in the file).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print analytic and empirical CFL limits of the explicit curl step.
    Stability {
        /// Spline degree of the 0-form space; all of 1..=3 when omitted.
        #[arg(long)]
        degree: Option<usize>,
    },
    /// Built-in cases.
    Cases {
        #[command(subcommand)]
        action: CasesAction,
    },
}

#[derive(Subcommand)]
enum CasesAction {
    /// List case names and their default parameters.
    List,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> vmpic::Result<()> {
    match cli.command {
        Command::Run {
            config,
            seed,
            deterministic,
            out,
        } => {
            let mut cfg = load_config(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if deterministic {
                cfg.deterministic = true;
            }
            if out.is_some() {
                cfg.output = out;
            }
            let start = Instant::now();
            let summary = run_simulation(&cfg)?;
            println!("case               {}", cfg.case);
            println!("scheme             {:?}", cfg.scheme);
            println!("dt                 {}", cfg.dt);
            println!("steps              {}", summary.steps);
            println!("rows written       {}", summary.rows_written);
            println!("initial energy     {:.6e}", summary.initial_energy);
            println!("max energy error   {:.6e}", summary.max_energy_error);
            println!("max gauss residual {:.6e}", summary.max_gauss_residual);
            println!("mean iterations    {:.3}", summary.mean_iters);
            println!("mean sub iters     {:.3}", summary.mean_sub_iters);
            println!("wall time          {:.2} s", start.elapsed().as_secs_f64());
            if let Some(p) = &cfg.output {
                println!("diagnostics        {}", p.display());
            }
        }
        Command::Stability { degree } => {
            let degrees: Vec<usize> = match degree {
                Some(p) => vec![p],
                None => (1..=3).collect(),
            };
            if let Some(&p) = degrees.iter().find(|&&p| p == 0 || p > vmpic::splines::MAX_DEGREE) {
                return Err(vmpic::PicError::InvalidConfig(format!(
                    "degree {p} is outside 1..={}",
                    vmpic::splines::MAX_DEGREE
                )));
            }
            println!("{:>2} {:>12} {:>12} {:>9}", "p", "analytic", "empirical", "gap");
            for p in degrees {
                let analytic = maxwell_alpha_max(p);
                let n = 32.max(2 * p + 2);
                let dt = empirical_stability_scan(p, n, n as f64, 2000, CurlStepper::ExplicitStrang, 7)?;
                let gap = (dt - analytic) / analytic;
                println!("{p:>2} {analytic:>12.8} {dt:>12.8} {:>8.3}%", 100.0 * gap);
            }
        }
        Command::Cases {
            action: CasesAction::List,
        } => {
            println!(
                "{:<14} {:>7} {:>7} {:>10}  description",
                "case", "cells", "t_end", "length"
            );
            for c in CaseId::ALL {
                let d = c.defaults();
                println!(
                    "{:<14} {:>7} {:>7} {:>10.5}  {}",
                    c.name(),
                    d.n_cells,
                    d.t_end,
                    d.length,
                    c.description()
                );
            }
        }
    }
    Ok(())
}
