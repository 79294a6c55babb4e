use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use strandsim::sweep_cli::{
    golden_tables, parse_quantity, render_tables, run_mesh_convergence, run_single, run_sweep, Dimension, EpsilonMode,
    RunConfig, SweepPlan, WORKERS_ENV,
};
use strandsim::{Error, Result};

#[derive(Parser)]
#[command(name = "strandsim", version, about = "Conservative level-set deposition simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration.
    Run { config: PathBuf },
    /// Run every point of a sweep plan.
    Sweep { plan: PathBuf },
    /// Run one configuration on several grids.
    Converge {
        config: PathBuf,
        /// Cell sizes with units, e.g. "0.04 mm" (at least three).
        #[arg(long, num_args = 1.., required = true)]
        grids: Vec<String>,
        /// Reinitialisation rates with units; defaults to the configured one.
        #[arg(long, num_args = 1..)]
        gammas: Vec<String>,
        #[arg(long, value_enum, default_value_t = ModeArg::Fixed)]
        epsilon_mode: ModeArg,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Print percent errors recomputed from the published strand areas.
    Tables {
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Fixed,
    Scaled,
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config } => {
            let mut c = RunConfig::load(&config)?;
            c.apply_env();
            let out = run_single(&c)?;
            let r = out.final_record();
            println!(
                "t = {:.4} s  A_s = {:.5e}  A_f = {:.5e}  delta_A = {:.3} %  P_max = {:.4e} Pa  ({})",
                r.time,
                r.a_s,
                r.a_f,
                r.delta_a_pct,
                r.p_max,
                c.output.directory.display()
            );
            let o = &out.oracle;
            println!(
                "{}: measured {:.6e}, expected {:.6e}, error {:.4e}",
                o.metric, o.measured, o.expected, o.error
            );
        }
        Command::Sweep { plan } => {
            let mut p = SweepPlan::load(&plan)?;
            p.apply_env()?;
            println!("{} points", p.size());
            let rows = run_sweep(&p)?;
            let failed = rows.iter().filter(|r| r.status != "ok").count();
            println!(
                "{} done, {failed} failed; table in {}",
                rows.len(),
                p.base.output.directory.join("sweep.csv").display()
            );
        }
        Command::Converge {
            config,
            grids,
            gammas,
            epsilon_mode,
            workers,
        } => {
            let mut c = RunConfig::load(&config)?;
            c.apply_env();
            let grids = grids
                .iter()
                .map(|g| parse_quantity(g, Dimension::Length))
                .collect::<Result<Vec<_>>>()?;
            let gammas = gammas
                .iter()
                .map(|g| parse_quantity(g, Dimension::Speed))
                .collect::<Result<Vec<_>>>()?;
            let workers = match std::env::var(WORKERS_ENV) {
                Ok(w) => w.trim().parse().ok(),
                Err(_) => Some(workers),
            }
            .filter(|n: &usize| *n > 0)
            .ok_or_else(|| Error::Config(format!("worker count must be a positive integer ({WORKERS_ENV})")))?;
            let mode = match epsilon_mode {
                ModeArg::Fixed => EpsilonMode::FixedPhysical,
                ModeArg::Scaled => EpsilonMode::ScaledWithGrid,
            };
            for r in run_mesh_convergence(&c, &grids, &gammas, mode, workers)? {
                println!(
                    "h = {:.4e} m  cells = {:>7}  {}  error = {}  P_max = {}",
                    r.grid_target,
                    r.fluid_cells,
                    r.status,
                    r.oracle_error.map_or("-".into(), |e| format!("{e:.4e}")),
                    r.p_max.map_or("-".into(), |p| format!("{p:.4e}")),
                );
            }
        }
        Command::Tables { json } => {
            let tables = golden_tables();
            if json {
                println!("{}", serde_json::to_string_pretty(&tables)?);
            } else {
                print!("{}", render_tables(&tables));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
