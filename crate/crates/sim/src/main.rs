//! Command-line front end for the cell-free massive MIMO simulator.
//!
//! Three subcommands: `run` executes a sweep described by a TOML config
//! file, `validate` checks every closed-form SINR against the Monte Carlo
//! oracle on small random networks, and `reproduce` re-runs a named preset
//! experiment across its sweep points.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cellfree_core::Error;
use cellfree_sim::config::parse_config;
use cellfree_sim::emit::emit_results;
use cellfree_sim::presets::preset_runs;
use cellfree_sim::sweep::{run_sweep, ResultTable};
use cellfree_sim::validate::validation_suite;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "cellfree-sim",
    about = "Spectral-efficiency sweeps for cell-free massive MIMO over Rician fading",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sweep described by a TOML config file.
    Run {
        /// Path to the config file.
        config: PathBuf,
        /// Override the master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the number of network setups.
        #[arg(long)]
        setups: Option<usize>,
        /// Override the Monte Carlo trial count (0 disables oracle rows).
        #[arg(long)]
        trials: Option<usize>,
        /// Override the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check closed-form SINRs against the Monte Carlo oracle.
    Validate {
        /// Failure threshold in standard errors.
        #[arg(long, default_value_t = 3.0)]
        z: f64,
        /// Number of random desk-scale instances to probe.
        #[arg(long, default_value_t = 5)]
        instances: usize,
        /// Monte Carlo trials per instance and estimator.
        #[arg(long, default_value_t = 200_000)]
        trials: usize,
        /// Master seed for instance generation and sampling.
        #[arg(long, default_value_t = 4)]
        seed: u64,
    },
    /// Re-run a named preset experiment.
    Reproduce {
        /// Preset name: fig1, fig3, fig5, or fig7.
        preset: String,
        /// Setups per sweep point (presets default to 100).
        #[arg(long)]
        setups: Option<usize>,
        /// Output root; each sweep point writes to <OUT>/<preset>/<label>/.
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Run {
            config,
            seed,
            setups,
            trials,
            out,
        } => cmd_run(&config, seed, setups, trials, out),
        Command::Validate {
            z,
            instances,
            trials,
            seed,
        } => cmd_validate(z, instances, trials, seed),
        Command::Reproduce {
            preset,
            setups,
            out,
        } => cmd_reproduce(&preset, setups, &out),
    }
}

fn cmd_run(
    config: &Path,
    seed: Option<u64>,
    setups: Option<usize>,
    trials: Option<usize>,
    out: Option<PathBuf>,
) -> Result<ExitCode, Error> {
    let text = std::fs::read_to_string(config)
        .map_err(|e| Error::InvalidConfig(format!("read {}: {e}", config.display())))?;
    let mut cfg = parse_config(&text)?;
    if let Some(seed) = seed {
        cfg.master_seed = seed;
    }
    if let Some(setups) = setups {
        cfg.num_setups = setups;
    }
    if let Some(trials) = trials {
        cfg.mc_trials = trials;
    }
    if let Some(out) = out {
        cfg.out_dir = out.display().to_string();
    }
    let table = run_sweep(&cfg)?;
    print_means(&table, "");
    let (rows_path, summary_path) = emit_results(&table, Path::new(&cfg.out_dir))?;
    println!("wrote {}", rows_path.display());
    println!("wrote {}", summary_path.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_validate(z: f64, instances: usize, trials: usize, seed: u64) -> Result<ExitCode, Error> {
    let checks = validation_suite(instances, trials, z, seed)?;
    let mut failures = 0usize;
    for item in &checks {
        println!("{}: {}", item.label, item.check);
        if !item.check.pass {
            failures += 1;
        }
    }
    println!("{} checks, {failures} failed", checks.len());
    Ok(if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn cmd_reproduce(preset: &str, setups: Option<usize>, out: &Path) -> Result<ExitCode, Error> {
    let runs = preset_runs(preset, setups)?;
    for run in &runs {
        let table = run_sweep(&run.cfg)?;
        print_means(&table, &format!("{}/{} ", preset, run.label));
        let dir = out.join(preset).join(&run.label);
        emit_results(&table, &dir)?;
    }
    println!("wrote {} sweep points under {}", runs.len(), out.join(preset).display());
    Ok(ExitCode::SUCCESS)
}

/// Prints the mean SE of each evaluated (estimator, scheme) cell, one line
/// per cell, with an optional prefix identifying the sweep point.
fn print_means(table: &ResultTable, prefix: &str) {
    for (est, scheme) in table.cells() {
        if let Some(mean) = table.mean_se(est, scheme) {
            println!("{prefix}mean se {est}/{scheme}: {mean:.4} bit/s/Hz");
        }
    }
}
